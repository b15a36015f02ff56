#include "scdf/distance_field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scdf {

double DistanceField::Distance(const Config& q, Config* gradient) const {
  const std::size_t n = num_components();
  if (n == 0) {
    if (gradient) *gradient = Config::Zero(dof());
    return kDistanceSentinel;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = Component(i, q, nullptr);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  if (gradient) Component(arg, q, gradient);
  return best;
}

namespace {

bool HasSelfPairs(const RobotModel& robot) { return robot.dof() >= 3; }

}  // namespace

OracleField::OracleField(RobotModel robot, ObstacleSet obstacles,
                         int resolution)
    : robot_(std::move(robot)),
      obstacles_(std::move(obstacles)),
      resolution_(resolution) {
  grids_.reserve(obstacles_.size());
  for (const GeometryVector& g : obstacles_) {
    grids_.push_back(BuildGrid(robot_, g, resolution_));
  }
  if (HasSelfPairs(robot_)) self_grid_ = BuildSelfGrid(robot_, resolution_);
}

std::size_t OracleField::num_components() const {
  return grids_.size() + (self_grid_ ? 1 : 0);
}

const CollisionGrid& OracleField::grid(std::size_t i) const {
  return i < grids_.size() ? grids_[i] : *self_grid_;
}

double OracleField::lattice_diagonal() const {
  // All grids share one lattice over the joint limits.
  double sum = 0.0;
  for (const JointLimit& limit : robot_.joint_limits) {
    const double h = (limit.high - limit.low) / (resolution_ - 1);
    sum += h * h;
  }
  return std::sqrt(sum);
}

double OracleField::Component(std::size_t i, const Config& q,
                              Config* gradient) const {
  if (i >= num_components()) throw std::out_of_range("no such component");
  const bool is_self = i >= grids_.size();
  const CollisionGrid& g = grid(i);
  const bool colliding =
      is_self ? CheckSelfCollision(robot_, q)
              : CheckObstacleCollision(
                    robot_, q, std::span<const GeometryVector>(&obstacles_[i], 1));
  const auto nearest = g.NearestBoundary(q);
  if (!nearest) {
    if (gradient) *gradient = Config::Zero(q.size());
    return colliding ? -kDistanceSentinel : kDistanceSentinel;
  }
  const double d = nearest->second;
  if (gradient) {
    if (d > 0.0) {
      *gradient = (q - g.boundary_points().col(nearest->first)) / d;
      if (colliding) *gradient = -*gradient;
    } else {
      *gradient = Config::Zero(q.size());
    }
  }
  return colliding ? -d : d;
}

NeuralField::NeuralField(std::shared_ptr<const MlpModel> obstacle_model,
                         ObstacleSet obstacles,
                         std::shared_ptr<const MlpModel> self_model)
    : obstacle_model_(std::move(obstacle_model)),
      self_model_(std::move(self_model)),
      obstacles_(std::move(obstacles)) {
  if (!obstacle_model_) throw std::invalid_argument("obstacle model is required");
  const int g_size = obstacle_model_->geometry_size();
  geometry_block_.resize(g_size, static_cast<Eigen::Index>(obstacles_.size()));
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    if (obstacles_[i].size() != g_size) {
      throw std::invalid_argument("obstacle does not match the network's geometry size");
    }
    geometry_block_.col(static_cast<Eigen::Index>(i)) = obstacles_[i].params;
  }
  if (self_model_ && (self_model_->dof() != obstacle_model_->dof() ||
                      self_model_->geometry_size() != 0)) {
    throw std::invalid_argument("self-collision network has the wrong shape");
  }
}

std::size_t NeuralField::num_components() const {
  return obstacles_.size() + (self_model_ ? 1 : 0);
}

double NeuralField::Component(std::size_t i, const Config& q,
                              Config* gradient) const {
  if (i < obstacles_.size()) {
    const Eigen::VectorXd input = ConcatInput(q, obstacles_[i].params);
    if (gradient) *gradient = obstacle_model_->FullInputGradient(input).head(q.size());
    return obstacle_model_->Forward(input);
  }
  if (i == obstacles_.size() && self_model_) {
    if (gradient) *gradient = self_model_->FullInputGradient(q);
    return self_model_->Forward(q);
  }
  throw std::out_of_range("no such component");
}

double NeuralField::Distance(const Config& q, Config* gradient) const {
  if (num_components() == 0) {
    if (gradient) *gradient = Config::Zero(q.size());
    return kDistanceSentinel;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  if (!obstacles_.empty()) {
    Eigen::MatrixXd inputs(obstacle_model_->input_size(), geometry_block_.cols());
    inputs.topRows(q.size()) = q.replicate(1, geometry_block_.cols());
    inputs.bottomRows(geometry_block_.rows()) = geometry_block_;
    const Eigen::RowVectorXd values = obstacle_model_->ForwardBatch(inputs);
    Eigen::Index k = 0;
    best = values.minCoeff(&k);
    arg = static_cast<std::size_t>(k);
  }
  if (self_model_) {
    const double self = self_model_->Forward(q);
    if (self < best) {
      best = self;
      arg = obstacles_.size();
    }
  }
  if (gradient) Component(arg, q, gradient);
  return best;
}

ProjectedField::ProjectedField(std::shared_ptr<const DistanceField> base,
                               int dof)
    : base_(std::move(base)), dof_(dof) {
  if (!base_ || base_->dof() > dof_) {
    throw std::invalid_argument("projected field must not shrink the dof");
  }
}

double ProjectedField::Component(std::size_t i, const Config& q,
                                 Config* gradient) const {
  Config head_gradient;
  const double d = base_->Component(i, q.head(base_->dof()),
                                    gradient ? &head_gradient : nullptr);
  if (gradient) {
    *gradient = Config::Zero(dof_);
    gradient->head(base_->dof()) = head_gradient;
  }
  return d;
}

double ProjectedField::Distance(const Config& q, Config* gradient) const {
  Config head_gradient;
  const double d = base_->Distance(q.head(base_->dof()),
                                   gradient ? &head_gradient : nullptr);
  if (gradient) {
    *gradient = Config::Zero(dof_);
    gradient->head(base_->dof()) = head_gradient;
  }
  return d;
}

}  // namespace scdf
