#include "scdf/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace scdf {

void TrainConfig::Validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw std::invalid_argument("split ratio must lie in (0, 1)");
  }
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (batch_size < 1 || max_epochs < 1 || hidden < 1) {
    throw std::invalid_argument("batch size, epochs and width must be positive");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (lr_patience < 0 || !(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw std::invalid_argument("invalid learning-rate schedule");
  }
}

namespace {

constexpr int kLayers = MlpModel::kNumLayers;

// First and second moment estimates for every parameter tensor.
struct AdamState {
  std::array<Eigen::MatrixXd, kLayers> mw, vw;
  std::array<Eigen::VectorXd, kLayers> mb, vb;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (int l = 0; l < kLayers; ++l) {
      const auto& w = model.weights()[l];
      mw[l] = vw[l] = Eigen::MatrixXd::Zero(w.rows(), w.cols());
      mb[l] = vb[l] = Eigen::VectorXd::Zero(w.rows());
    }
  }
};

struct Gradients {
  std::array<Eigen::MatrixXd, kLayers> w;
  std::array<Eigen::VectorXd, kLayers> b;
};

// Loss on the batch and its parameter gradients.
double Backprop(const MlpModel& model, const Eigen::MatrixXd& x,
                const Eigen::RowVectorXd& y, Gradients* grads) {
  const auto& W = model.weights();
  const auto& B = model.biases();
  std::array<Eigen::MatrixXd, kLayers> act;  // act[0] = input
  std::array<Eigen::MatrixXd, kLayers - 1> pre;
  act[0] = x;
  for (int l = 0; l < kLayers - 1; ++l) {
    pre[l] = (W[l] * act[l]).colwise() + B[l];
    act[l + 1] = pre[l].cwiseMax(0.0);
  }
  const Eigen::RowVectorXd out =
      ((W[kLayers - 1] * act[kLayers - 1]).colwise() + B[kLayers - 1]).row(0);
  const Eigen::RowVectorXd residual = out - y;
  const double n = static_cast<double>(x.cols());
  const double loss = residual.squaredNorm() / n;

  Eigen::MatrixXd delta = (2.0 / n) * residual;
  for (int l = kLayers - 1; l >= 0; --l) {
    grads->w[l].noalias() = delta * act[l].transpose();
    grads->b[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = W[l].transpose() * delta;
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

void AdamStep(MlpModel* model, AdamState* state, const Gradients& grads,
              double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++state->step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state->step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state->step));
  auto& W = model->mutable_weights();
  auto& B = model->mutable_biases();
  for (int l = 0; l < kLayers; ++l) {
    state->mw[l] = kBeta1 * state->mw[l] + (1.0 - kBeta1) * grads.w[l];
    state->vw[l] = kBeta2 * state->vw[l] +
                   (1.0 - kBeta2) * grads.w[l].cwiseProduct(grads.w[l]);
    W[l].array() -= lr * (state->mw[l].array() / c1) /
                    ((state->vw[l].array() / c2).sqrt() + kEps);
    state->mb[l] = kBeta1 * state->mb[l] + (1.0 - kBeta1) * grads.b[l];
    state->vb[l] = kBeta2 * state->vb[l] +
                   (1.0 - kBeta2) * grads.b[l].cwiseProduct(grads.b[l]);
    B[l].array() -= lr * (state->mb[l].array() / c1) /
                    ((state->vb[l].array() / c2).sqrt() + kEps);
  }
}

double EvaluateMse(const MlpModel& model, const Eigen::MatrixXd& x,
                   const Eigen::VectorXd& y) {
  constexpr Eigen::Index kChunk = 4096;
  double sum = 0.0;
  for (Eigen::Index start = 0; start < x.cols(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, x.cols() - start);
    const Eigen::RowVectorXd out = model.ForwardBatch(x.middleCols(start, count));
    sum += (out.transpose() - y.segment(start, count)).squaredNorm();
  }
  return sum / static_cast<double>(x.cols());
}

}  // namespace

TrainResult Train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                  int dof, int geometry_size, const TrainConfig& config) {
  config.Validate();
  const Eigen::Index n = inputs.cols();
  if (n < 2 || targets.size() != n) {
    throw std::invalid_argument("training needs at least two labelled samples");
  }
  if (inputs.rows() != dof + geometry_size) {
    throw std::invalid_argument("input rows must equal dof + geometry size");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const Eigen::Index n_train = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::floor(config.split_ratio * n)), 1, n - 1);
  const std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + n_train);
  const std::vector<Eigen::Index> test_idx(order.begin() + n_train, order.end());
  const Eigen::MatrixXd x_train = inputs(Eigen::all, train_idx);
  const Eigen::VectorXd y_train = targets(train_idx);
  const Eigen::MatrixXd x_test = inputs(Eigen::all, test_idx);
  const Eigen::VectorXd y_test = targets(test_idx);

  TrainResult result;
  result.test_target_variance =
      (y_test.array() - y_test.mean()).square().mean();

  MlpModel model = MlpModel::Random(dof, geometry_size, config.hidden,
                                    rng());
  AdamState adam(model);
  Gradients grads;
  std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
  std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), rng);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n_train; start += config.batch_size) {
      const Eigen::Index count =
          std::min<Eigen::Index>(config.batch_size, n_train - start);
      const std::vector<Eigen::Index> idx(batch_order.begin() + start,
                                          batch_order.begin() + start + count);
      const Eigen::MatrixXd xb = x_train(Eigen::all, idx);
      const Eigen::RowVectorXd yb = y_train(idx).transpose();
      const double loss = Backprop(model, xb, yb, &grads);
      if (!std::isfinite(loss)) {
        throw TrainingDivergedError(
            fmt::format("non-finite training loss in epoch {}", epoch));
      }
      loss_sum += loss * static_cast<double>(count);
      AdamStep(&model, &adam, grads, lr);
    }
    const double test_mse = EvaluateMse(model, x_test, y_test);
    if (!std::isfinite(test_mse)) {
      throw TrainingDivergedError(
          fmt::format("non-finite test loss in epoch {}", epoch));
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(n_train), test_mse});
    spdlog::debug("epoch {} train {:.6g} test {:.6g}", epoch,
                  result.history.back().train_mse, test_mse);
    if (test_mse < best) {
      best = test_mse;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    } else if (config.lr_patience > 0 && since_best % config.lr_patience == 0) {
      lr = std::max(config.min_learning_rate, lr * config.lr_decay);
    }
  }
  result.best_test_mse = best;
  return result;
}

void DatasetToMatrices(const Dataset& dataset, Eigen::MatrixXd* inputs,
                       Eigen::VectorXd* targets) {
  const int d = dataset.header.dof;
  const int g = dataset.header.geometry_size;
  const auto n = static_cast<Eigen::Index>(dataset.samples.size());
  inputs->resize(d + g, n);
  targets->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SignedDistanceSample& s = dataset.samples[static_cast<std::size_t>(i)];
    inputs->col(i).head(d) = s.q;
    inputs->col(i).tail(g) = s.g.params;
    (*targets)(i) = s.value;
  }
}

TrainResult Train(const Dataset& dataset, const TrainConfig& config) {
  if (dataset.samples.empty()) {
    throw std::invalid_argument("cannot train on an empty dataset");
  }
  Eigen::MatrixXd inputs;
  Eigen::VectorXd targets;
  DatasetToMatrices(dataset, &inputs, &targets);
  return Train(inputs, targets, dataset.header.dof, dataset.header.geometry_size,
               config);
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  true_positive += other.true_positive;
  true_negative += other.true_negative;
  false_positive += other.false_positive;
  false_negative += other.false_negative;
  return *this;
}

double ConfusionCounts::accuracy() const {
  const long n = total();
  return n == 0 ? 100.0 : 100.0 * (true_positive + true_negative) / n;
}

double ConfusionCounts::recall() const {
  const long n = true_positive + false_negative;
  return n == 0 ? 100.0 : 100.0 * true_positive / n;
}

double ConfusionCounts::precision() const {
  const long n = true_positive + false_positive;
  return n == 0 ? 100.0 : 100.0 * true_positive / n;
}

ValidationReport ValidateModel(const SignedDistanceModel& predictor,
                               const RobotModel& robot,
                               std::span<const GeometryVector> geometries,
                               int resolution) {
  ValidationReport report;
  for (const GeometryVector& g : geometries) {
    const CollisionGrid grid = BuildGrid(robot, g, resolution);
    GeometryValidation entry{g, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Config q = grid.LatticePoint(i);
      const bool truth = grid.occupied(i);
      const bool predicted = predictor(q, g) < 0.0;
      if (truth && predicted) ++entry.counts.true_positive;
      else if (!truth && !predicted) ++entry.counts.true_negative;
      else if (predicted) ++entry.counts.false_positive;
      else ++entry.counts.false_negative;
    }
    report.counts += entry.counts;
    report.per_geometry.push_back(std::move(entry));
  }
  return report;
}

ValidationReport ValidateModel(const MlpModel& model, const RobotModel& robot,
                               std::span<const GeometryVector> geometries,
                               int resolution) {
  return ValidateModel(
      [&model](const Config& q, const GeometryVector& g) {
        return model.Forward(q, g.params);
      },
      robot, geometries, resolution);
}

}  // namespace scdf
