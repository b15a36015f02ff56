#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scdf/geometry.hpp"
#include "scdf/mlp.hpp"
#include "scdf/oracle.hpp"

namespace scdf {

// A signed configuration-distance function made of per-obstacle components
// (plus an optional self-collision component), combined by taking the
// minimum. Implementations are immutable after construction.
class DistanceField {
 public:
  virtual ~DistanceField() = default;

  virtual int dof() const = 0;
  virtual std::size_t num_components() const = 0;
  // Signed distance of component i; fills `gradient` (d/dq) when non-null.
  virtual double Component(std::size_t i, const Config& q,
                           Config* gradient) const = 0;
  // Minimum over components, kDistanceSentinel when there are none. The
  // gradient is the one of the minimizing component.
  virtual double Distance(const Config& q, Config* gradient = nullptr) const;
  virtual std::string name() const = 0;
};

// Grid-based reference: one CollisionGrid per obstacle, and one for
// self-collision when the robot has non-adjacent link pairs.
class OracleField final : public DistanceField {
 public:
  OracleField(RobotModel robot, ObstacleSet obstacles, int resolution);

  int dof() const override { return robot_.dof(); }
  std::size_t num_components() const override;
  double Component(std::size_t i, const Config& q,
                   Config* gradient) const override;
  std::string name() const override { return "oracle"; }

  int resolution() const { return resolution_; }
  double lattice_diagonal() const;
  const CollisionGrid& grid(std::size_t i) const;

 private:
  RobotModel robot_;
  ObstacleSet obstacles_;
  int resolution_;
  std::vector<CollisionGrid> grids_;
  std::optional<CollisionGrid> self_grid_;
};

// Learned field: the obstacle network evaluated once per geometry vector,
// and optionally a self-collision network.
class NeuralField final : public DistanceField {
 public:
  NeuralField(std::shared_ptr<const MlpModel> obstacle_model,
              ObstacleSet obstacles,
              std::shared_ptr<const MlpModel> self_model = nullptr);

  int dof() const override { return obstacle_model_->dof(); }
  std::size_t num_components() const override;
  double Component(std::size_t i, const Config& q,
                   Config* gradient) const override;
  double Distance(const Config& q, Config* gradient = nullptr) const override;
  std::string name() const override { return "nscdf"; }

 private:
  std::shared_ptr<const MlpModel> obstacle_model_;
  std::shared_ptr<const MlpModel> self_model_;
  ObstacleSet obstacles_;
  // Geometry block of the batched network input, one column per obstacle.
  Eigen::MatrixXd geometry_block_;
};

// Lifts a field over the first m joints to a robot with more joints: the
// trailing joints do not change the distance. Used when the leading joints
// carry a model that bounds the remaining links.
class ProjectedField final : public DistanceField {
 public:
  ProjectedField(std::shared_ptr<const DistanceField> base, int dof);

  int dof() const override { return dof_; }
  std::size_t num_components() const override { return base_->num_components(); }
  double Component(std::size_t i, const Config& q,
                   Config* gradient) const override;
  double Distance(const Config& q, Config* gradient = nullptr) const override;
  std::string name() const override { return base_->name() + "-projected"; }

 private:
  std::shared_ptr<const DistanceField> base_;
  int dof_;
};

}  // namespace scdf
