#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scdf/geometry.hpp"
#include "scdf/mlp.hpp"
#include "scdf/oracle.hpp"

namespace scdf {

// Adam on mean squared error with early stopping on the held-out split.
struct TrainConfig {
  double learning_rate = 1e-3;
  // The learning rate is multiplied by lr_decay after lr_patience epochs
  // without a new best test loss (lr_patience 0 keeps it constant).
  int lr_patience = 8;
  double lr_decay = 0.5;
  double min_learning_rate = 1e-5;
  int batch_size = 256;
  int max_epochs = 200;
  // Stop after this many consecutive epochs without a new best test loss.
  int patience = 30;
  // Fraction of the (shuffled) samples used for training.
  double split_ratio = 0.9;
  int hidden = 128;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
};

struct TrainResult {
  // Checkpoint with the lowest test loss.
  MlpModel model;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_test_mse = 0.0;
  double test_target_variance = 0.0;
  std::string optimizer = "adam";
};

// Inputs are one column per sample (configuration followed by geometry).
// Throws std::invalid_argument on an empty dataset and TrainingDivergedError
// when a loss becomes non-finite.
TrainResult Train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                  int dof, int geometry_size, const TrainConfig& config);
TrainResult Train(const Dataset& dataset, const TrainConfig& config);

void DatasetToMatrices(const Dataset& dataset, Eigen::MatrixXd* inputs,
                       Eigen::VectorXd* targets);

struct ConfusionCounts {
  long true_positive = 0;   // predicted collision, in collision
  long true_negative = 0;
  long false_positive = 0;  // predicted collision, actually free
  long false_negative = 0;

  long total() const {
    return true_positive + true_negative + false_positive + false_negative;
  }
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  // Percentages. Recall is over true collisions, precision over predicted
  // collisions; both are 100 when their denominator is zero.
  double accuracy() const;
  double recall() const;
  double precision() const;
};

struct GeometryValidation {
  GeometryVector g;
  ConfusionCounts counts;
};

struct ValidationReport {
  ConfusionCounts counts;
  std::vector<GeometryValidation> per_geometry;

  double accuracy() const { return counts.accuracy(); }
  double recall() const { return counts.recall(); }
  double precision() const { return counts.precision(); }
};

// Any signed-distance predictor; negative means "in collision".
using SignedDistanceModel =
    std::function<double(const Config& q, const GeometryVector& g)>;

// Grids each validation geometry at `resolution` per joint and compares the
// sign of the predictor against the exact obstacle collision status.
ValidationReport ValidateModel(const SignedDistanceModel& predictor,
                               const RobotModel& robot,
                               std::span<const GeometryVector> geometries,
                               int resolution);
ValidationReport ValidateModel(const MlpModel& model, const RobotModel& robot,
                               std::span<const GeometryVector> geometries,
                               int resolution);

}  // namespace scdf
