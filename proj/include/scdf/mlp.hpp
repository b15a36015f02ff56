#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scdf/types.hpp"

namespace scdf {

// Fully-connected network with four affine layers, ReLU on the hidden
// layers and an identity output. Input is the configuration followed by the
// geometry vector (empty for a self-collision network).
class MlpModel {
 public:
  static constexpr int kNumLayers = 4;

  MlpModel() = default;

  // Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpModel Random(int dof, int geometry_size, int hidden,
                         std::uint64_t seed);
  // Throws std::invalid_argument unless there are exactly four layers with
  // chained shapes, a single output, and an input of width dof + geometry_size.
  static MlpModel FromLayers(int dof, int geometry_size,
                             std::vector<Eigen::MatrixXd> weights,
                             std::vector<Eigen::VectorXd> biases);

  int dof() const { return dof_; }
  int geometry_size() const { return geometry_size_; }
  int input_size() const { return dof_ + geometry_size_; }
  std::vector<int> layer_sizes() const;
  std::size_t num_parameters() const;

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::vector<Eigen::MatrixXd>& mutable_weights() { return weights_; }
  std::vector<Eigen::VectorXd>& mutable_biases() { return biases_; }

  double Forward(const Eigen::VectorXd& input) const;
  double Forward(const Config& q, const Eigen::VectorXd& g) const;
  // One output per input column.
  Eigen::RowVectorXd ForwardBatch(const Eigen::MatrixXd& inputs) const;

  // d Forward / d input, by reverse accumulation. Units whose pre-activation
  // is exactly zero take the zero branch.
  Eigen::VectorXd FullInputGradient(const Eigen::VectorXd& input) const;
  // The configuration block of FullInputGradient.
  Config InputGradient(const Config& q, const Eigen::VectorXd& g) const;

  // Smallest |pre-activation| over all hidden units; small values flag
  // inputs close to a ReLU kink.
  double MinAbsPreactivation(const Eigen::VectorXd& input) const;

  bool AllFinite() const;

 private:
  void CheckWidth(Eigen::Index width) const;

  int dof_ = 0;
  int geometry_size_ = 0;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

Eigen::VectorXd ConcatInput(const Config& q, const Eigen::VectorXd& g);

// Binary model file: "NSCDFMLP" magic, uint32 version, D, G, layer count and
// layer sizes, then little-endian float64 parameters, layer by layer, weights
// row-major followed by biases.
inline constexpr std::uint32_t kModelFileVersion = 1;
void SaveModel(const MlpModel& model, const std::filesystem::path& path);
// Throws CorruptFileError or VersionMismatchError.
MlpModel LoadModel(const std::filesystem::path& path);

}  // namespace scdf
