#include "scdf/mlp.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace scdf {

static_assert(std::endian::native == std::endian::little,
              "model files are written in native little-endian order");

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'S', 'C', 'D', 'F', 'M', 'L', 'P'};

}  // namespace

MlpModel MlpModel::Random(int dof, int geometry_size, int hidden,
                          std::uint64_t seed) {
  const std::array<int, 5> sizes = {dof + geometry_size, hidden, hidden,
                                    hidden, 1};
  std::mt19937_64 rng(seed);
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (int l = 0; l < kNumLayers; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = u(rng);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  return FromLayers(dof, geometry_size, std::move(weights), std::move(biases));
}

MlpModel MlpModel::FromLayers(int dof, int geometry_size,
                              std::vector<Eigen::MatrixXd> weights,
                              std::vector<Eigen::VectorXd> biases) {
  if (weights.size() != kNumLayers || biases.size() != kNumLayers) {
    throw std::invalid_argument("the network needs exactly four affine layers");
  }
  if (dof <= 0 || geometry_size < 0) {
    throw std::invalid_argument("invalid input dimensions");
  }
  Eigen::Index width = dof + geometry_size;
  for (int l = 0; l < kNumLayers; ++l) {
    if (weights[l].cols() != width || biases[l].size() != weights[l].rows()) {
      throw std::invalid_argument(fmt::format("layer {} has inconsistent shape", l));
    }
    width = weights[l].rows();
  }
  if (width != 1) throw std::invalid_argument("the network must have one output");
  MlpModel model;
  model.dof_ = dof;
  model.geometry_size_ = geometry_size;
  model.weights_ = std::move(weights);
  model.biases_ = std::move(biases);
  return model;
}

std::vector<int> MlpModel::layer_sizes() const {
  std::vector<int> sizes;
  if (weights_.empty()) return sizes;
  sizes.push_back(static_cast<int>(weights_.front().cols()));
  for (const auto& w : weights_) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (int l = 0; l < static_cast<int>(weights_.size()); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

void MlpModel::CheckWidth(Eigen::Index width) const {
  if (width != input_size()) {
    throw std::invalid_argument(fmt::format(
        "network input has width {}, expected {}", width, input_size()));
  }
}

double MlpModel::Forward(const Eigen::VectorXd& input) const {
  CheckWidth(input.size());
  Eigen::VectorXd a = input;
  for (int l = 0; l < kNumLayers - 1; ++l) {
    a = (weights_[l] * a + biases_[l]).cwiseMax(0.0);
  }
  return (weights_.back() * a + biases_.back())(0);
}

double MlpModel::Forward(const Config& q, const Eigen::VectorXd& g) const {
  return Forward(ConcatInput(q, g));
}

Eigen::RowVectorXd MlpModel::ForwardBatch(const Eigen::MatrixXd& inputs) const {
  CheckWidth(inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < kNumLayers - 1; ++l) {
    a = ((weights_[l] * a).colwise() + biases_[l]).cwiseMax(0.0);
  }
  return ((weights_.back() * a).colwise() + biases_.back()).row(0);
}

Eigen::VectorXd MlpModel::FullInputGradient(const Eigen::VectorXd& input) const {
  CheckWidth(input.size());
  std::array<Eigen::VectorXd, kNumLayers - 1> pre;
  Eigen::VectorXd a = input;
  for (int l = 0; l < kNumLayers - 1; ++l) {
    pre[l] = weights_[l] * a + biases_[l];
    a = pre[l].cwiseMax(0.0);
  }
  Eigen::VectorXd delta = weights_.back().row(0).transpose();
  for (int l = kNumLayers - 2; l >= 0; --l) {
    delta = delta.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
    delta = weights_[l].transpose() * delta;
  }
  return delta;
}

Config MlpModel::InputGradient(const Config& q, const Eigen::VectorXd& g) const {
  return FullInputGradient(ConcatInput(q, g)).head(dof_);
}

double MlpModel::MinAbsPreactivation(const Eigen::VectorXd& input) const {
  CheckWidth(input.size());
  double smallest = std::numeric_limits<double>::infinity();
  Eigen::VectorXd a = input;
  for (int l = 0; l < kNumLayers - 1; ++l) {
    const Eigen::VectorXd pre = weights_[l] * a + biases_[l];
    smallest = std::min(smallest, pre.cwiseAbs().minCoeff());
    a = pre.cwiseMax(0.0);
  }
  return smallest;
}

bool MlpModel::AllFinite() const {
  for (int l = 0; l < static_cast<int>(weights_.size()); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd ConcatInput(const Config& q, const Eigen::VectorXd& g) {
  Eigen::VectorXd input(q.size() + g.size());
  input << q, g;
  return input;
}

namespace {

template <typename T>
void WritePod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::ifstream& in, const std::string& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CorruptFileError(path + ": truncated model file");
  }
  return value;
}

}  // namespace

void SaveModel(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  WritePod<std::uint32_t>(out, kModelFileVersion);
  WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(model.dof()));
  WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(model.geometry_size()));
  const std::vector<int> sizes = model.layer_sizes();
  WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  for (int l = 0; l < MlpModel::kNumLayers; ++l) {
    const Eigen::MatrixXd& w = model.weights()[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) WritePod<double>(out, w(r, c));
    }
    const Eigen::VectorXd& b = model.biases()[l];
    for (Eigen::Index r = 0; r < b.size(); ++r) WritePod<double>(out, b(r));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MlpModel LoadModel(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + name);
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CorruptFileError(name + ": not a model file");
  }
  const auto version = ReadPod<std::uint32_t>(in, name);
  if (version != kModelFileVersion) {
    throw VersionMismatchError(fmt::format("{}: model file version {}, expected {}",
                                           name, version, kModelFileVersion));
  }
  const auto dof = ReadPod<std::uint32_t>(in, name);
  const auto geometry_size = ReadPod<std::uint32_t>(in, name);
  const auto count = ReadPod<std::uint32_t>(in, name);
  if (count != MlpModel::kNumLayers + 1) {
    throw CorruptFileError(name + ": unexpected layer count");
  }
  std::vector<int> sizes(count);
  for (auto& s : sizes) {
    s = static_cast<int>(ReadPod<std::uint32_t>(in, name));
    if (s <= 0 || s > (1 << 16)) throw CorruptFileError(name + ": bad layer size");
  }
  if (static_cast<std::uint32_t>(sizes.front()) != dof + geometry_size) {
    throw CorruptFileError(name + ": header input width does not match D + G");
  }
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (int l = 0; l < MlpModel::kNumLayers; ++l) {
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = ReadPod<double>(in, name);
    }
    Eigen::VectorXd b(sizes[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = ReadPod<double>(in, name);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw CorruptFileError(name + ": payload is longer than the header declares");
  }
  try {
    return MlpModel::FromLayers(static_cast<int>(dof), static_cast<int>(geometry_size),
                                std::move(weights), std::move(biases));
  } catch (const std::invalid_argument& e) {
    throw CorruptFileError(name + ": " + e.what());
  }
}

}  // namespace scdf
