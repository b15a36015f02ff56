#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "scdf/distance_field.hpp"
#include "scdf/mlp.hpp"
#include "scdf/training.hpp"
#include "test_util.hpp"

namespace scdf {
namespace {

using testing::Q;

MlpModel ZeroModel(int inputs, int hidden, double output_bias) {
  std::vector<Eigen::MatrixXd> w = {Eigen::MatrixXd::Zero(hidden, inputs),
                                    Eigen::MatrixXd::Zero(hidden, hidden),
                                    Eigen::MatrixXd::Zero(hidden, hidden),
                                    Eigen::MatrixXd::Zero(1, hidden)};
  std::vector<Eigen::VectorXd> b = {Eigen::VectorXd::Zero(hidden),
                                    Eigen::VectorXd::Zero(hidden),
                                    Eigen::VectorXd::Zero(hidden),
                                    Eigen::VectorXd::Constant(1, output_bias)};
  return MlpModel::FromLayers(inputs, 0, std::move(w), std::move(b));
}

TEST_CASE("degenerate and hand-built networks") {
  SUBCASE("all-zero weights return the output bias") {
    const MlpModel m = ZeroModel(3, 4, 0.7);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector3d x(n(rng), n(rng), n(rng));
      CHECK(m.Forward(x) == 0.7);
      CHECK(m.FullInputGradient(x).isZero());
    }
  }
  SUBCASE("single active path computes relu of the input sum") {
    MlpModel m = ZeroModel(3, 2, 0.0);
    m.mutable_weights()[0].row(0).setOnes();
    m.mutable_weights()[1](0, 0) = 1.0;
    m.mutable_weights()[2](0, 0) = 1.0;
    m.mutable_weights()[3](0, 0) = 1.0;
    CHECK(m.Forward(Eigen::Vector3d(0.5, 1.0, -0.2)) == doctest::Approx(1.3));
    CHECK(m.Forward(Eigen::Vector3d(-0.5, -1.0, 0.2)) == 0.0);
    CHECK(m.FullInputGradient(Eigen::Vector3d(0.5, 1.0, -0.2)) == Eigen::Vector3d::Ones());
  }
  SUBCASE("shape checks") {
    const MlpModel m = MlpModel::Random(2, 3, 8, 1);
    CHECK(m.layer_sizes() == std::vector<int>{5, 8, 8, 8, 1});
    CHECK_THROWS_AS(m.Forward(Eigen::VectorXd::Zero(4)), std::invalid_argument);
    CHECK_THROWS_AS(m.Forward(Q({0.0, 0.0, 0.0}), Eigen::VectorXd::Zero(3)),
                    std::invalid_argument);
    std::vector<Eigen::MatrixXd> w(3, Eigen::MatrixXd::Zero(1, 1));
    std::vector<Eigen::VectorXd> b(3, Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(MlpModel::FromLayers(1, 0, w, b), std::invalid_argument);
  }
}

TEST_CASE("analytic input gradient matches central differences away from kinks") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const MlpModel m = MlpModel::Random(2, 3, 16, 7);
  constexpr double kH = 1e-4;
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x(i) = u(rng);
    // A central difference only sees a smooth function when no unit changes
    // sign within the stencil.
    if (m.MinAbsPreactivation(x) < 1e-3) continue;
    const Eigen::VectorXd g = m.FullInputGradient(x);
    Eigen::VectorXd fd(5);
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd a = x, b = x;
      a(i) += kH;
      b(i) -= kH;
      fd(i) = (m.Forward(a) - m.Forward(b)) / (2 * kH);
    }
    CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("batched forward equals per-sample forward") {
  const MlpModel m = MlpModel::Random(3, 4, 32, 2);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(7, 50);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const Eigen::RowVectorXd batch = m.ForwardBatch(x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    CHECK(batch(c) == doctest::Approx(m.Forward(Eigen::VectorXd(x.col(c)))).epsilon(1e-12));
  }
}

TEST_CASE("model files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "scdf_test_model.bin";
  const MlpModel m = MlpModel::Random(2, 3, 16, 5);
  SaveModel(m, path);
  SUBCASE("round trip is bit-identical") {
    const MlpModel back = LoadModel(path);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n;
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x(5);
      for (int k = 0; k < 5; ++k) x(k) = n(rng);
      REQUIRE(back.Forward(x) == m.Forward(x));
    }
  }
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();
  auto write = [&](const std::string& data) {
    const auto p = dir / "scdf_test_model_bad.bin";
    std::ofstream out(p, std::ios::binary);
    out << data;
    return p;
  };
  SUBCASE("truncated file") {
    CHECK_THROWS_AS(LoadModel(write(bytes.substr(0, bytes.size() - 8))), CorruptFileError);
    CHECK_THROWS_AS(LoadModel(write(bytes.substr(0, 10))), CorruptFileError);
  }
  SUBCASE("header layer sizes disagree with the payload") {
    std::string bad = bytes;
    // First hidden width lives after magic, version, D, G and the layer count.
    const std::uint32_t width = 17;
    bad.replace(28, 4, reinterpret_cast<const char*>(&width), 4);
    CHECK_THROWS_AS(LoadModel(write(bad)), CorruptFileError);
  }
  SUBCASE("version mismatch") {
    std::string bad = bytes;
    const std::uint32_t version = kModelFileVersion + 1;
    bad.replace(8, 4, reinterpret_cast<const char*>(&version), 4);
    CHECK_THROWS_AS(LoadModel(write(bad)), VersionMismatchError);
  }
  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(LoadModel(write(bad)), CorruptFileError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("training on synthetic targets") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr int kN = 2000;
  Eigen::MatrixXd x(3, kN);
  Eigen::VectorXd smooth(kN);
  for (int i = 0; i < kN; ++i) {
    x.col(i) << u(rng), u(rng), u(rng);
    smooth(i) = std::sin(2.0 * x(0, i)) + x(1, i) * x(2, i);
  }
  TrainConfig config;
  config.hidden = 32;
  config.max_epochs = 60;
  config.batch_size = 64;
  config.seed = 2;

  SUBCASE("constant targets are learned exactly") {
    const TrainResult r = Train(x, Eigen::VectorXd::Constant(kN, 0.4), 2, 1, config);
    CHECK(r.best_test_mse < 1e-5);
    CHECK(r.model.Forward(Eigen::Vector3d(0.1, -0.3, 0.5)) == doctest::Approx(0.4).epsilon(1e-2));
  }
  SUBCASE("smooth targets beat the variance, shuffled ones do not") {
    const TrainResult fit = Train(x, smooth, 2, 1, config);
    CHECK(fit.best_test_mse < 0.1 * fit.test_target_variance);
    Eigen::VectorXd shuffled = smooth;
    std::shuffle(shuffled.data(), shuffled.data() + kN, rng);
    const TrainResult control = Train(x, shuffled, 2, 1, config);
    CHECK(control.best_test_mse >= 0.9 * control.test_target_variance);
  }
  SUBCASE("early stopping keeps the best checkpoint") {
    config.patience = 5;
    const TrainResult r = Train(x, smooth, 2, 1, config);
    for (const EpochRecord& e : r.history) CHECK(r.best_test_mse <= e.test_mse);
    CHECK(r.history.size() <= static_cast<std::size_t>(config.max_epochs));
    CHECK(r.history[r.best_epoch].test_mse == r.best_test_mse);
  }
  SUBCASE("deterministic per seed") {
    config.max_epochs = 5;
    const TrainResult a = Train(x, smooth, 2, 1, config);
    const TrainResult b = Train(x, smooth, 2, 1, config);
    CHECK(a.best_test_mse == b.best_test_mse);
    CHECK(a.model.weights()[0] == b.model.weights()[0]);
  }
  SUBCASE("divergence and invalid settings") {
    Eigen::VectorXd bad = smooth;
    bad(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(Train(x, bad, 2, 1, config), TrainingDivergedError);
    config.split_ratio = 1.0;
    CHECK_THROWS_AS(Train(x, smooth, 2, 1, config), std::invalid_argument);
    config.split_ratio = 0.9;
    config.patience = 0;
    CHECK_THROWS_AS(Train(x, smooth, 2, 1, config), std::invalid_argument);
    CHECK_THROWS_AS(Train(Dataset{}, TrainConfig{}), std::invalid_argument);
  }
}

TEST_CASE("small oracle dataset is learnable") {
  const RobotModel arm = testing::TwoLinkArm(1.0, 0.8);
  const Dataset data = GenerateDataset(arm, ObstacleSampler{}, 32, 256, 32, 1);
  TrainConfig config;
  config.max_epochs = 15;
  config.seed = 1;
  const TrainResult r = Train(data, config);
  CHECK(r.best_test_mse < r.test_target_variance);
}

TEST_CASE("confusion metrics") {
  ConfusionCounts c;
  c.true_positive = 8;
  c.false_negative = 2;
  c.false_positive = 4;
  c.true_negative = 86;
  CHECK(c.accuracy() == doctest::Approx(94.0));
  CHECK(c.recall() == doctest::Approx(80.0));
  CHECK(c.precision() == doctest::Approx(200.0 / 3.0));
  CHECK(ConfusionCounts{}.recall() == 100.0);
}

TEST_CASE("a perfect predictor validates at 100 percent") {
  const RobotModel arm = testing::TwoLinkArm(1.0, 0.8);
  const ObstacleSet unseen = {GeometryVector::Circle({1.2, 0.3}, 0.2),
                              GeometryVector::Circle({-0.5, -1.0}, 0.3)};
  const ValidationReport report = ValidateModel(
      [&arm](const Config& q, const GeometryVector& g) {
        return WorkspaceDistance(arm, q, std::span<const GeometryVector>(&g, 1));
      },
      arm, unseen, 32);
  CHECK(report.accuracy() == 100.0);
  CHECK(report.recall() == 100.0);
  CHECK(report.precision() == 100.0);
  REQUIRE(report.per_geometry.size() == 2);
  CHECK(report.counts.total() == 2 * 32 * 32);
  CHECK(report.counts.true_positive > 0);
}

TEST_CASE("neural field combines per-obstacle outputs by minimum") {
  auto model = std::make_shared<const MlpModel>(MlpModel::Random(2, 3, 16, 3));
  const ObstacleSet obstacles = {GeometryVector::Circle({1.0, 0.0}, 0.2),
                                 GeometryVector::Circle({-1.0, 0.5}, 0.3),
                                 GeometryVector::Circle({0.0, 1.5}, 0.1)};
  const NeuralField field(model, obstacles);
  ObstacleSet reversed(obstacles.rbegin(), obstacles.rend());
  const NeuralField other(model, reversed);
  std::mt19937_64 rng(5);
  const RobotModel arm = testing::TwoLinkArm();
  for (int i = 0; i < 50; ++i) {
    const Config q = SampleUniform(arm, rng);
    double expected = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      const double v = model->Forward(q, obstacles[k].params);
      if (v < expected) expected = v, arg = k;
    }
    Config gradient;
    CHECK(field.Distance(q, &gradient) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(other.Distance(q) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(gradient.isApprox(model->InputGradient(q, obstacles[arg].params), 1e-12));
  }
  const NeuralField empty(model, {});
  CHECK(empty.Distance(Q({0.0, 0.0})) == kDistanceSentinel);
}

TEST_CASE("projected field ignores trailing joints") {
  auto model = std::make_shared<const MlpModel>(MlpModel::Random(2, 3, 16, 4));
  auto base = std::make_shared<const NeuralField>(
      model, ObstacleSet{GeometryVector::Circle({1.0, 0.0}, 0.2)});
  const ProjectedField lifted(base, 3);
  CHECK(lifted.dof() == 3);
  Config g3, g2;
  const double d3 = lifted.Distance(Q({0.3, -0.2, 1.7}), &g3);
  const double d2 = base->Distance(Q({0.3, -0.2}), &g2);
  CHECK(d3 == d2);
  REQUIRE(g3.size() == 3);
  CHECK(g3.head(2) == g2);
  CHECK(g3(2) == 0.0);
  CHECK(lifted.Distance(Q({0.3, -0.2, -2.0})) == d2);
}

TEST_CASE("oracle field components and gradients") {
  const RobotModel arm = testing::TwoLinkArm();
  const ObstacleSet obstacles = {GeometryVector::Circle({1.4, 0.4}, 0.25)};
  const OracleField field(arm, obstacles, 32);
  CHECK(field.num_components() == 1);
  CHECK(field.lattice_diagonal() == doctest::Approx(field.grid(0).lattice_diagonal()));
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Config q = SampleUniform(arm, rng);
    Config gradient;
    const double d = field.Distance(q, &gradient);
    CHECK((d < 0.0) == CheckCollision(arm, q, obstacles));
    if (std::abs(d) > 1e-9) CHECK(gradient.norm() == doctest::Approx(1.0));
    // q - d * gradient lands on the nearest boundary point on both sides.
    if (std::abs(d) > 1e-9) {
      CHECK(field.grid(0).NearestBoundary(q - d * gradient)->second < 1e-9);
    }
  }
  const OracleField three(testing::ThreeLinkArm(), {}, 16);
  CHECK(three.num_components() == 1);  // self-collision only
}

}  // namespace
}  // namespace scdf
