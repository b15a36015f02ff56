#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "scdf/geometry.hpp"
#include "scdf/scenario.hpp"

namespace scdf::testing {

inline constexpr double kPi = std::numbers::pi;

inline Config Q(std::initializer_list<double> values) {
  Config q(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) q(i++) = v;
  return q;
}

inline RobotModel TwoLinkArm(double l1 = 1.0, double l2 = 1.0) {
  RobotModel robot;
  robot.link_lengths = {l1, l2};
  robot.link_radius = 0.05;
  robot.joint_limits = {{-kPi, kPi}, {-kPi, kPi}};
  return robot;
}

inline RobotModel ThreeLinkArm() {
  RobotModel robot;
  robot.link_lengths = {0.8, 0.6, 0.4};
  robot.link_radius = 0.05;
  robot.joint_limits = {{-kPi, kPi}, {-2.6, 2.6}, {-2.6, 2.6}};
  return robot;
}

// Uniform point in a d-ball (direction from a Gaussian, radius ~ U^(1/d)).
inline Config SampleInBall(const Config& center, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  Config dir(center.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
  const double scale =
      radius * std::pow(uniform(rng), 1.0 / static_cast<double>(center.size()));
  return center + scale * dir.normalized();
}

}  // namespace scdf::testing

#include "scdf/distance_field.hpp"

namespace scdf::testing {

// Exact signed distance to spheres placed directly in configuration space.
class SphereField final : public DistanceField {
 public:
  SphereField(int dof, std::vector<Config> centers, std::vector<double> radii)
      : dof_(dof), centers_(std::move(centers)), radii_(std::move(radii)) {}

  int dof() const override { return dof_; }
  std::size_t num_components() const override { return centers_.size(); }
  double Component(std::size_t i, const Config& q, Config* gradient) const override {
    const Config d = q - centers_[i];
    const double n = d.norm();
    if (gradient) *gradient = n > 0.0 ? Config(d / n) : Config::Zero(dof_);
    return n - radii_[i];
  }
  std::string name() const override { return "spheres"; }

 private:
  int dof_;
  std::vector<Config> centers_;
  std::vector<double> radii_;
};

}  // namespace scdf::testing
