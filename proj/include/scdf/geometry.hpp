#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "scdf/types.hpp"

namespace scdf {

struct JointLimit {
  double low = 0.0;
  double high = 0.0;
};

// Planar serial arm with capsule links. Joint i rotates link i relative to
// link i-1; angles accumulate along the chain.
struct RobotModel {
  std::vector<double> link_lengths;
  double link_radius = 0.05;
  Vec2 base_position = Vec2::Zero();
  std::vector<JointLimit> joint_limits;
  // Radius of a bounding circle centered at the end of the last link, used
  // to stand in for a tool. Zero disables it.
  double tool_radius = 0.0;

  int dof() const { return static_cast<int>(link_lengths.size()); }

  // Throws std::invalid_argument when an invariant is violated.
  void Validate() const;

  Config lower() const;
  Config upper() const;
  bool WithinLimits(const Config& q) const;
  // Distance from q to the nearest face of the joint-limit box (negative
  // outside the box).
  double DistanceToLimits(const Config& q) const;
  // Volume of the joint-limit box.
  double LimitVolume() const;
};

struct Capsule {
  Vec2 start;
  Vec2 end;
  double radius = 0.0;
};

enum class ShapeKind { kCircle, kBox };

// Parametric workspace obstacle. Circle params are (px, py, r); axis-aligned
// box params are (bx, by, dx, dy) with (dx, dy) the half-extents.
struct GeometryVector {
  ShapeKind kind = ShapeKind::kCircle;
  Eigen::VectorXd params;

  static GeometryVector Circle(const Vec2& center, double radius);
  static GeometryVector Box(const Vec2& center, const Vec2& half_extents);

  Vec2 center() const { return params.head<2>(); }
  double radius() const { return params(2); }
  Vec2 half_extents() const { return params.segment<2>(2); }
  int size() const { return static_cast<int>(params.size()); }

  void Validate() const;
};

// Number of parameters a geometry vector of `kind` carries.
int GeometrySize(ShapeKind kind);
const char* ShapeKindName(ShapeKind kind);
ShapeKind ParseShapeKind(const std::string& name);

using ObstacleSet = std::vector<GeometryVector>;

// Closed-form primitive distances in the plane.
double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b);
double SegmentSegmentDistance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                              const Vec2& b1);
// Signed: negative inside the box.
double PointBoxSignedDistance(const Vec2& p, const Vec2& center,
                              const Vec2& half_extents);
// Zero when the segment touches the box.
double SegmentBoxDistance(const Vec2& a, const Vec2& b, const Vec2& center,
                          const Vec2& half_extents);

// One capsule per link; capsule i starts where capsule i-1 ends.
// Throws std::invalid_argument on dimension mismatch.
std::vector<Capsule> ForwardKinematics(const RobotModel& model,
                                       const Config& q);

// End of the last link.
Vec2 EndEffector(const RobotModel& model, const Config& q);

// Links (and tool) against the obstacles only.
bool CheckObstacleCollision(const RobotModel& model, const Config& q,
                            std::span<const GeometryVector> obstacles);
// Non-adjacent links (index gap >= 2) against each other.
bool CheckSelfCollision(const RobotModel& model, const Config& q);
// Either of the above.
bool CheckCollision(const RobotModel& model, const Config& q,
                    std::span<const GeometryVector> obstacles);

// Signed workspace clearance over all (link, obstacle) and self-collision
// pairs; negative on penetration, `sentinel` when there is no pair.
// CheckCollision(q) == (WorkspaceDistance(q) < 0).
double WorkspaceDistance(const RobotModel& model, const Config& q,
                         std::span<const GeometryVector> obstacles,
                         double sentinel = kDistanceSentinel);

// Samples the straight segment a->b at spacing <= step (both endpoints
// included) with the exact detector.
bool SegmentCollisionFree(const RobotModel& model,
                          std::span<const GeometryVector> obstacles,
                          const Config& a, const Config& b, double step);
bool PathCollisionFree(const RobotModel& model,
                       std::span<const GeometryVector> obstacles,
                       std::span<const Config> path, double step);
double PathLength(std::span<const Config> path);

// Uniform sampling of obstacle geometry vectors in a workspace box.
struct ObstacleSampler {
  ShapeKind kind = ShapeKind::kCircle;
  Vec2 center_low{-2.0, -2.0};
  Vec2 center_high{2.0, 2.0};
  // Radius range for circles, half-extent range (per axis) for boxes.
  double size_low = 0.1;
  double size_high = 0.3;

  GeometryVector Sample(std::mt19937_64& rng) const;
};

Config SampleUniform(const RobotModel& model, std::mt19937_64& rng);

}  // namespace scdf
