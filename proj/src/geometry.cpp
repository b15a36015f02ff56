#include "scdf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace scdf {

void RobotModel::Validate() const {
  if (link_lengths.empty() || link_lengths.size() > 4) {
    throw std::invalid_argument("robot dof must be in [1, 4]");
  }
  for (double length : link_lengths) {
    if (!(length > 0.0)) {
      throw std::invalid_argument("link lengths must be positive");
    }
  }
  if (!(link_radius > 0.0)) {
    throw std::invalid_argument("link radius must be positive");
  }
  if (tool_radius < 0.0) {
    throw std::invalid_argument("tool radius must be non-negative");
  }
  if (joint_limits.size() != link_lengths.size()) {
    throw std::invalid_argument("one joint limit per link is required");
  }
  for (const JointLimit& limit : joint_limits) {
    if (!(limit.low < limit.high)) {
      throw std::invalid_argument("joint limits need low < high");
    }
  }
}

Config RobotModel::lower() const {
  Config out(dof());
  for (int i = 0; i < dof(); ++i) out(i) = joint_limits[i].low;
  return out;
}

Config RobotModel::upper() const {
  Config out(dof());
  for (int i = 0; i < dof(); ++i) out(i) = joint_limits[i].high;
  return out;
}

bool RobotModel::WithinLimits(const Config& q) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i) {
    if (q(i) < joint_limits[i].low || q(i) > joint_limits[i].high) return false;
  }
  return true;
}

double RobotModel::DistanceToLimits(const Config& q) const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dof(); ++i) {
    best = std::min({best, q(i) - joint_limits[i].low,
                     joint_limits[i].high - q(i)});
  }
  return best;
}

double RobotModel::LimitVolume() const {
  double volume = 1.0;
  for (const JointLimit& limit : joint_limits) volume *= limit.high - limit.low;
  return volume;
}

GeometryVector GeometryVector::Circle(const Vec2& center, double radius) {
  GeometryVector g;
  g.kind = ShapeKind::kCircle;
  g.params.resize(3);
  g.params << center.x(), center.y(), radius;
  return g;
}

GeometryVector GeometryVector::Box(const Vec2& center,
                                   const Vec2& half_extents) {
  GeometryVector g;
  g.kind = ShapeKind::kBox;
  g.params.resize(4);
  g.params << center.x(), center.y(), half_extents.x(), half_extents.y();
  return g;
}

void GeometryVector::Validate() const {
  if (params.size() != GeometrySize(kind)) {
    throw std::invalid_argument("geometry vector has the wrong size");
  }
  if (kind == ShapeKind::kCircle && !(radius() > 0.0)) {
    throw std::invalid_argument("circle radius must be positive");
  }
  if (kind == ShapeKind::kBox &&
      !(half_extents().x() > 0.0 && half_extents().y() > 0.0)) {
    throw std::invalid_argument("box half-extents must be positive");
  }
}

int GeometrySize(ShapeKind kind) {
  return kind == ShapeKind::kCircle ? 3 : 4;
}

const char* ShapeKindName(ShapeKind kind) {
  return kind == ShapeKind::kCircle ? "circle" : "aabb";
}

ShapeKind ParseShapeKind(const std::string& name) {
  if (name == "circle" || name == "sphere") return ShapeKind::kCircle;
  if (name == "aabb" || name == "box") return ShapeKind::kBox;
  throw std::invalid_argument("unknown obstacle kind '" + name + "'");
}

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

double Cross(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool SegmentsIntersect(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                       const Vec2& b1) {
  const double d1 = Cross(a1 - a0, b0 - a0);
  const double d2 = Cross(a1 - a0, b1 - a0);
  const double d3 = Cross(b1 - b0, a0 - b0);
  const double d4 = Cross(b1 - b0, a1 - b0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  // Collinear / touching cases are covered by the endpoint distances.
  return false;
}

// Liang-Barsky clip of the segment against the box.
bool SegmentTouchesBox(const Vec2& a, const Vec2& b, const Vec2& lo,
                       const Vec2& hi) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec2 d = b - a;
  for (int axis = 0; axis < 2; ++axis) {
    if (d(axis) == 0.0) {
      if (a(axis) < lo(axis) || a(axis) > hi(axis)) return false;
      continue;
    }
    double ta = (lo(axis) - a(axis)) / d(axis);
    double tb = (hi(axis) - a(axis)) / d(axis);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

double CircleSeparation(const Vec2& center, double radius,
                        const GeometryVector& g) {
  if (g.kind == ShapeKind::kCircle) {
    return (center - g.center()).norm() - radius - g.radius();
  }
  return PointBoxSignedDistance(center, g.center(), g.half_extents()) - radius;
}

double CapsuleSeparation(const Capsule& c, const GeometryVector& g) {
  if (g.kind == ShapeKind::kCircle) {
    return PointSegmentDistance(g.center(), c.start, c.end) - c.radius -
           g.radius();
  }
  return SegmentBoxDistance(c.start, c.end, g.center(), g.half_extents()) -
         c.radius;
}

// Visits every separation value; stops early when `visit` returns true.
template <typename Visit>
void ForEachSeparation(const RobotModel& model, const Config& q,
                       std::span<const GeometryVector> obstacles,
                       bool include_obstacles, bool include_self,
                       Visit&& visit) {
  const std::vector<Capsule> links = ForwardKinematics(model, q);
  if (include_obstacles) {
    for (const GeometryVector& g : obstacles) {
      for (const Capsule& link : links) {
        if (visit(CapsuleSeparation(link, g))) return;
      }
      if (model.tool_radius > 0.0) {
        if (visit(CircleSeparation(links.back().end, model.tool_radius, g))) {
          return;
        }
      }
    }
  }
  if (include_self) {
    for (size_t i = 0; i < links.size(); ++i) {
      for (size_t j = i + 2; j < links.size(); ++j) {
        const double d = SegmentSegmentDistance(links[i].start, links[i].end,
                                                links[j].start, links[j].end);
        if (visit(d - links[i].radius - links[j].radius)) return;
      }
    }
  }
}

bool AnyNegative(const RobotModel& model, const Config& q,
                 std::span<const GeometryVector> obstacles, bool obstacles_on,
                 bool self_on) {
  bool hit = false;
  ForEachSeparation(model, q, obstacles, obstacles_on, self_on,
                    [&](double separation) {
                      hit = separation < 0.0;
                      return hit;
                    });
  return hit;
}

}  // namespace

double SegmentSegmentDistance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                              const Vec2& b1) {
  if (SegmentsIntersect(a0, a1, b0, b1)) return 0.0;
  return std::min({PointSegmentDistance(a0, b0, b1),
                   PointSegmentDistance(a1, b0, b1),
                   PointSegmentDistance(b0, a0, a1),
                   PointSegmentDistance(b1, a0, a1)});
}

double PointBoxSignedDistance(const Vec2& p, const Vec2& center,
                              const Vec2& half_extents) {
  const Vec2 d = (p - center).cwiseAbs() - half_extents;
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(std::max(d.x(), d.y()), 0.0);
  return outside + inside;
}

double SegmentBoxDistance(const Vec2& a, const Vec2& b, const Vec2& center,
                          const Vec2& half_extents) {
  const Vec2 lo = center - half_extents;
  const Vec2 hi = center + half_extents;
  if (SegmentTouchesBox(a, b, lo, hi)) return 0.0;
  // Disjoint convex polygons: the closest pair involves a vertex of one.
  double best = std::min(PointBoxSignedDistance(a, center, half_extents),
                         PointBoxSignedDistance(b, center, half_extents));
  const Vec2 corners[4] = {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
  for (const Vec2& corner : corners) {
    best = std::min(best, PointSegmentDistance(corner, a, b));
  }
  return best;
}

std::vector<Capsule> ForwardKinematics(const RobotModel& model,
                                       const Config& q) {
  if (q.size() != model.dof()) {
    throw std::invalid_argument("configuration has dimension " +
                                std::to_string(q.size()) + ", robot has " +
                                std::to_string(model.dof()));
  }
  std::vector<Capsule> links;
  links.reserve(model.link_lengths.size());
  Vec2 joint = model.base_position;
  double angle = 0.0;
  for (int i = 0; i < model.dof(); ++i) {
    angle += q(i);
    const Vec2 next =
        joint + model.link_lengths[i] * Vec2(std::cos(angle), std::sin(angle));
    links.push_back({joint, next, model.link_radius});
    joint = next;
  }
  return links;
}

Vec2 EndEffector(const RobotModel& model, const Config& q) {
  return ForwardKinematics(model, q).back().end;
}

bool CheckObstacleCollision(const RobotModel& model, const Config& q,
                            std::span<const GeometryVector> obstacles) {
  return AnyNegative(model, q, obstacles, true, false);
}

bool CheckSelfCollision(const RobotModel& model, const Config& q) {
  return AnyNegative(model, q, {}, false, true);
}

bool CheckCollision(const RobotModel& model, const Config& q,
                    std::span<const GeometryVector> obstacles) {
  return AnyNegative(model, q, obstacles, true, true);
}

double WorkspaceDistance(const RobotModel& model, const Config& q,
                         std::span<const GeometryVector> obstacles,
                         double sentinel) {
  double best = sentinel;
  ForEachSeparation(model, q, obstacles, true, true, [&](double separation) {
    best = std::min(best, separation);
    return false;
  });
  return best;
}

bool SegmentCollisionFree(const RobotModel& model,
                          std::span<const GeometryVector> obstacles,
                          const Config& a, const Config& b, double step) {
  const double length = (b - a).norm();
  const int pieces = std::max(1, static_cast<int>(std::ceil(length / step)));
  for (int i = 0; i <= pieces; ++i) {
    const double t = static_cast<double>(i) / pieces;
    if (CheckCollision(model, a + t * (b - a), obstacles)) return false;
  }
  return true;
}

bool PathCollisionFree(const RobotModel& model,
                       std::span<const GeometryVector> obstacles,
                       std::span<const Config> path, double step) {
  if (path.size() == 1) return !CheckCollision(model, path[0], obstacles);
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    if (!SegmentCollisionFree(model, obstacles, path[i], path[i + 1], step)) {
      return false;
    }
  }
  return true;
}

double PathLength(std::span<const Config> path) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    total += (path[i + 1] - path[i]).norm();
  }
  return total;
}

GeometryVector ObstacleSampler::Sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> ux(center_low.x(), center_high.x());
  std::uniform_real_distribution<double> uy(center_low.y(), center_high.y());
  std::uniform_real_distribution<double> us(size_low, size_high);
  const Vec2 center(ux(rng), uy(rng));
  if (kind == ShapeKind::kCircle) {
    return GeometryVector::Circle(center, us(rng));
  }
  const double hx = us(rng);
  const double hy = us(rng);
  return GeometryVector::Box(center, Vec2(hx, hy));
}

Config SampleUniform(const RobotModel& model, std::mt19937_64& rng) {
  Config q(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    std::uniform_real_distribution<double> u(model.joint_limits[i].low,
                                             model.joint_limits[i].high);
    q(i) = u(rng);
  }
  return q;
}

}  // namespace scdf
