#include "scdf/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace scdf {

namespace {

constexpr int kMaxDim = 8;

// Heap-free vectors for the inner loops; robots have at most a few joints.
template <int D>
using Vec = Eigen::Matrix<double, D, 1, Eigen::ColMajor,
                          D == Eigen::Dynamic ? kMaxDim : D, 1>;

// Two consecutive corridor balls and the rim where their spheres meet: a
// (d-2)-sphere of radius rho around m, orthogonal to the center axis u.
template <int D>
struct Lens {
  Vec<D> ca, cb, m, u;
  double ra = 0.0, rb = 0.0, rho = 0.0;

  Lens(const Ball& a, const Ball& b) : ca(a.center), cb(b.center), ra(a.radius), rb(b.radius) {
    const Vec<D> axis = cb - ca;
    const double dist = axis.norm();
    if (dist > 0.0) {
      u = axis / dist;
      const double t = (dist * dist + ra * ra - rb * rb) / (2.0 * dist);
      rho = std::sqrt(std::max(0.0, ra * ra - t * t));
      m = ca + t * u;
    } else {
      // Concentric: the smaller ball is the intersection and the rim is
      // never reached.
      u = Vec<D>::Zero(ca.size());
      u(0) = 1.0;
      m = ca;
    }
  }

  static bool Inside(const Vec<D>& x, const Vec<D>& c, double r) {
    return (x - c).squaredNorm() <= r * r;
  }
  static Vec<D> OntoBall(const Vec<D>& x, const Vec<D>& c, double r) {
    const Vec<D> d = x - c;
    const double n = d.norm();
    return n > r ? Vec<D>(c + d * (r / n)) : x;
  }

  // Euclidean projection onto the intersection of the two balls.
  void Project(Vec<D>& x) const {
    const bool in_a = Inside(x, ca, ra);
    const bool in_b = Inside(x, cb, rb);
    if (in_a && in_b) return;
    if (!in_a) {
      const Vec<D> pa = OntoBall(x, ca, ra);
      if (Inside(pa, cb, rb)) {
        x = pa;
        return;
      }
    }
    if (!in_b) {
      const Vec<D> pb = OntoBall(x, cb, rb);
      if (Inside(pb, ca, ra)) {
        x = pb;
        return;
      }
    }
    // Both constraints active: the nearest rim point.
    Vec<D> w = (x - m) - (x - m).dot(u) * u;
    double n = w.norm();
    if (!(n > 1e-15 * (1.0 + ra + rb))) {
      // x lies on the axis, every rim point is nearest; take a fixed one.
      Eigen::Index k;
      u.cwiseAbs().minCoeff(&k);
      w = -u(k) * u;
      w(k) += 1.0;
      n = w.norm();
    }
    x = m + (rho / n) * w;
  }
};

template <int D>
double PolylineLength(const std::vector<Vec<D>>& points) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < points.size(); ++j) {
    total += (points[j + 1] - points[j]).norm();
  }
  return total;
}

// Chambolle-Pock iteration on min sum_j |x_{j+1} - x_j| over the lens
// constraints. K x = (x_{j+1} - x_j)_j has ||K||^2 < 4, so tau * sigma * 4 < 1
// keeps it convergent; tau is scaled to the typical segment length. Returns
// the best iterate (x holds the start on entry).
template <int D>
std::vector<Vec<D>> Pdhg(const Corridor& corridor, const CorridorOptions& options,
                         std::vector<Vec<D>> x, OptimizedPath* result) {
  const std::size_t k = corridor.balls.size();
  std::vector<Lens<D>> lenses;
  lenses.reserve(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    lenses.emplace_back(corridor.balls[i], corridor.balls[i + 1]);
  }

  double best_length = result->initial_length;
  std::vector<Vec<D>> best = x;
  const double tau = 0.5 * std::max(best_length / static_cast<double>(k), 1e-9);
  const double sigma = 0.99 / (4.0 * tau);
  const Eigen::Index dim = x.front().size();
  std::vector<Vec<D>> y(k, Vec<D>::Zero(dim));
  std::vector<Vec<D>> x_bar = x;
  double window_start_length = best_length;
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t j = 0; j < k; ++j) {
      y[j] += sigma * (x_bar[j + 1] - x_bar[j]);
      const double n = y[j].norm();
      if (n > 1.0) y[j] /= n;
    }
    double length = 0.0;
    for (std::size_t i = 1; i < k; ++i) {
      const Vec<D> previous = x[i];
      x[i] -= tau * (y[i - 1] - y[i]);
      lenses[i - 1].Project(x[i]);
      x_bar[i] = 2.0 * x[i] - previous;
      length += (x[i] - x[i - 1]).norm();
    }
    length += (x[k] - x[k - 1]).norm();
    if (length < best_length) {
      best_length = length;
      best = x;
    }
    result->length_history.push_back(best_length);
    result->iterations = it;
    if (it % options.window == 0) {
      if (window_start_length - best_length < options.objective_tol * best_length) break;
      window_start_length = best_length;
    }
  }
  return best;
}

template <int D>
OptimizedPath Optimize(const Corridor& corridor, const CorridorOptions& options) {
  OptimizedPath result;
  std::vector<Vec<D>> x;
  for (const Config& p : LensMidpointPath(corridor)) x.emplace_back(p);
  result.initial_length = PolylineLength<D>(x);
  result.length = result.initial_length;
  if (corridor.balls.size() > 1) {
    x = Pdhg<D>(corridor, options, std::move(x), &result);
    result.length = PolylineLength<D>(x);
  }
  result.waypoints.reserve(x.size());
  for (const Vec<D>& p : x) result.waypoints.emplace_back(p);
  result.waypoints.front() = corridor.start;
  result.waypoints.back() = corridor.goal;
  return result;
}

}  // namespace

bool BallsOverlap(const Ball& a, const Ball& b, double tol) {
  return (a.center - b.center).norm() < a.radius + b.radius - tol;
}

void Corridor::Validate(double tol) const {
  if (balls.empty()) throw std::invalid_argument("corridor has no balls");
  for (std::size_t i = 0; i < balls.size(); ++i) {
    if (!(balls[i].radius > 0.0)) {
      throw std::invalid_argument(fmt::format("corridor ball {} has no volume", i));
    }
    if (i + 1 < balls.size() && !BallsOverlap(balls[i], balls[i + 1], tol)) {
      throw std::invalid_argument(
          fmt::format("corridor balls {} and {} do not overlap", i, i + 1));
    }
  }
  if (!balls.front().Contains(start, tol) || !balls.back().Contains(goal, tol)) {
    throw std::invalid_argument("corridor endpoints are outside the end balls");
  }
}

std::vector<Config> Corridor::CenterPolyline() const {
  std::vector<Config> polyline{start};
  if (balls.size() > 1) {
    for (const Ball& ball : balls) {
      if ((ball.center - polyline.back()).norm() > 0.0) polyline.push_back(ball.center);
    }
  }
  if ((goal - polyline.back()).norm() > 0.0 || polyline.size() == 1) {
    polyline.push_back(goal);
  }
  return polyline;
}

Config ProjectOntoBall(const Config& x, const Ball& ball) {
  const Config d = x - ball.center;
  const double n = d.norm();
  return n > ball.radius ? Config(ball.center + d * (ball.radius / n)) : x;
}

Config ProjectTwoBallIntersection(const Config& x, const Ball& a, const Ball& b) {
  if ((a.center - b.center).norm() > a.radius + b.radius) {
    throw std::invalid_argument("balls do not intersect");
  }
  if (x.size() > kMaxDim) throw std::invalid_argument("dimension too large");
  Vec<Eigen::Dynamic> v = x;
  Lens<Eigen::Dynamic>(a, b).Project(v);
  return v;
}

std::vector<double> OptimizedPath::SegmentLengths() const {
  std::vector<double> lengths;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    lengths.push_back((waypoints[i + 1] - waypoints[i]).norm());
  }
  return lengths;
}

std::vector<Config> LensMidpointPath(const Corridor& corridor) {
  std::vector<Config> path{corridor.start};
  for (std::size_t i = 0; i + 1 < corridor.balls.size(); ++i) {
    const Ball& a = corridor.balls[i];
    const Ball& b = corridor.balls[i + 1];
    const Config axis = b.center - a.center;
    const double d = axis.norm();
    if (d == 0.0) {
      path.push_back(a.center);
      continue;
    }
    // Points a.center + t * axis/d lie in both balls for t in [d - rb, ra].
    const double lo = std::max(d - b.radius, -a.radius);
    const double hi = std::min(a.radius, d + b.radius);
    const double t = std::clamp(0.5 * (lo + hi), 0.0, d);
    path.push_back(a.center + axis * (t / d));
  }
  path.push_back(corridor.goal);
  return path;
}

double CorridorResidual(const Corridor& corridor,
                        std::span<const Config> waypoints) {
  const std::size_t k = corridor.balls.size();
  if (waypoints.size() != k + 1) {
    throw std::invalid_argument("waypoint count must be corridor size + 1");
  }
  double residual = 0.0;
  auto violation = [](const Config& x, const Ball& ball) {
    return std::max(0.0, (x - ball.center).norm() - ball.radius);
  };
  for (std::size_t i = 0; i <= k; ++i) {
    if (i > 0) residual = std::max(residual, violation(waypoints[i], corridor.balls[i - 1]));
    if (i < k) residual = std::max(residual, violation(waypoints[i], corridor.balls[i]));
  }
  return residual;
}

OptimizedPath OptimizeCorridor(const Corridor& corridor,
                               const CorridorOptions& options) {
  corridor.Validate(0.0);
  OptimizedPath result;
  switch (corridor.start.size()) {
    case 2:
      result = Optimize<2>(corridor, options);
      break;
    case 3:
      result = Optimize<3>(corridor, options);
      break;
    case 4:
      result = Optimize<4>(corridor, options);
      break;
    default:
      if (corridor.start.size() > kMaxDim) {
        throw std::invalid_argument("corridor dimension too large");
      }
      result = Optimize<Eigen::Dynamic>(corridor, options);
  }
  result.residual = CorridorResidual(corridor, result.waypoints);
  if (result.residual > options.feasibility_tol) {
    throw CorridorStalledError(
        fmt::format("corridor optimization stalled with residual {:.3g}",
                    result.residual),
        corridor.CenterPolyline());
  }
  return result;
}

}  // namespace scdf
