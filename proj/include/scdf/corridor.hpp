#pragma once

#include <span>
#include <vector>

#include "scdf/types.hpp"

namespace scdf {

// Closed configuration-space ball.
struct Ball {
  Config center;
  double radius = 0.0;

  bool Contains(const Config& q, double tol = 0.0) const {
    return (q - center).norm() <= radius + tol;
  }
};

// Strict overlap: ||ca - cb|| < ra + rb - tol.
bool BallsOverlap(const Ball& a, const Ball& b, double tol = 0.0);

// Ordered, pairwise-overlapping balls with the start inside the first ball and
// the goal inside the last.
struct Corridor {
  std::vector<Ball> balls;
  Config start;
  Config goal;

  std::size_t size() const { return balls.size(); }
  // Throws std::invalid_argument describing the first violated invariant.
  void Validate(double tol = 1e-12) const;
  // start, ball centers (duplicates of the endpoints dropped), goal. For a
  // single ball this is the straight segment start -> goal.
  std::vector<Config> CenterPolyline() const;
};

Config ProjectOntoBall(const Config& x, const Ball& ball);

// Euclidean projection onto a ∩ b, in closed form: x itself, the projection
// onto one ball when it lands in the other, or the nearest point of the rim
// where the two spheres meet. Throws std::invalid_argument when the balls do
// not intersect.
Config ProjectTwoBallIntersection(const Config& x, const Ball& a, const Ball& b);

struct CorridorOptions {
  double feasibility_tol = 1e-6;
  // Stop once the best length improved by less than this fraction over
  // `window` consecutive iterations.
  double objective_tol = 1e-6;
  int window = 20;
  int max_iterations = 5000;
};

struct OptimizedPath {
  // start, one point per consecutive ball pair, goal.
  std::vector<Config> waypoints;
  double length = 0.0;
  double initial_length = 0.0;
  // Largest constraint violation over all waypoints.
  double residual = 0.0;
  int iterations = 0;
  // Best length after each iteration (non-increasing).
  std::vector<double> length_history;

  std::vector<double> SegmentLengths() const;
};

// Shortest polyline start -> goal whose interior vertices lie in the
// intersections of consecutive corridor balls. Solved with a primal-dual
// (Chambolle-Pock) iteration: the dual step is the proximal map of the
// sum-of-norms conjugate, the primal step projects every interior vertex onto
// its two-ball intersection. Starts from the lens midpoints on the center axis
// and keeps the best feasible iterate. Throws CorridorStalledError when the
// iteration cap is hit with residual above feasibility_tol.
OptimizedPath OptimizeCorridor(const Corridor& corridor,
                               const CorridorOptions& options = {});

// Feasible starting points: per ball pair, the middle of the part of the
// center axis that lies in both balls.
std::vector<Config> LensMidpointPath(const Corridor& corridor);

// Largest violation of the corridor constraints by `waypoints`.
double CorridorResidual(const Corridor& corridor,
                        std::span<const Config> waypoints);

class CorridorStalledError : public Error {
 public:
  CorridorStalledError(const std::string& what, std::vector<Config> fallback)
      : Error(what), fallback_(std::move(fallback)) {}
  // The corridor's center polyline.
  const std::vector<Config>& fallback() const { return fallback_; }

 private:
  std::vector<Config> fallback_;
};

}  // namespace scdf
