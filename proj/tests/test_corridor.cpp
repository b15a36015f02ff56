#include <cmath>
#include <random>

#include <doctest.h>

#include "scdf/corridor.hpp"
#include "scdf/geometry.hpp"
#include "fine_graph.hpp"
#include "test_util.hpp"

namespace scdf {
namespace {

using testing::Q;

Corridor RandomCorridor(std::mt19937_64& rng, int dim, int k) {
  std::uniform_real_distribution<double> radius(0.2, 0.6);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> overlap(0.3, 0.9);
  Corridor c;
  Ball ball{Config::Zero(dim), radius(rng)};
  c.balls.push_back(ball);
  for (int i = 1; i < k; ++i) {
    Config dir(dim);
    for (int d = 0; d < dim; ++d) dir(d) = normal(rng);
    const double r = radius(rng);
    const Ball next{c.balls.back().center +
                        dir.normalized() * overlap(rng) * (c.balls.back().radius + r),
                    r};
    c.balls.push_back(next);
  }
  c.start = testing::SampleInBall(c.balls.front().center, c.balls.front().radius, rng);
  c.goal = testing::SampleInBall(c.balls.back().center, c.balls.back().radius, rng);
  return c;
}

TEST_CASE("two-ball projection") {
  const Ball a{Q({0.0, 0.0}), 1.0};
  const Ball b{Q({1.5, 0.0}), 1.0};
  SUBCASE("points already inside stay put") {
    const Config x = Q({0.75, 0.1});
    CHECK(ProjectTwoBallIntersection(x, a, b) == x);
  }
  SUBCASE("nested balls project onto the smaller one") {
    const Ball big{Q({0.0, 0.0}), 2.0};
    const Ball small{Q({0.0, 0.0}), 0.5};
    const Config p = ProjectTwoBallIntersection(Q({3.0, 4.0}), big, small);
    CHECK(p(0) == doctest::Approx(0.3));
    CHECK(p(1) == doctest::Approx(0.4));
  }
  SUBCASE("lens apex") {
    const Config p = ProjectTwoBallIntersection(Q({0.75, 5.0}), a, b);
    CHECK(p(0) == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(p(1) == doctest::Approx(std::sqrt(1.0 - 0.75 * 0.75)).epsilon(1e-6));
  }
  SUBCASE("disjoint balls") {
    CHECK_THROWS_AS(ProjectTwoBallIntersection(Q({0.0, 0.0}), a, Ball{Q({3.0, 0.0}), 0.5}),
                    std::invalid_argument);
  }
  SUBCASE("agrees with a brute-force search over the lens") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 3.5);
    for (int trial = 0; trial < 30; ++trial) {
      const Config x = Q({u(rng), u(rng)});
      const Config p = ProjectTwoBallIntersection(x, a, b);
      CHECK(a.Contains(p, 1e-9));
      CHECK(b.Contains(p, 1e-9));
      double best = std::numeric_limits<double>::infinity();
      constexpr int kN = 600;
      for (int i = 0; i <= kN; ++i) {
        for (int j = 0; j <= kN; ++j) {
          const Config y = Q({0.5 + 0.5 * i / kN, -1.0 + 2.0 * j / kN});
          if (a.Contains(y) && b.Contains(y)) best = std::min(best, (y - x).norm());
        }
      }
      CHECK((p - x).norm() <= best + 1e-9);
      CHECK((p - x).norm() >= best - 2.0 / kN);
    }
  }
}

TEST_CASE("single-ball corridor is a straight segment") {
  Corridor c;
  c.balls = {Ball{Q({0.0, 0.0}), 1.0}};
  c.start = Q({-0.5, 0.2});
  c.goal = Q({0.4, -0.3});
  const OptimizedPath p = OptimizeCorridor(c);
  REQUIRE(p.waypoints.size() == 2);
  CHECK(p.length == doctest::Approx((c.goal - c.start).norm()));
  CHECK(c.CenterPolyline() == std::vector<Config>{c.start, c.goal});
}

TEST_CASE("a feasible straight segment is recovered") {
  Corridor c;
  for (int i = 0; i < 6; ++i) c.balls.push_back({Q({0.5 * i, 0.3 * (i % 2)}), 0.6});
  c.start = Q({0.0, 0.0});
  c.goal = Q({2.5, 0.2});
  const OptimizedPath p = OptimizeCorridor(c);
  CHECK(p.length == doctest::Approx((c.goal - c.start).norm()).epsilon(1e-6));
  CHECK(p.residual <= 1e-6);
}

TEST_CASE("L-shaped corridor matches the fine-graph optimum") {
  Corridor c;
  c.balls = {{Q({0.0, 0.0}), 0.6}, {Q({0.9, 0.0}), 0.5}, {Q({0.9, 0.8}), 0.5}};
  c.start = Q({-0.4, -0.2});
  c.goal = Q({1.1, 1.1});
  const OptimizedPath p = OptimizeCorridor(c);
  const double oracle = testing::FineGraphLength(c, 10000);
  CHECK(p.length <= PathLength(c.CenterPolyline()));
  CHECK(std::abs(p.length - oracle) <= 0.01 * oracle);
}

TEST_CASE("optimizer invariants on random corridors") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = 2 + trial % 3;
    const Corridor c = RandomCorridor(rng, dim, 2 + trial % 12);
    REQUIRE_NOTHROW(c.Validate());
    const OptimizedPath p = OptimizeCorridor(c);
    REQUIRE(p.waypoints.size() == c.size() + 1);
    CHECK(p.waypoints.front() == c.start);
    CHECK(p.waypoints.back() == c.goal);
    CHECK(p.residual <= 1e-6);
    CHECK(CorridorResidual(c, p.waypoints) == p.residual);
    CHECK(p.length == doctest::Approx(PathLength(p.waypoints)).epsilon(1e-12));
    CHECK(p.length <= p.initial_length + 1e-12);
    CHECK(p.length <= PathLength(c.CenterPolyline()) + 1e-9);
    CHECK(p.length >= (c.goal - c.start).norm() - 1e-12);
    for (std::size_t i = 1; i < p.length_history.size(); ++i) {
      CHECK(p.length_history[i] <= p.length_history[i - 1]);
    }
    double sum = 0.0;
    for (double s : p.SegmentLengths()) sum += s;
    CHECK(sum == doctest::Approx(p.length).epsilon(1e-12));
  }
}

TEST_CASE("lens midpoints form a feasible start") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Corridor c = RandomCorridor(rng, 3, 8);
    CHECK(CorridorResidual(c, LensMidpointPath(c)) <= 1e-12);
  }
}

TEST_CASE("corridor validation and the stalled fallback") {
  Corridor c;
  c.balls = {{Q({0.0, 0.0}), 0.5}, {Q({2.0, 0.0}), 0.5}};
  c.start = Q({0.0, 0.0});
  c.goal = Q({2.0, 0.0});
  CHECK_THROWS_AS(c.Validate(), std::invalid_argument);
  CHECK_THROWS_AS(OptimizeCorridor(c), std::invalid_argument);
  c.balls[1].center = Q({0.8, 0.0});
  c.goal = Q({0.8, 0.3});
  CorridorOptions impossible;
  impossible.feasibility_tol = -1.0;
  try {
    OptimizeCorridor(c, impossible);
    FAIL("expected CorridorStalledError");
  } catch (const CorridorStalledError& e) {
    CHECK(e.fallback() == c.CenterPolyline());
  }
  CHECK_THROWS_AS(CorridorResidual(c, std::vector<Config>{c.start}), std::invalid_argument);
}

}  // namespace
}  // namespace scdf
