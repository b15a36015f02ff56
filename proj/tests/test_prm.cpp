#include <cmath>
#include <random>

#include <doctest.h>

#include "scdf/prm.hpp"
#include "test_util.hpp"

namespace scdf {
namespace {

using testing::kPi;
using testing::Q;

Scenario Clutter() {
  return {testing::TwoLinkArm(1.0, 0.8),
          {GeometryVector::Circle({1.2, 0.9}, 0.25), GeometryVector::Circle({-1.1, 0.6}, 0.2),
           GeometryVector::Circle({0.4, -1.3}, 0.3), GeometryVector::Circle({-0.6, -1.2}, 0.15)}};
}

TEST_CASE("PRM* connection radius") {
  CHECK(UnitBallVolume(1) == doctest::Approx(2.0));
  CHECK(UnitBallVolume(2) == doctest::Approx(kPi));
  CHECK(UnitBallVolume(3) == doctest::Approx(4.0 * kPi / 3.0));
  CHECK(PrmStarRadius(500, 2, 2.0) == doctest::Approx(0.2229).epsilon(1e-3));
  CHECK(PrmStarRadius(2, 2, 1.0) == doctest::Approx(std::sqrt(std::log(2.0) / 2.0)));
  CHECK_THROWS_AS(PrmStarRadius(1, 2, 1.0), std::invalid_argument);
  for (int d = 1; d <= 4; ++d) {
    for (int n = 3; n < 2000; n += 7) {
      CHECK(PrmStarRadius(n + 1, d, 1.5) < PrmStarRadius(n, d, 1.5));
    }
  }
  // gamma = factor * 2 (1 + 1/d)^(1/d) (mu / zeta_d)^(1/d)
  CHECK(PrmStarGamma(2, kPi, 1.0) == doctest::Approx(2.0 * std::sqrt(1.5)));
}

TEST_CASE("free measure of an empty workspace is the limit box") {
  const Scenario empty{testing::TwoLinkArm(), {}};
  CHECK(EstimateFreeMeasure(empty, 500, 1) == doctest::Approx(4.0 * kPi * kPi));
}

TEST_CASE("roadmap construction") {
  PrmParams params;
  SUBCASE("k nearest neighbors in an empty workspace form a complete graph") {
    const Scenario empty{testing::TwoLinkArm(), {}};
    params.num_vertices = 11;
    params.num_neighbors = 10;
    const PrmRoadmap r = PrmBuild(empty, PrmMode::kPrm, params, 3);
    CHECK(r.graph.num_edges() == 55);
  }
  SUBCASE("edges are collision-free and vertices free") {
    const Scenario s = Clutter();
    params.num_vertices = 200;
    for (PrmMode mode : {PrmMode::kPrm, PrmMode::kPrmStar}) {
      const PrmRoadmap r = PrmBuild(s, mode, params, 4);
      REQUIRE(r.vertices.size() == 200);
      for (const Config& v : r.vertices) CHECK_FALSE(CheckCollision(s.robot, v, s.obstacles));
      for (int v = 0; v < r.graph.num_vertices(); ++v) {
        for (const WeightedEdge& e : r.graph.neighbors(v)) {
          CHECK(e.cost == doctest::Approx((r.vertices[v] - r.vertices[e.to]).norm()));
          CHECK(SegmentCollisionFree(s.robot, s.obstacles, r.vertices[v], r.vertices[e.to],
                                     params.edge_step));
          if (mode == PrmMode::kPrmStar) {
            CHECK(e.cost <= PrmStarRadius(200, 2, r.gamma) + 1e-12);
          }
        }
      }
    }
  }
  SUBCASE("deterministic per seed") {
    params.num_vertices = 100;
    const PrmRoadmap a = PrmBuild(Clutter(), PrmMode::kPrm, params, 5);
    const PrmRoadmap b = PrmBuild(Clutter(), PrmMode::kPrm, params, 5);
    REQUIRE(a.vertices.size() == b.vertices.size());
    for (std::size_t i = 0; i < a.vertices.size(); ++i) CHECK(a.vertices[i] == b.vertices[i]);
    CHECK(a.graph.num_edges() == b.graph.num_edges());
  }
  SUBCASE("a fully blocked space fails") {
    const Scenario blocked{testing::TwoLinkArm(), {GeometryVector::Circle({0.0, 0.0}, 5.0)}};
    params.max_resample = 100;
    CHECK_THROWS_AS(PrmBuild(blocked, PrmMode::kPrm, params, 6), ConstructionFailedError);
  }
  SUBCASE("invalid parameters") {
    params.num_neighbors = 0;
    CHECK_THROWS_AS(PrmBuild(Clutter(), PrmMode::kPrm, params, 7), std::invalid_argument);
  }
}

TEST_CASE("queries") {
  const Scenario s = Clutter();
  PrmParams params;
  params.num_vertices = 300;
  const PrmRoadmap prm = PrmBuild(s, PrmMode::kPrm, params, 8);
  const PrmRoadmap star = PrmBuild(s, PrmMode::kPrmStar, params, 8);
  PrmBudget budget;
  budget.sample_budget = 300;
  budget.checkpoint_every = 50;

  SUBCASE("colliding endpoints are unreachable") {
    Config inside;
    std::mt19937_64 rng(9);
    do inside = SampleUniform(s.robot, rng);
    while (!CheckCollision(s.robot, inside, s.obstacles));
    CHECK(PrmQuery(prm, s, inside, prm.vertices[0], params, budget, 1).status ==
          PlanStatus::kUnreachableQuery);
  }

  std::mt19937_64 rng(10);
  int compared = 0, star_not_longer = 0;
  for (int i = 0; i < 40; ++i) {
    const Config qs = SampleUniform(s.robot, rng);
    const Config qg = SampleUniform(s.robot, rng);
    if (CheckCollision(s.robot, qs, s.obstacles) || CheckCollision(s.robot, qg, s.obstacles)) {
      continue;
    }
    const PrmPlanResult a = PrmQuery(prm, s, qs, qg, params, budget, 100 + i);
    const PrmPlanResult b = PrmQuery(star, s, qs, qg, params, budget, 100 + i);
    for (const PrmPlanResult* p : {&a, &b}) {
      if (p->status != PlanStatus::kSolved) continue;
      CHECK(p->path.front() == qs);
      CHECK(p->path.back() == qg);
      CHECK(p->length == doctest::Approx(PathLength(p->path)).epsilon(1e-12));
      CHECK(PathCollisionFree(s.robot, s.obstacles, p->path, params.validation_step));
    }
    CHECK(a.samples_added == 0);
    if (b.status == PlanStatus::kSolved) {
      CHECK(b.samples_added == budget.sample_budget);
      REQUIRE_FALSE(b.checkpoints.empty());
      for (std::size_t k = 1; k < b.checkpoints.size(); ++k) {
        CHECK(b.checkpoints[k].samples >= b.checkpoints[k - 1].samples);
        CHECK(b.checkpoints[k].best_length <= b.checkpoints[k - 1].best_length + 1e-12);
      }
    }
    if (a.status == PlanStatus::kSolved && b.status == PlanStatus::kSolved) {
      ++compared;
      star_not_longer += b.length <= a.length + 1e-9;
    }
  }
  REQUIRE(compared >= 10);
  CHECK(star_not_longer >= 0.8 * compared);

  SUBCASE("queries leave the roadmap untouched and are reproducible") {
    const std::size_t edges = star.graph.num_edges();
    const Config qs = star.vertices[0], qg = star.vertices[1];
    const PrmPlanResult a = PrmQuery(star, s, qs, qg, params, budget, 77);
    const PrmPlanResult b = PrmQuery(star, s, qs, qg, params, budget, 77);
    CHECK(star.graph.num_edges() == edges);
    CHECK(star.vertices.size() == 300);
    CHECK(a.status == b.status);
    CHECK(a.length == b.length);
  }
}

TEST_CASE("a wall across the free space gives no_path") {
  const Scenario wall{testing::TwoLinkArm(1.0, 0.8), {GeometryVector::Circle({0.35, 0.0}, 0.1)}};
  PrmParams params;
  params.num_vertices = 200;
  PrmBudget budget;
  budget.sample_budget = 200;
  for (PrmMode mode : {PrmMode::kPrm, PrmMode::kPrmStar}) {
    const PrmRoadmap r = PrmBuild(wall, mode, params, 11);
    CHECK(PrmQuery(r, wall, Q({-1.5, 0.3}), Q({1.5, -0.3}), params, budget, 12).status ==
          PlanStatus::kNoPath);
  }
}

}  // namespace
}  // namespace scdf
