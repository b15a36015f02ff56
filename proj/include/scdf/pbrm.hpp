#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scdf/corridor.hpp"
#include "scdf/distance_field.hpp"
#include "scdf/geometry.hpp"
#include "scdf/graph.hpp"
#include "scdf/scenario.hpp"

namespace scdf {

struct PbrmParams {
  int num_vertices = 250;
  // Balls smaller than this are unusable.
  double r_min = 1e-3;
  // Gradient growth: step length = growth_fraction * psi(c), at most
  // growth_steps steps.
  double growth_fraction = 0.25;
  int growth_steps = 15;
  // Hyperplanes of obstacles farther than far_factor * median radius are
  // dropped from the local polytope.
  double far_factor = 5.0;
  // Bubble marching: advance by max(march_fraction * r, march_min_step).
  double march_fraction = 0.9;
  double march_min_step = 1e-4;
  int march_max_steps = 200000;
  // Consecutive rejected samples before vertex distribution gives up.
  int max_resample = 1000;
  // Candidates tried when a query ball intersects no roadmap ball.
  int num_neighbors = 10;
  // Step of the exact-detector march in hybrid mode.
  double hybrid_step = 1e-3;
  // The learned clearance is only probed every this distance along the march.
  double hybrid_probe_step = 1e-2;
  bool polytope_edges = true;
  // Strictness band for ball-overlap tests.
  double overlap_tol = 1e-12;

  void Validate() const;
};

// Usable clearance: psi(q) - margin, clipped by the distance to the joint
// limits so balls stay inside the configuration space.
class ClearanceModel {
 public:
  ClearanceModel(std::shared_ptr<const DistanceField> field, RobotModel robot,
                 double margin);

  double Radius(const Config& q) const;
  // Raw combined distance psi(q) and its gradient.
  double Distance(const Config& q, Config* gradient = nullptr) const {
    return field_->Distance(q, gradient);
  }
  const DistanceField& field() const { return *field_; }
  std::shared_ptr<const DistanceField> field_ptr() const { return field_; }
  const RobotModel& robot() const { return robot_; }
  double margin() const { return margin_; }

 private:
  std::shared_ptr<const DistanceField> field_;
  RobotModel robot_;
  double margin_;
};

enum class EdgeKind { kIntersection, kVerifiedLine, kHybridVerified };
const char* EdgeKindName(EdgeKind kind);
EdgeKind ParseEdgeKind(const std::string& name);

struct RoadmapEdge {
  int a = 0;
  int b = 0;
  EdgeKind kind = EdgeKind::kIntersection;
  double length = 0.0;
  // Bubbles strictly between the end balls, ordered from a to b. They cover
  // the straight segment for verified edges.
  std::vector<Ball> bubbles;
};

// Undirected graph of collision-free balls.
class Roadmap {
 public:
  int num_vertices() const { return static_cast<int>(balls_.size()); }
  const std::vector<Ball>& balls() const { return balls_; }
  const Ball& ball(int i) const { return balls_[i]; }
  const std::vector<RoadmapEdge>& edges() const { return edges_; }
  const Graph& graph() const { return graph_; }
  bool Connected(int a, int b) const { return graph_.HasEdge(a, b); }
  // Index into edges() of the edge joining a and b, or -1.
  int EdgeIndex(int a, int b) const;
  std::size_t CountEdges(EdgeKind kind) const;

  int AddVertex(Ball ball);
  void AddEdge(RoadmapEdge edge);

 private:
  std::vector<Ball> balls_;
  std::vector<RoadmapEdge> edges_;
  Graph graph_;
  std::vector<std::vector<std::pair<int, int>>> edge_lookup_;
};

struct VertexDistribution {
  std::vector<Ball> balls;
  // Centers in acceptance order, before growth (for replaying the coverage
  // rule).
  std::vector<Ball> insertion_log;
  bool exhausted = false;
};

// Uniform samples; a sample inside an accepted ball or with radius < r_min is
// rejected. Stops early (with a warning) after max_resample consecutive
// rejections; throws ConstructionFailedError if nothing was accepted.
VertexDistribution DistributeVertices(const ClearanceModel& clearance, int m,
                                      const PbrmParams& params,
                                      std::mt19937_64& rng);

// Moves the center uphill along the normalized gradient while the radius
// strictly increases. Never shrinks the ball.
Ball GrowBall(const ClearanceModel& clearance, const Ball& ball,
              const PbrmParams& params);

// Halfspace {q : normal . (q - c) <= offset}.
struct Halfspace {
  Config normal;
  double offset = 0.0;
  // Component of the distance field that produced it.
  std::size_t component = 0;

  bool Contains(const Config& q, const Config& c, double tol = 0.0) const {
    return normal.dot(q - c) <= offset + tol;
  }
};

struct LocalPolytope {
  Config center;
  std::vector<Halfspace> halfspaces;
  bool Contains(const Config& q, double tol = 0.0) const;
};

// One hyperplane per component with psi_i(c) < far_threshold, normal
// -grad psi_i / |grad psi_i|, offset psi_i(c).
LocalPolytope ComputeLocalPolytope(const DistanceField& field, const Config& c,
                                   double far_threshold);

struct EdgeCheckResult {
  bool free = false;
  // Bubbles covering the segment (first one centered at a).
  std::vector<Ball> bubbles;
};

// Bubble marching from a to b with the clearance radius.
EdgeCheckResult CheckEdge(const ClearanceModel& clearance, const Config& a,
                          const Config& b, const PbrmParams& params);

// Intersection edges between overlapping balls, then (optionally) verified
// straight edges to vertices inside each vertex's local polytope.
void BuildEdges(Roadmap* roadmap, const ClearanceModel& clearance,
                const PbrmParams& params);

// Distributes, grows and connects a full roadmap.
Roadmap BuildRoadmap(const ClearanceModel& clearance, const PbrmParams& params,
                     std::uint64_t seed);

enum class PlanStatus { kSolved, kNoPath, kUnreachableQuery };
const char* PlanStatusName(PlanStatus status);

struct PlanTiming {
  double connect_ms = 0.0;
  double search_ms = 0.0;
  double optimize_ms = 0.0;
  double total_ms() const { return connect_ms + search_ms + optimize_ms; }
};

struct PlanResult {
  PlanStatus status = PlanStatus::kNoPath;
  // Ball sequence. Its start/goal are the query points, or the points where
  // the hybrid march entered positive clearance.
  Corridor corridor;
  // Exact-detector segments from the query start to the corridor start and
  // from the corridor goal to the query goal (hybrid mode only).
  std::vector<Config> start_segment;
  std::vector<Config> goal_segment;
  // Full path through the ball centers, query point to query point.
  std::vector<Config> polyline;
  double length = 0.0;
  // Graph cost of the search (center-to-center lengths).
  double graph_cost = 0.0;
  std::vector<int> vertex_path;
  bool used_hybrid = false;
  PlanTiming timing;

  // Joins the hybrid segments around an inner path through the corridor.
  std::vector<Config> Assemble(const std::vector<Config>& inner) const;
};

// The exact detector used by the hybrid fallback.
struct HybridDetector {
  RobotModel robot;
  ObstacleSet obstacles;
};

class PbrmPlanner {
 public:
  PbrmPlanner(std::shared_ptr<const Roadmap> roadmap, ClearanceModel clearance,
              PbrmParams params);

  // Enables hybrid connection of queries with non-positive clearance.
  void EnableHybrid(HybridDetector detector) { hybrid_ = std::move(detector); }
  void DisableHybrid() { hybrid_.reset(); }

  PlanResult Solve(const Config& start, const Config& goal) const;

  const Roadmap& roadmap() const { return *roadmap_; }
  const ClearanceModel& clearance() const { return clearance_; }
  const PbrmParams& params() const { return params_; }

  // One connection of a query point to a roadmap vertex.
  struct QueryEdge {
    int vertex = -1;
    EdgeKind kind = EdgeKind::kIntersection;
    // Cost used by the search.
    double length = 0.0;
    // Exact-checked points from the query point to the first bubble
    // (hybrid only, query point first).
    std::vector<Config> prefix;
    // Bubbles from the query side toward the vertex.
    std::vector<Ball> bubbles;
  };
  struct QueryConnection {
    Config q;
    // Empty when the query point has no usable clearance.
    std::optional<Ball> ball;
    std::vector<QueryEdge> edges;
  };

  // Connects q to the roadmap: all intersecting balls, else a bubble-marched
  // line to the nearest center that admits one, else (if enabled) the hybrid
  // march.
  QueryConnection ConnectQuery(const Config& q) const;
  // The hybrid march alone, nearest candidates first.
  QueryConnection HybridConnect(const Config& q) const;

 private:
  std::vector<int> NearestVertices(const Config& q, int count) const;

  std::shared_ptr<const Roadmap> roadmap_;
  ClearanceModel clearance_;
  PbrmParams params_;
  std::optional<HybridDetector> hybrid_;
};

// Roadmap file: JSON with the embedded scenario, backend description, seed,
// parameters, vertices and edges.
struct RoadmapBackend {
  // "oracle" or "nscdf".
  std::string kind;
  std::string model_path;
  std::string self_model_path;
  double margin = 0.0;
  int resolution = 0;
  // Leading joints covered by the model when it is lifted to more joints.
  int model_dof = 0;
  double model_tool_radius = 0.0;
};

struct RoadmapFile {
  Scenario scenario;
  RoadmapBackend backend;
  PbrmParams params;
  std::uint64_t seed = 0;
  Roadmap roadmap;
};

void SaveRoadmap(const RoadmapFile& file, const std::filesystem::path& path);
RoadmapFile LoadRoadmap(const std::filesystem::path& path);

}  // namespace scdf
