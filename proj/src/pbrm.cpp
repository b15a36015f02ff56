#include "scdf/pbrm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace scdf {

namespace {

using Clock = std::chrono::steady_clock;

double MillisecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

void PbrmParams::Validate() const {
  if (num_vertices < 1) throw std::invalid_argument("num_vertices must be >= 1");
  if (!(r_min > 0.0)) throw std::invalid_argument("r_min must be positive");
  if (growth_steps < 0 || !(growth_fraction > 0.0)) {
    throw std::invalid_argument("invalid growth schedule");
  }
  if (!(march_fraction > 0.0 && march_fraction < 1.0) || !(march_min_step > 0.0)) {
    throw std::invalid_argument("march fraction must lie in (0, 1)");
  }
  if (max_resample < 1 || num_neighbors < 1 || !(hybrid_step > 0.0) ||
      !(hybrid_probe_step >= hybrid_step) ||
      !(far_factor > 0.0)) {
    throw std::invalid_argument("invalid roadmap parameters");
  }
}

ClearanceModel::ClearanceModel(std::shared_ptr<const DistanceField> field,
                               RobotModel robot, double margin)
    : field_(std::move(field)), robot_(std::move(robot)), margin_(margin) {
  if (!field_) throw std::invalid_argument("clearance needs a distance field");
  if (field_->dof() != robot_.dof()) {
    throw std::invalid_argument("distance field and robot disagree on dof");
  }
  if (margin_ < 0.0) throw std::invalid_argument("margin must be non-negative");
}

double ClearanceModel::Radius(const Config& q) const {
  const double limits = robot_.DistanceToLimits(q);
  if (limits <= 0.0) return limits;
  return std::min(field_->Distance(q) - margin_, limits);
}

const char* EdgeKindName(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::kIntersection: return "intersection";
    case EdgeKind::kVerifiedLine: return "verified_line";
    case EdgeKind::kHybridVerified: return "hybrid_verified";
  }
  return "unknown";
}

EdgeKind ParseEdgeKind(const std::string& name) {
  if (name == "intersection") return EdgeKind::kIntersection;
  if (name == "verified_line") return EdgeKind::kVerifiedLine;
  if (name == "hybrid_verified") return EdgeKind::kHybridVerified;
  throw std::invalid_argument("unknown edge kind '" + name + "'");
}

const char* PlanStatusName(PlanStatus status) {
  switch (status) {
    case PlanStatus::kSolved: return "solved";
    case PlanStatus::kNoPath: return "no_path";
    case PlanStatus::kUnreachableQuery: return "unreachable_query";
  }
  return "unknown";
}

int Roadmap::AddVertex(Ball ball) {
  balls_.push_back(std::move(ball));
  edge_lookup_.emplace_back();
  return graph_.AddVertex();
}

void Roadmap::AddEdge(RoadmapEdge edge) {
  if (Connected(edge.a, edge.b)) {
    throw std::invalid_argument("vertices are already connected");
  }
  graph_.AddEdge(edge.a, edge.b, edge.length);
  const int index = static_cast<int>(edges_.size());
  edge_lookup_[edge.a].emplace_back(edge.b, index);
  edge_lookup_[edge.b].emplace_back(edge.a, index);
  edges_.push_back(std::move(edge));
}

int Roadmap::EdgeIndex(int a, int b) const {
  for (const auto& [other, index] : edge_lookup_[a]) {
    if (other == b) return index;
  }
  return -1;
}

std::size_t Roadmap::CountEdges(EdgeKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(),
      [kind](const RoadmapEdge& e) { return e.kind == kind; }));
}

VertexDistribution DistributeVertices(const ClearanceModel& clearance, int m,
                                      const PbrmParams& params,
                                      std::mt19937_64& rng) {
  if (m < 1) throw std::invalid_argument("need at least one vertex");
  VertexDistribution out;
  int failures = 0;
  while (static_cast<int>(out.insertion_log.size()) < m) {
    if (failures >= params.max_resample) {
      out.exhausted = true;
      break;
    }
    const Config q = SampleUniform(clearance.robot(), rng);
    const bool covered = std::any_of(
        out.insertion_log.begin(), out.insertion_log.end(),
        [&q](const Ball& b) { return b.Contains(q); });
    if (covered) {
      ++failures;
      continue;
    }
    const double r = clearance.Radius(q);
    if (r < params.r_min) {
      ++failures;
      continue;
    }
    out.insertion_log.push_back({q, r});
    failures = 0;
  }
  if (out.insertion_log.empty()) {
    throw ConstructionFailedError(fmt::format(
        "no collision-free sample after {} attempts", params.max_resample));
  }
  if (out.exhausted) {
    spdlog::warn("vertex distribution stopped at {} of {} balls",
                 out.insertion_log.size(), m);
  }
  out.balls = out.insertion_log;
  return out;
}

Ball GrowBall(const ClearanceModel& clearance, const Ball& ball,
              const PbrmParams& params) {
  Ball current = ball;
  Config gradient;
  for (int k = 0; k < params.growth_steps; ++k) {
    const double psi = clearance.Distance(current.center, &gradient);
    const double norm = gradient.norm();
    if (norm < 1e-9 || !(psi > 0.0)) break;
    const Config candidate =
        current.center + (params.growth_fraction * psi / norm) * gradient;
    const double r = clearance.Radius(candidate);
    if (!(r > current.radius)) break;
    current = {candidate, r};
  }
  return current;
}

bool LocalPolytope::Contains(const Config& q, double tol) const {
  return std::all_of(halfspaces.begin(), halfspaces.end(),
                     [&](const Halfspace& h) { return h.Contains(q, center, tol); });
}

LocalPolytope ComputeLocalPolytope(const DistanceField& field, const Config& c,
                                   double far_threshold) {
  LocalPolytope polytope;
  polytope.center = c;
  Config gradient;
  for (std::size_t i = 0; i < field.num_components(); ++i) {
    const double psi = field.Component(i, c, &gradient);
    if (psi >= far_threshold) continue;
    const double norm = gradient.norm();
    if (norm < 1e-9) {
      spdlog::debug("component {} has no gradient at the center; hyperplane skipped", i);
      continue;
    }
    polytope.halfspaces.push_back({-gradient / norm, psi, i});
  }
  return polytope;
}

EdgeCheckResult CheckEdge(const ClearanceModel& clearance, const Config& a,
                          const Config& b, const PbrmParams& params) {
  EdgeCheckResult result;
  const Config delta = b - a;
  const double length = delta.norm();
  if (length == 0.0) {
    result.free = true;
    return result;
  }
  const Config direction = delta / length;
  double traveled = 0.0;
  for (int step = 0; step < params.march_max_steps; ++step) {
    const Config p = a + traveled * direction;
    const double r = clearance.Radius(p);
    if (r < params.r_min) return result;
    result.bubbles.push_back({p, r});
    if (r >= length - traveled) {
      result.free = true;
      return result;
    }
    traveled += std::max(params.march_fraction * r, params.march_min_step);
  }
  return result;
}

void BuildEdges(Roadmap* roadmap, const ClearanceModel& clearance,
                const PbrmParams& params) {
  const int n = roadmap->num_vertices();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Ball& a = roadmap->ball(i);
      const Ball& b = roadmap->ball(j);
      if (BallsOverlap(a, b, params.overlap_tol)) {
        roadmap->AddEdge({i, j, EdgeKind::kIntersection,
                          (a.center - b.center).norm(), {}});
      }
    }
  }
  if (!params.polytope_edges || n < 2) return;

  std::vector<double> radii;
  for (const Ball& b : roadmap->balls()) radii.push_back(b.radius);
  std::nth_element(radii.begin(), radii.begin() + n / 2, radii.end());
  const double far_threshold = params.far_factor * radii[n / 2];

  // A pair is marched at most once: the segment is the same from either end.
  std::vector<char> attempted(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    const Ball& from = roadmap->ball(i);
    const LocalPolytope polytope =
        ComputeLocalPolytope(clearance.field(), from.center, far_threshold);
    for (int j = 0; j < n; ++j) {
      if (j == i || roadmap->Connected(i, j)) continue;
      const int lo = std::min(i, j), hi = std::max(i, j);
      char& tried = attempted[static_cast<std::size_t>(lo) * n + hi];
      if (tried) continue;
      const Ball& to = roadmap->ball(j);
      if (!polytope.Contains(to.center)) continue;
      tried = 1;
      EdgeCheckResult check = CheckEdge(clearance, from.center, to.center, params);
      if (!check.free) continue;
      RoadmapEdge edge{i, j, EdgeKind::kVerifiedLine,
                       (from.center - to.center).norm(), {}};
      // The first bubble sits on the center of ball i.
      edge.bubbles.assign(check.bubbles.begin() + 1, check.bubbles.end());
      roadmap->AddEdge(std::move(edge));
    }
  }
}

Roadmap BuildRoadmap(const ClearanceModel& clearance, const PbrmParams& params,
                     std::uint64_t seed) {
  params.Validate();
  std::mt19937_64 rng(seed);
  const VertexDistribution dist =
      DistributeVertices(clearance, params.num_vertices, params, rng);
  Roadmap roadmap;
  for (const Ball& ball : dist.balls) {
    roadmap.AddVertex(GrowBall(clearance, ball, params));
  }
  BuildEdges(&roadmap, clearance, params);
  spdlog::debug("roadmap: {} vertices, {} intersection and {} line edges",
                roadmap.num_vertices(), roadmap.CountEdges(EdgeKind::kIntersection),
                roadmap.CountEdges(EdgeKind::kVerifiedLine));
  return roadmap;
}

std::vector<Config> PlanResult::Assemble(const std::vector<Config>& inner) const {
  std::vector<Config> path = start_segment;
  auto append = [&path](const Config& q) {
    if (path.empty() || (path.back() - q).norm() > 0.0) path.push_back(q);
  };
  for (const Config& q : inner) append(q);
  for (const Config& q : goal_segment) append(q);
  if (path.size() == 1) path.push_back(path.front());
  return path;
}

PbrmPlanner::PbrmPlanner(std::shared_ptr<const Roadmap> roadmap,
                         ClearanceModel clearance, PbrmParams params)
    : roadmap_(std::move(roadmap)),
      clearance_(std::move(clearance)),
      params_(params) {
  if (!roadmap_) throw std::invalid_argument("planner needs a roadmap");
  params_.Validate();
}

std::vector<int> PbrmPlanner::NearestVertices(const Config& q, int count) const {
  const int n = roadmap_->num_vertices();
  std::vector<std::pair<double, int>> order;
  order.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    order.emplace_back((roadmap_->ball(i).center - q).squaredNorm(), i);
  }
  const int k = std::min(count, n);
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  std::vector<int> nearest;
  for (int i = 0; i < k; ++i) nearest.push_back(order[i].second);
  return nearest;
}

PbrmPlanner::QueryConnection PbrmPlanner::ConnectQuery(const Config& q) const {
  QueryConnection conn;
  conn.q = q;
  const double r = clearance_.Radius(q);
  if (!(r > params_.r_min)) {
    if (hybrid_) return HybridConnect(q);
    return conn;
  }
  conn.ball = Ball{q, r};
  for (int i = 0; i < roadmap_->num_vertices(); ++i) {
    const Ball& b = roadmap_->ball(i);
    if (BallsOverlap(*conn.ball, b, params_.overlap_tol)) {
      conn.edges.push_back({i, EdgeKind::kIntersection, (q - b.center).norm(), {}, {}});
    }
  }
  if (!conn.edges.empty()) return conn;
  for (int v : NearestVertices(q, params_.num_neighbors)) {
    const Config& c = roadmap_->ball(v).center;
    EdgeCheckResult check = CheckEdge(clearance_, q, c, params_);
    if (!check.free) continue;
    QueryEdge edge{v, EdgeKind::kVerifiedLine, (q - c).norm(), {}, {}};
    edge.bubbles.assign(check.bubbles.begin() + 1, check.bubbles.end());
    conn.edges.push_back(std::move(edge));
    break;
  }
  return conn;
}

PbrmPlanner::QueryConnection PbrmPlanner::HybridConnect(const Config& q) const {
  if (clearance_.Radius(q) > params_.r_min || !hybrid_) {
    // Positive clearance needs no fallback.
    PbrmPlanner plain(roadmap_, clearance_, params_);
    return plain.ConnectQuery(q);
  }
  QueryConnection conn;
  conn.q = q;
  const RobotModel& robot = hybrid_->robot;
  const ObstacleSet& obstacles = hybrid_->obstacles;
  if (!robot.WithinLimits(q) || CheckCollision(robot, q, obstacles)) return conn;
  for (int v : NearestVertices(q, params_.num_neighbors)) {
    const Config& c = roadmap_->ball(v).center;
    const double length = (c - q).norm();
    if (length == 0.0) continue;
    const Config direction = (c - q) / length;
    std::vector<Config> prefix{q};
    double traveled = 0.0, probed = 0.0;
    bool entered = false;
    while (traveled < length) {
      traveled = std::min(traveled + params_.hybrid_step, length);
      const Config p = q + traveled * direction;
      if (CheckCollision(robot, p, obstacles)) break;
      prefix.push_back(p);
      if (traveled - probed < params_.hybrid_probe_step && traveled < length) continue;
      probed = traveled;
      if (clearance_.Radius(p) > params_.r_min) {
        entered = true;
        break;
      }
    }
    if (!entered) continue;
    const Config& p = prefix.back();
    EdgeCheckResult check = CheckEdge(clearance_, p, c, params_);
    if (!check.free) continue;
    if (check.bubbles.empty()) check.bubbles.push_back({p, clearance_.Radius(p)});
    QueryEdge edge{v, EdgeKind::kHybridVerified, traveled + (c - p).norm(),
                   std::move(prefix), std::move(check.bubbles)};
    conn.edges.push_back(std::move(edge));
    break;
  }
  return conn;
}

namespace {

void AppendEdgeBubbles(const RoadmapEdge& edge, int from,
                       std::vector<Ball>* balls) {
  if (edge.a == from) {
    balls->insert(balls->end(), edge.bubbles.begin(), edge.bubbles.end());
  } else {
    balls->insert(balls->end(), edge.bubbles.rbegin(), edge.bubbles.rend());
  }
}

}  // namespace

PlanResult PbrmPlanner::Solve(const Config& start, const Config& goal) const {
  PlanResult result;
  const auto t0 = Clock::now();
  const QueryConnection cs = ConnectQuery(start);
  const QueryConnection cg = ConnectQuery(goal);
  result.timing.connect_ms = MillisecondsSince(t0);

  const auto t1 = Clock::now();
  const bool start_dead = !cs.ball && cs.edges.empty();
  const bool goal_dead = !cg.ball && cg.edges.empty();
  if (start_dead || goal_dead) {
    result.status = PlanStatus::kUnreachableQuery;
    result.timing.search_ms = MillisecondsSince(t1);
    return result;
  }

  auto finish_single = [&](const Ball& ball) {
    result.status = PlanStatus::kSolved;
    result.corridor = {{ball}, start, goal};
    result.polyline = {start, goal};
    result.length = (goal - start).norm();
    result.graph_cost = result.length;
    result.timing.search_ms = MillisecondsSince(t1);
    return result;
  };
  if (cs.ball && (goal - start).norm() < cs.ball->radius) return finish_single(*cs.ball);
  if (cs.ball && cg.ball) {
    for (int i = 0; i < roadmap_->num_vertices(); ++i) {
      const Ball& b = roadmap_->ball(i);
      if ((start - b.center).norm() < b.radius && (goal - b.center).norm() < b.radius) {
        return finish_single(b);
      }
    }
  }

  OverlayGraph graph(roadmap_->graph());
  const int s = graph.AddVertex();
  const int g = graph.AddVertex();
  for (const QueryEdge& e : cs.edges) graph.AddEdge(s, e.vertex, e.length);
  for (const QueryEdge& e : cg.edges) graph.AddEdge(g, e.vertex, e.length);
  const bool direct =
      cs.ball && cg.ball && BallsOverlap(*cs.ball, *cg.ball, params_.overlap_tol);
  if (direct) graph.AddEdge(s, g, (goal - start).norm());

  const int n = roadmap_->num_vertices();
  const SearchResult search = AStar(graph, s, g, [&](int v) {
    if (v == g) return 0.0;
    if (v == s) return (start - goal).norm();
    return (roadmap_->ball(v).center - goal).norm();
  });
  if (!search.found) {
    result.status = PlanStatus::kNoPath;
    result.timing.search_ms = MillisecondsSince(t1);
    return result;
  }

  // Corridor assembly along s, v_1, ..., v_k, g.
  const std::vector<int>& path = search.path;
  std::vector<Ball> balls;
  Config corridor_start = start;
  Config corridor_goal = goal;
  if (cs.ball) balls.push_back(*cs.ball);
  if (path.size() > 2) {
    const int first = path[1];
    const auto it = std::find_if(cs.edges.begin(), cs.edges.end(),
                                 [first](const QueryEdge& e) { return e.vertex == first; });
    balls.insert(balls.end(), it->bubbles.begin(), it->bubbles.end());
    if (it->kind == EdgeKind::kHybridVerified) {
      result.used_hybrid = true;
      result.start_segment = it->prefix;
      corridor_start = it->bubbles.front().center;
    }
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      const int v = path[i];
      balls.push_back(roadmap_->ball(v));
      const int next = path[i + 1];
      if (next < n) {
        AppendEdgeBubbles(roadmap_->edges()[roadmap_->EdgeIndex(v, next)], v, &balls);
      }
    }
    const int last = path[path.size() - 2];
    const auto jt = std::find_if(cg.edges.begin(), cg.edges.end(),
                                 [last](const QueryEdge& e) { return e.vertex == last; });
    balls.insert(balls.end(), jt->bubbles.rbegin(), jt->bubbles.rend());
    if (jt->kind == EdgeKind::kHybridVerified) {
      result.used_hybrid = true;
      result.goal_segment.assign(jt->prefix.rbegin(), jt->prefix.rend());
      corridor_goal = jt->bubbles.front().center;
    }
  }
  if (cg.ball) balls.push_back(*cg.ball);

  result.status = PlanStatus::kSolved;
  result.corridor = {std::move(balls), corridor_start, corridor_goal};
  result.vertex_path.assign(path.begin() + 1, path.end() - 1);
  result.graph_cost = search.cost;
  result.polyline = result.Assemble(result.corridor.CenterPolyline());
  result.length = PathLength(result.polyline);
  result.timing.search_ms = MillisecondsSince(t1);
  return result;
}

namespace {

using nlohmann::json;

json BallToJson(const Ball& b) {
  return {{"center", ConfigToJson(b.center)}, {"radius", b.radius}};
}

Ball BallFromJson(const json& j) {
  Ball b{ConfigFromJson(j.at("center")), j.at("radius").get<double>()};
  if (!(b.radius > 0.0)) throw CorruptFileError("ball with non-positive radius");
  return b;
}

json ParamsToJson(const PbrmParams& p) {
  return {{"num_vertices", p.num_vertices},   {"r_min", p.r_min},
          {"growth_fraction", p.growth_fraction}, {"growth_steps", p.growth_steps},
          {"far_factor", p.far_factor},       {"march_fraction", p.march_fraction},
          {"march_min_step", p.march_min_step}, {"march_max_steps", p.march_max_steps},
          {"max_resample", p.max_resample},   {"num_neighbors", p.num_neighbors},
          {"hybrid_step", p.hybrid_step},     {"hybrid_probe_step", p.hybrid_probe_step},
          {"polytope_edges", p.polytope_edges},
          {"overlap_tol", p.overlap_tol}};
}

}  // namespace

constexpr int kRoadmapFileVersion = 1;

void SaveRoadmap(const RoadmapFile& file, const std::filesystem::path& path) {
  json j;
  j["format"] = "pbrm-roadmap";
  j["version"] = kRoadmapFileVersion;
  j["scenario"] = ScenarioToJson(file.scenario);
  j["scenario_hash"] = HexDigest(HashJson(j["scenario"]));
  j["backend"] = {{"kind", file.backend.kind},
                  {"model_path", file.backend.model_path},
                  {"self_model_path", file.backend.self_model_path},
                  {"margin", file.backend.margin},
                  {"resolution", file.backend.resolution},
                  {"model_dof", file.backend.model_dof},
                  {"model_tool_radius", file.backend.model_tool_radius}};
  j["seed"] = file.seed;
  j["params"] = ParamsToJson(file.params);
  json vertices = json::array();
  for (const Ball& b : file.roadmap.balls()) vertices.push_back(BallToJson(b));
  j["vertices"] = std::move(vertices);
  json edges = json::array();
  for (const RoadmapEdge& e : file.roadmap.edges()) {
    json bubbles = json::array();
    for (const Ball& b : e.bubbles) bubbles.push_back(BallToJson(b));
    edges.push_back({{"a", e.a}, {"b", e.b}, {"kind", EdgeKindName(e.kind)},
                     {"length", e.length}, {"bubbles", std::move(bubbles)}});
  }
  j["edges"] = std::move(edges);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

RoadmapFile LoadRoadmap(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open roadmap " + path.string());
  RoadmapFile file;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "pbrm-roadmap") throw CorruptFileError("not a roadmap file");
    const int version = j.at("version").get<int>();
    if (version != kRoadmapFileVersion) {
      throw VersionMismatchError(fmt::format("roadmap version {}, expected {}",
                                             version, kRoadmapFileVersion));
    }
    file.scenario = ScenarioFromJson(j.at("scenario"));
    const json& backend = j.at("backend");
    file.backend.kind = backend.at("kind").get<std::string>();
    file.backend.model_path = backend.value("model_path", "");
    file.backend.self_model_path = backend.value("self_model_path", "");
    file.backend.margin = backend.at("margin").get<double>();
    file.backend.resolution = backend.value("resolution", 0);
    file.backend.model_dof = backend.value("model_dof", 0);
    file.backend.model_tool_radius = backend.value("model_tool_radius", 0.0);
    file.seed = j.at("seed").get<std::uint64_t>();
    const json& p = j.at("params");
    PbrmParams& params = file.params;
    params.num_vertices = p.at("num_vertices");
    params.r_min = p.at("r_min");
    params.growth_fraction = p.at("growth_fraction");
    params.growth_steps = p.at("growth_steps");
    params.far_factor = p.at("far_factor");
    params.march_fraction = p.at("march_fraction");
    params.march_min_step = p.at("march_min_step");
    params.march_max_steps = p.at("march_max_steps");
    params.max_resample = p.at("max_resample");
    params.num_neighbors = p.at("num_neighbors");
    params.hybrid_step = p.at("hybrid_step");
    params.hybrid_probe_step = p.at("hybrid_probe_step");
    params.polytope_edges = p.at("polytope_edges");
    params.overlap_tol = p.at("overlap_tol");
    for (const json& v : j.at("vertices")) file.roadmap.AddVertex(BallFromJson(v));
    const int n = file.roadmap.num_vertices();
    for (const json& e : j.at("edges")) {
      RoadmapEdge edge;
      edge.a = e.at("a");
      edge.b = e.at("b");
      if (edge.a < 0 || edge.b < 0 || edge.a >= n || edge.b >= n) {
        throw CorruptFileError("edge refers to a missing vertex");
      }
      edge.kind = ParseEdgeKind(e.at("kind"));
      edge.length = e.at("length");
      for (const json& b : e.at("bubbles")) edge.bubbles.push_back(BallFromJson(b));
      file.roadmap.AddEdge(std::move(edge));
    }
  } catch (const json::exception& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
  return file;
}

}  // namespace scdf
