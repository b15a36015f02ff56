#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace scdf {

struct WeightedEdge {
  int to = 0;
  double cost = 0.0;
};

// Undirected weighted adjacency lists.
class Graph {
 public:
  Graph() = default;
  explicit Graph(int num_vertices) : adjacency_(num_vertices) {}

  int num_vertices() const { return static_cast<int>(adjacency_.size()); }
  int AddVertex();
  void AddEdge(int a, int b, double cost);
  bool HasEdge(int a, int b) const;
  // Removes the edge a-b if present.
  void RemoveEdge(int a, int b);
  std::span<const WeightedEdge> neighbors(int v) const { return adjacency_[v]; }
  std::size_t num_edges() const;

 private:
  std::vector<std::vector<WeightedEdge>> adjacency_;
};

// A base graph plus extra vertices and edges that live only for one query.
// The base graph is never modified.
class OverlayGraph {
 public:
  explicit OverlayGraph(const Graph& base) : base_(&base) {}

  int num_vertices() const { return base_->num_vertices() + num_extra_; }
  int AddVertex();
  void AddEdge(int a, int b, double cost);
  // Calls visit(to, cost) for every neighbor of v.
  template <typename Visit>
  void ForEachNeighbor(int v, Visit&& visit) const {
    if (v < base_->num_vertices()) {
      for (const WeightedEdge& e : base_->neighbors(v)) visit(e.to, e.cost);
    }
    for (const auto& [from, edge] : extra_) {
      if (from == v) visit(edge.to, edge.cost);
    }
  }

 private:
  const Graph* base_;
  int num_extra_ = 0;
  // Overlay edges are few (a query touches a handful of vertices), so a flat
  // list beats a map.
  std::vector<std::pair<int, WeightedEdge>> extra_;
};

struct SearchResult {
  bool found = false;
  double cost = std::numeric_limits<double>::infinity();
  // Vertex sequence from start to goal.
  std::vector<int> path;
};

namespace internal {

template <typename G>
void ForEach(const G& graph, int v, const std::function<void(int, double)>& f) {
  if constexpr (std::is_same_v<G, Graph>) {
    for (const WeightedEdge& e : graph.neighbors(v)) f(e.to, e.cost);
  } else {
    graph.ForEachNeighbor(v, f);
  }
}

}  // namespace internal

// A* with an admissible, consistent heuristic h(v). Ties in f are broken by
// the smaller vertex index so the result is deterministic.
template <typename G, typename Heuristic>
SearchResult AStar(const G& graph, int start, int goal, Heuristic&& h) {
  const int n = graph.num_vertices();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[start] = 0.0;
  open.emplace(h(start), start);
  while (!open.empty()) {
    const int v = open.top().second;
    open.pop();
    if (closed[v]) continue;
    closed[v] = 1;
    if (v == goal) break;
    internal::ForEach(graph, v, [&](int to, double cost) {
      const double candidate = g[v] + cost;
      if (!closed[to] && candidate < g[to]) {
        g[to] = candidate;
        parent[to] = v;
        open.emplace(candidate + h(to), to);
      }
    });
  }
  SearchResult result;
  if (!closed[goal]) return result;
  result.found = true;
  result.cost = g[goal];
  for (int v = goal; v != -1; v = parent[v]) result.path.push_back(v);
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

// Plain O(V^2) Dijkstra without a heap; kept deliberately independent of
// AStar so the two can cross-check each other.
template <typename G>
SearchResult Dijkstra(const G& graph, int start, int goal) {
  const int n = graph.num_vertices();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> done(n, 0);
  dist[start] = 0.0;
  for (int round = 0; round < n; ++round) {
    int v = -1;
    for (int u = 0; u < n; ++u) {
      if (!done[u] && (v == -1 || dist[u] < dist[v])) v = u;
    }
    if (v == -1 || dist[v] == std::numeric_limits<double>::infinity()) break;
    done[v] = 1;
    if (v == goal) break;
    internal::ForEach(graph, v, [&](int to, double cost) {
      if (dist[v] + cost < dist[to]) {
        dist[to] = dist[v] + cost;
        parent[to] = v;
      }
    });
  }
  SearchResult result;
  if (!done[goal]) return result;
  result.found = true;
  result.cost = dist[goal];
  for (int v = goal; v != -1; v = parent[v]) result.path.push_back(v);
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

}  // namespace scdf
