#include "scdf/graph.hpp"

#include <stdexcept>

namespace scdf {

int Graph::AddVertex() {
  adjacency_.emplace_back();
  return num_vertices() - 1;
}

void Graph::AddEdge(int a, int b, double cost) {
  if (a < 0 || b < 0 || a >= num_vertices() || b >= num_vertices() || a == b) {
    throw std::invalid_argument("invalid edge endpoints");
  }
  adjacency_[a].push_back({b, cost});
  adjacency_[b].push_back({a, cost});
}

bool Graph::HasEdge(int a, int b) const {
  for (const WeightedEdge& e : adjacency_[a]) {
    if (e.to == b) return true;
  }
  return false;
}

void Graph::RemoveEdge(int a, int b) {
  auto drop = [](std::vector<WeightedEdge>& list, int to) {
    std::erase_if(list, [to](const WeightedEdge& e) { return e.to == to; });
  };
  drop(adjacency_[a], b);
  drop(adjacency_[b], a);
}

std::size_t Graph::num_edges() const {
  std::size_t twice = 0;
  for (const auto& list : adjacency_) twice += list.size();
  return twice / 2;
}

int OverlayGraph::AddVertex() {
  ++num_extra_;
  return num_vertices() - 1;
}

void OverlayGraph::AddEdge(int a, int b, double cost) {
  if (a < 0 || b < 0 || a >= num_vertices() || b >= num_vertices() || a == b) {
    throw std::invalid_argument("invalid edge endpoints");
  }
  extra_.push_back({a, {b, cost}});
  extra_.push_back({b, {a, cost}});
}

}  // namespace scdf
