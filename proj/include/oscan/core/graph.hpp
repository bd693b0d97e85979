#pragma once

#include "oscan/core/polyline.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

namespace oscan {

/// Undirected graph with nonnegative edge weights over positioned nodes.
struct WeightedGraph {
  struct Edge {
    std::size_t to;
    double weight;
  };

  std::vector<Point3> nodes;
  std::vector<std::vector<Edge>> adjacency;

  std::size_t add_node(const Point3& p) {
    nodes.push_back(p);
    adjacency.emplace_back();
    return nodes.size() - 1;
  }

  void add_edge(std::size_t u, std::size_t v, double w) {
    if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("WeightedGraph: weight must be finite and >= 0");
    if (u == v) return;
    for (const auto& e : adjacency[u])
      if (e.to == v) return;
    adjacency[u].push_back({v, w});
    adjacency[v].push_back({u, w});
  }

  void add_euclidean_edge(std::size_t u, std::size_t v) {
    add_edge(u, v, (nodes[u] - nodes[v]).norm());
  }

  std::size_t size() const { return nodes.size(); }
};

struct ShortestPathTree {
  std::vector<double> distance;
  std::vector<std::size_t> parent;  // parent[source] == source; unreachable == npos

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  bool reachable(std::size_t v) const { return parent[v] != npos; }

  std::vector<std::size_t> path_to(std::size_t v) const {
    std::vector<std::size_t> out;
    if (!reachable(v)) return out;
    for (;;) {
      out.push_back(v);
      if (parent[v] == v) break;
      v = parent[v];
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

/// Single-source Dijkstra. Ties resolved by lower node index.
inline ShortestPathTree dijkstra(const WeightedGraph& g, std::size_t source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ShortestPathTree t{std::vector<double>(g.size(), inf),
                     std::vector<std::size_t>(g.size(), ShortestPathTree::npos)};
  if (source >= g.size()) throw InvalidArgument("dijkstra: source out of range");
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  t.distance[source] = 0.0;
  t.parent[source] = source;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > t.distance[u]) continue;
    for (const auto& e : g.adjacency[u]) {
      const double nd = d + e.weight;
      if (nd < t.distance[e.to]) {
        t.distance[e.to] = nd;
        t.parent[e.to] = u;
        pq.emplace(nd, e.to);
      }
    }
  }
  return t;
}

/// Minimum-weight path as a polyline through node positions; nullopt when the
/// goal is unreachable from the start.
inline std::optional<PathPolyline> shortest_path(const WeightedGraph& g, std::size_t start,
                                                 std::size_t goal) {
  if (start >= g.size() || goal >= g.size()) throw InvalidArgument("shortest_path: node out of range");
  if (start == goal) return PathPolyline({g.nodes[start]});
  const auto tree = dijkstra(g, start);
  if (!tree.reachable(goal)) return std::nullopt;
  PathPolyline path;
  for (auto v : tree.path_to(goal)) path.append(g.nodes[v]);
  return path;
}

}  // namespace oscan
