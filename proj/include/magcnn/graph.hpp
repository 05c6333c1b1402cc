#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/common.hpp"

namespace magcnn {

using NodeId = int;

// Hop distance of a node that cannot be reached from the BFS source.
inline constexpr int kUnreachable = -1;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  int multiplicity = 1;  // parallel bond count; never affects hop distances
};

// Undirected multigraph with contiguous 0-based node ids. Immutable after
// construction; every operation below is pure.
class Graph {
 public:
  Graph() = default;

  Graph(int node_count, std::vector<Edge> edges,
        std::vector<int> node_labels = {})
      : node_count_(node_count), node_labels_(std::move(node_labels)) {
    if (node_count_ < 0) throw ArgumentError("Graph: negative node count");
    if (!node_labels_.empty() &&
        node_labels_.size() != static_cast<std::size_t>(node_count_)) {
      throw ArgumentError("Graph: node label count != node count");
    }
    edges_.reserve(edges.size());
    for (Edge e : edges) {
      if (e.u < 0 || e.u >= node_count_ || e.v < 0 || e.v >= node_count_) {
        throw ArgumentError("Graph: edge endpoint out of range");
      }
      if (e.u == e.v) throw ArgumentError("Graph: self-loop forbidden");
      if (e.multiplicity < 1) throw ArgumentError("Graph: multiplicity < 1");
      if (e.u > e.v) std::swap(e.u, e.v);
      edges_.push_back(e);
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    });
    for (std::size_t i = 1; i < edges_.size(); ++i) {
      if (edges_[i - 1].u == edges_[i].u && edges_[i - 1].v == edges_[i].v) {
        throw ArgumentError("Graph: duplicate edge (" +
                            std::to_string(edges_[i].u) + "," +
                            std::to_string(edges_[i].v) + ")");
      }
    }
    adjacency_.assign(node_count_, {});
    weighted_degree_.assign(node_count_, 0);
    for (const Edge& e : edges_) {
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
      weighted_degree_[e.u] += e.multiplicity;
      weighted_degree_[e.v] += e.multiplicity;
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  }

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_node_labels() const { return !node_labels_.empty(); }
  int node_label(NodeId v) const {
    check_node(v);
    return node_labels_[static_cast<std::size_t>(v)];
  }
  const std::vector<int>& node_labels() const { return node_labels_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    check_node(v);
    return adjacency_[static_cast<std::size_t>(v)];
  }

  bool has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    const auto& nbrs = adjacency_[static_cast<std::size_t>(u)];
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
  }

  int weighted_degree(NodeId v) const {
    check_node(v);
    return weighted_degree_[static_cast<std::size_t>(v)];
  }

  void check_node(NodeId v) const {
    if (v < 0 || v >= node_count_) {
      throw ArgumentError("invalid node id " + std::to_string(v) +
                          " (n=" + std::to_string(node_count_) + ")");
    }
  }

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;            // u < v, stored once
  std::vector<int> node_labels_;       // optional
  std::vector<std::vector<NodeId>> adjacency_;  // sorted ascending
  std::vector<int> weighted_degree_;
};

// Hop-count BFS; kUnreachable marks nodes with no path from source.
inline std::vector<int> shortest_path_lengths(const Graph& g, NodeId source) {
  g.check_node(source);
  std::vector<int> dist(static_cast<std::size_t>(g.node_count()),
                        kUnreachable);
  dist[static_cast<std::size_t>(source)] = 0;
  std::deque<NodeId> queue{source};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId w : g.neighbors(u)) {
      if (dist[static_cast<std::size_t>(w)] == kUnreachable) {
        dist[static_cast<std::size_t>(w)] =
            dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

// C_v = (n-1) / sum of hop distances to reachable nodes. The sum ranges over
// reachable nodes only; a node reaching nothing (or n = 1) gets 0.
inline double closeness_from_distances(const std::vector<int>& dist, int n) {
  long long sum = 0;
  for (int d : dist) {
    if (d > 0) sum += d;
  }
  if (sum == 0 || n <= 1) return 0.0;
  return static_cast<double>(n - 1) / static_cast<double>(sum);
}

inline double closeness_centrality(const Graph& g, NodeId v) {
  return closeness_from_distances(shortest_path_lengths(g, v),
                                  g.node_count());
}

inline std::vector<double> closeness_all(const Graph& g) {
  std::vector<double> out(static_cast<std::size_t>(g.node_count()));
  for (NodeId v = 0; v < g.node_count(); ++v) {
    out[static_cast<std::size_t>(v)] = closeness_centrality(g, v);
  }
  return out;
}

// Degree counting edge multiplicity (a triple bond contributes 3).
inline int weighted_degree(const Graph& g, NodeId v) {
  return g.weighted_degree(v);
}

}  // namespace magcnn
