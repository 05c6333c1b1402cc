#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cstddef>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "magcnn/dataset.hpp"
#include "magcnn/graph.hpp"
#include "magcnn/tensor.hpp"

namespace magcnn {

// Sentinel for a central-node slot of a graph with fewer than N nodes.
inline constexpr NodeId kPadCenter = -1;
// Sentinel for an unfilled central-matrix slot.
inline constexpr NodeId kEmptySlot = -1;

struct NormalizationParams {
  int central_nodes = 0;  // N
  int max_subgraph = 0;   // K
  int w1 = 0;
  int w2 = 0;
  int w3 = 0;

  int total_rows() const { return w1 + w2 + w3; }

  void validate() const {
    if (central_nodes < 2) throw ConfigError("N must be >= 2");
    if (max_subgraph < 3) throw ConfigError("K must be >= 3");
    if (w1 < 1 || w2 < 1 || w3 < 1) {
      throw ConfigError("block row counts w1,w2,w3 must be >= 1");
    }
    if (total_rows() % 3 != 0) {
      throw ConfigError("w1+w2+w3 must be divisible by 3, got " +
                        std::to_string(total_rows()));
    }
  }
};

// Neighborhood field of one central node. After order_subgraph_nodes the
// members are in sorted-label order: members[k] is the node labeled a(k+1),
// members[0] the center. closeness and hop are recomputed inside the
// induced subgraph.
struct Subgraph {
  NodeId center = kPadCenter;
  std::vector<NodeId> members;
  std::vector<std::pair<NodeId, NodeId>> edges;  // induced, original ids
  std::vector<double> member_closeness;          // parallel to members
  std::vector<int> member_hop;                   // parallel, kUnreachable = -1
  bool ordered = false;

  bool empty() const { return members.empty(); }
};

// A matched two-hop-path motif: three member labels (0-based a-indices,
// ascending) and the block its minimum hop distance assigns it to.
struct Motif {
  std::array<int, 3> labels;
  int block;  // 1, 2 or 3
};

struct CentralMatrix {
  int w1 = 0;
  int w2 = 0;
  int w3 = 0;
  std::vector<NodeId> slots;  // (w1+w2+w3) x 3 row-major, kEmptySlot unfilled

  int rows() const { return w1 + w2 + w3; }
  NodeId at(int row, int slot) const {
    return slots[static_cast<std::size_t>(row) * 3 +
                 static_cast<std::size_t>(slot)];
  }
  int block_of_row(int row) const {
    if (row < w1) return 1;
    if (row < w1 + w2) return 2;
    return 3;
  }
};

// Model input for one graph: rows x 3N columns x d feature channels,
// row-major (row, column, channel). Column triple [3i, 3i+2] holds the
// matrix of central node i.
struct GridTensor {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> values;

  GridTensor() = default;
  GridTensor(int r, int c, int ch)
      : rows(r), cols(c), channels(ch),
        values(static_cast<std::size_t>(r) * static_cast<std::size_t>(c) *
                   static_cast<std::size_t>(ch),
               0.0) {}

  double at(int r, int c, int ch) const {
    return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
  double& at(int r, int c, int ch) {
    return values[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
};

// Top-N nodes by (closeness descending, id ascending); tail padded with
// kPadCenter when the graph has fewer than N nodes.
inline std::vector<NodeId> select_central_nodes(const Graph& g, int n_central) {
  if (n_central < 2) throw ConfigError("N must be >= 2");
  const std::vector<double> closeness = closeness_all(g);
  std::vector<NodeId> order(static_cast<std::size_t>(g.node_count()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    double ca = closeness[static_cast<std::size_t>(a)];
    double cb = closeness[static_cast<std::size_t>(b)];
    if (ca != cb) return ca > cb;
    return a < b;
  });
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(n_central));
  for (int i = 0; i < n_central; ++i) {
    out.push_back(i < g.node_count() ? order[static_cast<std::size_t>(i)]
                                     : kPadCenter);
  }
  return out;
}

namespace detail {

// Induced subgraph over `members`; recomputes closeness and hop-to-center
// within it.
inline void attach_induced(const Graph& g, Subgraph& sub) {
  const std::size_t m = sub.members.size();
  std::vector<int> local(static_cast<std::size_t>(g.node_count()), -1);
  for (std::size_t i = 0; i < m; ++i) {
    local[static_cast<std::size_t>(sub.members[i])] = static_cast<int>(i);
  }
  std::vector<Edge> induced_local;
  sub.edges.clear();
  for (std::size_t i = 0; i < m; ++i) {
    NodeId u = sub.members[i];
    for (NodeId v : g.neighbors(u)) {
      if (u < v && local[static_cast<std::size_t>(v)] >= 0) {
        sub.edges.emplace_back(u, v);
        induced_local.push_back(Edge{static_cast<int>(i),
                                     local[static_cast<std::size_t>(v)], 1});
      }
    }
  }
  Graph mini(static_cast<int>(m), std::move(induced_local));
  sub.member_closeness.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    sub.member_closeness[i] = closeness_centrality(mini, static_cast<int>(i));
  }
  const int center_local = local[static_cast<std::size_t>(sub.center)];
  sub.member_hop = shortest_path_lengths(mini, center_local);
}

}  // namespace detail

// Collects the center plus its 1st/2nd/3rd BFS rings, each ring taken in
// (full-graph closeness descending, id ascending) order, stopping at K
// members. Closeness and hop are then recomputed inside the induced
// subgraph.
inline Subgraph neighborhood_field(const Graph& g, NodeId center,
                                   int max_nodes,
                                   const std::vector<double>* closeness_hint =
                                       nullptr) {
  g.check_node(center);
  std::vector<double> closeness_store;
  if (closeness_hint == nullptr) {
    closeness_store = closeness_all(g);
    closeness_hint = &closeness_store;
  }
  const std::vector<double>& closeness = *closeness_hint;
  const std::vector<int> dist = shortest_path_lengths(g, center);

  Subgraph sub;
  sub.center = center;
  sub.members.push_back(center);
  for (int ring = 1; ring <= 3 &&
                     static_cast<int>(sub.members.size()) < max_nodes;
       ++ring) {
    std::vector<NodeId> candidates;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      if (dist[static_cast<std::size_t>(v)] == ring) candidates.push_back(v);
    }
    std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
      double ca = closeness[static_cast<std::size_t>(a)];
      double cb = closeness[static_cast<std::size_t>(b)];
      if (ca != cb) return ca > cb;
      return a < b;
    });
    for (NodeId v : candidates) {
      if (static_cast<int>(sub.members.size()) >= max_nodes) break;
      sub.members.push_back(v);
    }
  }
  detail::attach_induced(g, sub);
  return sub;
}

// Relabels members a1..a|members|: a1 is the center, the rest sorted by
// (subgraph closeness descending, hop to center ascending, id ascending).
inline void order_subgraph_nodes(Subgraph& sub) {
  if (sub.empty() || sub.ordered) {
    sub.ordered = true;
    return;
  }
  const std::size_t m = sub.members.size();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  auto hop_key = [&](std::size_t i) {
    int h = sub.member_hop[i];
    return h == kUnreachable ? INT_MAX : h;
  };
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const bool a_center = sub.members[a] == sub.center;
    const bool b_center = sub.members[b] == sub.center;
    if (a_center != b_center) return a_center;
    if (sub.member_closeness[a] != sub.member_closeness[b]) {
      return sub.member_closeness[a] > sub.member_closeness[b];
    }
    if (hop_key(a) != hop_key(b)) return hop_key(a) < hop_key(b);
    return sub.members[a] < sub.members[b];
  });
  std::vector<NodeId> members(m);
  std::vector<double> closeness(m);
  std::vector<int> hop(m);
  for (std::size_t i = 0; i < m; ++i) {
    members[i] = sub.members[perm[i]];
    closeness[i] = sub.member_closeness[perm[i]];
    hop[i] = sub.member_hop[perm[i]];
  }
  sub.members = std::move(members);
  sub.member_closeness = std::move(closeness);
  sub.member_hop = std::move(hop);
  sub.ordered = true;
}

// A motif is any 3-node set with >= 2 induced edges (open two-hop path or
// triangle). Its block comes from the minimum recomputed hop over its
// nodes: 0 -> block 1 (contains the center), 1 -> block 2, 2 -> block 3;
// anything deeper or unreachable is discarded. Triples come out in
// ascending-label lexicographic order.
inline std::vector<Motif> enumerate_two_hop_motifs(const Subgraph& sub) {
  std::vector<Motif> out;
  const int m = static_cast<int>(sub.members.size());
  if (m < 3) return out;
  if (!sub.ordered) {
    throw ArgumentError("enumerate_two_hop_motifs: subgraph not ordered");
  }

  // adjacency over label indices
  std::vector<std::vector<bool>> adj(
      static_cast<std::size_t>(m),
      std::vector<bool>(static_cast<std::size_t>(m), false));
  {
    std::vector<int> by_id;
    int max_id = 0;
    for (NodeId v : sub.members) max_id = std::max(max_id, v);
    by_id.assign(static_cast<std::size_t>(max_id) + 1, -1);
    for (int i = 0; i < m; ++i) {
      by_id[static_cast<std::size_t>(sub.members[static_cast<std::size_t>(
          i)])] = i;
    }
    for (const auto& [u, v] : sub.edges) {
      int a = by_id[static_cast<std::size_t>(u)];
      int b = by_id[static_cast<std::size_t>(v)];
      adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
      adj[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
    }
  }
  auto hop = [&](int i) {
    int h = sub.member_hop[static_cast<std::size_t>(i)];
    return h == kUnreachable ? INT_MAX : h;
  };
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      for (int k = j + 1; k < m; ++k) {
        int edge_count = static_cast<int>(adj[i][j]) +
                         static_cast<int>(adj[i][k]) +
                         static_cast<int>(adj[j][k]);
        if (edge_count < 2) continue;
        int min_hop = std::min({hop(i), hop(j), hop(k)});
        if (min_hop > 2) continue;
        out.push_back(Motif{{i, j, k}, min_hop + 1});
      }
    }
  }
  return out;
}

// Fills each block with its motifs in lexicographic label order, truncated
// at the block's row budget; leftover rows stay EMPTY. PAD centers produce
// an all-EMPTY matrix. `overflow` counts truncated rows per block.
inline CentralMatrix build_central_matrix(
    const Subgraph& sub, const NormalizationParams& params,
    const std::vector<Motif>& motifs,
    std::array<long long, 3>* overflow = nullptr) {
  CentralMatrix mat;
  mat.w1 = params.w1;
  mat.w2 = params.w2;
  mat.w3 = params.w3;
  mat.slots.assign(static_cast<std::size_t>(mat.rows()) * 3, kEmptySlot);
  if (sub.empty()) return mat;

  const std::array<int, 3> budget{params.w1, params.w2, params.w3};
  const std::array<int, 3> base{0, params.w1, params.w1 + params.w2};
  std::array<int, 3> used{0, 0, 0};
  for (const Motif& motif : motifs) {
    const int b = motif.block - 1;
    if (used[static_cast<std::size_t>(b)] >=
        budget[static_cast<std::size_t>(b)]) {
      if (overflow) ++(*overflow)[static_cast<std::size_t>(b)];
      continue;
    }
    const int row = base[static_cast<std::size_t>(b)] +
                    used[static_cast<std::size_t>(b)]++;
    for (int s = 0; s < 3; ++s) {
      mat.slots[static_cast<std::size_t>(row) * 3 +
                static_cast<std::size_t>(s)] =
          sub.members[static_cast<std::size_t>(
              motif.labels[static_cast<std::size_t>(s)])];
    }
  }
  return mat;
}

inline CentralMatrix build_central_matrix(
    const Subgraph& sub, const NormalizationParams& params,
    std::array<long long, 3>* overflow = nullptr) {
  return build_central_matrix(sub, params, enumerate_two_hop_motifs(sub),
                              overflow);
}

// The full per-graph pipeline up to central matrices, in central-node
// selection order.
inline std::vector<CentralMatrix> central_matrices_for_graph(
    const Graph& g, const NormalizationParams& params,
    std::array<long long, 3>* overflow = nullptr) {
  params.validate();
  const std::vector<double> closeness = closeness_all(g);
  std::vector<CentralMatrix> out;
  out.reserve(static_cast<std::size_t>(params.central_nodes));
  for (NodeId c : select_central_nodes(g, params.central_nodes)) {
    if (c == kPadCenter) {
      out.push_back(build_central_matrix(Subgraph{}, params, {}, overflow));
      continue;
    }
    Subgraph sub = neighborhood_field(g, c, params.max_subgraph, &closeness);
    order_subgraph_nodes(sub);
    out.push_back(build_central_matrix(sub, params, overflow));
  }
  return out;
}

// Concatenates the N central matrices along columns and expands every slot
// to the node's d-vector; EMPTY slots stay all-zero. Shape is exactly
// (w1+w2+w3) x 3N x d.
inline GridTensor normalize_graph(const Graph& g, const Tensor& features,
                                  const NormalizationParams& params,
                                  std::array<long long, 3>* overflow =
                                      nullptr) {
  params.validate();
  if (features.rank() != 2 ||
      features.dims[0] != static_cast<std::size_t>(g.node_count())) {
    throw ShapeError("normalize_graph: features must be node_count x d");
  }
  const int d = static_cast<int>(features.dims[1]);
  const auto matrices = central_matrices_for_graph(g, params, overflow);
  GridTensor grid(params.total_rows(), 3 * params.central_nodes, d);
  for (int i = 0; i < params.central_nodes; ++i) {
    const CentralMatrix& mat = matrices[static_cast<std::size_t>(i)];
    for (int r = 0; r < grid.rows; ++r) {
      for (int s = 0; s < 3; ++s) {
        const NodeId v = mat.at(r, s);
        if (v == kEmptySlot) continue;
        for (int ch = 0; ch < d; ++ch) {
          grid.at(r, 3 * i + s, ch) =
              features.at2(static_cast<std::size_t>(v),
                           static_cast<std::size_t>(ch));
        }
      }
    }
  }
  return grid;
}

}  // namespace magcnn
