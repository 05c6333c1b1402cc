#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/dataset.hpp"
#include "magcnn/graph.hpp"
#include "magcnn/rng.hpp"

namespace testutil {

inline magcnn::Graph random_graph(magcnn::Rng& rng, int n, double p,
                                  int max_multiplicity = 1) {
  std::vector<magcnn::Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) {
        int mult = max_multiplicity > 1
                       ? 1 + static_cast<int>(rng.below(
                                 static_cast<std::uint64_t>(max_multiplicity)))
                       : 1;
        edges.push_back({u, v, mult});
      }
    }
  }
  return magcnn::Graph(n, std::move(edges));
}

// Random spanning tree plus extra edges, so the graph is connected.
inline magcnn::Graph random_connected_graph(magcnn::Rng& rng, int n,
                                            double extra_p) {
  std::set<std::pair<int, int>> present;
  std::vector<magcnn::Edge> edges;
  for (int v = 1; v < n; ++v) {
    int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    present.insert({u, v});
    edges.push_back({u, v, 1});
  }
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (!present.count({u, v}) && rng.uniform() < extra_p) {
        edges.push_back({u, v, 1});
      }
    }
  }
  return magcnn::Graph(n, std::move(edges));
}

struct FixtureGraph {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;  // local 0-based, written both ways
  std::vector<int> node_labels;            // optional
  std::vector<int> edge_labels;            // optional, parallel to edges
  long long label = 0;                     // graph class label as written
};

// Writes a dataset in the TU text layout (edge rows in both directions).
inline void write_tu_fixture(const std::filesystem::path& dir,
                             const std::string& name,
                             const std::vector<FixtureGraph>& graphs,
                             bool write_node_labels = false,
                             bool write_edge_labels = false) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream a(dir / (name + "_A.txt"));
  std::ofstream ind(dir / (name + "_graph_indicator.txt"));
  std::ofstream gl(dir / (name + "_graph_labels.txt"));
  std::ofstream nl;
  std::ofstream el;
  if (write_node_labels) nl.open(dir / (name + "_node_labels.txt"));
  if (write_edge_labels) el.open(dir / (name + "_edge_labels.txt"));

  int offset = 0;
  int graph_id = 1;
  for (const auto& g : graphs) {
    for (int v = 0; v < g.nodes; ++v) {
      ind << graph_id << "\n";
      if (write_node_labels) {
        nl << (v < static_cast<int>(g.node_labels.size()) ? g.node_labels[v]
                                                          : 0)
           << "\n";
      }
    }
    gl << g.label << "\n";
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      int u = offset + g.edges[e].first + 1;
      int v = offset + g.edges[e].second + 1;
      int lab = write_edge_labels && e < g.edge_labels.size()
                    ? g.edge_labels[e]
                    : 1;
      a << u << ", " << v << "\n";
      a << v << ", " << u << "\n";
      if (write_edge_labels) {
        el << lab << "\n";
        el << lab << "\n";
      }
    }
    offset += g.nodes;
    ++graph_id;
  }
}

// Two structurally distinct classes: class 0 graphs are near-trees (almost
// motif-free beyond paths), class 1 graphs are clique-seeded and dense.
// Separable by the grid representation, so small models learn it quickly.
inline std::vector<FixtureGraph> synthetic_two_class(magcnn::Rng& rng,
                                                     int per_class,
                                                     int min_nodes = 8,
                                                     int max_nodes = 12) {
  std::vector<FixtureGraph> out;
  for (int cls = 0; cls < 2; ++cls) {
    for (int g = 0; g < per_class; ++g) {
      int n = min_nodes + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(
                                  max_nodes - min_nodes + 1)));
      FixtureGraph fg;
      fg.nodes = n;
      fg.label = cls;
      std::set<std::pair<int, int>> present;
      auto add = [&](int u, int v) {
        if (u == v) return;
        if (u > v) std::swap(u, v);
        if (present.insert({u, v}).second) fg.edges.push_back({u, v});
      };
      for (int v = 1; v < n; ++v) {
        add(static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v);
      }
      if (cls == 1) {
        // plant a 5-clique and extra chords
        for (int u = 0; u < 5 && u < n; ++u) {
          for (int v = u + 1; v < 5 && v < n; ++v) add(u, v);
        }
        for (int extra = 0; extra < n; ++extra) {
          add(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))),
              static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
        }
      }
      for (int v = 0; v < n; ++v) {
        fg.node_labels.push_back(static_cast<int>(rng.below(3)));
      }
      out.push_back(std::move(fg));
    }
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("magcnn_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  const std::filesystem::path& path() const { return base_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path base_;
};

}  // namespace testutil
