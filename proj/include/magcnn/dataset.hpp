#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/graph.hpp"
#include "magcnn/tensor.hpp"

namespace magcnn {

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<int> labels;  // dense 0..C-1
  int class_count = 0;
  // dense index -> original file label, in sorted original order
  std::vector<long long> original_labels;

  bool has_node_labels() const {
    return !graphs.empty() && graphs.front().has_node_labels();
  }
};

enum class FeatureScheme { kOneHotLabel, kNormalizedDegree };

struct FeaturizedDataset {
  GraphDataset base;
  int feature_dim = 0;
  std::vector<Tensor> node_features;  // per graph, n x d
};

using WarnFn = std::function<void(const std::string&)>;

inline void warn_to_stderr(const std::string& msg) {
  std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

struct TuLoadOptions {
  // TU edge label -> bond multiplicity. Default covers the
  // aromatic/single/double/triple encoding; unknown labels map to 1.
  std::map<int, int> edge_label_multiplicity = {{0, 1}, {1, 1}, {2, 2}, {3, 3}};
  WarnFn warn = warn_to_stderr;
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing required file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // trailing blank lines are not records
  while (!lines.empty() && lines.back().find_first_not_of(" \t") ==
                               std::string::npos) {
    lines.pop_back();
  }
  return lines;
}

inline long long parse_int(const std::string& token,
                           const std::filesystem::path& file, size_t lineno) {
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  while (pos < token.size() &&
         (token[pos] == ' ' || token[pos] == '\t')) {
    ++pos;
  }
  if (pos != token.size() || token.find_first_not_of(" \t") ==
                                 std::string::npos) {
    throw DataError(file.string() + ":" + std::to_string(lineno) +
                    ": non-integer token '" + token + "'");
  }
  return value;
}

// One integer per line.
inline std::vector<long long> read_int_column(
    const std::filesystem::path& file) {
  auto lines = read_lines(file);
  std::vector<long long> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out.push_back(parse_int(lines[i], file, i + 1));
  }
  return out;
}

// Lines "i, j" with whitespace tolerated around the comma.
inline std::vector<std::pair<long long, long long>> read_edge_rows(
    const std::filesystem::path& file) {
  auto lines = read_lines(file);
  std::vector<std::pair<long long, long long>> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError(file.string() + ":" + std::to_string(i + 1) +
                      ": expected 'i, j'");
    }
    long long a = parse_int(line.substr(0, comma), file, i + 1);
    long long b = parse_int(line.substr(comma + 1), file, i + 1);
    out.emplace_back(a, b);
  }
  return out;
}

}  // namespace detail

// Parses the plain-text multi-file benchmark layout: NAME_A.txt,
// NAME_graph_indicator.txt, NAME_graph_labels.txt and the optional
// NAME_node_labels.txt / NAME_edge_labels.txt. Reciprocal edge rows are
// merged into one undirected edge; self-loops and extra duplicates are
// dropped with a warning.
inline GraphDataset load_tu_dataset(const std::filesystem::path& dir,
                                    const std::string& name,
                                    const TuLoadOptions& options = {}) {
  namespace fs = std::filesystem;
  const fs::path a_file = dir / (name + "_A.txt");
  const fs::path indicator_file = dir / (name + "_graph_indicator.txt");
  const fs::path graph_labels_file = dir / (name + "_graph_labels.txt");
  const fs::path node_labels_file = dir / (name + "_node_labels.txt");
  const fs::path edge_labels_file = dir / (name + "_edge_labels.txt");

  const auto indicator = detail::read_int_column(indicator_file);
  const auto graph_labels_raw = detail::read_int_column(graph_labels_file);
  const auto edge_rows = detail::read_edge_rows(a_file);

  const long long graph_count = static_cast<long long>(graph_labels_raw.size());
  if (graph_count == 0) throw DataError(name + ": no graphs");

  // global 1-based node id -> (graph index, local 0-based id)
  const long long node_count = static_cast<long long>(indicator.size());
  std::vector<int> node_graph(static_cast<std::size_t>(node_count));
  std::vector<int> node_local(static_cast<std::size_t>(node_count));
  std::vector<int> graph_sizes(static_cast<std::size_t>(graph_count), 0);
  for (long long k = 0; k < node_count; ++k) {
    long long gid = indicator[static_cast<std::size_t>(k)];
    if (gid < 1 || gid > graph_count) {
      throw DataError(indicator_file.string() + ":" + std::to_string(k + 1) +
                      ": node references absent graph id " +
                      std::to_string(gid));
    }
    node_graph[static_cast<std::size_t>(k)] = static_cast<int>(gid - 1);
    node_local[static_cast<std::size_t>(k)] =
        graph_sizes[static_cast<std::size_t>(gid - 1)]++;
  }
  for (long long g = 0; g < graph_count; ++g) {
    if (graph_sizes[static_cast<std::size_t>(g)] == 0) {
      throw DataError(name + ": graph " + std::to_string(g + 1) +
                      " has no nodes");
    }
  }

  std::vector<long long> node_labels_raw;
  if (fs::exists(node_labels_file)) {
    node_labels_raw = detail::read_int_column(node_labels_file);
    if (static_cast<long long>(node_labels_raw.size()) != node_count) {
      throw DataError(node_labels_file.string() +
                      ": line count != node count");
    }
  }
  std::vector<long long> edge_labels_raw;
  if (fs::exists(edge_labels_file)) {
    edge_labels_raw = detail::read_int_column(edge_labels_file);
    if (edge_labels_raw.size() != edge_rows.size()) {
      throw DataError(edge_labels_file.string() +
                      ": line count != edge row count");
    }
  }

  const auto check_node_ref = [&](long long id, std::size_t row) {
    if (id < 1 || id > node_count) {
      throw DataError(a_file.string() + ":" + std::to_string(row + 1) +
                      ": node id " + std::to_string(id) + " out of range");
    }
  };

  // Merge reciprocal rows. key = (graph, min local, max local).
  struct PendingEdge {
    int mult = 1;
    int seen = 0;
  };
  std::vector<std::map<std::pair<int, int>, PendingEdge>> pending(
      static_cast<std::size_t>(graph_count));
  for (std::size_t row = 0; row < edge_rows.size(); ++row) {
    auto [gi, gj] = edge_rows[row];
    check_node_ref(gi, row);
    check_node_ref(gj, row);
    const int graph_i = node_graph[static_cast<std::size_t>(gi - 1)];
    const int graph_j = node_graph[static_cast<std::size_t>(gj - 1)];
    if (graph_i != graph_j) {
      throw DataError(a_file.string() + ":" + std::to_string(row + 1) +
                      ": edge crosses graphs");
    }
    int u = node_local[static_cast<std::size_t>(gi - 1)];
    int v = node_local[static_cast<std::size_t>(gj - 1)];
    if (u == v) {
      if (options.warn) {
        options.warn(name + ": dropping self-loop at " + a_file.string() +
                     ":" + std::to_string(row + 1));
      }
      continue;
    }
    if (u > v) std::swap(u, v);
    int mult = 1;
    if (!edge_labels_raw.empty()) {
      auto it = options.edge_label_multiplicity.find(
          static_cast<int>(edge_labels_raw[row]));
      mult = it == options.edge_label_multiplicity.end() ? 1 : it->second;
    }
    auto& slot = pending[static_cast<std::size_t>(graph_i)][{u, v}];
    if (slot.seen >= 2) {
      if (options.warn) {
        options.warn(name + ": ignoring duplicate edge row at " +
                     a_file.string() + ":" + std::to_string(row + 1));
      }
      continue;
    }
    if (slot.seen == 0) slot.mult = mult;
    slot.seen += 1;
  }

  // Dense class indices in sorted original-label order.
  std::set<long long> distinct(graph_labels_raw.begin(),
                               graph_labels_raw.end());
  std::vector<long long> original(distinct.begin(), distinct.end());
  std::map<long long, int> to_dense;
  for (std::size_t i = 0; i < original.size(); ++i) {
    to_dense[original[i]] = static_cast<int>(i);
  }

  GraphDataset ds;
  ds.name = name;
  ds.class_count = static_cast<int>(original.size());
  ds.original_labels = original;
  ds.labels.reserve(static_cast<std::size_t>(graph_count));
  for (long long raw : graph_labels_raw) ds.labels.push_back(to_dense[raw]);

  std::vector<std::vector<int>> per_graph_node_labels(
      static_cast<std::size_t>(graph_count));
  if (!node_labels_raw.empty()) {
    for (long long g = 0; g < graph_count; ++g) {
      per_graph_node_labels[static_cast<std::size_t>(g)].resize(
          static_cast<std::size_t>(graph_sizes[static_cast<std::size_t>(g)]));
    }
    for (long long k = 0; k < node_count; ++k) {
      per_graph_node_labels[static_cast<std::size_t>(
          node_graph[static_cast<std::size_t>(k)])]
                           [static_cast<std::size_t>(
                               node_local[static_cast<std::size_t>(k)])] =
          static_cast<int>(node_labels_raw[static_cast<std::size_t>(k)]);
    }
  }

  ds.graphs.reserve(static_cast<std::size_t>(graph_count));
  for (long long g = 0; g < graph_count; ++g) {
    std::vector<Edge> edges;
    edges.reserve(pending[static_cast<std::size_t>(g)].size());
    for (const auto& [key, pe] : pending[static_cast<std::size_t>(g)]) {
      edges.push_back(Edge{key.first, key.second, pe.mult});
    }
    ds.graphs.emplace_back(graph_sizes[static_cast<std::size_t>(g)],
                           std::move(edges),
                           std::move(per_graph_node_labels[
                               static_cast<std::size_t>(g)]));
  }
  return ds;
}

// ONE_HOT_LABEL: d = distinct node labels across the dataset, indicator of
// the node's label. NORMALIZED_DEGREE: d = 1, weighted degree divided by the
// dataset-wide maximum.
inline FeaturizedDataset assign_node_features(GraphDataset ds,
                                              FeatureScheme scheme) {
  FeaturizedDataset out;
  out.node_features.reserve(ds.graphs.size());
  if (scheme == FeatureScheme::kOneHotLabel) {
    if (!ds.has_node_labels()) {
      throw ConfigError(
          "one-hot features require node labels, dataset has none");
    }
    std::set<int> distinct;
    for (const Graph& g : ds.graphs) {
      for (int lab : g.node_labels()) distinct.insert(lab);
    }
    std::map<int, int> index;
    for (int lab : distinct) {
      index.emplace(lab, static_cast<int>(index.size()));
    }
    out.feature_dim = static_cast<int>(distinct.size());
    for (const Graph& g : ds.graphs) {
      Tensor f({static_cast<std::size_t>(g.node_count()),
                static_cast<std::size_t>(out.feature_dim)});
      for (NodeId v = 0; v < g.node_count(); ++v) {
        f.at2(static_cast<std::size_t>(v),
              static_cast<std::size_t>(index.at(g.node_label(v)))) = 1.0;
      }
      out.node_features.push_back(std::move(f));
    }
  } else {
    int max_degree = 0;
    for (const Graph& g : ds.graphs) {
      for (NodeId v = 0; v < g.node_count(); ++v) {
        max_degree = std::max(max_degree, g.weighted_degree(v));
      }
    }
    out.feature_dim = 1;
    for (const Graph& g : ds.graphs) {
      Tensor f({static_cast<std::size_t>(g.node_count()), 1});
      for (NodeId v = 0; v < g.node_count(); ++v) {
        f.at2(static_cast<std::size_t>(v), 0) =
            max_degree == 0
                ? 0.0
                : static_cast<double>(g.weighted_degree(v)) / max_degree;
      }
      out.node_features.push_back(std::move(f));
    }
  }
  out.base = std::move(ds);
  return out;
}

}  // namespace magcnn
