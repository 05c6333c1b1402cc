#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "magcnn/config.hpp"
#include "magcnn/dataset.hpp"
#include "magcnn/grid.hpp"
#include "magcnn/io.hpp"
#include "magcnn/model.hpp"
#include "magcnn/split.hpp"

namespace magcnn {

// ---------------------------------------------------------------------------
// Worker fan-out. MGCNN_THREADS caps the pool; work items must be
// independent and write only to their own slots.
// ---------------------------------------------------------------------------

inline int worker_count(std::size_t jobs) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* env = std::getenv("MGCNN_THREADS")) {
    char* end = nullptr;
    long parsed = std::strtol(env, &end, 10);
    if (end && *end == '\0' && parsed >= 1) {
      workers = static_cast<int>(parsed);
    }
  }
  return static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), jobs));
}

template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  if (count == 0) return;
  const int workers = worker_count(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Dataset preprocessing: graph -> grid, with the block row counts resolved
// from the measured motif distribution when the config leaves them at zero.
// ---------------------------------------------------------------------------

struct PreprocessStats {
  std::array<long long, 3> truncated_rows{0, 0, 0};
  std::array<int, 3> percentile95{0, 0, 0};  // per-block motif counts
  long long pad_subgraphs = 0;
  long long subgraphs = 0;
};

struct PreprocessResult {
  NormalizationParams params;
  std::vector<GridTensor> grids;
  PreprocessStats stats;
};

namespace detail {

struct GraphPipeline {
  std::vector<Subgraph> subgraphs;            // selection order; empty = PAD
  std::vector<std::vector<Motif>> motifs;     // parallel to subgraphs
};

inline GraphPipeline run_pipeline(const Graph& g, int n_central, int k_max) {
  GraphPipeline pipe;
  const std::vector<double> closeness = closeness_all(g);
  for (NodeId c : select_central_nodes(g, n_central)) {
    if (c == kPadCenter) {
      pipe.subgraphs.emplace_back();
      pipe.motifs.emplace_back();
      continue;
    }
    Subgraph sub = neighborhood_field(g, c, k_max, &closeness);
    order_subgraph_nodes(sub);
    pipe.motifs.push_back(enumerate_two_hop_motifs(sub));
    pipe.subgraphs.push_back(std::move(sub));
  }
  return pipe;
}

// nearest-rank 95th percentile
inline int percentile95(std::vector<int> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace detail

// Transforms every featurized graph into its grid. When w1..w3 are zero
// they are set to the 95th-percentile per-block motif counts over all
// non-PAD subgraphs, with w3 bumped until the total is a multiple of 3.
inline PreprocessResult preprocess_dataset(const FeaturizedDataset& data,
                                           const RunConfig& cfg) {
  if (cfg.n_central < 2 || cfg.k_max < 3) {
    throw ConfigError("preprocess: N and K must be resolved first");
  }
  PreprocessResult result;
  const std::size_t count = data.base.graphs.size();
  std::vector<detail::GraphPipeline> pipelines(count);
  parallel_for(count, [&](std::size_t i) {
    pipelines[i] = detail::run_pipeline(data.base.graphs[i], cfg.n_central,
                                        cfg.k_max);
  });

  std::array<std::vector<int>, 3> block_counts;
  for (const auto& pipe : pipelines) {
    for (std::size_t s = 0; s < pipe.subgraphs.size(); ++s) {
      ++result.stats.subgraphs;
      if (pipe.subgraphs[s].empty()) {
        ++result.stats.pad_subgraphs;
        continue;
      }
      std::array<int, 3> counts{0, 0, 0};
      for (const Motif& m : pipe.motifs[s]) {
        ++counts[static_cast<std::size_t>(m.block - 1)];
      }
      for (int b = 0; b < 3; ++b) {
        block_counts[static_cast<std::size_t>(b)].push_back(
            counts[static_cast<std::size_t>(b)]);
      }
    }
  }
  for (int b = 0; b < 3; ++b) {
    result.stats.percentile95[static_cast<std::size_t>(b)] =
        detail::percentile95(block_counts[static_cast<std::size_t>(b)]);
  }

  NormalizationParams params{cfg.n_central, cfg.k_max, cfg.w1, cfg.w2,
                             cfg.w3};
  if (params.w1 == 0) {
    params.w1 = std::max(1, result.stats.percentile95[0]);
    params.w2 = std::max(1, result.stats.percentile95[1]);
    params.w3 = std::max(1, result.stats.percentile95[2]);
    while (params.total_rows() % 3 != 0) ++params.w3;
  }
  params.validate();
  result.params = params;

  result.grids.assign(count, {});
  std::vector<std::array<long long, 3>> overflow(count, {0, 0, 0});
  parallel_for(count, [&](std::size_t i) {
    const detail::GraphPipeline& pipe = pipelines[i];
    const Tensor& features = data.node_features[i];
    const int d = data.feature_dim;
    GridTensor grid(params.total_rows(), 3 * params.central_nodes, d);
    for (int s = 0; s < params.central_nodes; ++s) {
      const CentralMatrix mat = build_central_matrix(
          pipe.subgraphs[static_cast<std::size_t>(s)], params,
          pipe.motifs[static_cast<std::size_t>(s)], &overflow[i]);
      for (int r = 0; r < grid.rows; ++r) {
        for (int slot = 0; slot < 3; ++slot) {
          const NodeId v = mat.at(r, slot);
          if (v == kEmptySlot) continue;
          for (int ch = 0; ch < d; ++ch) {
            grid.at(r, 3 * s + slot, ch) =
                features.at2(static_cast<std::size_t>(v),
                             static_cast<std::size_t>(ch));
          }
        }
      }
    }
    result.grids[i] = std::move(grid);
  });
  for (const auto& of : overflow) {
    for (int b = 0; b < 3; ++b) {
      result.stats.truncated_rows[static_cast<std::size_t>(b)] +=
          of[static_cast<std::size_t>(b)];
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Training loop: shuffled mini-batches, mean cross-entropy + L2, momentum
// SGD. Deterministic given (config, seed).
// ---------------------------------------------------------------------------

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;
};

struct TrainOptions {
  SgdHyper hyper;
  double dropout = 0.5;
  int epochs = 200;
  int batch_size = 45;
};

inline TrainResult train(ModelKind kind, const ModelDims& dims,
                         const std::vector<const GridTensor*>& grids,
                         const std::vector<int>& labels,
                         const TrainOptions& options, std::uint64_t seed) {
  if (grids.size() != labels.size() || grids.empty()) {
    throw ArgumentError("train: grids/labels mismatch or empty");
  }
  Rng rng(seed);
  TrainResult result;
  result.params = init_params(kind, dims, rng);
  ModelParams grads = result.params.zeros_like();

  std::vector<Tensor*> param_tensors;
  std::vector<const Tensor*> const_param_tensors;
  for (auto& nt : result.params.named_tensors()) {
    param_tensors.push_back(nt.tensor);
    const_param_tensors.push_back(nt.tensor);
  }
  OptimizerState opt = OptimizerState::init(options.hyper,
                                            const_param_tensors);

  const double keep = 1.0 - options.dropout;
  std::vector<int> order(grids.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop =
          std::min(order.size(),
                   start + static_cast<std::size_t>(options.batch_size));
      std::vector<const GridTensor*> batch_grids;
      std::vector<int> batch_labels;
      std::vector<DropoutMasks> masks;
      for (std::size_t i = start; i < stop; ++i) {
        batch_grids.push_back(grids[static_cast<std::size_t>(order[i])]);
        batch_labels.push_back(labels[static_cast<std::size_t>(order[i])]);
        masks.push_back(make_dropout_masks(kind, dims, keep, rng));
      }
      for (auto& nt : grads.named_tensors()) nt.tensor->zero();
      double loss;
      try {
        loss = model_batch_loss(result.params, batch_grids, batch_labels,
                                &masks, options.hyper.weight_decay, &grads);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " +
                           std::to_string(epoch) + ", batch at " +
                           std::to_string(start) + ")");
      }
      std::vector<const Tensor*> grad_tensors;
      for (auto& nt : grads.named_tensors()) grad_tensors.push_back(nt.tensor);
      sgd_momentum_step(opt, param_tensors, grad_tensors);
      loss_sum += loss * static_cast<double>(stop - start);
      seen += stop - start;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation: accuracy with deterministic argmax plus a confusion matrix
// (row = true class, column = prediction). Dropout disabled.
// ---------------------------------------------------------------------------

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::vector<long long>> confusion;
};

inline EvalResult evaluate(const ModelParams& params,
                           const std::vector<const GridTensor*>& grids,
                           const std::vector<int>& labels) {
  if (grids.size() != labels.size()) {
    throw ArgumentError("evaluate: grids/labels mismatch");
  }
  const int classes = params.dims.classes;
  EvalResult result;
  result.confusion.assign(
      static_cast<std::size_t>(classes),
      std::vector<long long>(static_cast<std::size_t>(classes), 0));
  long long correct = 0;
  ForwardTrace trace;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    model_forward(params, *grids[i], nullptr, trace);
    const int predicted = predict_class(trace.probs);
    result.confusion[static_cast<std::size_t>(labels[i])]
                    [static_cast<std::size_t>(predicted)] += 1;
    if (predicted == labels[i]) ++correct;
  }
  result.accuracy = grids.empty() ? 0.0
                                  : static_cast<double>(correct) /
                                        static_cast<double>(grids.size());
  return result;
}

// ---------------------------------------------------------------------------
// 10-fold cross-validation with a held-out stratified 10% test split.
// ---------------------------------------------------------------------------

struct CvReport {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population
  double test_accuracy = 0.0;
  int best_fold = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::string dataset_name;
  int dataset_graphs = 0;
  int dataset_classes = 0;
  std::vector<double> fold_seconds;
  double total_seconds = 0.0;
};

struct CvArtifacts {
  CvReport report;
  ModelParams best_params;
};

inline ModelDims dims_from_config(const RunConfig& cfg,
                                  const NormalizationParams& params,
                                  int feature_dim, int classes) {
  ModelDims dims;
  dims.subgraphs = params.central_nodes;
  dims.grid_rows = params.total_rows();
  dims.channels = feature_dim;
  dims.conv1_kernels = cfg.k1;
  dims.conv2_kernels = cfg.k2;
  dims.fc1 = cfg.f1;
  dims.fc2 = cfg.f2;
  dims.heads = cfg.s_heads;
  dims.classes = classes;
  dims.leaky_slope = cfg.leaky_slope;
  dims.validate();
  return dims;
}

// Runs the full protocol over preprocessed grids: train on nine folds,
// validate on the tenth, report mean +- std over the ten validation
// accuracies, and score the best-validation fold's model on the held-out
// test split. Folds run in parallel, each on its own generator seeded with
// seed xor fold.
inline CvArtifacts run_cv_on_grids(const RunConfig& cfg,
                                   const std::vector<GridTensor>& grids,
                                   const std::vector<int>& labels,
                                   int class_count,
                                   const NormalizationParams& norm,
                                   int feature_dim,
                                   const WarnFn& warn = warn_to_stderr) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelDims dims =
      dims_from_config(cfg, norm, feature_dim, class_count);
  const SplitResult split = split_dataset(labels, class_count, cfg.seed,
                                          warn);

  TrainOptions options;
  options.hyper = {cfg.learning_rate, cfg.momentum, cfg.weight_decay};
  options.dropout = cfg.dropout;
  options.epochs = cfg.epochs;
  options.batch_size = cfg.batch_size;

  struct FoldOutcome {
    double accuracy = 0.0;
    double seconds = 0.0;
    ModelParams params;
  };
  std::vector<FoldOutcome> outcomes(kFoldCount);
  parallel_for(kFoldCount, [&](std::size_t fold) {
    const auto fold_start = std::chrono::steady_clock::now();
    std::vector<const GridTensor*> train_grids, valid_grids;
    std::vector<int> train_labels, valid_labels;
    for (std::size_t other = 0; other < kFoldCount; ++other) {
      for (int idx : split.folds[other]) {
        auto& grid_list = other == fold ? valid_grids : train_grids;
        auto& label_list = other == fold ? valid_labels : train_labels;
        grid_list.push_back(&grids[static_cast<std::size_t>(idx)]);
        label_list.push_back(labels[static_cast<std::size_t>(idx)]);
      }
    }
    TrainResult trained =
        train(cfg.model, dims, train_grids, train_labels, options,
              cfg.seed ^ static_cast<std::uint64_t>(fold));
    EvalResult eval = evaluate(trained.params, valid_grids, valid_labels);
    outcomes[fold].accuracy = eval.accuracy;
    outcomes[fold].params = std::move(trained.params);
    outcomes[fold].seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      fold_start)
            .count();
  });

  CvArtifacts artifacts;
  CvReport& report = artifacts.report;
  report.seed = cfg.seed;
  report.config = config_echo(cfg);
  double sum = 0.0;
  for (std::size_t fold = 0; fold < kFoldCount; ++fold) {
    report.fold_accuracies.push_back(outcomes[fold].accuracy);
    report.fold_seconds.push_back(outcomes[fold].seconds);
    sum += outcomes[fold].accuracy;
  }
  report.mean_accuracy = sum / kFoldCount;
  double sq = 0.0;
  for (double a : report.fold_accuracies) {
    sq += (a - report.mean_accuracy) * (a - report.mean_accuracy);
  }
  report.std_accuracy = std::sqrt(sq / kFoldCount);

  report.best_fold = 0;
  for (int fold = 1; fold < kFoldCount; ++fold) {
    if (outcomes[static_cast<std::size_t>(fold)].accuracy >
        outcomes[static_cast<std::size_t>(report.best_fold)].accuracy) {
      report.best_fold = fold;
    }
  }
  artifacts.best_params =
      std::move(outcomes[static_cast<std::size_t>(report.best_fold)].params);

  std::vector<const GridTensor*> test_grids;
  std::vector<int> test_labels;
  for (int idx : split.test) {
    test_grids.push_back(&grids[static_cast<std::size_t>(idx)]);
    test_labels.push_back(labels[static_cast<std::size_t>(idx)]);
  }
  report.test_accuracy =
      evaluate(artifacts.best_params, test_grids, test_labels).accuracy;
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return artifacts;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline std::string render_report_json(const CvReport& report) {
  std::string out = "{\n";
  out += "  \"best_fold\": " + std::to_string(report.best_fold) + ",\n";
  out += "  \"config\": " + json_string_map(report.config) + ",\n";
  out += "  \"dataset\": {\"classes\": " +
         std::to_string(report.dataset_classes) +
         ", \"graphs\": " + std::to_string(report.dataset_graphs) +
         ", \"name\": \"" + json_escape(report.dataset_name) + "\"},\n";
  out += "  \"fold_accuracies\": " +
         json_number_array(report.fold_accuracies) + ",\n";
  out += "  \"mean_accuracy\": " + format_fixed6(report.mean_accuracy) +
         ",\n";
  out += "  \"seed\": " + std::to_string(report.seed) + ",\n";
  out += "  \"std_accuracy\": " + format_fixed6(report.std_accuracy) + ",\n";
  out += "  \"test_accuracy\": " + format_fixed6(report.test_accuracy) +
         ",\n";
  out += "  \"timing\": {\"fold_seconds\": " +
         json_number_array(report.fold_seconds) +
         ", \"total_seconds\": " + format_fixed6(report.total_seconds) +
         "}\n";
  out += "}\n";
  return out;
}

inline void write_report_json(const std::filesystem::path& path,
                              const CvReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << render_report_json(report);
}

inline void write_folds_csv(const std::filesystem::path& path,
                            const CvReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "fold,accuracy\n";
  for (std::size_t fold = 0; fold < report.fold_accuracies.size(); ++fold) {
    out << fold << "," << format_fixed6(report.fold_accuracies[fold])
        << "\n";
  }
}

inline void write_config_file(const std::filesystem::path& path,
                              const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [key, value] : config_echo(cfg)) {
    out << key << " = " << value << "\n";
  }
}

inline std::string render_preprocess_json(const PreprocessStats& stats,
                                          const NormalizationParams& params) {
  std::string out = "{\n";
  out += "  \"pad_subgraphs\": " + std::to_string(stats.pad_subgraphs) +
         ",\n";
  out += "  \"percentile95\": [" + std::to_string(stats.percentile95[0]) +
         ", " + std::to_string(stats.percentile95[1]) + ", " +
         std::to_string(stats.percentile95[2]) + "],\n";
  out += "  \"subgraphs\": " + std::to_string(stats.subgraphs) + ",\n";
  out += "  \"truncated_rows\": [" +
         std::to_string(stats.truncated_rows[0]) + ", " +
         std::to_string(stats.truncated_rows[1]) + ", " +
         std::to_string(stats.truncated_rows[2]) + "],\n";
  out += "  \"w\": [" + std::to_string(params.w1) + ", " +
         std::to_string(params.w2) + ", " + std::to_string(params.w3) +
         "]\n";
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end drivers
// ---------------------------------------------------------------------------

// Locates the dataset directory (data_dir/NAME or flat data_dir), loads it,
// resolves the config's dataset-dependent defaults and attaches features.
inline FeaturizedDataset load_and_featurize(RunConfig& cfg,
                                            const WarnFn& warn =
                                                warn_to_stderr) {
  namespace fs = std::filesystem;
  if (cfg.dataset.empty()) throw ConfigError("no dataset name configured");
  if (cfg.data_dir.empty()) throw ConfigError("no data directory configured");
  fs::path dir = fs::path(cfg.data_dir) / cfg.dataset;
  if (!fs::exists(dir / (cfg.dataset + "_A.txt"))) {
    const fs::path flat(cfg.data_dir);
    if (fs::exists(flat / (cfg.dataset + "_A.txt"))) {
      dir = flat;
    } else {
      throw DataError("dataset '" + cfg.dataset + "' not found under " +
                      cfg.data_dir + " (expected " +
                      (dir / (cfg.dataset + "_A.txt")).string() + ")");
    }
  }
  TuLoadOptions options;
  options.warn = warn;
  GraphDataset ds = load_tu_dataset(dir, cfg.dataset, options);
  double nodes = 0.0;
  for (const Graph& g : ds.graphs) nodes += g.node_count();
  resolve_dataset_defaults(cfg, nodes / static_cast<double>(ds.graphs.size()),
                           ds.has_node_labels());
  cfg.validate();
  const FeatureScheme scheme = cfg.feature_scheme == "onehot"
                                   ? FeatureScheme::kOneHotLabel
                                   : FeatureScheme::kNormalizedDegree;
  return assign_node_features(std::move(ds), scheme);
}

// Grids for a whole run: from the cache file when present, computed (and
// cached when a path is given) otherwise. Updates cfg.w1..w3 with the
// resolved block rows when preprocessing runs.
inline std::vector<GridTensor> grids_for_run(
    RunConfig& cfg, const FeaturizedDataset& data,
    const std::string& cache_path, NormalizationParams& norm_out,
    PreprocessStats* stats_out = nullptr) {
  namespace fs = std::filesystem;
  if (!cache_path.empty() && fs::exists(cache_path)) {
    auto cached = read_grid_cache(cache_path);
    if (cached.size() != data.base.graphs.size()) {
      throw DataError(cache_path + ": holds " +
                      std::to_string(cached.size()) + " grids, dataset has " +
                      std::to_string(data.base.graphs.size()));
    }
    std::vector<GridTensor> grids;
    grids.reserve(cached.size());
    for (std::size_t i = 0; i < cached.size(); ++i) {
      if (cached[i].label !=
          static_cast<std::uint32_t>(data.base.labels[i])) {
        throw DataError(cache_path + ": label mismatch at graph " +
                        std::to_string(i));
      }
      const int expected_rows =
          cfg.w1 != 0 ? cfg.w1 + cfg.w2 + cfg.w3
                      : (i > 0 ? grids.front().rows : cached[i].grid.rows);
      if (cached[i].grid.channels != data.feature_dim ||
          cached[i].grid.cols != 3 * cfg.n_central ||
          cached[i].grid.rows % 3 != 0 ||
          cached[i].grid.rows != expected_rows) {
        throw DataError(cache_path + ": grid " + std::to_string(i) +
                        " does not match the configured geometry");
      }
      grids.push_back(std::move(cached[i].grid));
    }
    norm_out = NormalizationParams{cfg.n_central, cfg.k_max, cfg.w1, cfg.w2,
                                   cfg.w3};
    if (norm_out.w1 == 0) {
      // block boundaries are not recoverable from the cache; only the
      // total row count matters downstream
      norm_out.w1 = grids.front().rows - 2;
      norm_out.w2 = 1;
      norm_out.w3 = 1;
    }
    return grids;
  }
  PreprocessResult pre = preprocess_dataset(data, cfg);
  cfg.w1 = pre.params.w1;
  cfg.w2 = pre.params.w2;
  cfg.w3 = pre.params.w3;
  norm_out = pre.params;
  if (stats_out) *stats_out = pre.stats;
  if (!cache_path.empty()) {
    std::vector<CachedGrid> cached;
    cached.reserve(pre.grids.size());
    for (std::size_t i = 0; i < pre.grids.size(); ++i) {
      cached.push_back(CachedGrid{
          static_cast<std::uint32_t>(data.base.labels[i]),
          pre.grids[i]});
    }
    write_grid_cache(cache_path, cached);
  }
  return std::move(pre.grids);
}

// The full protocol from a config: load, featurize, preprocess (or reuse a
// cache), split, cross-validate.
inline CvArtifacts run_cv(RunConfig cfg, const std::string& cache_path = "",
                          const WarnFn& warn = warn_to_stderr) {
  FeaturizedDataset data = load_and_featurize(cfg, warn);
  NormalizationParams norm;
  std::vector<GridTensor> grids = grids_for_run(cfg, data, cache_path, norm);
  CvArtifacts artifacts =
      run_cv_on_grids(cfg, grids, data.base.labels, data.base.class_count,
                      norm, data.feature_dim, warn);
  artifacts.report.dataset_name = data.base.name;
  artifacts.report.dataset_graphs =
      static_cast<int>(data.base.graphs.size());
  artifacts.report.dataset_classes = data.base.class_count;
  return artifacts;
}

}  // namespace magcnn
