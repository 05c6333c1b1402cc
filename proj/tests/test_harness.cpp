#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "magcnn/harness.hpp"
#include "testutil.hpp"

using namespace magcnn;
namespace fs = std::filesystem;

namespace {

std::vector<int> mutag_like_labels() {
  std::vector<int> labels(188, 0);
  for (int i = 0; i < 125; ++i) labels[static_cast<std::size_t>(i)] = 1;
  return labels;
}

// Shared synthetic dataset on disk, loaded through the full pipeline.
const fs::path& synthetic_dir() {
  static testutil::TempDir tmp("harness_syn");
  static bool written = false;
  if (!written) {
    Rng rng(99);
    auto graphs = testutil::synthetic_two_class(rng, 30, 8, 12);
    testutil::write_tu_fixture(tmp.path() / "SYN", "SYN", graphs, true);
    written = true;
  }
  return tmp.path();
}

RunConfig synthetic_config(ModelKind kind, std::uint64_t seed) {
  RunConfig cfg;
  cfg.dataset = "SYN";
  cfg.data_dir = synthetic_dir().string();
  cfg.model = kind;
  cfg.n_central = 6;
  cfg.k_max = 8;
  cfg.k1 = 8;
  cfg.k2 = 4;
  cfg.epochs = 80;
  cfg.learning_rate = 0.003;
  cfg.seed = seed;
  return cfg;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  auto na = a.named_tensors();
  auto nb = b.named_tensors();
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (na[i].name != nb[i].name) return false;
    if (na[i].tensor->dims != nb[i].tensor->dims) return false;
    if (na[i].tensor->values != nb[i].tensor->values) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("stratified split of a 188-graph two-class dataset") {
  auto labels = mutag_like_labels();
  SplitResult split = split_dataset(labels, 2, 42, nullptr);
  CHECK(split.test.size() == 18);  // floor(125/10) + floor(63/10)
  std::set<int> seen(split.test.begin(), split.test.end());
  std::size_t total = split.test.size();
  for (const auto& fold : split.folds) {
    CHECK(fold.size() == 17);
    for (int idx : fold) {
      CHECK(seen.insert(idx).second);  // disjoint
      ++total;
    }
  }
  CHECK(total == labels.size());  // covering

  // per-class fold counts differ by at most one
  for (int cls = 0; cls < 2; ++cls) {
    std::size_t lo = labels.size(), hi = 0;
    for (const auto& fold : split.folds) {
      std::size_t count = 0;
      for (int idx : fold) {
        if (labels[static_cast<std::size_t>(idx)] == cls) ++count;
      }
      lo = std::min(lo, count);
      hi = std::max(hi, count);
    }
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("splits are deterministic in the seed") {
  auto labels = mutag_like_labels();
  SplitResult a = split_dataset(labels, 2, 7, nullptr);
  SplitResult b = split_dataset(labels, 2, 7, nullptr);
  CHECK(a.test == b.test);
  for (int fold = 0; fold < kFoldCount; ++fold) {
    CHECK(a.folds[static_cast<std::size_t>(fold)] ==
          b.folds[static_cast<std::size_t>(fold)]);
  }
  SplitResult c = split_dataset(labels, 2, 8, nullptr);
  CHECK(a.test != c.test);
}

TEST_CASE("singleton classes stay out of the test split") {
  std::vector<int> labels(40, 0);
  labels[5] = 1;  // one lonely instance of class 1
  int warnings = 0;
  SplitResult split = split_dataset(labels, 2, 3,
                                    [&](const std::string&) { ++warnings; });
  CHECK(warnings == 1);
  for (int idx : split.test) CHECK(labels[static_cast<std::size_t>(idx)] == 0);
  std::size_t found = 0;
  for (const auto& fold : split.folds) {
    for (int idx : fold) {
      if (labels[static_cast<std::size_t>(idx)] == 1) ++found;
    }
  }
  CHECK(found == 1);
}

TEST_CASE("split requires at least 20 graphs") {
  std::vector<int> labels(19, 0);
  CHECK_THROWS_AS(split_dataset(labels, 1, 0, nullptr), ConfigError);
}

TEST_CASE("config files parse with comments and fail on unknown keys") {
  testutil::TempDir tmp("cfg");
  {
    std::ofstream out(tmp.path() / "run.cfg");
    out << "# comment line\n"
        << "dataset = MUTAG\n"
        << "model = mgcnn   # trailing comment\n"
        << "epochs = 120\n"
        << "learning_rate = 0.002\n"
        << "\n"
        << "seed = 99\n";
  }
  RunConfig cfg = parse_config_file(tmp.path() / "run.cfg");
  CHECK(cfg.dataset == "MUTAG");
  CHECK(cfg.model == ModelKind::kMgcnn);
  CHECK(cfg.epochs == 120);
  CHECK(cfg.learning_rate == doctest::Approx(0.002));
  CHECK(cfg.seed == 99);

  {
    std::ofstream out(tmp.path() / "bad.cfg");
    out << "no_such_key = 1\n";
  }
  CHECK_THROWS_AS(parse_config_file(tmp.path() / "bad.cfg"), ConfigError);

  {
    std::ofstream out(tmp.path() / "badval.cfg");
    out << "epochs = soon\n";
  }
  CHECK_THROWS_AS(parse_config_file(tmp.path() / "badval.cfg"), ConfigError);
}

TEST_CASE("config validation enforces the documented ranges") {
  RunConfig cfg;
  cfg.epochs = 10;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.epochs = 200;
  cfg.batch_size = 30;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.batch_size = 45;
  cfg.w1 = 5;  // partial w triple
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.w2 = 5;
  cfg.w3 = 4;  // sum not divisible by 3
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.w3 = 5;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("dataset defaults resolve from statistics") {
  RunConfig cfg;
  cfg.dataset = "MUTAG";
  resolve_dataset_defaults(cfg, 17.93, true);
  CHECK(cfg.n_central == 18);
  CHECK(cfg.k_max == 10);
  CHECK(cfg.epochs == 200);
  CHECK(cfg.batch_size == 45);
  CHECK(cfg.feature_scheme == "onehot");

  RunConfig ptc;
  ptc.dataset = "PTC_MR";
  resolve_dataset_defaults(ptc, 14.29, true);
  CHECK(ptc.n_central == 14);
  CHECK(ptc.batch_size == 46);

  RunConfig social;
  social.dataset = "IMDB-BINARY";
  resolve_dataset_defaults(social, 19.77, false);
  CHECK(social.k_max == 20);
  CHECK(social.feature_scheme == "degree");
}

TEST_CASE("grid cache round-trips byte-exactly") {
  testutil::TempDir tmp("cache");
  Rng rng(8);
  std::vector<CachedGrid> grids;
  for (int i = 0; i < 3; ++i) {
    CachedGrid cg;
    cg.label = static_cast<std::uint32_t>(i % 2);
    cg.grid = GridTensor(6, 9, 2);
    for (double& v : cg.grid.values) v = rng.uniform(-5, 5);
    grids.push_back(std::move(cg));
  }
  const fs::path path = tmp.path() / "grids.mgrd";
  write_grid_cache(path, grids);
  auto loaded = read_grid_cache(path);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].label == grids[i].label);
    CHECK(loaded[i].grid.rows == 6);
    CHECK(loaded[i].grid.cols == 9);
    CHECK(loaded[i].grid.channels == 2);
    CHECK(loaded[i].grid.values == grids[i].grid.values);
  }

  // two writes of the same content are byte-identical
  const fs::path again = tmp.path() / "grids2.mgrd";
  write_grid_cache(again, grids);
  CHECK(detail::slurp(path) == detail::slurp(again));

  std::ofstream(tmp.path() / "bad.mgrd", std::ios::binary) << "MGRX????";
  CHECK_THROWS_AS(read_grid_cache(tmp.path() / "bad.mgrd"), DataError);
  std::ofstream(tmp.path() / "trunc.mgrd", std::ios::binary) << "MG";
  CHECK_THROWS_AS(read_grid_cache(tmp.path() / "trunc.mgrd"), DataError);
}

TEST_CASE("checkpoints restore every tensor") {
  testutil::TempDir tmp("ckpt");
  Rng rng(9);
  ModelDims dims;
  dims.subgraphs = 4;
  dims.grid_rows = 9;
  dims.channels = 3;
  dims.conv1_kernels = 4;
  dims.conv2_kernels = 3;
  dims.heads = 2;
  dims.classes = 2;
  ModelParams params = init_params(ModelKind::kMagcnn, dims, rng);
  const fs::path path = tmp.path() / "model.mprm";
  write_checkpoint(path, params);

  Rng other(1234);
  ModelParams restored = init_params(ModelKind::kMagcnn, dims, other);
  CHECK_FALSE(same_params(params, restored));
  load_checkpoint_into(path, restored);
  CHECK(same_params(params, restored));

  // shape mismatch is refused
  ModelDims bigger = dims;
  bigger.conv1_kernels = 5;
  ModelParams wrong = init_params(ModelKind::kMagcnn, bigger, other);
  CHECK_THROWS_AS(load_checkpoint_into(path, wrong), DataError);

  // model-kind mismatch misses tensors
  ModelParams dense = init_params(ModelKind::kMgcnn, dims, other);
  CHECK_THROWS_AS(load_checkpoint_into(path, dense), DataError);
}

TEST_CASE("zero training epochs leave parameters at initialization") {
  Rng rng(10);
  ModelDims dims;
  dims.subgraphs = 4;
  dims.grid_rows = 9;
  dims.channels = 2;
  dims.conv1_kernels = 3;
  dims.conv2_kernels = 2;
  dims.heads = 2;
  dims.classes = 2;
  std::vector<GridTensor> grids;
  std::vector<const GridTensor*> ptrs;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    GridTensor g(9, 12, 2);
    for (double& v : g.values) v = rng.uniform(-1, 1);
    grids.push_back(std::move(g));
    labels.push_back(i % 2);
  }
  for (const auto& g : grids) ptrs.push_back(&g);

  TrainOptions options;
  options.epochs = 0;
  TrainResult result =
      train(ModelKind::kMagcnn, dims, ptrs, labels, options, 77);
  Rng same_seed(77);
  ModelParams expected = init_params(ModelKind::kMagcnn, dims, same_seed);
  CHECK(same_params(result.params, expected));
  CHECK(result.epoch_loss.empty());
}

TEST_CASE("training is deterministic and the loss curve descends") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 5);
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  NormalizationParams norm;
  std::vector<GridTensor> grids = grids_for_run(cfg, data, "", norm);
  const ModelDims dims =
      dims_from_config(cfg, norm, data.feature_dim, data.base.class_count);
  std::vector<const GridTensor*> ptrs;
  for (const auto& g : grids) ptrs.push_back(&g);

  TrainOptions options;
  options.hyper = {cfg.learning_rate, cfg.momentum, cfg.weight_decay};
  options.dropout = cfg.dropout;
  options.epochs = 30;
  options.batch_size = 45;
  TrainResult a = train(cfg.model, dims, ptrs, data.base.labels, options, 5);
  TrainResult b = train(cfg.model, dims, ptrs, data.base.labels, options, 5);
  CHECK(same_params(a.params, b.params));
  CHECK(a.epoch_loss == b.epoch_loss);
  REQUIRE(a.epoch_loss.size() == 30);
  CHECK(a.epoch_loss.back() <= a.epoch_loss.front());

  TrainResult c = train(cfg.model, dims, ptrs, data.base.labels, options, 6);
  CHECK_FALSE(same_params(a.params, c.params));
}

TEST_CASE("evaluation accuracy and confusion bookkeeping") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 15);
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  NormalizationParams norm;
  std::vector<GridTensor> grids = grids_for_run(cfg, data, "", norm);
  const ModelDims dims =
      dims_from_config(cfg, norm, data.feature_dim, data.base.class_count);
  std::vector<const GridTensor*> ptrs;
  for (const auto& g : grids) ptrs.push_back(&g);

  Rng rng(15);
  ModelParams untrained = init_params(cfg.model, dims, rng);
  EvalResult eval = evaluate(untrained, ptrs, data.base.labels);
  // near the class prior before any training
  CHECK(eval.accuracy >= 0.2);
  CHECK(eval.accuracy <= 0.85);

  std::vector<long long> class_counts(2, 0);
  for (int label : data.base.labels) {
    ++class_counts[static_cast<std::size_t>(label)];
  }
  for (int cls = 0; cls < 2; ++cls) {
    long long row_sum = 0;
    for (long long cell : eval.confusion[static_cast<std::size_t>(cls)]) {
      row_sum += cell;
    }
    CHECK(row_sum == class_counts[static_cast<std::size_t>(cls)]);
  }
}

TEST_CASE("cross-validation learns the planted structure") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 3);
  CvArtifacts artifacts = run_cv(cfg, "", nullptr);
  const CvReport& report = artifacts.report;
  REQUIRE(report.fold_accuracies.size() == 10);
  for (double acc : report.fold_accuracies) {
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
  // majority class is 50%; the planted cliques must be found
  CHECK(report.mean_accuracy >= 0.75);

  // mean/std recompute exactly from the folds
  double mean = 0.0;
  for (double acc : report.fold_accuracies) mean += acc;
  mean /= 10.0;
  CHECK(report.mean_accuracy == mean);
  double sq = 0.0;
  for (double acc : report.fold_accuracies) {
    sq += (acc - mean) * (acc - mean);
  }
  CHECK(report.std_accuracy == std::sqrt(sq / 10.0));
}

TEST_CASE("cross-validation reports are deterministic") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 21);
  cfg.epochs = 20;
  CvArtifacts a = run_cv(cfg, "", nullptr);
  CvArtifacts b = run_cv(cfg, "", nullptr);
  // timing differs between runs; compare everything else
  CvReport ra = a.report, rb = b.report;
  ra.fold_seconds.clear();
  rb.fold_seconds.clear();
  ra.total_seconds = rb.total_seconds = 0.0;
  CHECK(render_report_json(ra) == render_report_json(rb));
  CHECK(same_params(a.best_params, b.best_params));
}

TEST_CASE("grid cache reuse reproduces the fresh run") {
  testutil::TempDir tmp("cvcache");
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 33);
  cfg.epochs = 20;
  const std::string cache = (tmp.path() / "syn.mgrd").string();
  CvArtifacts fresh = run_cv(cfg, cache, nullptr);  // writes the cache
  CHECK(fs::exists(cache));
  CvArtifacts cached = run_cv(cfg, cache, nullptr);  // reads it back
  CHECK(fresh.report.fold_accuracies == cached.report.fold_accuracies);
  CHECK(fresh.report.test_accuracy == cached.report.test_accuracy);
  CHECK(same_params(fresh.best_params, cached.best_params));
}

TEST_CASE("preprocessing statistics and the resolved block rows") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 1);
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  PreprocessResult pre = preprocess_dataset(data, cfg);
  CHECK(pre.params.total_rows() % 3 == 0);
  CHECK(pre.params.w1 >= 1);
  CHECK(pre.params.w2 >= 1);
  CHECK(pre.params.w3 >= 1);
  CHECK(pre.stats.subgraphs ==
        static_cast<long long>(data.base.graphs.size()) * cfg.n_central);
  CHECK(pre.grids.size() == data.base.graphs.size());
  for (const GridTensor& g : pre.grids) {
    CHECK(g.rows == pre.params.total_rows());
    CHECK(g.cols == 3 * cfg.n_central);
    CHECK(g.channels == data.feature_dim);
  }

  // explicit block rows are honored and produce truncation counts
  RunConfig pinned = cfg;
  pinned.w1 = 2;
  pinned.w2 = 2;
  pinned.w3 = 2;
  PreprocessResult small = preprocess_dataset(data, pinned);
  CHECK(small.params.w1 == 2);
  CHECK(small.grids.front().rows == 6);
  CHECK(small.stats.truncated_rows[0] + small.stats.truncated_rows[1] +
            small.stats.truncated_rows[2] >
        0);
}

TEST_CASE("worker fan-out does not change preprocessing results") {
  RunConfig cfg = synthetic_config(ModelKind::kMagcnn, 2);
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  PreprocessResult base = preprocess_dataset(data, cfg);
  setenv("MGCNN_THREADS", "4", 1);
  PreprocessResult threaded = preprocess_dataset(data, cfg);
  unsetenv("MGCNN_THREADS");
  REQUIRE(base.grids.size() == threaded.grids.size());
  for (std::size_t i = 0; i < base.grids.size(); ++i) {
    CHECK(base.grids[i].values == threaded.grids[i].values);
  }
}

TEST_CASE("unlabeled datasets fall back to degree features end to end") {
  testutil::TempDir tmp("social");
  Rng rng(12);
  auto graphs = testutil::synthetic_two_class(rng, 15, 8, 12);
  for (auto& g : graphs) g.node_labels.clear();
  testutil::write_tu_fixture(tmp.path() / "SOC", "SOC", graphs, false);

  RunConfig cfg;
  cfg.dataset = "SOC";
  cfg.data_dir = tmp.path().string();
  cfg.model = ModelKind::kMagcnn;
  cfg.n_central = 6;
  cfg.k_max = 8;
  cfg.k1 = 4;
  cfg.k2 = 3;
  cfg.epochs = 20;
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  CHECK(cfg.feature_scheme == "degree");
  CHECK(data.feature_dim == 1);
  CvArtifacts artifacts = run_cv(cfg, "", nullptr);
  CHECK(artifacts.report.fold_accuracies.size() == 10);
}

TEST_CASE("datasets laid out flat under the data dir load too") {
  testutil::TempDir tmp("flat");
  Rng rng(13);
  auto graphs = testutil::synthetic_two_class(rng, 12, 6, 9);
  testutil::write_tu_fixture(tmp.path(), "FLAT", graphs, true);
  RunConfig cfg;
  cfg.dataset = "FLAT";
  cfg.data_dir = tmp.path().string();
  FeaturizedDataset data = load_and_featurize(cfg, nullptr);
  CHECK(data.base.graphs.size() == 24);

  RunConfig missing;
  missing.dataset = "NOPE";
  missing.data_dir = tmp.path().string();
  CHECK_THROWS_AS(load_and_featurize(missing, nullptr), DataError);
}

TEST_CASE("report json renders sorted keys with fixed decimals") {
  CvReport report;
  report.fold_accuracies = {1.0, 0.5};
  report.fold_seconds = {0.25, 0.5};
  report.mean_accuracy = 0.75;
  report.std_accuracy = 0.25;
  report.test_accuracy = 0.875;
  report.best_fold = 0;
  report.seed = 3;
  report.dataset_name = "SYN";
  report.dataset_graphs = 60;
  report.dataset_classes = 2;
  report.config = {{"model", "magcnn"}, {"dataset", "SYN"}};
  const std::string json = render_report_json(report);
  CHECK(json.find("\"mean_accuracy\": 0.750000") != std::string::npos);
  CHECK(json.find("\"fold_accuracies\": [1.000000, 0.500000]") !=
        std::string::npos);
  // sorted top-level keys
  CHECK(json.find("\"best_fold\"") < json.find("\"config\""));
  CHECK(json.find("\"config\"") < json.find("\"dataset\""));
  CHECK(json.find("\"std_accuracy\"") < json.find("\"test_accuracy\""));
  CHECK(json.find("\"test_accuracy\"") < json.find("\"timing\""));
  // the timing section sits on one line, so it can be filtered out
  const auto timing_pos = json.find("  \"timing\": ");
  REQUIRE(timing_pos != std::string::npos);
  const auto line_end = json.find('\n', timing_pos);
  const std::string line = json.substr(timing_pos, line_end - timing_pos);
  CHECK(line.find("total_seconds") != std::string::npos);
}
