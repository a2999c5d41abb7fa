// orbitsig: command-line driver for the invariant-representation pipeline.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace orbitsig;

namespace {

struct Common {
  std::string config;
  std::optional<long long> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed (corpus generation and sweep draws)");
  app->add_option("--jobs", c.jobs, "worker threads (default: ORBITSIG_JOBS or all cores)");
}

// Loads the configuration file (if any) and applies command-line overrides.
ExperimentConfig load_config(const Common& c, const std::map<std::string, std::string>& overrides) {
  KeyValueConfig kv = c.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config);
  for (const auto& [k, v] : overrides) kv.set(k, v);
  if (c.seed) kv.set("seed", std::to_string(*c.seed));
  ExperimentConfig cfg = ExperimentConfig::from_config(kv);
  cfg.jobs = resolve_jobs(c.jobs);
#ifdef _OPENMP
  if (cfg.jobs > 0) omp_set_num_threads(static_cast<int>(cfg.jobs));
#endif
  return cfg;
}

std::string split_file(Split s) { return to_string(s) + ".csv"; }

std::vector<SegmentVector> table_rows(const fs::path& path, FeatureKind& kind) {
  SegmentTable t = read_segment_csv(path);
  kind = t.kind;
  return std::move(t.rows);
}

Matrix table_matrix(const FeatureTable& t) { return t.features; }

std::vector<std::string> table_labels(const FeatureTable& t) {
  std::vector<std::string> out;
  for (const auto& s : t.segments) out.push_back(s.label);
  return out;
}

fs::path sidecar(const fs::path& model) {
  fs::path p = model;
  return p.replace_extension(".std");
}

void print_metrics(const char* name, const Metrics& m) {
  std::printf("%-5s ER %6.2f%%  bER %6.2f%%  (n=%zu)\n", name, m.error_rate, m.balanced_error_rate, m.n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitsig: orbit-signature speech representations"};
  app.require_subcommand(1);

  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic vowel corpus");
  std::string synth_out;
  add_common(synth, common);
  synth->add_option("--out", synth_out, "output corpus directory")->required();

  // features
  auto* features = app.add_subcommand("features", "extract segment vectors per split");
  std::string feat_corpus, feat_out, feat_kind, feat_frames;
  add_common(features, common);
  features->add_option("--corpus", feat_corpus, "corpus directory (default: synthesize from config)");
  features->add_option("--kind", feat_kind, "MFS, MFB, MFC or PLP");
  features->add_option("--frames", feat_frames, "also write per-frame features to this CSV");
  features->add_option("--out", feat_out, "output directory")->required();

  // store
  auto* store_cmd = app.add_subcommand("store", "build an orbit store from a template pool");
  std::string store_pool, store_out, store_partition;
  std::optional<std::size_t> store_k, store_iters;
  std::optional<long long> store_seed;
  add_common(store_cmd, common);
  store_cmd->add_option("--pool", store_pool, "template-pool segment CSV")->required()->check(CLI::ExistingFile);
  store_cmd->add_option("--partition", store_partition, "phn, phn-dr or kmeans");
  store_cmd->add_option("--k", store_k, "number of k-means clusters");
  store_cmd->add_option("--kmeans-seed", store_seed, "k-means seeding");
  store_cmd->add_option("--max-iters", store_iters, "k-means iteration cap");
  store_cmd->add_option("--out", store_out, "output store file")->required();

  // sign
  auto* sign = app.add_subcommand("sign", "compute signatures for segment CSVs");
  std::string sign_store, sign_train, sign_out, sign_pooling;
  std::optional<std::size_t> sign_bins;
  std::vector<std::string> sign_inputs, sign_moments;
  add_common(sign, common);
  sign->add_option("--store", sign_store, "orbit store file")->required()->check(CLI::ExistingFile);
  sign->add_option("--train", sign_train, "training segment CSV (fits the input standardizer)")
      ->required()
      ->check(CLI::ExistingFile);
  sign->add_option("--pooling", sign_pooling, "histogram or moments");
  sign->add_option("--bins", sign_bins, "histogram bins");
  sign->add_option("--moments", sign_moments, "moments to pool (mean, energy, max)")->delimiter(',');
  sign->add_option("--out", sign_out, "output directory")->required();
  sign->add_option("inputs", sign_inputs, "segment CSVs to sign")->required()->check(CLI::ExistingFile);

  // train
  auto* train = app.add_subcommand("train", "train a one-vs-all RLS classifier");
  std::string train_features, train_out;
  std::optional<double> train_lambda;
  add_common(train, common);
  train->add_option("--features", train_features, "training feature CSV (segments or signatures)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--lambda", train_lambda, "fixed regularization (default: select on a validation split)");
  train->add_option("--out", train_out, "output directory (model.txt, model.std)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a trained model");
  std::string eval_model, eval_features, eval_out, eval_std;
  add_common(eval, common);
  eval->add_option("--model", eval_model, "model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--standardizer", eval_std, "standardizer file (default: model path with .std)");
  eval->add_option("--features", eval_features, "test feature CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "output directory (metrics.csv, confusion.csv)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "training-set-size sweep for base vs invariant features");
  std::string sweep_out, sweep_corpus;
  std::optional<std::size_t> sweep_seeds;
  add_common(sweep, common);
  sweep->add_option("--corpus", sweep_corpus, "corpus directory (default: synthesize)");
  sweep->add_option("--seeds", sweep_seeds, "random subsets per fraction");
  sweep->add_option("--out", sweep_out, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "one-shot pipeline: base and invariant metrics");
  std::string run_out, run_corpus;
  add_common(run, common);
  run->add_option("--corpus", run_corpus, "corpus directory (default: synthesize)");
  run->add_option("--out", run_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = load_config(common, {});
      write_corpus(generate_corpus(cfg.corpus), synth_out);
      std::printf("wrote corpus to %s\n", synth_out.c_str());
    } else if (features->parsed()) {
      std::map<std::string, std::string> ov;
      if (!feat_corpus.empty()) ov["corpus"] = feat_corpus;
      if (!feat_kind.empty()) ov["feature_kind"] = feat_kind;
      const auto cfg = load_config(common, ov);
      const Corpus corpus = load_or_generate_corpus(cfg);
      const SegmentSplits s = extract_segments(corpus, cfg.feature_kind, cfg.frontend);
      fs::create_directories(feat_out);
      write_segment_csv(fs::path(feat_out) / split_file(Split::kTrain), s.train, cfg.feature_kind);
      write_segment_csv(fs::path(feat_out) / split_file(Split::kTest), s.test, cfg.feature_kind);
      write_segment_csv(fs::path(feat_out) / split_file(Split::kPool), s.pool, cfg.feature_kind);
      if (!feat_frames.empty()) {
        std::ofstream out(feat_frames);
        if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + feat_frames);
        std::set<std::string> done;
        bool header = true;
        for (const auto& item : corpus.items) {
          if (!done.insert(item.segment.utterance_id).second) continue;
          write_frame_csv(out, item.segment.utterance_id,
                          extract_features(item.signal, cfg.feature_kind, cfg.frontend), header);
          header = false;
        }
      }
      std::printf("train %zu, test %zu, pool %zu segments (%s, dim %zu)\n", s.train.size(), s.test.size(),
                  s.pool.size(), to_string(cfg.feature_kind).c_str(), segment_dim(cfg.feature_kind));
    } else if (store_cmd->parsed()) {
      std::map<std::string, std::string> ov;
      if (!store_partition.empty()) ov["partition"] = store_partition;
      if (store_k) ov["kmeans_k"] = std::to_string(*store_k);
      if (store_seed) ov["kmeans_seed"] = std::to_string(*store_seed);
      if (store_iters) ov["kmeans_max_iters"] = std::to_string(*store_iters);
      ExperimentConfig cfg = load_config(common, ov);
      FeatureKind kind{};
      const auto pool = table_rows(store_pool, kind);
      cfg.feature_kind = kind;
      const OrbitStore store = build_store(pool, cfg);
      save_store(store, store_out);
      std::printf("store %s: K=%zu, %zu templates, dim %zu\n", store.id().c_str(), store.k(),
                  store.pool.vectors.size(), store.pool.dim());
    } else if (sign->parsed()) {
      std::map<std::string, std::string> ov;
      if (!sign_pooling.empty()) ov["pooling"] = sign_pooling;
      if (sign_bins) ov["n_bins"] = std::to_string(*sign_bins);
      if (!sign_moments.empty()) {
        std::string m;
        for (const auto& s : sign_moments) m += (m.empty() ? "" : ",") + s;
        ov["moments"] = m;
      }
      const auto cfg = load_config(common, ov);
      const OrbitStore store = load_store(sign_store);
      const FeatureKind store_kind = store.pool.kind();
      auto check_kind = [&](const std::string& file, FeatureKind k) {
        if (k != store_kind) {
          throw Error(ErrorCode::kDimensionMismatch, "store holds " + to_string(store_kind) +
                                                         " vectors but " + file + " holds " +
                                                         to_string(k) + " vectors");
        }
      };
      FeatureKind kind{};
      const auto train_rows = table_rows(sign_train, kind);
      check_kind(sign_train, kind);
      const Standardizer std0 = fit_standardizer(stack_values(train_rows));
      const PreparedStore prepared(store, std0);
      fs::create_directories(sign_out);
      save_standardizer(std0, fs::path(sign_out) / "signature_input.std");
      for (const auto& input : sign_inputs) {
        const auto rows = table_rows(input, kind);
        check_kind(input, kind);
        const Matrix sig = signature_batch(stack_values(rows), prepared, std0, cfg.pooling);
        const fs::path dst = fs::path(sign_out) / (fs::path(input).stem().string() + ".sig.csv");
        write_signature_csv(dst, segments_of(rows), sig, store.id(), store.k(), cfg.pooling.n_outputs(),
                            cfg.pooling.name());
        std::printf("%s -> %s (%zu x %zu)\n", input.c_str(), dst.c_str(), sig.rows(), sig.cols());
      }
    } else if (train->parsed()) {
      const auto cfg = load_config(common, {});
      const FeatureTable t = read_feature_csv(train_features);
      const Standardizer std1 = fit_standardizer(t.features);
      const LabeledDataset data = make_dataset(std1.apply(t.features), table_labels(t));
      RlsModel model;
      if (train_lambda) {
        model = train_rls(data, *train_lambda);
      } else {
        LambdaSelection sel = select_lambda(data, cfg.lambda_grid, cfg.split_seed);
        model = std::move(sel.model);
        std::printf("selected lambda %g (validation bER %.2f%%)\n", sel.lambda,
                    sel.validation.balanced_error_rate);
      }
      model.standardizer_id = std1.id();
      fs::create_directories(train_out);
      save_model(model, fs::path(train_out) / "model.txt");
      save_standardizer(std1, fs::path(train_out) / "model.std");
      std::printf("model: p=%zu C=%zu lambda=%g\n", model.weights.rows(), model.weights.cols(), model.lambda);
    } else if (eval->parsed()) {
      (void)load_config(common, {});
      const RlsModel model = load_model(eval_model);
      const Standardizer std1 = load_standardizer(eval_std.empty() ? sidecar(eval_model) : fs::path(eval_std));
      if (!model.standardizer_id.empty() && model.standardizer_id != std1.id()) {
        throw Error(ErrorCode::kFormatError, "standardizer " + std1.id() + " does not match model (expects " +
                                                 model.standardizer_id + ")");
      }
      const FeatureTable t = read_feature_csv(eval_features);
      std::map<std::string, std::size_t> index;
      for (std::size_t c = 0; c < model.class_names.size(); ++c) index[model.class_names[c]] = c;
      std::vector<std::size_t> truth;
      for (const auto& l : table_labels(t)) {
        auto it = index.find(l);
        if (it == index.end()) throw Error(ErrorCode::kMissingMetadata, "label '" + l + "' unknown to the model");
        truth.push_back(it->second);
      }
      const Metrics m =
          compute_metrics(predict(model, std1.apply(table_matrix(t))), truth, model.class_names.size());
      print_metrics("eval", m);
      if (!eval_out.empty()) {
        fs::create_directories(eval_out);
        write_metrics_csv(fs::path(eval_out) / "metrics.csv", m);
        write_confusion_csv(fs::path(eval_out) / "confusion.csv", m, model.class_names);
      }
    } else if (sweep->parsed()) {
      std::map<std::string, std::string> ov;
      if (!sweep_corpus.empty()) ov["corpus"] = sweep_corpus;
      if (sweep_seeds) ov["seeds"] = std::to_string(*sweep_seeds);
      ov["out"] = sweep_out;
      const auto cfg = load_config(common, ov);
      const SweepResult r = run_sweep(cfg);
      for (const auto& row : r.rows) {
        std::printf("fraction %-9g n_train %-6zu %-4s ER %6.2f%% (sd %.2f)  bER %6.2f%%\n", row.fraction,
                    row.n_train, row.representation.c_str(), row.mean_er, row.std_er, row.mean_ber);
      }
    } else if (run->parsed()) {
      std::map<std::string, std::string> ov;
      if (!run_corpus.empty()) ov["corpus"] = run_corpus;
      ov["out"] = run_out;
      const auto cfg = load_config(common, ov);
      const PipelineResult r = run_pipeline(cfg);
      std::printf("K=%zu, base dim %zu, signature dim %zu\n", r.k, r.base_dim, r.signature_dim);
      print_metrics("base", r.base.test);
      print_metrics("invr", r.invr.test);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "orbitsig: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "orbitsig: %s\n", e.what());
    return 2;
  }
  return 0;
}
