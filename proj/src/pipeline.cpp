#include "orbitsig/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace orbitsig {

void ExperimentConfig::validate() const {
  frontend.validate();
  if (!corpus_dir) corpus.validate();
  if (partition != "phn" && partition != "phn-dr" && partition != "kmeans") {
    throw Error(ErrorCode::kBadConfig, "partition must be phn, phn-dr or kmeans (got '" + partition + "')");
  }
  if (partition == "kmeans" && kmeans_k == 0) throw Error(ErrorCode::kBadConfig, "kmeans_k must be >= 1");
  pooling.validate();
  if (lambda_grid.empty()) throw Error(ErrorCode::kBadConfig, "lambda_grid is empty");
  for (double l : lambda_grid) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorCode::kBadConfig, "lambda values must be > 0");
  }
  if (fractions.empty()) throw Error(ErrorCode::kBadConfig, "fractions is empty");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorCode::kBadConfig, "fractions must lie in (0, 1]");
  }
  if (seeds < 1) throw Error(ErrorCode::kBadConfig, "seeds must be >= 1");
}

ExperimentConfig ExperimentConfig::from_config(KeyValueConfig& cfg) {
  ExperimentConfig c;
  if (auto v = cfg.get_string("feature_kind")) c.feature_kind = parse_feature_kind(*v);
  c.frontend = FrontendConfig::from_config(cfg);
  const bool corpus_seed_given = cfg.has("corpus_seed");
  if (auto v = cfg.get_string("corpus")) {
    if (*v != "synth") c.corpus_dir = *v;
  }
  c.corpus = CorpusConfig::from_config(cfg);
  if (auto v = cfg.get_int("seed")) {
    c.seed = static_cast<std::uint64_t>(*v);
    if (!corpus_seed_given) c.corpus.seed = c.seed;
  }
  if (auto v = cfg.get_string("partition")) c.partition = *v;
  if (auto v = cfg.get_int("kmeans_k")) c.kmeans_k = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_int("kmeans_seed")) c.kmeans_seed = static_cast<std::uint64_t>(*v);
  if (auto v = cfg.get_int("kmeans_max_iters")) c.kmeans_max_iters = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_string("template_source")) {
    if (*v != "pool") c.store_path = *v;
  }
  {
    std::string estimator = "histogram";
    std::size_t n_bins = 20;
    std::vector<std::string> moments{"mean", "energy", "max"};
    if (auto v = cfg.get_string("pooling")) estimator = *v;
    if (auto v = cfg.get_int("n_bins")) n_bins = static_cast<std::size_t>(*v);
    if (auto v = cfg.get_strings("moments")) moments = *v;
    c.pooling = parse_pooling(estimator, n_bins, moments);
  }
  if (auto v = cfg.get_doubles("lambda_grid")) c.lambda_grid = *v;
  if (auto v = cfg.get_int("split_seed")) c.split_seed = static_cast<std::uint64_t>(*v);
  if (auto v = cfg.get_doubles("fractions")) c.fractions = *v;
  if (auto v = cfg.get_int("seeds")) {
    if (*v < 1) throw Error(ErrorCode::kBadConfig, "seeds must be >= 1");
    c.seeds = static_cast<std::size_t>(*v);
  }
  if (auto v = cfg.get_string("out")) c.out_dir = *v;
  if (auto v = cfg.get_int("jobs")) c.jobs = static_cast<std::size_t>(std::max<long long>(0, *v));
  cfg.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  auto cfg = KeyValueConfig::load(path);
  return from_config(cfg);
}

std::size_t resolve_jobs(std::optional<std::size_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("ORBITSIG_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) {
      throw Error(ErrorCode::kUsage, std::string("ORBITSIG_JOBS must be a non-negative integer, got '") + env + "'");
    }
    return static_cast<std::size_t>(v);
  }
  return 0;
}

namespace {

int thread_count(std::size_t jobs) {
#ifdef _OPENMP
  return jobs == 0 ? omp_get_max_threads() : static_cast<int>(jobs);
#else
  (void)jobs;
  return 1;
#endif
}

}  // namespace

SegmentSplits extract_segments(const Corpus& corpus, FeatureKind kind, const FrontendConfig& frontend) {
  const auto n = static_cast<long long>(corpus.items.size());
  std::vector<SegmentVector> out(corpus.items.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < n; ++i) {
    try {
      const auto& item = corpus.items[i];
      const FrameMatrix frames = extract_features(item.signal, kind, frontend);
      out[i] = aggregate_segment(frames, item.segment, item.signal.samples.size(), item.signal.rate);
    } catch (...) {
#pragma omp critical(orbitsig_extract_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  SegmentSplits s;
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (corpus.items[i].split) {
      case Split::kTrain: s.train.push_back(std::move(out[i])); break;
      case Split::kTest: s.test.push_back(std::move(out[i])); break;
      case Split::kPool: s.pool.push_back(std::move(out[i])); break;
    }
  }
  return s;
}

Corpus load_or_generate_corpus(const ExperimentConfig& config) {
  return config.corpus_dir ? read_corpus(*config.corpus_dir) : generate_corpus(config.corpus);
}

OrbitStore build_store(const std::vector<SegmentVector>& pool, const ExperimentConfig& config) {
  if (config.store_path) {
    OrbitStore store = load_store(*config.store_path);
    if (store.pool.kind() != config.feature_kind) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "store holds " + to_string(store.pool.kind()) + " vectors but the experiment uses " +
                      to_string(config.feature_kind));
    }
    return store;
  }
  TemplatePool tp{pool, "pool"};
  if (config.partition == "phn") return partition_by_category(std::move(tp), {"label"});
  if (config.partition == "phn-dr") return partition_by_category(std::move(tp), {"label", "dialect"});
  // k-means clusters a view z-scored by the pool's own statistics; the store keeps raw vectors.
  std::vector<std::vector<double>> raw;
  raw.reserve(pool.size());
  for (const auto& v : pool) raw.push_back(v.values);
  const Standardizer pool_std = fit_standardizer(raw);
  std::vector<std::vector<double>> view;
  view.reserve(raw.size());
  for (const auto& r : raw) view.push_back(pool_std.apply(r));
  return kmeans_cosine(std::move(tp), config.kmeans_k, config.kmeans_seed, config.kmeans_max_iters, &view);
}

Matrix stack_values(const std::vector<SegmentVector>& rows) {
  Matrix m(0, rows.empty() ? 0 : rows.front().values.size());
  for (const auto& r : rows) m.append_row(r.values);
  return m;
}

std::vector<std::string> labels_of(const std::vector<SegmentVector>& rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.segment.label);
  return out;
}

std::vector<PhoneSegment> segments_of(const std::vector<SegmentVector>& rows) {
  std::vector<PhoneSegment> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.segment);
  return out;
}

Evaluation train_and_evaluate(const Matrix& train, const std::vector<std::string>& train_labels,
                              const Matrix& test, const std::vector<std::string>& test_labels,
                              const std::vector<double>& grid, std::uint64_t split_seed,
                              const std::vector<std::string>& class_names) {
  Evaluation ev;
  ev.standardizer = fit_standardizer(train);
  LabeledDataset data = make_dataset(ev.standardizer.apply(train), train_labels, class_names);
  LambdaSelection sel = select_lambda(data, grid, split_seed);
  ev.lambda = sel.lambda;
  ev.model = std::move(sel.model);
  ev.model.standardizer_id = ev.standardizer.id();

  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < data.class_names.size(); ++c) index[data.class_names[c]] = c;
  std::vector<std::size_t> truth;
  truth.reserve(test_labels.size());
  for (const auto& l : test_labels) {
    auto it = index.find(l);
    if (it == index.end()) {
      throw Error(ErrorCode::kMissingMetadata, "test label '" + l + "' does not occur in training data");
    }
    truth.push_back(it->second);
  }
  ev.test = compute_metrics(predict(ev.model, ev.standardizer.apply(test)), truth, data.n_classes());
  return ev;
}

PipelineResult run_pipeline_on(const SegmentSplits& data, const OrbitStore& store,
                               const ExperimentConfig& config) {
  if (data.train.empty() || data.test.empty()) {
    throw Error(ErrorCode::kTooFewSamples, "train and test splits must be non-empty");
  }
  const Matrix train = stack_values(data.train);
  const Matrix test = stack_values(data.test);
  const auto train_labels = labels_of(data.train);
  const auto test_labels = labels_of(data.test);

  PipelineResult r;
  r.base_dim = train.cols();
  r.k = store.k();
  r.store_id = store.id();
  r.signature_dim = signature_dim(store.k(), config.pooling);
  r.base = train_and_evaluate(train, train_labels, test, test_labels, config.lambda_grid, config.split_seed);

  const PreparedStore prepared(store, r.base.standardizer);
  const Matrix sig_train = signature_batch(train, prepared, r.base.standardizer, config.pooling);
  const Matrix sig_test = signature_batch(test, prepared, r.base.standardizer, config.pooling);
  r.invr = train_and_evaluate(sig_train, train_labels, sig_test, test_labels, config.lambda_grid,
                              config.split_seed, r.base.model.class_names);
  return r;
}

PipelineResult run_pipeline(const ExperimentConfig& config) {
  config.validate();
  const Corpus corpus = load_or_generate_corpus(config);
  const SegmentSplits data = extract_segments(corpus, config.feature_kind, config.frontend);
  const OrbitStore store = build_store(data.pool, config);
  PipelineResult r = run_pipeline_on(data, store, config);
  if (config.out_dir) {
    std::filesystem::create_directories(*config.out_dir);
    write_pipeline_metrics(*config.out_dir / "metrics.csv", r);
    write_manifest(*config.out_dir / "manifest.json", config, &r, "run");
  }
  return r;
}

std::vector<std::size_t> stratified_subset(const std::vector<std::string>& labels, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kBadParameter, "fraction must lie in (0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (auto& [label, rows] : by_class) {
    const auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(rows.size())));
    if (count == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "fraction %g leaves class '%s' (%zu samples) empty", fraction,
                    label.c_str(), rows.size());
      throw Error(ErrorCode::kFractionTooSmall, buf);
    }
    if (count < rows.size()) {
      for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
    }
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(count));
  }
  std::sort(out.begin(), out.end());
  return out;
}

SweepResult run_sweep_on(const SegmentSplits& data, const OrbitStore& store,
                         const ExperimentConfig& config) {
  config.validate();
  const Matrix train = stack_values(data.train);
  const Matrix test = stack_values(data.test);
  const auto train_labels = labels_of(data.train);
  const auto test_labels = labels_of(data.test);
  std::set<std::string> names(train_labels.begin(), train_labels.end());
  const std::vector<std::string> class_names(names.begin(), names.end());

  struct Job {
    std::size_t fraction;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t f = 0; f < config.fractions.size(); ++f) {
    for (std::size_t s = 0; s < config.seeds; ++s) {
      jobs.push_back({f, s});
      // Validate every subset up front so errors surface before any training.
      subsets.push_back(stratified_subset(train_labels, config.fractions[f],
                                          mix_seed(config.seed, mix_seed(f, s))));
    }
  }

  std::vector<Metrics> base(jobs.size()), invr(jobs.size());
  std::exception_ptr failure;
  const auto n_jobs = static_cast<long long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(config.jobs))
  for (long long j = 0; j < n_jobs; ++j) {
    try {
      const auto& rows = subsets[j];
      Matrix sub(0, train.cols());
      std::vector<std::string> sub_labels;
      for (std::size_t r : rows) {
        sub.append_row(train.row(r));
        sub_labels.push_back(train_labels[r]);
      }
      const Evaluation b = train_and_evaluate(sub, sub_labels, test, test_labels, config.lambda_grid,
                                              config.split_seed, class_names);
      const PreparedStore prepared(store, b.standardizer);
      const Matrix sig_train = signature_batch(sub, prepared, b.standardizer, config.pooling);
      const Matrix sig_test = signature_batch(test, prepared, b.standardizer, config.pooling);
      const Evaluation v = train_and_evaluate(sig_train, sub_labels, sig_test, test_labels,
                                              config.lambda_grid, config.split_seed, class_names);
      base[j] = b.test;
      invr[j] = v.test;
    } catch (...) {
#pragma omp critical(orbitsig_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  for (std::size_t f = 0; f < config.fractions.size(); ++f) {
    for (const char* rep : {"base", "invr"}) {
      const auto& src = std::string(rep) == "base" ? base : invr;
      SweepRow row;
      row.fraction = config.fractions[f];
      row.representation = rep;
      row.seeds = config.seeds;
      double sum = 0.0, sum_ber = 0.0;
      for (std::size_t s = 0; s < config.seeds; ++s) {
        const std::size_t j = f * config.seeds + s;
        row.n_train = subsets[j].size();
        sum += src[j].error_rate;
        sum_ber += src[j].balanced_error_rate;
      }
      const double n = static_cast<double>(config.seeds);
      row.mean_er = sum / n;
      row.mean_ber = sum_ber / n;
      double var = 0.0;
      for (std::size_t s = 0; s < config.seeds; ++s) {
        const double d = src[f * config.seeds + s].error_rate - row.mean_er;
        var += d * d;
      }
      row.std_er = std::sqrt(var / n);
      result.rows.push_back(row);
    }
  }
  return result;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const Corpus corpus = load_or_generate_corpus(config);
  const SegmentSplits data = extract_segments(corpus, config.feature_kind, config.frontend);
  const OrbitStore store = build_store(data.pool, config);
  SweepResult r = run_sweep_on(data, store, config);
  if (config.out_dir) {
    std::filesystem::create_directories(*config.out_dir);
    write_sweep_csv(*config.out_dir / "sweep.csv", r);
    write_sweep_svg(*config.out_dir / "sweep.svg", r);
    write_manifest(*config.out_dir / "manifest.json", config, nullptr, "sweep");
  }
  return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_pipeline_metrics(const std::filesystem::path& path, const PipelineResult& r) {
  auto out = open_out(path);
  out << "representation,dim,lambda,error_rate,balanced_error_rate,n\n";
  auto row = [&out](const char* name, std::size_t dim, const Evaluation& e) {
    out << name << ',' << dim << ',' << format_exact(e.lambda) << ',' << format_exact(e.test.error_rate)
        << ',' << format_exact(e.test.balanced_error_rate) << ',' << e.test.n << '\n';
  };
  row("base", r.base_dim, r.base);
  row("invr", r.signature_dim, r.invr);
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& c,
                    const PipelineResult* result, const std::string& command) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["feature_kind"] = to_string(c.feature_kind);
  j["seed"] = c.seed;
  j["frontend"] = {{"window_ms", c.frontend.window_ms},
                   {"hop_ms", c.frontend.hop_ms},
                   {"preemphasis", c.frontend.preemphasis},
                   {"n_mels_spectral", c.frontend.n_mels_spectral},
                   {"n_mels_cepstral", c.frontend.n_mels_cepstral},
                   {"n_cepstra", c.frontend.n_cepstra},
                   {"lpc_order", c.frontend.lpc_order},
                   {"delta_window", c.frontend.delta_window},
                   {"fmin_hz", c.frontend.fmin_hz}};
  if (c.frontend.fmax_hz) j["frontend"]["fmax_hz"] = *c.frontend.fmax_hz;
  if (c.corpus_dir) {
    j["corpus"] = {{"dir", c.corpus_dir->string()}};
  } else {
    const auto& k = c.corpus;
    j["corpus"] = {{"classes", k.classes},
                   {"n_train", k.n_train},
                   {"n_test", k.n_test},
                   {"n_pool", k.n_pool},
                   {"rate", k.rate},
                   {"corpus_seed", k.seed},
                   {"duration_ms", k.duration_ms},
                   {"pad_ms", k.pad_ms},
                   {"f0_hz", k.f0_hz},
                   {"formant_scale", k.formant_scale},
                   {"n_dialects", k.n_dialects},
                   {"time_scale", k.time_scale},
                   {"shift_ms", k.shift_ms},
                   {"fir_taps", k.fir_taps}};
    j["corpus"]["noise_snr_db"] = k.noise_snr_db ? nlohmann::ordered_json(*k.noise_snr_db) : nullptr;
    if (k.vowel_table) j["corpus"]["vowel_table"] = k.vowel_table->string();
  }
  if (c.store_path) {
    j["store"] = {{"path", c.store_path->string()}};
  } else {
    j["store"] = {{"partition", c.partition}};
    if (c.partition == "kmeans") {
      j["store"]["kmeans_k"] = c.kmeans_k;
      j["store"]["kmeans_seed"] = c.kmeans_seed;
      j["store"]["kmeans_max_iters"] = c.kmeans_max_iters;
    }
  }
  j["pooling"] = {{"estimator", c.pooling.name()}, {"n_outputs", c.pooling.n_outputs()}};
  j["lambda_grid"] = c.lambda_grid;
  j["split_seed"] = c.split_seed;
  j["fractions"] = c.fractions;
  j["seeds"] = c.seeds;
  if (result) {
    j["result"] = {{"base_dim", result->base_dim},
                   {"k", result->k},
                   {"signature_dim", result->signature_dim},
                   {"store_id", result->store_id},
                   {"base_lambda", result->base.lambda},
                   {"invr_lambda", result->invr.lambda}};
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& r) {
  auto out = open_out(path);
  out << "fraction,n_train,representation,mean_er,std_er,mean_ber,seeds\n";
  for (const auto& row : r.rows) {
    out << format_exact(row.fraction) << ',' << row.n_train << ',' << row.representation << ','
        << format_exact(row.mean_er) << ',' << format_exact(row.std_er) << ','
        << format_exact(row.mean_ber) << ',' << row.seeds << '\n';
  }
}

void write_sweep_svg(const std::filesystem::path& path, const SweepResult& r) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 30, B = 60;
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& row : r.rows) {
    const double x = std::log10(static_cast<double>(std::max<std::size_t>(row.n_train, 1)));
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymax = std::max(ymax, row.mean_er + row.std_er);
  }
  if (r.rows.empty()) xmin = 0, xmax = 1;
  if (xmax - xmin < 1e-9) xmin -= 0.5, xmax += 0.5;
  ymax = std::max(10.0, std::ceil(ymax / 10.0) * 10.0);
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };

  auto out = open_out(path);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                W, H);
  out << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n"
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                L, H - B, W - R, H - B, L, T, L, H - B);
  out << buf;
  for (int i = 0; i <= 5; ++i) {
    const double y = ymax * i / 5.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%g</text>\n"
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#ddd\"/>\n",
                  L - 6, py(y) + 4, y, L, py(y), W - R, py(y));
    out << buf;
  }
  std::set<std::size_t> ticks;
  for (const auto& row : r.rows) ticks.insert(row.n_train);
  for (std::size_t n : ticks) {
    const double x = px(std::log10(static_cast<double>(std::max<std::size_t>(n, 1))));
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%zu</text>\n", x,
                  H - B + 18, n);
    out << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">training examples (log scale)</text>\n"
                "<text x=\"16\" y=\"%g\" transform=\"rotate(-90 16 %g)\" text-anchor=\"middle\">"
                "error rate (%%)</text>\n",
                (L + W - R) / 2, H - 16, (T + H - B) / 2, (T + H - B) / 2);
  out << buf;

  const std::pair<const char*, const char*> series[] = {{"base", "#1f77b4"}, {"invr", "#d62728"}};
  int legend = 0;
  for (const auto& [name, color] : series) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : r.rows) {
      if (row.representation == name) {
        pts.emplace_back(px(std::log10(static_cast<double>(std::max<std::size_t>(row.n_train, 1)))),
                         py(row.mean_er));
      }
    }
    if (pts.empty()) continue;
    std::sort(pts.begin(), pts.end());
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
      out << buf;
    }
    out << "\"/>\n";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", x, y, color);
      out << buf;
    }
    const double ly = T + 14 + 16 * legend++;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">%s</text>\n",
                  W - R - 90, ly - 4, W - R - 65, ly - 4, color, W - R - 58, ly, name);
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace orbitsig
