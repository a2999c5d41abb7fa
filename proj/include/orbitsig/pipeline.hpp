#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbitsig/config_file.hpp"
#include "orbitsig/frontend.hpp"
#include "orbitsig/orbit_store.hpp"
#include "orbitsig/rls.hpp"
#include "orbitsig/segment.hpp"
#include "orbitsig/signature.hpp"
#include "orbitsig/synth.hpp"

namespace orbitsig {

struct ExperimentConfig {
  FeatureKind feature_kind = FeatureKind::kPLP;
  FrontendConfig frontend;
  CorpusConfig corpus;
  std::optional<std::filesystem::path> corpus_dir;  // unset: synthesize
  std::uint64_t seed = 1;

  // Orbit store: "phn", "phn-dr" or "kmeans"; or a prebuilt store file.
  std::string partition = "phn-dr";
  std::size_t kmeans_k = 24;
  std::uint64_t kmeans_seed = 1;
  std::size_t kmeans_max_iters = 100;
  std::optional<std::filesystem::path> store_path;

  PoolingSpec pooling = PoolingSpec::histogram(20);
  std::vector<double> lambda_grid = default_lambda_grid();
  std::uint64_t split_seed = 7;

  std::vector<double> fractions{1.0, 0.25, 0.0625, 0.015625};
  std::size_t seeds = 50;

  std::optional<std::filesystem::path> out_dir;
  std::size_t jobs = 0;  // 0: OpenMP default

  void validate() const;
  static ExperimentConfig from_config(KeyValueConfig& cfg);
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Resolves --jobs with ORBITSIG_JOBS as fallback; 0 means "runtime default".
std::size_t resolve_jobs(std::optional<std::size_t> flag);

struct SegmentSplits {
  std::vector<SegmentVector> train;
  std::vector<SegmentVector> test;
  std::vector<SegmentVector> pool;
};

SegmentSplits extract_segments(const Corpus& corpus, FeatureKind kind, const FrontendConfig& frontend);
Corpus load_or_generate_corpus(const ExperimentConfig& config);

OrbitStore build_store(const std::vector<SegmentVector>& pool, const ExperimentConfig& config);

Matrix stack_values(const std::vector<SegmentVector>& rows);
std::vector<std::string> labels_of(const std::vector<SegmentVector>& rows);
std::vector<PhoneSegment> segments_of(const std::vector<SegmentVector>& rows);

// One trained-and-evaluated representation.
struct Evaluation {
  Metrics test;
  double lambda = 0.0;
  RlsModel model;
  Standardizer standardizer;  // fit on training features, applied before RLS
};

// Standardize with training statistics, select lambda, evaluate on test.
Evaluation train_and_evaluate(const Matrix& train, const std::vector<std::string>& train_labels,
                              const Matrix& test, const std::vector<std::string>& test_labels,
                              const std::vector<double>& grid, std::uint64_t split_seed,
                              const std::vector<std::string>& class_names = {});

struct PipelineResult {
  Evaluation base;
  Evaluation invr;
  std::size_t base_dim = 0;
  std::size_t signature_dim = 0;
  std::size_t k = 0;
  std::string store_id;
};

PipelineResult run_pipeline_on(const SegmentSplits& data, const OrbitStore& store,
                               const ExperimentConfig& config);
PipelineResult run_pipeline(const ExperimentConfig& config);

struct SweepRow {
  double fraction = 0.0;
  std::size_t n_train = 0;
  std::string representation;  // "base" or "invr"
  double mean_er = 0.0;
  double std_er = 0.0;
  double mean_ber = 0.0;
  std::size_t seeds = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// Class-stratified subset of train indices; sorted. FractionTooSmall if a
// class would be left empty.
std::vector<std::size_t> stratified_subset(const std::vector<std::string>& labels, double fraction,
                                           std::uint64_t seed);

SweepResult run_sweep_on(const SegmentSplits& data, const OrbitStore& store,
                         const ExperimentConfig& config);
SweepResult run_sweep(const ExperimentConfig& config);

void write_pipeline_metrics(const std::filesystem::path& path, const PipelineResult& r);
void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const PipelineResult* result, const std::string& command);
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& r);
void write_sweep_svg(const std::filesystem::path& path, const SweepResult& r);

}  // namespace orbitsig
