#pragma once

// Template pools partitioned into disjoint orbit sets.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "orbitsig/segment.hpp"

namespace orbitsig {

struct TemplatePool {
  std::vector<SegmentVector> vectors;
  std::string source_tag;

  // Nonempty, shared kind and dimension.
  void validate() const;
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().values.size(); }
  FeatureKind kind() const { return vectors.front().kind; }
};

struct OrbitSet {
  std::string key;
  std::vector<std::size_t> members;  // indices into the pool
  bool operator==(const OrbitSet&) const = default;
};

struct CategoricalScheme {
  std::vector<std::string> fields;  // subset of {label, dialect, speaker}
  bool operator==(const CategoricalScheme&) const = default;
};

struct KMeansScheme {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  bool operator==(const KMeansScheme&) const = default;
};

using PartitionScheme = std::variant<CategoricalScheme, KMeansScheme>;

struct OrbitStore {
  TemplatePool pool;
  std::vector<OrbitSet> sets;
  PartitionScheme scheme;

  std::size_t k() const { return sets.size(); }
  // Sets nonempty, indices valid, pairwise disjoint.
  void validate() const;
  // Content hash (hex) used to tag signatures computed against this store.
  std::string id() const;
};

OrbitStore partition_by_category(TemplatePool pool, const std::vector<std::string>& fields);

struct KMeansResult {
  std::vector<std::size_t> assignment;  // cluster per vector
  std::vector<std::vector<double>> centroids;  // unit norm
  std::vector<double> objective_history;  // sum(1 - cos) after each iteration
  std::size_t iterations = 0;
};

// Spherical k-means on the given rows (each unit-normalized internally).
// k-means++ seeding under cosine distance; empty clusters are reseeded with
// the point farthest from its centroid.
KMeansResult spherical_kmeans(const std::vector<std::vector<double>>& rows, std::size_t k,
                              std::uint64_t seed, std::size_t max_iters);

// Same as spherical_kmeans with a single-threaded assignment step; kept as
// the reference the parallel kernel is checked against.
KMeansResult spherical_kmeans_serial(const std::vector<std::vector<double>>& rows, std::size_t k,
                                     std::uint64_t seed, std::size_t max_iters);

double cosine_objective(const std::vector<std::vector<double>>& rows,
                        const std::vector<std::size_t>& assignment, std::size_t k);

// Clusters `features` (one row per pool vector, e.g. a standardized view of
// the pool); the store keeps the original pool vectors.
OrbitStore kmeans_cosine(TemplatePool pool, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters,
                         const std::vector<std::vector<double>>* features = nullptr);

// ceil((2 / (c * eps^2)) * ln(C / delta))
std::size_t template_budget(std::size_t n_classes, double epsilon, double delta, double c = 1.0);

void save_store(const OrbitStore& store, const std::filesystem::path& path);
OrbitStore load_store(const std::filesystem::path& path);
std::string serialize_store(const OrbitStore& store);
OrbitStore parse_store(const std::string& text);

bool operator==(const SegmentVector& a, const SegmentVector& b);
bool operator==(const OrbitStore& a, const OrbitStore& b);

}  // namespace orbitsig
