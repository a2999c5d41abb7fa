#pragma once

// Invariant signatures: normalized dot products of an input against every
// member of every orbit set (filtering), per-set distribution estimates
// (pooling), concatenated over sets.

#include <span>
#include <string>
#include <vector>

#include "orbitsig/matrix.hpp"
#include "orbitsig/orbit_store.hpp"

namespace orbitsig {

class Standardizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  Standardizer() = default;
  Standardizer(std::vector<double> means, std::vector<double> stds);

  static Standardizer identity(std::size_t dim);

  std::size_t dim() const { return means_.size(); }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }

  std::vector<double> apply(std::span<const double> x) const;
  void apply_inplace(std::span<double> x) const;
  Matrix apply(const Matrix& x) const;

  std::string id() const;
  bool operator==(const Standardizer&) const = default;

 private:
  std::vector<double> means_;
  std::vector<double> stds_;
};

// Population mean/std per dimension; std floored at 1e-8.
Standardizer fit_standardizer(const Matrix& train);
Standardizer fit_standardizer(const std::vector<std::vector<double>>& train);

void save_standardizer(const Standardizer& s, const std::filesystem::path& path);
Standardizer load_standardizer(const std::filesystem::path& path);

enum class Moment { kMean, kEnergy, kMax };

struct PoolingSpec {
  enum class Estimator { kHistogram, kMoments };

  Estimator estimator = Estimator::kHistogram;
  std::size_t n_bins = 20;
  std::vector<Moment> moments;

  static PoolingSpec histogram(std::size_t n_bins = 20);
  static PoolingSpec with_moments(std::vector<Moment> moments);

  std::size_t n_outputs() const;
  std::string name() const;
  void validate() const;
};

Moment parse_moment(const std::string& name);
PoolingSpec parse_pooling(const std::string& estimator, std::size_t n_bins,
                          const std::vector<std::string>& moments);

// Mean-centered, unit-norm copy. Throws DegenerateVector if the centered
// norm is below 1e-12.
std::vector<double> center_normalize(std::span<const double> x);

// Cosine of the two mean-centered vectors, clamped to [-1, 1].
double project(std::span<const double> x, std::span<const double> t);

// Histogram masses over N equal bins on [-1, 1] (last bin right-closed), or
// the requested moments in order.
std::vector<double> pool(std::span<const double> projections, const PoolingSpec& spec);

std::size_t signature_dim(std::size_t k, const PoolingSpec& spec);

std::vector<double> signature(std::span<const double> x, const OrbitStore& store,
                              const Standardizer& standardizer, const PoolingSpec& spec);

// Store templates standardized and normalized once, for repeated use.
class PreparedStore {
 public:
  PreparedStore(const OrbitStore& store, const Standardizer& standardizer);

  std::size_t dim() const { return templates_.cols(); }
  std::size_t k() const { return sets_.size(); }
  const Matrix& templates() const { return templates_; }
  const std::vector<std::vector<std::size_t>>& sets() const { return sets_; }

  // Projections of one prepared input onto every template of set k.
  void project_set(std::span<const double> prepared_x, std::size_t k,
                   std::vector<double>& out) const;

  std::vector<double> signature(std::span<const double> x, const Standardizer& standardizer,
                                const PoolingSpec& spec) const;

 private:
  Matrix templates_;
  std::vector<std::vector<std::size_t>> sets_;
};

// Row i equals signature(X[i]); rows run in parallel (OpenMP).
Matrix signature_batch(const Matrix& inputs, const OrbitStore& store,
                       const Standardizer& standardizer, const PoolingSpec& spec);
Matrix signature_batch(const Matrix& inputs, const PreparedStore& prepared,
                       const Standardizer& standardizer, const PoolingSpec& spec);

// Single-threaded reference: one signature() call per row.
Matrix signature_batch_serial(const Matrix& inputs, const OrbitStore& store,
                              const Standardizer& standardizer, const PoolingSpec& spec);

}  // namespace orbitsig
