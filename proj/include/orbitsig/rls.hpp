#pragma once

// Linear one-vs-all regularized least squares.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "orbitsig/matrix.hpp"

namespace orbitsig {

struct LabeledDataset {
  Matrix features;                  // n x p
  std::vector<std::size_t> labels;  // 0-based class index per row
  std::vector<std::string> class_names;

  std::size_t n_classes() const { return class_names.size(); }
  void validate() const;
  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

// Maps string labels to class ids in order of sorted unique names.
LabeledDataset make_dataset(Matrix features, const std::vector<std::string>& labels,
                            const std::vector<std::string>& class_names = {});

struct RlsModel {
  Matrix weights;  // p x C
  double lambda = 0.0;
  std::string standardizer_id;
  std::vector<std::string> class_names;
};

struct Metrics {
  double error_rate = 0.0;           // percent
  double balanced_error_rate = 0.0;  // percent
  std::vector<std::vector<std::size_t>> confusion;  // truth x predicted
  std::size_t n = 0;
};

// W = (X^T X + lambda n I)^{-1} X^T Y with +/-1 one-vs-all targets.
RlsModel train_rls(const LabeledDataset& data, double lambda);

// Caches the Gram matrix of one training set so several lambdas can be
// solved without recomputing it. Uses the n x n dual system when n < p.
class RidgeSystem {
 public:
  explicit RidgeSystem(const LabeledDataset& data);
  ~RidgeSystem();
  RidgeSystem(RidgeSystem&&) noexcept;
  RidgeSystem& operator=(RidgeSystem&&) noexcept;

  RlsModel solve(double lambda) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> default_lambda_grid();

struct LambdaSelection {
  double lambda = 0.0;
  Metrics validation;
  RlsModel model;  // retrained on the full data with the chosen lambda
  std::vector<double> validation_ber;  // per grid point
};

// Seeded class-stratified 5/6 - 1/6 split; returns (train rows, validation rows).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::size_t>& labels, std::size_t n_classes, std::uint64_t seed);

// Minimizes validation bER over the grid; ties go to the larger lambda.
LambdaSelection select_lambda(const LabeledDataset& data, const std::vector<double>& grid,
                              std::uint64_t split_seed);

// argmax_c x^T w_c, ties to the lowest class id.
std::vector<std::size_t> predict(const RlsModel& model, const Matrix& features);

Metrics compute_metrics(const std::vector<std::size_t>& predicted,
                        const std::vector<std::size_t>& truth, std::size_t n_classes);

void save_model(const RlsModel& model, const std::filesystem::path& path);
RlsModel load_model(const std::filesystem::path& path);

void write_metrics_csv(const std::filesystem::path& path, const Metrics& m);
void write_confusion_csv(const std::filesystem::path& path, const Metrics& m,
                         const std::vector<std::string>& class_names);

}  // namespace orbitsig
