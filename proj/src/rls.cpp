#include "orbitsig/rls.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "orbitsig/config_file.hpp"
#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/rng.hpp"

namespace orbitsig {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> as_eigen(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Eigen::MatrixXd targets(const LabeledDataset& data) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(data.labels.size()),
                                                static_cast<Eigen::Index>(data.n_classes()), -1.0);
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(data.labels[i])) = 1.0;
  }
  return y;
}

}  // namespace

void LabeledDataset::validate() const {
  if (labels.size() != features.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "labels and feature rows differ in count");
  }
  if (class_names.size() < 2) throw Error(ErrorCode::kBadParameter, "need at least 2 classes");
  if (features.rows() < class_names.size()) {
    throw Error(ErrorCode::kTooFewSamples, "fewer samples than classes");
  }
  for (auto l : labels) {
    if (l >= class_names.size()) throw Error(ErrorCode::kBadParameter, "class id out of range");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kBadParameter, "non-finite feature value");
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.class_names = class_names;
  out.features = Matrix(0, features.cols());
  for (auto r : rows) {
    out.features.append_row(features.row(r));
    out.labels.push_back(labels[r]);
  }
  return out;
}

LabeledDataset make_dataset(Matrix features, const std::vector<std::string>& labels,
                            const std::vector<std::string>& class_names) {
  LabeledDataset data;
  data.features = std::move(features);
  if (class_names.empty()) {
    std::set<std::string> names(labels.begin(), labels.end());
    data.class_names.assign(names.begin(), names.end());
  } else {
    data.class_names = class_names;
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.class_names.size(); ++i) index[data.class_names[i]] = i;
  for (const auto& l : labels) {
    auto it = index.find(l);
    if (it == index.end()) throw Error(ErrorCode::kBadParameter, "unknown class label '" + l + "'");
    data.labels.push_back(it->second);
  }
  return data;
}

struct RidgeSystem::Impl {
  const LabeledDataset* data = nullptr;
  bool dual = false;
  Eigen::MatrixXd gram;  // X^T X (primal) or X X^T (dual)
  Eigen::MatrixXd xty;   // X^T Y
  Eigen::MatrixXd y;
  Eigen::MatrixXd xtx;   // for the residual check
  double xty_norm = 0.0;
};

RidgeSystem::RidgeSystem(const LabeledDataset& data) : impl_(std::make_unique<Impl>()) {
  data.validate();
  impl_->data = &data;
  const auto x = as_eigen(data.features);
  impl_->y = targets(data);
  impl_->dual = data.features.rows() < data.features.cols();
  impl_->xtx = x.transpose() * x;
  impl_->gram = impl_->dual ? Eigen::MatrixXd(x * x.transpose()) : impl_->xtx;
  impl_->xty = x.transpose() * impl_->y;
  impl_->xty_norm = impl_->xty.cwiseAbs().maxCoeff();
}

RidgeSystem::~RidgeSystem() = default;
RidgeSystem::RidgeSystem(RidgeSystem&&) noexcept = default;
RidgeSystem& RidgeSystem::operator=(RidgeSystem&&) noexcept = default;

RlsModel RidgeSystem::solve(double lambda) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kBadParameter, "lambda must be positive and finite");
  }
  const auto& d = *impl_->data;
  const auto n = static_cast<double>(d.features.rows());
  const auto x = as_eigen(d.features);
  Eigen::MatrixXd a = impl_->gram;
  a.diagonal().array() += lambda * n;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "regularized system is not positive definite");
  }
  Eigen::MatrixXd w = impl_->dual ? Eigen::MatrixXd(x.transpose() * llt.solve(impl_->y))
                                  : Eigen::MatrixXd(llt.solve(impl_->xty));

  Eigen::MatrixXd residual = impl_->xtx * w;
  residual += lambda * n * w;
  residual -= impl_->xty;
  const double bound = 1e-8 * std::max(1.0, impl_->xty_norm);
  if (!w.allFinite() || residual.cwiseAbs().maxCoeff() > bound) {
    throw Error(ErrorCode::kNumericalFailure,
                "normal-equation residual " + format_exact(residual.cwiseAbs().maxCoeff()) +
                    " exceeds " + format_exact(bound));
  }

  RlsModel model;
  model.lambda = lambda;
  model.class_names = d.class_names;
  model.weights = Matrix(static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      model.weights(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = w(r, c);
    }
  }
  return model;
}

RlsModel train_rls(const LabeledDataset& data, double lambda) {
  return RidgeSystem(data).solve(lambda);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(std::pow(10.0, -6.0 + i));
  return grid;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::size_t>& labels, std::size_t n_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> train, val;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& rows = by_class[c];
    if (rows.size() < 2) {
      throw Error(ErrorCode::kClassMissingFromSplit,
                  "class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                      " samples; a train/validation split needs at least 2");
    }
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(static_cast<double>(rows.size()) / 6.0)));
    val.insert(val.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

LambdaSelection select_lambda(const LabeledDataset& data, const std::vector<double>& grid,
                              std::uint64_t split_seed) {
  if (grid.empty()) throw Error(ErrorCode::kBadParameter, "lambda grid is empty");
  data.validate();
  const auto [train_rows, val_rows] = stratified_split(data.labels, data.n_classes(), split_seed);
  const LabeledDataset train = data.subset(train_rows);
  const LabeledDataset val = data.subset(val_rows);
  const RidgeSystem system(train);

  LambdaSelection sel;
  bool have = false;
  for (double lambda : grid) {
    const RlsModel m = system.solve(lambda);
    const Metrics metrics = compute_metrics(predict(m, val.features), val.labels, data.n_classes());
    sel.validation_ber.push_back(metrics.balanced_error_rate);
    const bool better = !have || metrics.balanced_error_rate < sel.validation.balanced_error_rate ||
                        (metrics.balanced_error_rate == sel.validation.balanced_error_rate &&
                         lambda > sel.lambda);
    if (better) {
      sel.lambda = lambda;
      sel.validation = metrics;
      have = true;
    }
  }
  sel.model = train_rls(data, sel.lambda);
  return sel;
}

std::vector<std::size_t> predict(const RlsModel& model, const Matrix& features) {
  if (features.cols() != model.weights.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "features have " + std::to_string(features.cols()) +
                                                   " columns, model expects " +
                                                   std::to_string(model.weights.rows()));
  }
  const std::size_t c_count = model.weights.cols();
  std::vector<std::size_t> out(features.rows());
  std::vector<double> scores(c_count);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    std::fill(scores.begin(), scores.end(), 0.0);
    const auto x = features.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto w = model.weights.row(j);
      for (std::size_t c = 0; c < c_count; ++c) scores[c] += x[j] * w[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < c_count; ++c) {
      if (scores[c] > scores[best]) best = c;
    }
    out[i] = best;
  }
  return out;
}

Metrics compute_metrics(const std::vector<std::size_t>& predicted,
                        const std::vector<std::size_t>& truth, std::size_t n_classes) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch, "predicted and truth lengths differ");
  }
  Metrics m;
  m.n = truth.size();
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_classes || predicted[i] >= n_classes) {
      throw Error(ErrorCode::kBadParameter, "class id out of range");
    }
    ++m.confusion[truth[i]][predicted[i]];
    if (predicted[i] != truth[i]) ++wrong;
  }
  m.error_rate = truth.empty() ? 0.0 : 100.0 * static_cast<double>(wrong) / static_cast<double>(truth.size());
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t total = 0;
    for (auto v : m.confusion[c]) total += v;
    if (total == 0) continue;
    ++present;
    sum += 100.0 * static_cast<double>(total - m.confusion[c][c]) / static_cast<double>(total);
  }
  m.balanced_error_rate = present == 0 ? 0.0 : sum / static_cast<double>(present);
  return m;
}

void save_model(const RlsModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << "RLSMODEL v1 p=" << model.weights.rows() << " C=" << model.weights.cols()
      << " lambda=" << format_exact(model.lambda) << '\n';
  for (std::size_t c = 0; c < model.class_names.size(); ++c) {
    out << (c ? " " : "") << model.class_names[c];
  }
  out << '\n';
  for (std::size_t r = 0; r < model.weights.rows(); ++r) {
    const auto row = model.weights.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_exact(row[c]);
    out << '\n';
  }
  if (!model.standardizer_id.empty()) out << "# standardizer=" << model.standardizer_id << '\n';
}

RlsModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open model " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, version, p_tok, c_tok, l_tok;
  header >> magic >> version >> p_tok >> c_tok >> l_tok;
  if (magic != "RLSMODEL" || version != "v1" || p_tok.rfind("p=", 0) != 0 ||
      c_tok.rfind("C=", 0) != 0 || l_tok.rfind("lambda=", 0) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": not an RLSMODEL v1 file");
  }
  RlsModel model;
  std::size_t p = 0, c_count = 0;
  try {
    p = std::stoull(p_tok.substr(2));
    c_count = std::stoull(c_tok.substr(2));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormatError, path.string() + ": bad model header");
  }
  model.lambda = parse_number(l_tok.substr(7));
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormatError, path.string() + ": truncated");
  std::istringstream names(line);
  std::string name;
  while (names >> name) model.class_names.push_back(name);
  if (model.class_names.size() != c_count) {
    throw Error(ErrorCode::kFormatError, path.string() + ": class name count mismatch");
  }
  model.weights = Matrix(p, c_count);
  for (std::size_t r = 0; r < p; ++r) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kFormatError, path.string() + ": truncated");
    const auto cells = split_list(line);
    if (cells.size() != c_count) throw Error(ErrorCode::kFormatError, path.string() + ": bad weight row");
    for (std::size_t c = 0; c < c_count; ++c) model.weights(r, c) = parse_number(cells[c]);
  }
  while (std::getline(in, line)) {
    const std::string prefix = "# standardizer=";
    if (line.rfind(prefix, 0) == 0) model.standardizer_id = line.substr(prefix.size());
  }
  return model;
}

void write_metrics_csv(const std::filesystem::path& path, const Metrics& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << "metric,value\n";
  out << "error_rate," << format_exact(m.error_rate) << '\n';
  out << "balanced_error_rate," << format_exact(m.balanced_error_rate) << '\n';
  out << "n," << m.n << '\n';
}

void write_confusion_csv(const std::filesystem::path& path, const Metrics& m,
                         const std::vector<std::string>& class_names) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << "truth";
  for (const auto& n : class_names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.confusion.size(); ++r) {
    out << class_names[r];
    for (auto v : m.confusion[r]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace orbitsig
