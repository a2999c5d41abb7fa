#include "orbitsig/signature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"

namespace orbitsig {

namespace {

constexpr double kClampSlack = 1e-12;

double clamp_projection(double v) {
  if (!(std::fabs(v) <= 1.0 + kClampSlack)) {
    throw Error(ErrorCode::kNumericalFailure, "normalized dot product out of range: " + format_exact(v));
  }
  return std::clamp(v, -1.0, 1.0);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

Standardizer::Standardizer(std::vector<double> means, std::vector<double> stds)
    : means_(std::move(means)), stds_(std::move(stds)) {
  if (means_.size() != stds_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "means and stds differ in length");
  }
  for (double s : stds_) {
    if (!(s > 0.0)) throw Error(ErrorCode::kBadParameter, "standard deviations must be > 0");
  }
}

Standardizer Standardizer::identity(std::size_t dim) {
  return Standardizer(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

void Standardizer::apply_inplace(std::span<double> x) const {
  if (x.size() != means_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "standardizer has dim " + std::to_string(dim()) +
                                                   ", input has " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - means_[i]) / stds_[i];
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_inplace(out);
  return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) apply_inplace(out.row(r));
  return out;
}

std::string Standardizer::id() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::vector<double>& v) {
    const auto* p = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(means_);
  feed(stds_);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Standardizer fit_standardizer(const Matrix& train) {
  if (train.rows() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "need at least 2 training vectors, got " +
                                               std::to_string(train.rows()));
  }
  const std::size_t n = train.rows(), d = train.cols();
  std::vector<double> means(d, 0.0), stds(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) means[c] += train(r, c);
  }
  for (double& m : means) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = train(r, c) - means[c];
      stds[c] += diff * diff;
    }
  }
  for (double& s : stds) s = std::max(std::sqrt(s / static_cast<double>(n)), Standardizer::kStdFloor);
  return Standardizer(std::move(means), std::move(stds));
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& train) {
  Matrix m;
  for (const auto& row : train) m.append_row(row);
  return fit_standardizer(m);
}

void save_standardizer(const Standardizer& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << "STANDARDIZER v1 dim=" << s.dim() << " id=" << s.id() << '\n';
  for (std::size_t i = 0; i < s.dim(); ++i) out << (i ? "," : "") << format_exact(s.means()[i]);
  out << '\n';
  for (std::size_t i = 0; i < s.dim(); ++i) out << (i ? "," : "") << format_exact(s.stds()[i]);
  out << '\n';
}

Standardizer load_standardizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open " + path.string());
  std::string header, means_line, stds_line;
  std::getline(in, header);
  if (header.rfind("STANDARDIZER v1 dim=", 0) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": not a standardizer file");
  }
  std::size_t dim = 0;
  std::string id;
  {
    std::istringstream h(header.substr(std::string("STANDARDIZER v1 ").size()));
    std::string tok;
    while (h >> tok) {
      if (tok.rfind("dim=", 0) == 0) dim = std::stoull(tok.substr(4));
      if (tok.rfind("id=", 0) == 0) id = tok.substr(3);
    }
  }
  if (!std::getline(in, means_line) || !std::getline(in, stds_line)) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated standardizer");
  }
  auto parse_row = [&](const std::string& line) {
    std::vector<double> out;
    for (const auto& cell : split_list(line)) out.push_back(parse_number(cell));
    if (out.size() != dim) throw Error(ErrorCode::kFormatError, path.string() + ": wrong row length");
    return out;
  };
  Standardizer s(parse_row(means_line), parse_row(stds_line));
  if (!id.empty() && s.id() != id) {
    throw Error(ErrorCode::kFormatError, path.string() + ": id does not match contents");
  }
  return s;
}

PoolingSpec PoolingSpec::histogram(std::size_t n_bins) {
  PoolingSpec s;
  s.estimator = Estimator::kHistogram;
  s.n_bins = n_bins;
  s.validate();
  return s;
}

PoolingSpec PoolingSpec::with_moments(std::vector<Moment> moments) {
  PoolingSpec s;
  s.estimator = Estimator::kMoments;
  s.moments = std::move(moments);
  s.validate();
  return s;
}

std::size_t PoolingSpec::n_outputs() const {
  return estimator == Estimator::kHistogram ? n_bins : moments.size();
}

std::string PoolingSpec::name() const {
  if (estimator == Estimator::kHistogram) return "histogram";
  std::string out = "moments:";
  for (std::size_t i = 0; i < moments.size(); ++i) {
    out += i ? "+" : "";
    out += moments[i] == Moment::kMean ? "mean" : moments[i] == Moment::kEnergy ? "energy" : "max";
  }
  return out;
}

void PoolingSpec::validate() const {
  if (estimator == Estimator::kHistogram && n_bins < 1) {
    throw Error(ErrorCode::kBadParameter, "histogram needs at least one bin");
  }
  if (estimator == Estimator::kMoments && moments.empty()) {
    throw Error(ErrorCode::kBadParameter, "moment list is empty");
  }
}

Moment parse_moment(const std::string& name) {
  if (name == "mean") return Moment::kMean;
  if (name == "energy") return Moment::kEnergy;
  if (name == "max") return Moment::kMax;
  throw Error(ErrorCode::kBadConfig, "unknown moment '" + name + "'");
}

PoolingSpec parse_pooling(const std::string& estimator, std::size_t n_bins,
                          const std::vector<std::string>& moments) {
  if (estimator == "histogram") return PoolingSpec::histogram(n_bins);
  if (estimator == "moments") {
    std::vector<Moment> m;
    for (const auto& name : moments) m.push_back(parse_moment(name));
    return PoolingSpec::with_moments(std::move(m));
  }
  throw Error(ErrorCode::kBadConfig, "unknown pooling estimator '" + estimator + "'");
}

std::vector<double> center_normalize(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::kDegenerateVector, "empty vector");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> out(x.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - mean;
    norm += out[i] * out[i];
  }
  norm = std::sqrt(norm);
  if (!(norm >= 1e-12)) {
    throw Error(ErrorCode::kDegenerateVector, "vector is constant after centering");
  }
  for (double& v : out) v /= norm;
  return out;
}

double project(std::span<const double> x, std::span<const double> t) {
  if (x.size() != t.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "projection operands differ in dimension");
  }
  const auto xn = center_normalize(x);
  const auto tn = center_normalize(t);
  return clamp_projection(dot(xn, tn));
}

std::vector<double> pool(std::span<const double> projections, const PoolingSpec& spec) {
  spec.validate();
  if (projections.empty()) throw Error(ErrorCode::kEmptyOrbitSet, "no projections to pool");
  const auto n = static_cast<double>(projections.size());
  if (spec.estimator == PoolingSpec::Estimator::kHistogram) {
    const std::size_t bins = spec.n_bins;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : projections) {
      const double c = std::clamp(v, -1.0, 1.0);
      auto b = static_cast<std::size_t>((c + 1.0) / 2.0 * static_cast<double>(bins));
      if (b >= bins) b = bins - 1;
      ++counts[b];
    }
    std::vector<double> out(bins);
    for (std::size_t b = 0; b < bins; ++b) out[b] = static_cast<double>(counts[b]) / n;
    return out;
  }
  std::vector<double> out;
  for (Moment m : spec.moments) {
    double acc = 0.0;
    switch (m) {
      case Moment::kMean:
        for (double v : projections) acc += v;
        out.push_back(acc / n);
        break;
      case Moment::kEnergy:
        for (double v : projections) acc += v * v;
        out.push_back(acc / n);
        break;
      case Moment::kMax:
        out.push_back(*std::max_element(projections.begin(), projections.end()));
        break;
    }
  }
  return out;
}

std::size_t signature_dim(std::size_t k, const PoolingSpec& spec) { return k * spec.n_outputs(); }

PreparedStore::PreparedStore(const OrbitStore& store, const Standardizer& standardizer) {
  store.validate();
  const std::size_t d = store.pool.dim();
  if (standardizer.dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "standardizer dim " + std::to_string(standardizer.dim()) +
                                                   " != store dim " + std::to_string(d));
  }
  templates_ = Matrix(store.pool.vectors.size(), d);
  for (std::size_t i = 0; i < store.pool.vectors.size(); ++i) {
    const auto z = standardizer.apply(store.pool.vectors[i].values);
    const auto tn = center_normalize(z);
    std::copy(tn.begin(), tn.end(), templates_.row(i).begin());
  }
  for (const auto& s : store.sets) sets_.push_back(s.members);
}

void PreparedStore::project_set(std::span<const double> prepared_x, std::size_t k,
                                std::vector<double>& out) const {
  const auto& members = sets_[k];
  out.resize(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    out[j] = clamp_projection(dot(prepared_x, templates_.row(members[j])));
  }
}

std::vector<double> PreparedStore::signature(std::span<const double> x,
                                             const Standardizer& standardizer,
                                             const PoolingSpec& spec) const {
  if (x.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "input dim " + std::to_string(x.size()) +
                                                   " != store dim " + std::to_string(dim()));
  }
  const auto xn = center_normalize(standardizer.apply(x));
  std::vector<double> out;
  out.reserve(signature_dim(k(), spec));
  std::vector<double> proj;
  for (std::size_t s = 0; s < k(); ++s) {
    project_set(xn, s, proj);
    const auto block = pool(proj, spec);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

std::vector<double> signature(std::span<const double> x, const OrbitStore& store,
                              const Standardizer& standardizer, const PoolingSpec& spec) {
  spec.validate();
  if (x.size() != store.pool.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "input dim " + std::to_string(x.size()) +
                                                   " != store dim " + std::to_string(store.pool.dim()));
  }
  const auto xn = center_normalize(standardizer.apply(x));
  std::vector<double> out;
  out.reserve(signature_dim(store.k(), spec));
  for (const auto& set : store.sets) {
    if (set.members.empty()) throw Error(ErrorCode::kEmptyOrbitSet, "orbit set '" + set.key + "' is empty");
    std::vector<double> proj;
    proj.reserve(set.members.size());
    for (auto m : set.members) {
      const auto tn = center_normalize(standardizer.apply(store.pool.vectors[m].values));
      proj.push_back(clamp_projection(dot(xn, tn)));
    }
    const auto block = pool(proj, spec);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

Matrix signature_batch(const Matrix& inputs, const PreparedStore& prepared,
                       const Standardizer& standardizer, const PoolingSpec& spec) {
  spec.validate();
  if (inputs.cols() != prepared.dim() && inputs.rows() > 0) {
    throw Error(ErrorCode::kDimensionMismatch, "input dim " + std::to_string(inputs.cols()) +
                                                   " != store dim " + std::to_string(prepared.dim()));
  }
  Matrix out(inputs.rows(), signature_dim(prepared.k(), spec));
  const auto n = static_cast<long long>(inputs.rows());
  std::exception_ptr failure;
#pragma omp parallel
  {
    std::vector<double> proj;
#pragma omp for schedule(static)
    for (long long i = 0; i < n; ++i) {
      try {
        const auto xn = center_normalize(standardizer.apply(inputs.row(i)));
        auto dst = out.row(i);
        std::size_t offset = 0;
        for (std::size_t s = 0; s < prepared.k(); ++s) {
          prepared.project_set(xn, s, proj);
          const auto block = pool(proj, spec);
          std::copy(block.begin(), block.end(), dst.begin() + offset);
          offset += block.size();
        }
      } catch (...) {
#pragma omp critical(orbitsig_signature_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Matrix signature_batch(const Matrix& inputs, const OrbitStore& store,
                       const Standardizer& standardizer, const PoolingSpec& spec) {
  const PreparedStore prepared(store, standardizer);
  return signature_batch(inputs, prepared, standardizer, spec);
}

Matrix signature_batch_serial(const Matrix& inputs, const OrbitStore& store,
                              const Standardizer& standardizer, const PoolingSpec& spec) {
  Matrix out(0, signature_dim(store.k(), spec));
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    out.append_row(signature(inputs.row(i), store, standardizer, spec));
  }
  return out;
}

}  // namespace orbitsig
