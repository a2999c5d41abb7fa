#include "orbitsig/orbit_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/rng.hpp"

namespace orbitsig {

void TemplatePool::validate() const {
  if (vectors.empty()) throw Error(ErrorCode::kBadParameter, "template pool is empty");
  const auto d = vectors.front().values.size();
  const auto kind = vectors.front().kind;
  for (const auto& v : vectors) {
    if (v.values.size() != d || v.kind != kind) {
      throw Error(ErrorCode::kDimensionMismatch, "template pool mixes kinds or dimensions");
    }
  }
}

void OrbitStore::validate() const {
  pool.validate();
  if (sets.empty()) throw Error(ErrorCode::kBadParameter, "store has no orbit sets");
  std::vector<char> seen(pool.vectors.size(), 0);
  for (const auto& s : sets) {
    if (s.members.empty()) throw Error(ErrorCode::kEmptyOrbitSet, "orbit set '" + s.key + "' is empty");
    for (auto idx : s.members) {
      if (idx >= pool.vectors.size()) {
        throw Error(ErrorCode::kFormatError, "orbit set index " + std::to_string(idx) + " out of range");
      }
      if (seen[idx]) {
        throw Error(ErrorCode::kFormatError, "pool vector " + std::to_string(idx) +
                                                 " appears in more than one orbit set");
      }
      seen[idx] = 1;
    }
  }
}

std::string OrbitStore::id() const {
  // FNV-1a over the serialized sets and the raw vector bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : sets) {
    feed(s.key.data(), s.key.size());
    feed(s.members.data(), s.members.size() * sizeof(std::size_t));
  }
  for (const auto& v : pool.vectors) feed(v.values.data(), v.values.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

const std::string& field_value(const PhoneSegment& s, const std::string& field) {
  if (field == "label") return s.label;
  if (field == "dialect") return s.dialect_id;
  if (field == "speaker") return s.speaker_id;
  throw Error(ErrorCode::kBadParameter, "unknown metadata field '" + field + "'");
}

std::vector<double> unit(const std::vector<double>& x) {
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 1e-300)) throw Error(ErrorCode::kDegenerateVector, "zero vector in k-means input");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / norm;
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Best centroid per point and its cosine; ties go to the lowest index.
void assign_points(const std::vector<std::vector<double>>& x,
                   const std::vector<std::vector<double>>& centroids,
                   std::vector<std::size_t>& assignment, std::vector<double>& cosines,
                   bool parallel) {
  const auto n = static_cast<long long>(x.size());
  auto body = [&](long long i) {
    std::size_t best = 0;
    double best_cos = -INFINITY;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double v = dot(x[i], centroids[c]);
      if (v > best_cos) {
        best_cos = v;
        best = c;
      }
    }
    assignment[i] = best;
    cosines[i] = best_cos;
  };
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) body(i);
  } else {
    for (long long i = 0; i < n; ++i) body(i);
  }
}

std::vector<std::vector<double>> update_centroids(const std::vector<std::vector<double>>& x,
                                                  const std::vector<std::size_t>& assignment,
                                                  std::size_t k) {
  const std::size_t d = x.front().size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = sums[assignment[i]];
    for (std::size_t j = 0; j < d; ++j) s[j] += x[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    double norm = 0.0;
    for (double v : sums[c]) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : sums[c]) v /= norm;
    }
  }
  return sums;
}

KMeansResult run_spherical_kmeans(const std::vector<std::vector<double>>& rows, std::size_t k,
                                  std::uint64_t seed, std::size_t max_iters, bool parallel) {
  if (rows.empty()) throw Error(ErrorCode::kBadParameter, "k-means input is empty");
  if (k < 1) throw Error(ErrorCode::kBadParameter, "k must be >= 1");
  if (k > rows.size()) {
    throw Error(ErrorCode::kKTooLarge, "k = " + std::to_string(k) + " exceeds pool size " +
                                           std::to_string(rows.size()));
  }
  if (max_iters < 1) throw Error(ErrorCode::kBadParameter, "max_iters must be >= 1");
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> x;
  x.reserve(n);
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "k-means rows differ in dimension");
    }
    x.push_back(unit(r));
  }

  // k-means++ seeding with D = 1 - cos, sampling proportional to D^2.
  Rng rng(seed);
  std::vector<std::size_t> chosen{rng.index(n)};
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = 1.0 - dot(x[i], x[chosen[0]]);
  while (chosen.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::max(dist[i], 0.0) * std::max(dist[i], 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = std::max(dist[i], 0.0) * std::max(dist[i], 0.0);
        if (w <= 0.0) continue;
        acc += w;
        pick = i;
        if (acc > target) break;
      }
    } else {
      // All remaining points coincide with a centroid; take the first unused one.
      std::vector<char> used(n, 0);
      for (auto c : chosen) used[c] = 1;
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!used[i]) pick = i;
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], 1.0 - dot(x[i], x[pick]));
  }

  KMeansResult res;
  std::vector<std::vector<double>> centroids;
  for (auto c : chosen) centroids.push_back(x[c]);
  std::vector<std::size_t> assignment(n), previous;
  std::vector<double> cosines(n);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    assign_points(x, centroids, assignment, cosines, parallel);

    // Reseed each empty cluster with the point farthest from its centroid,
    // taken from a cluster that can spare it.
    std::vector<std::size_t> counts(k, 0);
    for (auto a : assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignment[i]] < 2) continue;
        if (far == n || cosines[i] < cosines[far]) far = i;
      }
      if (far == n) throw Error(ErrorCode::kNumericalFailure, "cannot reseed empty cluster");
      --counts[assignment[far]];
      assignment[far] = c;
      counts[c] = 1;
      cosines[far] = 1.0;
    }

    centroids = update_centroids(x, assignment, k);
    res.objective_history.push_back(cosine_objective(x, assignment, k));
    res.iterations = iter + 1;
    if (assignment == previous) break;
    previous = assignment;
  }
  res.assignment = std::move(assignment);
  res.centroids = std::move(centroids);
  return res;
}

}  // namespace

double cosine_objective(const std::vector<std::vector<double>>& rows,
                        const std::vector<std::size_t>& assignment, std::size_t k) {
  std::vector<std::vector<double>> x;
  for (const auto& r : rows) x.push_back(unit(r));
  const auto centroids = update_centroids(x, assignment, k);
  double obj = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) obj += 1.0 - dot(x[i], centroids[assignment[i]]);
  return obj;
}

KMeansResult spherical_kmeans(const std::vector<std::vector<double>>& rows, std::size_t k,
                              std::uint64_t seed, std::size_t max_iters) {
  return run_spherical_kmeans(rows, k, seed, max_iters, true);
}

KMeansResult spherical_kmeans_serial(const std::vector<std::vector<double>>& rows, std::size_t k,
                                     std::uint64_t seed, std::size_t max_iters) {
  return run_spherical_kmeans(rows, k, seed, max_iters, false);
}

OrbitStore partition_by_category(TemplatePool pool, const std::vector<std::string>& fields) {
  pool.validate();
  if (fields.empty()) throw Error(ErrorCode::kBadParameter, "no grouping fields given");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pool.vectors.size(); ++i) {
    std::string key;
    for (const auto& f : fields) {
      const std::string& value = field_value(pool.vectors[i].segment, f);
      if (value.empty()) {
        throw Error(ErrorCode::kMissingMetadata, "pool vector " + std::to_string(i) + " (" +
                                                     pool.vectors[i].segment.utterance_id +
                                                     ") has no " + f);
      }
      key += (key.empty() ? "" : "|") + value;
    }
    groups[key].push_back(i);
  }
  OrbitStore store;
  store.pool = std::move(pool);
  store.scheme = CategoricalScheme{fields};
  for (auto& [key, members] : groups) store.sets.push_back({key, std::move(members)});
  return store;
}

OrbitStore kmeans_cosine(TemplatePool pool, std::size_t k, std::uint64_t seed,
                         std::size_t max_iters, const std::vector<std::vector<double>>* features) {
  pool.validate();
  std::vector<std::vector<double>> own;
  if (features == nullptr) {
    for (const auto& v : pool.vectors) own.push_back(v.values);
    features = &own;
  }
  if (features->size() != pool.vectors.size()) {
    throw Error(ErrorCode::kLengthMismatch, "feature view does not match pool size");
  }
  const auto res = spherical_kmeans(*features, k, seed, max_iters);
  OrbitStore store;
  store.pool = std::move(pool);
  store.scheme = KMeansScheme{k, seed, max_iters};
  store.sets.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    char key[32];
    std::snprintf(key, sizeof key, "c%03zu", c);
    store.sets[c].key = key;
  }
  for (std::size_t i = 0; i < res.assignment.size(); ++i) {
    store.sets[res.assignment[i]].members.push_back(i);
  }
  return store;
}

std::size_t template_budget(std::size_t n_classes, double epsilon, double delta, double c) {
  if (n_classes < 1 || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) || !(c > 0.0)) {
    throw Error(ErrorCode::kBadParameter, "need C >= 1, epsilon > 0, 0 < delta < 1, c > 0");
  }
  const double bound =
      (2.0 / (c * epsilon * epsilon)) * std::log(static_cast<double>(n_classes) / delta);
  return static_cast<std::size_t>(std::ceil(bound));
}

std::string serialize_store(const OrbitStore& store) {
  store.validate();
  std::ostringstream out;
  const std::size_t dim = store.pool.dim();
  out << "ORBITSTORE v1 K=" << store.k() << " dim=" << dim
      << " kind=" << to_string(store.pool.kind()) << '\n';
  if (const auto* cat = std::get_if<CategoricalScheme>(&store.scheme)) {
    out << "SCHEME categorical ";
    for (std::size_t i = 0; i < cat->fields.size(); ++i) out << (i ? "," : "") << cat->fields[i];
    out << '\n';
  } else {
    const auto& km = std::get<KMeansScheme>(store.scheme);
    out << "SCHEME kmeans k=" << km.k << " seed=" << km.seed << " max_iters=" << km.max_iters << '\n';
  }
  out << "POOL " << store.pool.vectors.size() << ' '
      << (store.pool.source_tag.empty() ? "-" : store.pool.source_tag) << '\n';
  for (const auto& s : store.sets) {
    out << "SET " << s.key;
    for (auto m : s.members) out << ' ' << m;
    out << '\n';
  }
  out << segment_csv_header(dim) << '\n';
  for (const auto& v : store.pool.vectors) out << segment_csv_row(v) << '\n';
  return out.str();
}

namespace {

std::string expect_field(std::istringstream& in, const std::string& prefix) {
  std::string tok;
  if (!(in >> tok) || tok.rfind(prefix, 0) != 0) {
    throw Error(ErrorCode::kFormatError, "store header: expected " + prefix);
  }
  return tok.substr(prefix.size());
}

std::size_t to_size(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormatError, "store: bad integer '" + s + "'");
  }
}

}  // namespace

OrbitStore parse_store(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormatError, "store file is empty");
  std::istringstream header(line);
  std::string magic, version;
  header >> magic >> version;
  if (magic != "ORBITSTORE") throw Error(ErrorCode::kFormatError, "not an orbit store file");
  if (version != "v1") throw Error(ErrorCode::kFormatError, "unsupported store version '" + version + "'");
  const std::size_t k = to_size(expect_field(header, "K="));
  const std::size_t dim = to_size(expect_field(header, "dim="));
  const FeatureKind kind = [&] {
    try {
      return parse_feature_kind(expect_field(header, "kind="));
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormatError, e.what());
    }
  }();

  OrbitStore store;
  if (!std::getline(in, line) || line.rfind("SCHEME ", 0) != 0) {
    throw Error(ErrorCode::kFormatError, "store: missing SCHEME line");
  }
  {
    std::istringstream s(line.substr(7));
    std::string type;
    s >> type;
    if (type == "categorical") {
      std::string fields;
      s >> fields;
      store.scheme = CategoricalScheme{split_list(fields)};
    } else if (type == "kmeans") {
      KMeansScheme km;
      km.k = to_size(expect_field(s, "k="));
      km.seed = to_size(expect_field(s, "seed="));
      km.max_iters = to_size(expect_field(s, "max_iters="));
      store.scheme = km;
    } else {
      throw Error(ErrorCode::kFormatError, "store: unknown scheme '" + type + "'");
    }
  }
  if (!std::getline(in, line) || line.rfind("POOL ", 0) != 0) {
    throw Error(ErrorCode::kFormatError, "store: missing POOL line");
  }
  std::size_t pool_size = 0;
  {
    std::istringstream s(line.substr(5));
    std::string count, tag;
    if (!(s >> count >> tag)) throw Error(ErrorCode::kFormatError, "store: bad POOL line");
    pool_size = to_size(count);
    store.pool.source_tag = tag == "-" ? "" : tag;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::getline(in, line) || line.rfind("SET ", 0) != 0) {
      throw Error(ErrorCode::kFormatError, "store: expected " + std::to_string(k) + " SET lines");
    }
    std::istringstream s(line.substr(4));
    OrbitSet set;
    s >> set.key;
    std::string idx;
    while (s >> idx) set.members.push_back(to_size(idx));
    store.sets.push_back(std::move(set));
  }
  if (!std::getline(in, line) || line != segment_csv_header(dim)) {
    throw Error(ErrorCode::kFormatError, "store: missing pool column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    store.pool.vectors.push_back(parse_segment_row(line, kind, dim));
  }
  if (store.pool.vectors.size() != pool_size) {
    throw Error(ErrorCode::kFormatError, "store: expected " + std::to_string(pool_size) +
                                             " pool vectors, found " +
                                             std::to_string(store.pool.vectors.size()));
  }
  store.validate();
  return store;
}

void save_store(const OrbitStore& store, const std::filesystem::path& path) {
  const std::string text = serialize_store(store);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << text;
}

OrbitStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open store " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_store(buffer.str());
}

bool operator==(const SegmentVector& a, const SegmentVector& b) {
  return a.values == b.values && a.kind == b.kind && a.segment == b.segment;
}

bool operator==(const OrbitStore& a, const OrbitStore& b) {
  return a.pool.vectors == b.pool.vectors && a.pool.source_tag == b.pool.source_tag &&
         a.sets == b.sets && a.scheme == b.scheme;
}

}  // namespace orbitsig
