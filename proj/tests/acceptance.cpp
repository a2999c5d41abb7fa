// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "orbitsig/error.hpp"
#include "orbitsig/frontend.hpp"
#include "orbitsig/orbit_store.hpp"
#include "orbitsig/pipeline.hpp"
#include "orbitsig/rls.hpp"
#include "orbitsig/segment.hpp"
#include "orbitsig/signature.hpp"
#include "orbitsig/synth.hpp"

using namespace orbitsig;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::vector<double> randvec(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> v(d);
  for (double& x : v) x = g(rng);
  return v;
}

double plain_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

OrbitStore shift_closed_store(std::mt19937_64& rng, std::size_t k, std::size_t d) {
  OrbitStore s;
  s.scheme = CategoricalScheme{{"label"}};
  for (std::size_t i = 0; i < k; ++i) {
    const auto t = randvec(rng, d);
    OrbitSet os;
    os.key = "t" + std::to_string(i);
    for (std::size_t j = 0; j < d; ++j) {
      SegmentVector sv;
      sv.values = circular_shift(t, static_cast<long long>(j));
      sv.segment = {"u", 0, 1, "x", "s", "d"};
      os.members.push_back(s.pool.vectors.size());
      s.pool.vectors.push_back(sv);
    }
    s.sets.push_back(os);
  }
  return s;
}

Outcome dims() {
  Outcome o;
  o.require(segment_dim(FeatureKind::kMFS) == 615, "MFS dim");
  o.require(segment_dim(FeatureKind::kMFB) == 615, "MFB dim");
  o.require(segment_dim(FeatureKind::kMFC) == 195, "MFC dim");
  o.require(segment_dim(FeatureKind::kPLP) == 195, "PLP dim");
  const auto h = PoolingSpec::histogram(20);
  o.require(signature_dim(20, h) == 400, "K=20");
  o.require(signature_dim(135, h) == 2700, "K=135");
  o.require(signature_dim(120, h) == 2400, "K=120");
  o.require(signature_dim(200, h) == 4000, "K=200");
  o.detail = o.ok ? "615/195 base, 400/2700/2400/4000 signatures" : o.detail;
  return o;
}

Outcome unitary_identity() {
  Outcome o;
  std::mt19937_64 rng(101);
  const std::size_t d = 256;
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const auto s = randvec(rng, d), t = randvec(rng, d);
    std::vector<double> lhs(d), rhs(d);
    for (std::size_t j = 0; j < d; ++j) {
      lhs[j] = plain_dot(circular_shift(s, static_cast<long long>(j)), t);
      rhs[j] = plain_dot(s, circular_shift(t, static_cast<long long>((d - j) % d)));
    }
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::fabs(lhs[j] - rhs[j]));
  }
  o.require(worst <= 1e-10, "max deviation too large");
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |diff| %.3g over 100 pairs x 256 shifts", worst);
  o.detail = buf;
  return o;
}

Outcome orbit_invariance() {
  Outcome o;
  std::mt19937_64 rng(202);
  const std::size_t d = 64;
  const OrbitStore store = shift_closed_store(rng, 5, d);
  const Standardizer id = Standardizer::identity(d);
  const PreparedStore prepared(store, id);
  const auto hist = PoolingSpec::histogram(20);
  const auto mom = PoolingSpec::with_moments({Moment::kMean, Moment::kEnergy, Moment::kMax});
  double worst = 0.0;
  int hist_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = randvec(rng, d);
    const auto gx = circular_shift(x, static_cast<long long>(1 + rng() % (d - 1)));
    const auto hx = prepared.signature(x, id, hist), hgx = prepared.signature(gx, id, hist);
    for (std::size_t b = 0; b < hx.size(); ++b) {
      // Compare bin counts, not fractions.
      if (std::lround(hx[b] * d) != std::lround(hgx[b] * d)) ++hist_mismatch;
    }
    const auto mx = prepared.signature(x, id, mom), mgx = prepared.signature(gx, id, mom);
    for (std::size_t b = 0; b < mx.size(); ++b) worst = std::max(worst, std::fabs(mx[b] - mgx[b]));
  }
  o.require(hist_mismatch == 0, "histogram bin counts differ");
  o.require(worst <= 1e-9, "moment signatures differ");
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d histogram mismatches, max moment diff %.3g", hist_mismatch, worst);
  o.detail = buf;
  return o;
}

Outcome rls_correctness() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 2 + rng() % 4, n = c + rng() % (201 - c), p = 1 + rng() % 100;
    LabeledDataset d;
    d.features = Matrix(n, p);
    for (double& v : d.features.data()) v = g(rng);
    for (std::size_t i = 0; i < n; ++i) d.labels.push_back(i % c);
    for (std::size_t k = 0; k < c; ++k) d.class_names.push_back("c" + std::to_string(k));
    const double lambda = std::pow(10.0, -3.0 + double(rng() % 5));
    const RlsModel m = train_rls(d, lambda);

    oracle::Mat a(p, oracle::Vec(p, 0.0)), b(p, oracle::Vec(c, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t s = 0; s < p; ++s) a[r][s] += d.features(i, r) * d.features(i, s);
        for (std::size_t k = 0; k < c; ++k) b[r][k] += d.features(i, r) * (d.labels[i] == k ? 1.0 : -1.0);
      }
    }
    for (std::size_t r = 0; r < p; ++r) a[r][r] += lambda * double(n);
    const auto ref = oracle::solve(a, b);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        double res = -b[r][k];
        for (std::size_t s = 0; s < p; ++s) res += a[r][s] * m.weights(s, k);
        worst = std::max(worst, std::fabs(res));
        o.require(std::fabs(m.weights(r, k) - ref[r][k]) <= 1e-8 * std::max(1.0, std::fabs(ref[r][k])),
                  "weights disagree with the dense solve");
      }
    }
    if (trial < 10) {
      double norm = 0.0;
      const RlsModel heavy = train_rls(d, 1e9);
      for (double w : heavy.weights.data()) norm += w * w;
      o.require(std::sqrt(norm) < 1e-7, "weights do not shrink at lambda=1e9");
    }
  }
  o.require(worst <= 1e-8, "normal-equation residual too large");
  if (o.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "max residual %.3g over 50 problems", worst);
    o.detail = buf;
  }
  return o;
}

Outcome levinson() {
  Outcome o;
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int order = 1 + trial % 12;
    const auto r = oracle::random_autocorr(rng, order + 1);
    const LpcResult lpc = levinson_durbin(r, order);
    const auto ref = oracle::toeplitz_lpc(r, order);
    for (int i = 0; i < order; ++i) worst = std::max(worst, std::fabs(lpc.coeffs[i] - ref[i]));
  }
  o.require(worst <= 1e-8, "Levinson-Durbin disagrees with the Toeplitz solve");
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |diff| %.3g over 100 systems", worst);
  o.detail = buf;
  return o;
}

Outcome frontend_sanity() {
  Outcome o;
  RawSignal one_second;
  for (int i = 0; i < 16000; ++i) one_second.samples.push_back(0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 16000.0));
  const Matrix frames = frame_signal(one_second, FrontendConfig{});
  o.require(frames.rows() == 98, "frame count != 98");

  const Matrix deltas = append_deltas(Matrix(30, 13, -2.5), 2);
  for (std::size_t t = 0; t < deltas.rows(); ++t) {
    for (std::size_t c = 13; c < 39; ++c) o.require(std::fabs(deltas(t, c)) <= 1e-8, "nonzero delta of a constant");
  }

  const FrameMatrix mfs = extract_features(one_second, FeatureKind::kMFS);
  const MelFilterbank bank(40, 0.0, 8000.0, 16000.0, 512);
  for (std::size_t t = 0; t < mfs.values.rows(); ++t) {
    int best = 0;
    for (int j = 1; j < 40; ++j) {
      if (mfs.values(t, j) > mfs.values(t, best)) best = j;
    }
    o.require(bank.lower_hz(best) <= 1000.0 && bank.upper_hz(best) >= 1000.0, "1 kHz tone in the wrong channel");
  }

  double worst = 0.0;
  const int m = 26;
  std::vector<std::vector<double>> rows(m);
  for (int i = 0; i < m; ++i) {
    std::vector<double> e(m, 0.0);
    e[i] = 1.0;
    const auto col = dct_cepstra(e, m);
    for (int k = 0; k < m; ++k) rows[k].push_back(col[k]);
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) worst = std::max(worst, std::fabs(plain_dot(rows[a], rows[b]) - (a == b)));
  }
  o.require(worst <= 1e-10, "DCT not orthonormal");
  if (o.ok) o.detail = "98 frames, zero deltas, 1 kHz channel, orthonormal DCT";
  return o;
}

Outcome pooling_contracts() {
  Outcome o;
  std::mt19937_64 rng(505);
  const OrbitStore store = shift_closed_store(rng, 6, 40);
  Matrix inputs(0, 40);
  for (int i = 0; i < 200; ++i) inputs.append_row(randvec(rng, 40));
  const Standardizer st = fit_standardizer(inputs);
  const PreparedStore prepared(store, st);
  const Matrix sig = signature_batch(inputs, prepared, st, PoolingSpec::histogram(20));
  for (std::size_t r = 0; r < sig.rows(); ++r) {
    for (std::size_t k = 0; k < 6; ++k) {
      double sum = 0.0;
      for (std::size_t b = 0; b < 20; ++b) sum += sig(r, k * 20 + b);
      o.require(std::fabs(sum - 1.0) <= 1e-12, "histogram block does not sum to 1");
    }
    const auto x = center_normalize(st.apply(inputs.row(r)));
    std::vector<double> proj;
    for (std::size_t k = 0; k < 6; ++k) {
      prepared.project_set(x, k, proj);
      for (double v : proj) o.require(v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12, "projection outside [-1, 1]");
    }
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t bins : {5u, 20u, 33u}) {
    std::vector<double> v(2000);
    for (double& x : v) x = u(rng);
    o.require(pool(v, PoolingSpec::histogram(bins)) == oracle::histogram_by_intervals(v, bins),
              "histogram differs from direct counting");
  }
  if (o.ok) o.detail = "blocks sum to 1, projections bounded, counting oracle exact";
  return o;
}

Outcome clustering() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back(randvec(rng, 10));
  const KMeansResult a = spherical_kmeans(rows, 8, 42, 100);
  const KMeansResult b = spherical_kmeans(rows, 8, 42, 100);
  o.require(a.assignment == b.assignment && a.objective_history == b.objective_history, "not deterministic");
  for (std::size_t i = 1; i < a.objective_history.size(); ++i) {
    o.require(a.objective_history[i] <= a.objective_history[i - 1] + 1e-12, "objective increased");
  }

  // Planted instance: two bundles of directions, brute force over all 2-partitions.
  std::normal_distribution<double> jitter(0, 0.12);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 14; ++i) {
    const double ang = i < 7 ? 0.4 : 2.0;
    const double scale = 0.3 + (i % 5);
    pts.push_back({scale * (std::cos(ang) + jitter(rng)), scale * (std::sin(ang) + jitter(rng)), scale * 0.3 * jitter(rng)});
  }
  auto objective = [&](const std::vector<int>& lab) {
    double total = 0.0;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> sum(3, 0.0);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (lab[i] != c) continue;
        const double n = std::sqrt(plain_dot(pts[i], pts[i]));
        for (int j = 0; j < 3; ++j) sum[j] += pts[i][j] / n;
      }
      const double sn = std::sqrt(plain_dot(sum, sum));
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (lab[i] == c) total += 1.0 - plain_dot(pts[i], sum) / (std::sqrt(plain_dot(pts[i], pts[i])) * sn);
      }
    }
    return total;
  };
  double best = 1e300;
  std::vector<int> best_lab;
  for (unsigned mask = 1; mask < (1u << 13); ++mask) {
    std::vector<int> lab(14, 0);
    for (int i = 0; i < 13; ++i) lab[i] = (mask >> i) & 1;
    const double v = objective(lab);
    if (v < best) best = v, best_lab = lab;
  }
  const KMeansResult r = spherical_kmeans(pts, 2, 7, 100);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    o.require((best_lab[i] == best_lab[0]) == (r.assignment[i] == r.assignment[0]), "planted partition not recovered");
  }
  if (o.ok) o.detail = "monotone objective, deterministic, brute-force optimum recovered";
  return o;
}

// Mean ER per (fraction, representation) as produced by the desk-scale sweep
// below; the pipeline is deterministic, so these are reproduced to rounding.
struct Frozen {
  double fraction;
  double base_er;
  double invr_er;
};
constexpr Frozen kFrozen[] = {
    {1.0, 21.0, 6.0},
    {0.25, 25.49, 9.13},
    {0.0625, 32.2, 15.78},
    {0.015625, 45.17, 28.88},
};
constexpr bool kFrozenRecorded = true;

Outcome sample_complexity() {
  Outcome o;
  ExperimentConfig c;  // defaults: 8 classes, 128/25/40, PLP, phn-dr, N=20, 50 seeds
  const SweepResult r = run_sweep(c);
  std::vector<double> gaps;
  std::string detail;
  for (std::size_t f = 0; f < c.fractions.size(); ++f) {
    const SweepRow& base = r.rows[2 * f];
    const SweepRow& invr = r.rows[2 * f + 1];
    o.require(base.representation == "base" && invr.representation == "invr", "unexpected row order");
    o.require(invr.mean_er <= base.mean_er, "InvR error above base");
    gaps.push_back(base.mean_er - invr.mean_er);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%sn=%zu base %.2f%% invr %.2f%%", f ? "; " : "", base.n_train, base.mean_er,
                  invr.mean_er);
    detail += buf;
    std::printf("    fraction %-9g n_train %-5zu base %.6f invr %.6f\n", base.fraction, base.n_train, base.mean_er,
                invr.mean_er);
    if (kFrozenRecorded) {
      o.require(std::fabs(base.mean_er - kFrozen[f].base_er) <= 1e-6 &&
                    std::fabs(invr.mean_er - kFrozen[f].invr_er) <= 1e-6,
                "sweep no longer reproduces the frozen values");
    }
  }
  o.require(gaps.back() >= gaps.front(), "gap at the smallest fraction is below the gap at full size");
  if (!kFrozenRecorded) o.require(false, "frozen values not recorded");
  o.detail = detail + (o.ok ? "" : " [" + o.detail + "]");
  return o;
}

Outcome budget() {
  Outcome o;
  o.require(template_budget(20, 0.3, 0.05, 1.0) == 134, "template_budget(20, 0.3, 0.05, 1) != 134");
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> eps(0.05, 0.95), del(0.001, 0.9);
  for (int i = 0; i < 500; ++i) {
    const std::size_t cc = 2 + rng() % 500;
    const double e = eps(rng), d = del(rng);
    const std::size_t b = template_budget(cc, e, d);
    o.require(template_budget(cc + 1, e, d) >= b, "not monotone in C");
    o.require(template_budget(cc, e * 1.05, d) <= b, "not monotone in epsilon");
    o.require(template_budget(cc, e, d * 0.95) >= b, "not monotone in delta");
  }
  if (o.ok) o.detail = "134 and monotone over 500 random points";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "dimension arithmetic", 1.0, dims},
      {2, "unitary shift identity", 5.0, unitary_identity},
      {3, "full-orbit signature invariance", 10.0, orbit_invariance},
      {4, "RLS correctness and shrinkage", 10.0, rls_correctness},
      {5, "Levinson-Durbin vs Toeplitz solve", 5.0, levinson},
      {6, "front-end sanity", 10.0, frontend_sanity},
      {7, "pooling contracts", 5.0, pooling_contracts},
      {8, "spherical k-means", 10.0, clustering},
      {9, "desk-scale sample-complexity sweep", 600.0, sample_complexity},
      {10, "template budget", 1.0, budget},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.ok = false;
      o.detail += " [over time budget]";
    }
    failures += o.ok ? 0 : 1;
    std::printf("%s criterion %2d: %s (%.2fs / %.0fs) - %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                c.budget_s, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
