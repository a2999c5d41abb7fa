#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "orbitsig/error.hpp"
#include "orbitsig/frontend.hpp"

using namespace orbitsig;

namespace {

RawSignal tone(double hz, double seconds, double rate = 16000.0, double amp = 0.5) {
  RawSignal s;
  s.rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate));
  return s;
}

RawSignal noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  RawSignal s;
  for (std::size_t i = 0; i < n; ++i) s.samples.push_back(g(rng));
  return s;
}

}  // namespace

TEST_CASE("frame count follows 1 + floor((L - W) / H)") {
  CHECK(frame_count(16000, 400, 160) == 98);
  CHECK(frame_count(400, 400, 160) == 1);
  CHECK(frame_count(559, 400, 160) == 1);
  CHECK(frame_count(560, 400, 160) == 2);
  const Matrix f = frame_signal(tone(440, 1.0), FrontendConfig{});
  CHECK(f.rows() == 98);
  CHECK(f.cols() == 400);
}

TEST_CASE("signal shorter than a window is rejected") {
  RawSignal s;
  s.samples.assign(399, 0.1);
  CHECK_THROWS_AS(frame_signal(s, FrontendConfig{}), Error);
  try {
    frame_signal(s, FrontendConfig{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSignalTooShort);
  }
}

TEST_CASE("framing applies pre-emphasis then a Hamming window") {
  const RawSignal s = noise(1000, 3);
  const Matrix f = frame_signal(s, FrontendConfig{});
  for (std::size_t fr : {0u, 2u, 3u}) {
    for (std::size_t i : {0u, 1u, 57u, 399u}) {
      const double x = s.samples[fr * 160 + i];
      const double prev = i == 0 ? x : s.samples[fr * 160 + i - 1];
      const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / 399.0);
      CHECK(f(fr, i) == doctest::Approx((x - 0.97 * prev) * w).epsilon(1e-14));
    }
  }
}

TEST_CASE("power spectrum matches a direct DFT") {
  CHECK(next_pow2(400) == 512);
  CHECK(next_pow2(512) == 512);
  CHECK(next_pow2(1) == 1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t len : {7u, 64u, 400u}) {
    oracle::Vec x(len);
    for (double& v : x) v = u(rng);
    const auto fast = power_spectrum(x);
    const auto slow = oracle::dft_power(x, next_pow2(len));
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("mel scale round-trips and is anchored near 1000 mel at 1 kHz") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(1000.0) == doctest::Approx(1000.0).epsilon(1e-3));
  for (double f : {50.0, 440.0, 3000.0, 7999.0}) CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("mel filters are triangles peaking at 1 between their edges") {
  const MelFilterbank bank(40, 0.0, 8000.0, 16000.0, 512);
  CHECK(bank.size() == 40);
  CHECK(bank.n_bins() == 257);
  for (int j = 0; j < bank.size(); ++j) {
    double peak = 0.0;
    for (std::size_t b = 0; b < bank.n_bins(); ++b) {
      const double w = bank.weight(j, b);
      const double f = b * 16000.0 / 512.0;
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
      if (w > 0.0) {
        CHECK(f > bank.lower_hz(j));
        CHECK(f < bank.upper_hz(j));
      }
      peak = std::max(peak, w);
    }
    CHECK(peak > 0.0);
  }
  CHECK_THROWS_AS(MelFilterbank(10, 4000.0, 4000.0, 16000.0, 512), Error);
}

TEST_CASE("a 1 kHz tone lands in a mel channel whose band contains 1 kHz") {
  const FrameMatrix fm = extract_features(tone(1000.0, 0.5), FeatureKind::kMFS);
  const MelFilterbank bank(40, 0.0, 8000.0, 16000.0, 512);
  const auto row = fm.values.row(10);
  int best = 0;
  for (int j = 1; j < 40; ++j) {
    if (row[j] > row[best]) best = j;
  }
  CHECK(bank.lower_hz(best) <= 1000.0);
  CHECK(bank.upper_hz(best) >= 1000.0);
}

TEST_CASE("DCT-II is orthonormal and agrees with the direct cosine sum") {
  const int m = 26;
  oracle::Mat d(m, oracle::Vec(m));
  for (int i = 0; i < m; ++i) {
    oracle::Vec e(m, 0.0);
    e[i] = 1.0;
    const auto col = dct_cepstra(e, m);
    for (int k = 0; k < m; ++k) d[k][i] = col[k];
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) CHECK(std::fabs(oracle::dot(d[a], d[b]) - (a == b ? 1.0 : 0.0)) < 1e-10);
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  oracle::Vec x(m);
  for (double& v : x) v = u(rng);
  const auto c = dct_cepstra(x, 13);
  for (int k = 0; k < 13; ++k) {
    double acc = 0.0;
    for (int n = 0; n < m; ++n) acc += x[n] * std::cos(std::numbers::pi / m * (n + 0.5) * k);
    acc *= k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    CHECK(c[k] == doctest::Approx(acc).epsilon(1e-12));
  }
  const auto back = inverse_dct(dct_cepstra(x, m));
  for (int n = 0; n < m; ++n) CHECK(back[n] == doctest::Approx(x[n]).epsilon(1e-12));
}

TEST_CASE("Levinson-Durbin solves the Toeplitz normal equations") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int order = 1 + trial % 12;
    const auto r = oracle::random_autocorr(rng, order + 1);
    const LpcResult lpc = levinson_durbin(r, order);
    const auto ref = oracle::toeplitz_lpc(r, order);
    for (int i = 0; i < order; ++i) CHECK(std::fabs(lpc.coeffs[i] - ref[i]) < 1e-8);
    // Gain is the residual power r0 - a.r.
    double g = r[0];
    for (int i = 0; i < order; ++i) g -= ref[i] * r[i + 1];
    CHECK(lpc.gain == doctest::Approx(g).epsilon(1e-9));
    for (double k : lpc.reflection) CHECK(std::fabs(k) < 1.0);
  }
}

TEST_CASE("Levinson-Durbin flags singular autocorrelations") {
  const std::vector<double> r{1.0, 1.0, 1.0};
  try {
    levinson_durbin(r, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumericallySingular);
  }
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(levinson_durbin(zero, 1), Error);
}

TEST_CASE("LPC cepstra match the power series of the log all-pole model") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = oracle::random_autocorr(rng, 13);
    const LpcResult lpc = levinson_durbin(r, 12);
    const auto c = lpc_to_cepstra(lpc.coeffs, lpc.gain, 13);
    const auto ref = oracle::lpc_cepstrum_series(lpc.coeffs, lpc.gain, 13);
    for (int n = 0; n < 13; ++n) CHECK(c[n] == doctest::Approx(ref[n]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("deltas of a constant sequence vanish, deltas of a ramp recover the slope") {
  Matrix constant(20, 3, 4.25);
  const Matrix d = append_deltas(constant, 2);
  REQUIRE(d.cols() == 9);
  for (std::size_t t = 0; t < 20; ++t) {
    for (std::size_t c = 3; c < 9; ++c) CHECK(std::fabs(d(t, c)) < 1e-8);
    for (std::size_t c = 0; c < 3; ++c) CHECK(d(t, c) == 4.25);
  }
  Matrix ramp(20, 1);
  for (std::size_t t = 0; t < 20; ++t) ramp(t, 0) = 0.5 * t;
  const Matrix r = append_deltas(ramp, 2);
  for (std::size_t t = 2; t < 18; ++t) CHECK(r(t, 1) == doctest::Approx(0.5));
  for (std::size_t t = 4; t < 16; ++t) CHECK(std::fabs(r(t, 2)) < 1e-12);
}

TEST_CASE("feature kinds have the expected widths and relations") {
  const RawSignal s = tone(700.0, 0.3);
  const FrameMatrix mfs = extract_features(s, FeatureKind::kMFS);
  const FrameMatrix mfb = extract_features(s, FeatureKind::kMFB);
  const FrameMatrix mfc = extract_features(s, FeatureKind::kMFC);
  const FrameMatrix plp = extract_features(s, FeatureKind::kPLP);
  CHECK(mfs.values.cols() == 123);
  CHECK(mfb.values.cols() == 123);
  CHECK(mfc.values.cols() == 39);
  CHECK(plp.values.cols() == 39);
  CHECK(static_dim(FeatureKind::kMFS) == 41);
  CHECK(static_dim(FeatureKind::kPLP) == 13);
  for (std::size_t t = 0; t < mfs.values.rows(); ++t) {
    for (std::size_t j = 0; j < 40; ++j) {
      CHECK(mfb.values(t, j) == doctest::Approx(std::log(std::max(mfs.values(t, j), 1e-10))).epsilon(1e-12));
    }
    CHECK(mfb.values(t, 40) == mfs.values(t, 40));
  }
  for (double v : plp.values.data()) CHECK(std::isfinite(v));
}

TEST_CASE("feature kind names parse case-insensitively") {
  CHECK(parse_feature_kind("plp") == FeatureKind::kPLP);
  CHECK(parse_feature_kind("MFB") == FeatureKind::kMFB);
  CHECK(to_string(FeatureKind::kMFC) == "MFC");
  CHECK_THROWS_AS(parse_feature_kind("xyz"), Error);
}

TEST_CASE("equal-loudness weighting rises through the speech band") {
  double prev = 0.0;
  for (double f = 100.0; f <= 3000.0; f += 100.0) {
    const double e = equal_loudness(f);
    CHECK(e > prev);
    prev = e;
  }
}
