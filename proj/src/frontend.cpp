#include "orbitsig/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "orbitsig/error.hpp"

namespace orbitsig {

namespace {

constexpr double kLogFloor = 1e-10;

double floored_log(double x) { return std::log(std::max(x, kLogFloor)); }

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> w = std::polar(1.0, angle * static_cast<double>(k));
        const auto u = a[i + k];
        const auto v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

}  // namespace

void RawSignal::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::kBadParameter, "sample rate must be positive");
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kBadParameter, "signal contains NaN/Inf");
  }
}

void FrontendConfig::validate() const {
  if (!(hop_ms > 0.0) || !(window_ms >= hop_ms)) {
    throw Error(ErrorCode::kBadConfig, "need window_ms >= hop_ms > 0");
  }
  if (!(preemphasis >= 0.0 && preemphasis < 1.0)) {
    throw Error(ErrorCode::kBadConfig, "preemphasis must lie in [0, 1)");
  }
  if (n_mels_spectral < 1 || n_mels_cepstral < 1) {
    throw Error(ErrorCode::kBadConfig, "filterbank sizes must be positive");
  }
  if (n_cepstra < 1 || n_cepstra > n_mels_cepstral) {
    throw Error(ErrorCode::kBadConfig, "need 1 <= n_cepstra <= n_mels_cepstral");
  }
  if (lpc_order < 1 || lpc_order >= n_mels_cepstral) {
    throw Error(ErrorCode::kBadConfig, "need 1 <= lpc_order < n_mels_cepstral");
  }
  if (delta_window < 1) throw Error(ErrorCode::kBadConfig, "delta_window must be >= 1");
  if (fmin_hz < 0.0) throw Error(ErrorCode::kBadConfig, "fmin_hz must be >= 0");
}

std::size_t FrontendConfig::window_samples(double rate) const {
  return static_cast<std::size_t>(std::lround(window_ms * rate / 1000.0));
}

std::size_t FrontendConfig::hop_samples(double rate) const {
  return static_cast<std::size_t>(std::lround(hop_ms * rate / 1000.0));
}

FrontendConfig FrontendConfig::from_config(KeyValueConfig& cfg) {
  FrontendConfig c;
  if (auto v = cfg.get_double("window_ms")) c.window_ms = *v;
  if (auto v = cfg.get_double("hop_ms")) c.hop_ms = *v;
  if (auto v = cfg.get_double("preemphasis")) c.preemphasis = *v;
  if (auto v = cfg.get_int("n_mels_spectral")) c.n_mels_spectral = static_cast<int>(*v);
  if (auto v = cfg.get_int("n_mels_cepstral")) c.n_mels_cepstral = static_cast<int>(*v);
  if (auto v = cfg.get_int("n_cepstra")) c.n_cepstra = static_cast<int>(*v);
  if (auto v = cfg.get_int("lpc_order")) c.lpc_order = static_cast<int>(*v);
  if (auto v = cfg.get_int("delta_window")) c.delta_window = static_cast<int>(*v);
  if (auto v = cfg.get_double("fmin_hz")) c.fmin_hz = *v;
  if (auto v = cfg.get_double("fmax_hz")) c.fmax_hz = *v;
  c.validate();
  return c;
}

int static_dim(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMFS:
    case FeatureKind::kMFB:
      return 41;
    case FeatureKind::kMFC:
    case FeatureKind::kPLP:
      return 13;
  }
  return 0;
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMFS: return "MFS";
    case FeatureKind::kMFB: return "MFB";
    case FeatureKind::kMFC: return "MFC";
    case FeatureKind::kPLP: return "PLP";
  }
  return "?";
}

FeatureKind parse_feature_kind(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "MFS") return FeatureKind::kMFS;
  if (upper == "MFB") return FeatureKind::kMFB;
  if (upper == "MFC") return FeatureKind::kMFC;
  if (upper == "PLP") return FeatureKind::kPLP;
  throw Error(ErrorCode::kBadConfig, "unknown feature kind '" + name + "'");
}

std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
  if (n_samples < window) return 0;
  return 1 + (n_samples - window) / hop;
}

Matrix frame_signal(const RawSignal& signal, const FrontendConfig& config) {
  signal.validate();
  config.validate();
  const std::size_t w = config.window_samples(signal.rate);
  const std::size_t h = config.hop_samples(signal.rate);
  if (w == 0 || h == 0) throw Error(ErrorCode::kBadConfig, "window/hop shorter than one sample");
  const std::size_t n = signal.samples.size();
  if (n < w) {
    throw Error(ErrorCode::kSignalTooShort, std::to_string(n) + " samples < window of " +
                                                std::to_string(w));
  }
  const std::size_t count = frame_count(n, w, h);
  std::vector<double> hamming(w);
  for (std::size_t i = 0; i < w; ++i) {
    hamming[i] = w == 1 ? 1.0
                        : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(w - 1));
  }
  Matrix frames(count, w);
  const double alpha = config.preemphasis;
  for (std::size_t f = 0; f < count; ++f) {
    const double* x = signal.samples.data() + f * h;
    auto out = frames.row(f);
    // First sample uses itself as predecessor.
    out[0] = (x[0] - alpha * x[0]) * hamming[0];
    for (std::size_t i = 1; i < w; ++i) out[i] = (x[i] - alpha * x[i - 1]) * hamming[i];
  }
  return frames;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_len) {
  if (fft_len == 0) fft_len = next_pow2(frame.size());
  if (fft_len < frame.size() || next_pow2(fft_len) != fft_len) {
    throw Error(ErrorCode::kBadParameter, "fft_len must be a power of two >= frame length");
  }
  std::vector<std::complex<double>> buf(fft_len);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!std::isfinite(frame[i])) throw Error(ErrorCode::kBadParameter, "non-finite frame sample");
    buf[i] = frame[i];
  }
  fft_inplace(buf);
  std::vector<double> power(fft_len / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_filters, double fmin_hz, double fmax_hz, double rate,
                             std::size_t fft_len) {
  if (n_filters < 1) throw Error(ErrorCode::kBadParameter, "n_filters must be >= 1");
  if (!(fmin_hz < fmax_hz)) throw Error(ErrorCode::kBadBand, "fmin must be below fmax");
  if (fmin_hz < 0.0 || fmax_hz > rate / 2.0 + 1e-9) {
    throw Error(ErrorCode::kBadBand, "band must lie within [0, rate/2]");
  }
  n_bins_ = fft_len / 2 + 1;
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  edges_hz_.resize(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i) {
    edges_hz_[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_filters + 1));
  }
  edges_hz_.front() = fmin_hz;
  edges_hz_.back() = fmax_hz;
  centers_hz_.assign(edges_hz_.begin() + 1, edges_hz_.end() - 1);
  weights_.assign(static_cast<std::size_t>(n_filters) * n_bins_, 0.0);
  const double bin_hz = rate / static_cast<double>(fft_len);
  for (int j = 0; j < n_filters; ++j) {
    const double lo = edges_hz_[j], mid = edges_hz_[j + 1], hi = edges_hz_[j + 2];
    for (std::size_t b = 0; b < n_bins_; ++b) {
      const double f = static_cast<double>(b) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      weights_[static_cast<std::size_t>(j) * n_bins_ + b] = w;
    }
  }
}

double MelFilterbank::weight(int j, std::size_t bin) const {
  return weights_[static_cast<std::size_t>(j) * n_bins_ + bin];
}

std::vector<double> MelFilterbank::apply(std::span<const double> spectrum) const {
  if (spectrum.size() != n_bins_) {
    throw Error(ErrorCode::kDimensionMismatch, "spectrum has " + std::to_string(spectrum.size()) +
                                                   " bins, filterbank expects " +
                                                   std::to_string(n_bins_));
  }
  std::vector<double> out(centers_hz_.size(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double* w = weights_.data() + j * n_bins_;
    double acc = 0.0;
    for (std::size_t b = 0; b < n_bins_; ++b) acc += w[b] * spectrum[b];
    out[j] = acc;
  }
  return out;
}

std::vector<double> mel_filterbank(std::span<const double> spectrum, int n_filters,
                                   double fmin_hz, double fmax_hz, double rate) {
  if (spectrum.size() < 2) throw Error(ErrorCode::kBadParameter, "spectrum too short");
  const MelFilterbank bank(n_filters, fmin_hz, fmax_hz, rate, 2 * (spectrum.size() - 1));
  return bank.apply(spectrum);
}

std::vector<double> dct_cepstra(std::span<const double> log_energies, int n_coeffs) {
  const std::size_t m = log_energies.size();
  if (n_coeffs < 1 || static_cast<std::size_t>(n_coeffs) > m) {
    throw Error(ErrorCode::kBadParameter, "need 1 <= n_coeffs <= input length");
  }
  std::vector<double> c(n_coeffs);
  const double md = static_cast<double>(m);
  for (int k = 0; k < n_coeffs; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / md) : std::sqrt(2.0 / md);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      acc += log_energies[i] * std::cos(std::numbers::pi * k * (static_cast<double>(i) + 0.5) / md);
    }
    c[k] = scale * acc;
  }
  return c;
}

std::vector<double> inverse_dct(std::span<const double> coeffs) {
  const std::size_t m = coeffs.size();
  const double md = static_cast<double>(m);
  std::vector<double> x(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / md) : std::sqrt(2.0 / md);
      acc += scale * coeffs[k] *
             std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) / md);
    }
    x[i] = acc;
  }
  return x;
}

LpcResult levinson_durbin(std::span<const double> autocorr, int order) {
  if (order < 1 || autocorr.size() < static_cast<std::size_t>(order) + 1) {
    throw Error(ErrorCode::kBadParameter, "autocorrelation must have order + 1 lags");
  }
  if (!(autocorr[0] > 0.0)) throw Error(ErrorCode::kBadParameter, "autocorr[0] must be > 0");
  LpcResult res;
  std::vector<double> a(order + 1, 0.0), prev(order + 1, 0.0);
  double err = autocorr[0];
  for (int i = 1; i <= order; ++i) {
    double acc = autocorr[i];
    for (int j = 1; j < i; ++j) acc -= a[j] * autocorr[i - j];
    const double k = acc / err;
    if (!(std::fabs(k) < 1.0)) {
      throw Error(ErrorCode::kNumericallySingular,
                  "reflection coefficient " + std::to_string(i) + " has magnitude >= 1");
    }
    prev = a;
    a[i] = k;
    for (int j = 1; j < i; ++j) a[j] = prev[j] - k * prev[i - j];
    err *= (1.0 - k * k);
    res.reflection.push_back(k);
  }
  res.coeffs.assign(a.begin() + 1, a.end());
  res.gain = err;
  return res;
}

std::vector<double> lpc_to_cepstra(std::span<const double> lpc, double gain, int n_coeffs) {
  if (n_coeffs < 1) throw Error(ErrorCode::kBadParameter, "n_coeffs must be >= 1");
  if (!(gain > 0.0)) throw Error(ErrorCode::kBadParameter, "gain must be > 0");
  const int p = static_cast<int>(lpc.size());
  std::vector<double> c(n_coeffs, 0.0);
  c[0] = std::log(gain);
  for (int n = 1; n < n_coeffs; ++n) {
    double acc = n <= p ? lpc[n - 1] : 0.0;
    for (int k = std::max(1, n - p); k < n; ++k) {
      acc += (static_cast<double>(k) / n) * c[k] * lpc[n - k - 1];
    }
    c[n] = acc;
  }
  return c;
}

double equal_loudness(double hz) {
  const double w2 = std::pow(2.0 * std::numbers::pi * hz, 2);
  return (w2 + 56.8e6) * w2 * w2 / (std::pow(w2 + 6.3e6, 2) * (w2 + 0.38e9));
}

Matrix append_deltas(const Matrix& statics, int delta_window) {
  if (statics.rows() == 0) throw Error(ErrorCode::kBadParameter, "need at least one frame");
  if (delta_window < 1) throw Error(ErrorCode::kBadParameter, "delta_window must be >= 1");
  const std::size_t t_count = statics.rows();
  const std::size_t d = statics.cols();
  double denom = 0.0;
  for (int th = 1; th <= delta_window; ++th) denom += th * th;
  denom *= 2.0;

  auto regress = [&](const Matrix& in) {
    Matrix out(t_count, d);
    const auto last = static_cast<long long>(t_count) - 1;
    for (std::size_t t = 0; t < t_count; ++t) {
      for (int th = 1; th <= delta_window; ++th) {
        const auto ahead = static_cast<std::size_t>(std::min<long long>(static_cast<long long>(t) + th, last));
        const auto behind = static_cast<std::size_t>(std::max<long long>(static_cast<long long>(t) - th, 0));
        for (std::size_t c = 0; c < d; ++c) out(t, c) += th * (in(ahead, c) - in(behind, c));
      }
      for (std::size_t c = 0; c < d; ++c) out(t, c) /= denom;
    }
    return out;
  };

  const Matrix delta = regress(statics);
  const Matrix delta2 = regress(delta);
  Matrix out(t_count, 3 * d);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      out(t, c) = statics(t, c);
      out(t, d + c) = delta(t, c);
      out(t, 2 * d + c) = delta2(t, c);
    }
  }
  return out;
}

namespace {

// Autocorrelation of an even-symmetric auditory spectrum sampled at
// M + 2 points (band edges replicated), via the inverse real DFT.
std::vector<double> spectrum_autocorr(const std::vector<double>& bands, int n_lags) {
  const int m = static_cast<int>(bands.size());
  std::vector<double> ext(m + 2);
  ext[0] = bands.front();
  for (int i = 0; i < m; ++i) ext[i + 1] = bands[i];
  ext[m + 1] = bands.back();
  const double period = 2.0 * (m + 1);
  std::vector<double> r(n_lags);
  for (int k = 0; k < n_lags; ++k) {
    double acc = ext[0] + ext[m + 1] * std::cos(std::numbers::pi * k);
    for (int i = 1; i <= m; ++i) {
      acc += 2.0 * ext[i] * std::cos(std::numbers::pi * k * i / (m + 1));
    }
    r[k] = acc / period;
  }
  return r;
}

}  // namespace

FrameMatrix extract_features(const RawSignal& signal, FeatureKind kind,
                             const FrontendConfig& config) {
  const Matrix frames = frame_signal(signal, config);
  const std::size_t w = frames.cols();
  const std::size_t h = config.hop_samples(signal.rate);
  const std::size_t fft_len = next_pow2(w);
  const double fmax = config.fmax_for(signal.rate);
  const int dim = static_dim(kind);
  const bool spectral = kind == FeatureKind::kMFS || kind == FeatureKind::kMFB;
  const MelFilterbank bank(spectral ? config.n_mels_spectral : config.n_mels_cepstral,
                           config.fmin_hz, fmax, signal.rate, fft_len);
  if (kind != FeatureKind::kPLP && spectral && config.n_mels_spectral + 1 != dim) {
    throw Error(ErrorCode::kBadConfig, "spectral kinds need n_mels_spectral = 40");
  }
  if (!spectral && config.n_cepstra != dim) {
    throw Error(ErrorCode::kBadConfig, "cepstral kinds need n_cepstra = 13");
  }

  std::vector<double> loudness;
  if (kind == FeatureKind::kPLP) {
    for (double f : bank.centers_hz()) loudness.push_back(equal_loudness(f));
  }

  Matrix statics(frames.rows(), dim);
  for (std::size_t f = 0; f < frames.rows(); ++f) {
    const auto spec = power_spectrum(frames.row(f), fft_len);
    const auto energies = bank.apply(spec);
    auto out = statics.row(f);
    switch (kind) {
      case FeatureKind::kMFS:
      case FeatureKind::kMFB: {
        double raw_energy = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
          const double s = signal.samples[f * h + i];
          raw_energy += s * s;
        }
        for (std::size_t j = 0; j < energies.size(); ++j) {
          out[j] = kind == FeatureKind::kMFS ? energies[j] : floored_log(energies[j]);
        }
        out[energies.size()] = floored_log(raw_energy);
        break;
      }
      case FeatureKind::kMFC: {
        std::vector<double> logs(energies.size());
        for (std::size_t j = 0; j < energies.size(); ++j) logs[j] = floored_log(energies[j]);
        const auto c = dct_cepstra(logs, config.n_cepstra);
        std::copy(c.begin(), c.end(), out.begin());
        break;
      }
      case FeatureKind::kPLP: {
        std::vector<double> bands(energies.size());
        for (std::size_t j = 0; j < energies.size(); ++j) {
          bands[j] = std::pow(std::max(energies[j], kLogFloor) * loudness[j], 0.33);
        }
        const auto r = spectrum_autocorr(bands, config.lpc_order + 1);
        const auto lpc = levinson_durbin(r, config.lpc_order);
        const auto c = lpc_to_cepstra(lpc.coeffs, lpc.gain, config.n_cepstra);
        std::copy(c.begin(), c.end(), out.begin());
        break;
      }
    }
  }

  FrameMatrix fm;
  fm.values = append_deltas(statics, config.delta_window);
  fm.kind = kind;
  fm.config = config;
  for (double v : fm.values.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNumericalFailure, "non-finite feature value");
  }
  return fm;
}

}  // namespace orbitsig
