#pragma once

// Frame-level acoustic front-end: framing, power spectra, mel filterbanks,
// cepstra (DCT and PLP/LPC routes) and delta regression.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbitsig/config_file.hpp"
#include "orbitsig/matrix.hpp"

namespace orbitsig {

struct RawSignal {
  std::vector<double> samples;
  double rate = 16000.0;

  // Throws BadParameter on rate <= 0 or non-finite samples.
  void validate() const;
};

struct FrontendConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  double preemphasis = 0.97;
  int n_mels_spectral = 40;
  int n_mels_cepstral = 26;
  int n_cepstra = 13;
  int lpc_order = 12;
  int delta_window = 2;
  double fmin_hz = 0.0;
  std::optional<double> fmax_hz;  // defaults to rate / 2

  void validate() const;
  double fmax_for(double rate) const { return fmax_hz.value_or(rate / 2.0); }
  std::size_t window_samples(double rate) const;
  std::size_t hop_samples(double rate) const;

  // Reads the frontend keys it knows from `cfg`, leaving others untouched.
  static FrontendConfig from_config(KeyValueConfig& cfg);
};

enum class FeatureKind { kMFS, kMFB, kMFC, kPLP };

int static_dim(FeatureKind kind);
std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

struct FrameMatrix {
  Matrix values;  // frames x 3*static_dim: statics, deltas, delta-deltas
  FeatureKind kind = FeatureKind::kMFC;
  FrontendConfig config;
};

// Pre-emphasized, Hamming-windowed frames; count = 1 + floor((L - W) / H).
Matrix frame_signal(const RawSignal& signal, const FrontendConfig& config);

std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop);

std::size_t next_pow2(std::size_t n);

// |FFT|^2 of the zero-padded frame; fft_len / 2 + 1 bins. No windowing.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_len = 0);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

class MelFilterbank {
 public:
  MelFilterbank(int n_filters, double fmin_hz, double fmax_hz, double rate, std::size_t fft_len);

  std::vector<double> apply(std::span<const double> spectrum) const;

  int size() const { return static_cast<int>(centers_hz_.size()); }
  const std::vector<double>& centers_hz() const { return centers_hz_; }
  // Lower/upper edge of filter j in Hz.
  double lower_hz(int j) const { return edges_hz_[j]; }
  double upper_hz(int j) const { return edges_hz_[j + 2]; }
  // Weight of filter j at spectrum bin b.
  double weight(int j, std::size_t bin) const;
  std::size_t n_bins() const { return n_bins_; }

 private:
  std::vector<double> edges_hz_;    // n_filters + 2 mel-spaced points
  std::vector<double> centers_hz_;  // edges_hz_[1..n]
  std::vector<double> weights_;     // n_filters x n_bins
  std::size_t n_bins_ = 0;
};

std::vector<double> mel_filterbank(std::span<const double> spectrum, int n_filters,
                                   double fmin_hz, double fmax_hz, double rate);

// Orthonormal DCT-II, first n_coeffs coefficients.
std::vector<double> dct_cepstra(std::span<const double> log_energies, int n_coeffs);
// Full orthonormal DCT-III (inverse of the full-length DCT-II).
std::vector<double> inverse_dct(std::span<const double> coeffs);

struct LpcResult {
  std::vector<double> coeffs;  // a_1..a_order, predictor convention: R a = r
  double gain = 0.0;           // final prediction error power
  std::vector<double> reflection;
};

LpcResult levinson_durbin(std::span<const double> autocorr, int order);

// c_0 = ln(gain), c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}.
std::vector<double> lpc_to_cepstra(std::span<const double> lpc, double gain, int n_coeffs);

// Equal-loudness weight at frequency f (Hz).
double equal_loudness(double hz);

Matrix append_deltas(const Matrix& statics, int delta_window);

FrameMatrix extract_features(const RawSignal& signal, FeatureKind kind,
                             const FrontendConfig& config = {});

}  // namespace orbitsig
