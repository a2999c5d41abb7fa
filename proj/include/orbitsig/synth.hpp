#pragma once

// Synthetic vowel corpus: source-filter formant synthesis plus the nuisance
// transformation model s'(t) = v(t) * s(a t - tau) + n(t).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbitsig/config_file.hpp"
#include "orbitsig/frontend.hpp"
#include "orbitsig/segment.hpp"

namespace orbitsig {

struct VowelSpec {
  std::string class_name;
  std::array<double, 3> formants_hz{};
  std::array<double, 3> bandwidths_hz{};
  double f0_hz = 120.0;
  double duration_ms = 150.0;

  void validate(double rate) const;
};

// Impulse train at f0 through three cascaded unit-DC-gain two-pole
// resonators, peak-normalized to 0.5.
RawSignal synth_vowel(const VowelSpec& spec, double rate);

struct TransformSpec {
  double time_scale = 1.0;
  double time_shift_ms = 0.0;
  std::vector<double> channel_filter{1.0};
  std::optional<double> noise_snr_db;
  double pitch_scale = 1.0;
  double formant_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const;
};

// Pitch/formant scaling re-synthesizes from `source` and is rejected on raw
// audio. Time warp by linear interpolation, causal FIR, then white Gaussian
// noise scaled to the exact requested SNR.
RawSignal apply_transform(const RawSignal& signal, const TransformSpec& spec,
                          const std::optional<VowelSpec>& source = std::nullopt);

// out[i] = x[(i - j) mod dim]
std::vector<double> circular_shift(std::span<const double> x, long long j);

// Random smooth low-pass FIR with unit DC gain and `taps` coefficients.
std::vector<double> random_lowpass_fir(std::size_t taps, std::uint64_t seed);

// The built-in table (also shipped as data/vowels.txt).
std::vector<VowelSpec> default_vowel_table();
std::vector<VowelSpec> load_vowel_table(const std::filesystem::path& path);

enum class Split { kTrain, kTest, kPool };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct CorpusConfig {
  std::vector<std::string> classes{"iy", "ih", "eh", "ae", "aa", "ao", "uh", "uw"};
  std::size_t n_train = 128;
  std::size_t n_test = 25;
  std::size_t n_pool = 40;
  double rate = 16000.0;
  std::uint64_t seed = 1;
  std::array<double, 2> duration_ms{90.0, 200.0};
  double pad_ms = 60.0;
  std::array<double, 2> f0_hz{90.0, 240.0};
  std::array<double, 2> formant_scale{0.85, 1.18};
  std::size_t n_dialects = 3;
  std::array<double, 2> time_scale{0.8, 1.25};
  double shift_ms = 15.0;
  std::size_t fir_taps = 9;
  std::optional<double> noise_snr_db = 20.0;
  std::optional<std::filesystem::path> vowel_table;

  void validate() const;
  static CorpusConfig from_config(KeyValueConfig& cfg);
};

struct CorpusItem {
  RawSignal signal;
  PhoneSegment segment;
  Split split = Split::kTrain;
  VowelSpec vowel;
  TransformSpec transform;
};

struct Corpus {
  std::vector<CorpusItem> items;
  std::uint64_t generator_seed = 0;
};

// Pure function of (config, seed). Speakers are disjoint across splits; each
// speaker utters every class once. Dialect ids band the speaker's formant
// scale. Signals are snapped to the 16-bit PCM grid.
Corpus generate_corpus(const CorpusConfig& config);

// Layout: wav/<utt>.wav, lab/<utt>.phn, metadata.txt, splits.txt.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Reads a corpus directory (synthetic or real) in the layout above. Segments
// labelled h#, pau or epi are skipped.
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace orbitsig
