#include "orbitsig/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/rng.hpp"
#include "orbitsig/wav.hpp"

namespace orbitsig {

void VowelSpec::validate(double rate) const {
  const auto& f = formants_hz;
  if (!(0.0 < f[0] && f[0] < f[1] && f[1] < f[2] && f[2] < rate / 2.0)) {
    throw Error(ErrorCode::kBadSpec, class_name + ": need 0 < F1 < F2 < F3 < rate/2");
  }
  for (double b : bandwidths_hz) {
    if (!(b > 0.0)) throw Error(ErrorCode::kBadSpec, class_name + ": bandwidths must be > 0");
  }
  if (!(f0_hz > 0.0)) throw Error(ErrorCode::kBadSpec, class_name + ": f0 must be > 0");
  if (!(duration_ms > 0.0)) throw Error(ErrorCode::kBadSpec, class_name + ": duration must be > 0");
}

RawSignal synth_vowel(const VowelSpec& spec, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::kBadSpec, "rate must be > 0");
  spec.validate(rate);
  const auto n = static_cast<std::size_t>(std::lround(spec.duration_ms * rate / 1000.0));
  if (n == 0) throw Error(ErrorCode::kBadSpec, "duration shorter than one sample");
  std::vector<double> x(n, 0.0);
  const double period = rate / spec.f0_hz;
  for (double t = 0.0; t < static_cast<double>(n); t += period) {
    const auto i = static_cast<std::size_t>(std::ceil(t - 1e-9));
    if (i < n) x[i] = 1.0;
  }
  for (int r = 0; r < 3; ++r) {
    const double radius = std::exp(-std::numbers::pi * spec.bandwidths_hz[r] / rate);
    const double theta = 2.0 * std::numbers::pi * spec.formants_hz[r] / rate;
    const double b1 = 2.0 * radius * std::cos(theta);
    const double b2 = -radius * radius;
    const double g = 1.0 - b1 - b2;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
      const double y = g * v + b1 * y1 + b2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (!(peak > 0.0)) throw Error(ErrorCode::kBadSpec, "synthesized signal has no energy");
  for (double& v : x) v *= 0.5 / peak;
  return {std::move(x), rate};
}

void TransformSpec::validate() const {
  if (!(time_scale > 0.0)) throw Error(ErrorCode::kBadSpec, "time_scale must be > 0");
  if (!(pitch_scale > 0.0) || !(formant_scale > 0.0)) {
    throw Error(ErrorCode::kBadSpec, "pitch/formant scales must be > 0");
  }
  if (channel_filter.empty()) throw Error(ErrorCode::kBadSpec, "channel filter is empty");
  if (!std::isfinite(time_shift_ms)) throw Error(ErrorCode::kBadSpec, "time shift must be finite");
}

bool TransformSpec::is_identity() const {
  return time_scale == 1.0 && time_shift_ms == 0.0 && channel_filter == std::vector<double>{1.0} &&
         !noise_snr_db && pitch_scale == 1.0 && formant_scale == 1.0;
}

RawSignal apply_transform(const RawSignal& signal, const TransformSpec& spec,
                          const std::optional<VowelSpec>& source) {
  spec.validate();
  signal.validate();
  RawSignal cur = signal;
  if (spec.pitch_scale != 1.0 || spec.formant_scale != 1.0) {
    if (!source) {
      throw Error(ErrorCode::kUnsupportedOnRawAudio,
                  "pitch/formant scaling needs the source vowel specification");
    }
    VowelSpec v = *source;
    v.f0_hz *= spec.pitch_scale;
    for (double& f : v.formants_hz) f *= spec.formant_scale;
    cur = synth_vowel(v, signal.rate);
  }

  if (spec.time_scale != 1.0 || spec.time_shift_ms != 0.0) {
    const double a = spec.time_scale;
    const double shift = spec.time_shift_ms * cur.rate / 1000.0;
    const auto len = static_cast<std::size_t>(std::lround(static_cast<double>(cur.samples.size()) / a));
    std::vector<double> out(len, 0.0);
    const auto last = static_cast<double>(cur.samples.size()) - 1.0;
    for (std::size_t n = 0; n < len; ++n) {
      const double pos = a * static_cast<double>(n) - shift;
      if (pos < 0.0 || pos > last) continue;
      const auto i = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(i);
      const double next = i + 1 < cur.samples.size() ? cur.samples[i + 1] : 0.0;
      out[n] = frac == 0.0 ? cur.samples[i] : cur.samples[i] * (1.0 - frac) + next * frac;
    }
    cur.samples = std::move(out);
  }

  if (spec.channel_filter != std::vector<double>{1.0}) {
    const auto& v = spec.channel_filter;
    std::vector<double> out(cur.samples.size(), 0.0);
    for (std::size_t n = 0; n < out.size(); ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < v.size() && k <= n; ++k) acc += v[k] * cur.samples[n - k];
      out[n] = acc;
    }
    cur.samples = std::move(out);
  }

  if (spec.noise_snr_db) {
    double p_signal = 0.0;
    for (double s : cur.samples) p_signal += s * s;
    p_signal /= static_cast<double>(std::max<std::size_t>(cur.samples.size(), 1));
    Rng rng(spec.seed);
    std::vector<double> noise(cur.samples.size());
    double p_noise = 0.0;
    for (double& e : noise) {
      e = rng.gaussian();
      p_noise += e * e;
    }
    p_noise /= static_cast<double>(std::max<std::size_t>(noise.size(), 1));
    const double target = p_signal / std::pow(10.0, *spec.noise_snr_db / 10.0);
    const double gain = p_noise > 0.0 ? std::sqrt(target / p_noise) : 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) cur.samples[i] += gain * noise[i];
  }
  return cur;
}

std::vector<double> circular_shift(std::span<const double> x, long long j) {
  const auto d = static_cast<long long>(x.size());
  std::vector<double> out(x.size());
  if (d == 0) return out;
  const long long s = ((j % d) + d) % d;
  for (long long i = 0; i < d; ++i) out[i] = x[((i - s) % d + d) % d];
  return out;
}

std::vector<double> random_lowpass_fir(std::size_t taps, std::uint64_t seed) {
  if (taps == 0) throw Error(ErrorCode::kBadSpec, "FIR needs at least one tap");
  if (taps == 1) return {1.0};
  // Hann-tapered positive weights with a random skew: smooth, low-pass.
  Rng rng(seed);
  const double skew = rng.uniform(-0.6, 0.6);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps; ++k) {
    const double t = (static_cast<double>(k) + 1.0) / (static_cast<double>(taps) + 1.0);
    const double hann = std::sin(std::numbers::pi * t);
    h[k] = hann * hann * (1.0 + skew * (2.0 * t - 1.0)) * rng.uniform(0.7, 1.3);
    sum += h[k];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<VowelSpec> default_vowel_table() {
  struct Row {
    const char* name;
    double f1, f2, f3;
  };
  static constexpr Row rows[] = {
      {"iy", 270, 2290, 3010}, {"ih", 390, 1990, 2550}, {"eh", 530, 1840, 2480},
      {"ae", 660, 1720, 2410}, {"ah", 520, 1190, 2390}, {"aa", 730, 1090, 2440},
      {"ao", 570, 840, 2410},  {"uh", 440, 1020, 2240}, {"uw", 300, 870, 2240},
      {"er", 490, 1350, 1690},
  };
  std::vector<VowelSpec> out;
  for (const auto& r : rows) {
    VowelSpec v;
    v.class_name = r.name;
    v.formants_hz = {r.f1, r.f2, r.f3};
    v.bandwidths_hz = {60.0, 90.0, 150.0};
    out.push_back(v);
  }
  return out;
}

std::vector<VowelSpec> load_vowel_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot open vowel table " + path.string());
  std::vector<VowelSpec> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    std::istringstream s(body);
    VowelSpec v;
    if (!(s >> v.class_name >> v.formants_hz[0] >> v.formants_hz[1] >> v.formants_hz[2] >>
          v.bandwidths_hz[0] >> v.bandwidths_hz[1] >> v.bandwidths_hz[2])) {
      throw Error(ErrorCode::kBadConfig, path.string() + ":" + std::to_string(lineno) +
                                             ": expected `class F1 F2 F3 B1 B2 B3`");
    }
    out.push_back(v);
  }
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kPool: return "pool";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  if (s == "pool") return Split::kPool;
  throw Error(ErrorCode::kFormatError, "unknown split '" + s + "'");
}

void CorpusConfig::validate() const {
  if (classes.size() < 2) throw Error(ErrorCode::kBadConfig, "need at least 2 vowel classes");
  if (n_train < 1 || n_test < 1 || n_pool < 1) {
    throw Error(ErrorCode::kBadConfig, "every split needs at least one item per class");
  }
  if (!(rate > 0.0)) throw Error(ErrorCode::kBadConfig, "rate must be > 0");
  auto check_range = [](const std::array<double, 2>& r, const char* name, double floor) {
    if (!(r[0] > floor && r[0] <= r[1])) {
      throw Error(ErrorCode::kBadConfig, std::string(name) + ": need " + std::to_string(floor) +
                                             " < min <= max");
    }
  };
  check_range(duration_ms, "duration_ms", 0.0);
  check_range(f0_hz, "f0_hz", 0.0);
  check_range(formant_scale, "formant_scale", 0.0);
  check_range(time_scale, "time_scale", 0.0);
  if (pad_ms < shift_ms || shift_ms < 0.0) {
    throw Error(ErrorCode::kBadConfig, "need 0 <= shift_ms <= pad_ms");
  }
  if (n_dialects < 1) throw Error(ErrorCode::kBadConfig, "n_dialects must be >= 1");
  if (fir_taps < 1 || fir_taps > 9) throw Error(ErrorCode::kBadConfig, "fir_taps must be in [1, 9]");
}

CorpusConfig CorpusConfig::from_config(KeyValueConfig& cfg) {
  CorpusConfig c;
  auto range = [&cfg](const char* key, std::array<double, 2>& dst) {
    if (auto v = cfg.get_doubles(key)) {
      if (v->size() != 2) throw Error(ErrorCode::kBadConfig, std::string(key) + " needs `min, max`");
      dst = {(*v)[0], (*v)[1]};
    }
  };
  if (auto v = cfg.get_strings("classes")) c.classes = *v;
  if (auto v = cfg.get_int("n_train")) c.n_train = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_int("n_test")) c.n_test = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_int("n_pool")) c.n_pool = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_double("rate")) c.rate = *v;
  if (auto v = cfg.get_int("corpus_seed")) c.seed = static_cast<std::uint64_t>(*v);
  range("duration_ms", c.duration_ms);
  if (auto v = cfg.get_double("pad_ms")) c.pad_ms = *v;
  range("f0_hz", c.f0_hz);
  range("formant_scale", c.formant_scale);
  if (auto v = cfg.get_int("n_dialects")) c.n_dialects = static_cast<std::size_t>(*v);
  range("time_scale", c.time_scale);
  if (auto v = cfg.get_double("shift_ms")) c.shift_ms = *v;
  if (auto v = cfg.get_int("fir_taps")) c.fir_taps = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_string("noise_snr_db")) {
    c.noise_snr_db = *v == "none" ? std::nullopt : std::optional<double>(parse_number(*v));
  }
  if (auto v = cfg.get_string("vowel_table")) c.vowel_table = *v;
  c.validate();
  return c;
}

namespace {

struct SpeakerParams {
  std::string id;
  std::string dialect;
  double f0 = 0.0;
  double formant_scale = 1.0;
};

}  // namespace

Corpus generate_corpus(const CorpusConfig& config) {
  config.validate();
  const auto table = config.vowel_table ? load_vowel_table(*config.vowel_table) : default_vowel_table();
  std::vector<VowelSpec> vowels;
  for (const auto& name : config.classes) {
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const VowelSpec& v) { return v.class_name == name; });
    if (it == table.end()) throw Error(ErrorCode::kBadConfig, "vowel '" + name + "' not in table");
    vowels.push_back(*it);
  }

  const std::array<std::pair<Split, std::size_t>, 3> splits{
      {{Split::kTrain, config.n_train}, {Split::kTest, config.n_test}, {Split::kPool, config.n_pool}}};
  const char* prefixes[] = {"tr", "te", "po"};

  // Speakers first (cheap, sequential), then items in parallel.
  struct Job {
    Split split;
    SpeakerParams speaker;
    std::size_t vowel;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::uint64_t speaker_index = 0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    for (std::size_t k = 0; k < splits[s].second; ++k, ++speaker_index) {
      Rng rng(mix_seed(config.seed, 0x5eed0000ULL + speaker_index));
      SpeakerParams spk;
      char id[32];
      std::snprintf(id, sizeof id, "%s%04zu", prefixes[s], k);
      spk.id = id;
      spk.f0 = rng.uniform(config.f0_hz[0], config.f0_hz[1]);
      spk.formant_scale = rng.uniform(config.formant_scale[0], config.formant_scale[1]);
      const double span = config.formant_scale[1] - config.formant_scale[0];
      std::size_t band = span > 0.0 ? static_cast<std::size_t>((spk.formant_scale - config.formant_scale[0]) /
                                                               span * static_cast<double>(config.n_dialects))
                                    : 0;
      band = std::min(band, config.n_dialects - 1);
      spk.dialect = "dr" + std::to_string(band + 1);
      for (std::size_t v = 0; v < vowels.size(); ++v) {
        jobs.push_back({splits[s].first, spk, v, mix_seed(config.seed, jobs.size())});
      }
    }
  }

  Corpus corpus;
  corpus.generator_seed = config.seed;
  corpus.items.resize(jobs.size());
  const auto n_jobs = static_cast<long long>(jobs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (long long j = 0; j < n_jobs; ++j) {
    try {
      const Job& job = jobs[j];
      Rng rng(job.seed);
      VowelSpec base = vowels[job.vowel];
      base.f0_hz = job.speaker.f0 * rng.uniform(0.92, 1.08);
      base.duration_ms = rng.uniform(config.duration_ms[0], config.duration_ms[1]);

      TransformSpec t;
      t.formant_scale = job.speaker.formant_scale;
      t.pitch_scale = 1.0;
      t.time_scale = rng.uniform(config.time_scale[0], config.time_scale[1]);
      t.time_shift_ms = rng.uniform(-config.shift_ms, config.shift_ms);
      const auto taps = 1 + rng.index(config.fir_taps);
      t.channel_filter = random_lowpass_fir(taps, rng.next());
      t.noise_snr_db = config.noise_snr_db;
      t.seed = rng.next();

      // Speaker formant scaling is applied by re-synthesis; the padded
      // utterance then goes through warp, channel and noise.
      VowelSpec spoken = base;
      for (double& f : spoken.formants_hz) f *= t.formant_scale;
      const RawSignal vowel = synth_vowel(spoken, config.rate);
      const auto pad = static_cast<std::size_t>(std::lround(config.pad_ms * config.rate / 1000.0));
      RawSignal utt;
      utt.rate = config.rate;
      utt.samples.assign(pad, 0.0);
      utt.samples.insert(utt.samples.end(), vowel.samples.begin(), vowel.samples.end());
      utt.samples.insert(utt.samples.end(), pad, 0.0);

      TransformSpec channel = t;
      channel.formant_scale = 1.0;
      CorpusItem item;
      item.signal = apply_transform(utt, channel);
      quantize_pcm16(item.signal.samples);
      item.split = job.split;
      item.vowel = base;
      item.transform = t;
      auto& seg = item.segment;
      seg.utterance_id = job.speaker.id + "_" + base.class_name;
      seg.label = base.class_name;
      seg.speaker_id = job.speaker.id;
      seg.dialect_id = job.speaker.dialect;
      // Nominal boundaries follow the time scaling but not the shift.
      seg.start_sample = static_cast<std::size_t>(std::lround(static_cast<double>(pad) / t.time_scale));
      seg.end_sample = static_cast<std::size_t>(
          std::lround(static_cast<double>(pad + vowel.samples.size()) / t.time_scale));
      seg.end_sample = std::min(seg.end_sample, item.signal.samples.size());
      corpus.items[j] = std::move(item);
    } catch (...) {
#pragma omp critical(orbitsig_corpus_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "wav");
  std::filesystem::create_directories(dir / "lab");
  std::map<std::string, SpeakerInfo> meta;
  std::ofstream splits(dir / "splits.txt");
  if (!splits) throw Error(ErrorCode::kFormatError, "cannot write " + (dir / "splits.txt").string());
  for (const auto& item : corpus.items) {
    const auto& seg = item.segment;
    write_wav(dir / "wav" / (seg.utterance_id + ".wav"), item.signal.samples,
              static_cast<int>(std::lround(item.signal.rate)));
    std::vector<LabelLine> labels;
    if (seg.start_sample > 0) labels.push_back({0, seg.start_sample, "h#"});
    labels.push_back({seg.start_sample, seg.end_sample, seg.label});
    if (seg.end_sample < item.signal.samples.size()) {
      labels.push_back({seg.end_sample, item.signal.samples.size(), "h#"});
    }
    write_labels(dir / "lab" / (seg.utterance_id + ".phn"), labels);
    meta[seg.utterance_id] = {seg.speaker_id, seg.dialect_id};
    splits << seg.utterance_id << ' ' << to_string(item.split) << '\n';
  }
  write_metadata(dir / "metadata.txt", meta);
  std::ofstream seed(dir / "corpus_seed.txt");
  seed << corpus.generator_seed << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
  const auto meta = read_metadata(dir / "metadata.txt");
  std::ifstream splits(dir / "splits.txt");
  if (!splits) throw Error(ErrorCode::kFormatError, "cannot open " + (dir / "splits.txt").string());
  Corpus corpus;
  std::string line;
  while (std::getline(splits, line)) {
    std::istringstream s(line);
    std::string utt, split;
    if (!(s >> utt >> split)) continue;
    auto it = meta.find(utt);
    if (it == meta.end()) throw Error(ErrorCode::kMissingMetadata, "no metadata for " + utt);
    const auto wav = read_wav(dir / "wav" / (utt + ".wav"));
    for (const auto& lab : read_labels(dir / "lab" / (utt + ".phn"))) {
      if (lab.label == "h#" || lab.label == "pau" || lab.label == "epi") continue;
      CorpusItem item;
      item.signal = {wav.samples, wav.rate};
      item.split = parse_split(split);
      item.segment = {utt, lab.start_sample, lab.end_sample, lab.label, it->second.speaker_id,
                      it->second.dialect_id};
      item.vowel.class_name = lab.label;
      corpus.items.push_back(std::move(item));
    }
  }
  std::ifstream seed(dir / "corpus_seed.txt");
  if (seed) seed >> corpus.generator_seed;
  return corpus;
}

}  // namespace orbitsig
