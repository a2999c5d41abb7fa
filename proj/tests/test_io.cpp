#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "orbitsig/config_file.hpp"
#include "orbitsig/error.hpp"
#include "orbitsig/io.hpp"
#include "orbitsig/wav.hpp"

using namespace orbitsig;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("orbitsig_io_" + name); }

}  // namespace

TEST_CASE("key = value config parsing") {
  auto cfg = KeyValueConfig::parse("# comment\nalpha = 1.5\nlist = 1, 2 ,3\nname = PLP\n\nn=4\n");
  CHECK(cfg.get_double("alpha") == 1.5);
  CHECK(*cfg.get_doubles("list") == std::vector<double>{1, 2, 3});
  CHECK(*cfg.get_string("name") == "PLP");
  CHECK(!cfg.get_int("missing"));
  CHECK_THROWS_AS(cfg.finish(), Error);  // n unread
  CHECK(*cfg.get_int("n") == 4);
  cfg.finish();
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), Error);
  auto bad = KeyValueConfig::parse("x = abc\n");
  CHECK_THROWS_AS(bad.get_double("x"), Error);
  CHECK(split_list(" a, b,,c ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("WAV round-trip is exact on the PCM16 grid") {
  std::vector<double> x;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) x.push_back(u(rng));
  quantize_pcm16(x);
  write_wav(tmp("a.wav"), x, 16000);
  const WavData w = read_wav(tmp("a.wav"));
  CHECK(w.rate == 16000);
  CHECK(w.samples == x);
  CHECK(to_pcm16(2.0) == 32767);
  CHECK(to_pcm16(-2.0) == -32768);
  fs::remove(tmp("a.wav"));
}

TEST_CASE("malformed WAV data is a format error") {
  auto bytes = encode_wav(std::vector<double>{0.0, 0.5}, 16000);
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_wav(bytes), Error);
  auto stereo = encode_wav(std::vector<double>{0.0, 0.5}, 16000);
  stereo[22] = 2;  // channel count
  try {
    parse_wav(stereo);
    FAIL("expected FormatError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormatError);
  }
  CHECK_THROWS_AS(parse_wav(std::vector<unsigned char>(10, 0)), Error);
}

TEST_CASE("label and metadata files round-trip") {
  const std::vector<LabelLine> labs{{0, 960, "h#"}, {960, 3000, "iy"}, {3000, 4000, "h#"}};
  write_labels(tmp("x.phn"), labs);
  const auto back = read_labels(tmp("x.phn"));
  REQUIRE(back.size() == 3);
  CHECK(back[1].label == "iy");
  CHECK(back[1].start_sample == 960);
  CHECK(back[2].end_sample == 4000);
  std::map<std::string, SpeakerInfo> meta{{"u1", {"s1", "dr2"}}, {"u2", {"s2", "dr1"}}};
  write_metadata(tmp("meta.txt"), meta);
  const auto m = read_metadata(tmp("meta.txt"));
  CHECK(m.at("u1").dialect_id == "dr2");
  CHECK(m.at("u2").speaker_id == "s2");
  fs::remove(tmp("x.phn"));
  fs::remove(tmp("meta.txt"));
}

TEST_CASE("segment CSV round-trips every bit") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1e3);
  std::vector<SegmentVector> rows;
  for (int i = 0; i < 5; ++i) {
    SegmentVector v;
    v.kind = FeatureKind::kPLP;
    v.segment = {"utt" + std::to_string(i), std::size_t(100 * i), std::size_t(100 * i + 50), "aa", "spk", "dr3"};
    for (int j = 0; j < 195; ++j) v.values.push_back(g(rng) * std::pow(10.0, (j % 9) - 4));
    rows.push_back(v);
  }
  write_segment_csv(tmp("seg.csv"), rows, FeatureKind::kPLP);
  const SegmentTable t = read_segment_csv(tmp("seg.csv"));
  CHECK(t.kind == FeatureKind::kPLP);
  CHECK(t.dim == 195);
  REQUIRE(t.rows.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(t.rows[i].values == rows[i].values);
    CHECK(t.rows[i].segment == rows[i].segment);
  }
  const FeatureTable ft = read_feature_csv(tmp("seg.csv"));
  CHECK(ft.features.cols() == 195);
  CHECK(ft.header.at("kind") == "PLP");
  CHECK(ft.segments[2].dialect_id == "dr3");
  // Wrong kind/width combination is rejected.
  rows[0].values.pop_back();
  CHECK_THROWS_AS(write_segment_csv(tmp("seg2.csv"), rows, FeatureKind::kPLP), Error);
  fs::remove(tmp("seg.csv"));
}

TEST_CASE("signature CSV carries the store header and exact values") {
  Matrix sig(2, 3);
  sig(0, 0) = 0.1;
  sig(1, 2) = 1.0 / 3.0;
  const std::vector<PhoneSegment> segs{{"a", 0, 10, "iy", "", ""}, {"b", 5, 15, "uw", "", ""}};
  write_signature_csv(tmp("sig.csv"), segs, sig, "deadbeef", 3, 1, "moments:mean");
  const FeatureTable t = read_feature_csv(tmp("sig.csv"));
  CHECK(t.features == sig);
  CHECK(t.header.at("store_id") == "deadbeef");
  CHECK(t.header.at("K") == "3");
  CHECK(t.segments[1].label == "uw");
  fs::remove(tmp("sig.csv"));
}

TEST_CASE("frame CSV layout") {
  FrameMatrix fm;
  fm.values = Matrix(2, 3, 0.5);
  std::ostringstream out;
  write_frame_csv(out, "u1", fm, true);
  const std::string s = out.str();
  CHECK(s.rfind("utterance,frame,c0,c1,c2\n", 0) == 0);
  CHECK(s.find("u1,1,0.5,0.5,0.5") != std::string::npos);
}

TEST_CASE("number parsing") {
  CHECK(parse_number("1e-3") == 0.001);
  CHECK(parse_number(format_exact(0.1)) == 0.1);
  CHECK_THROWS_AS(parse_number("1.5x"), Error);
  CHECK_THROWS_AS(parse_number(""), Error);
}
