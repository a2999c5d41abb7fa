#include "orbitsig/segment.hpp"

#include <cmath>

#include "orbitsig/error.hpp"

namespace orbitsig {

void PhoneSegment::validate() const {
  if (start_sample >= end_sample) {
    throw Error(ErrorCode::kEmptySegment, utterance_id + ": start " + std::to_string(start_sample) +
                                              " >= end " + std::to_string(end_sample));
  }
  if (label.empty()) throw Error(ErrorCode::kBadParameter, utterance_id + ": empty label");
}

int segment_dim(FeatureKind kind) { return 15 * static_dim(kind); }

std::array<FrameRange, 3> split_343(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptySegment, "segment has no interior frames");
  const auto nd = static_cast<double>(n);
  const auto b1 = static_cast<std::size_t>(std::lround(0.3 * nd));
  const auto b2 = static_cast<std::size_t>(std::lround(0.7 * nd));
  std::array<FrameRange, 3> ranges{FrameRange{0, b1}, FrameRange{b1, b2}, FrameRange{b2, n}};
  for (auto& r : ranges) {
    if (r.size() == 0) {
      const std::size_t at = std::min(r.begin, n - 1);
      r = {at, at + 1};
    }
  }
  return ranges;
}

namespace {

void add_mean(const Matrix& m, std::span<const std::size_t> rows, std::span<double> out) {
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = 0.0;
  for (std::size_t r : rows) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  const auto count = static_cast<double>(rows.size());
  for (double& v : out) v /= count;
}

}  // namespace

SegmentVector aggregate_segment(const FrameMatrix& frames, const PhoneSegment& segment,
                                std::size_t n_samples, double rate, double extension_ms) {
  segment.validate();
  const Matrix& m = frames.values;
  if (m.rows() == 0) throw Error(ErrorCode::kEmptySegment, "utterance has no frames");
  const std::size_t start = segment.start_sample;
  const std::size_t end = std::min(segment.end_sample, n_samples);
  if (start >= end) {
    throw Error(ErrorCode::kEmptySegment,
                segment.utterance_id + ": segment lies outside the utterance");
  }
  const std::size_t w = frames.config.window_samples(rate);
  const std::size_t h = frames.config.hop_samples(rate);
  const auto ext = static_cast<std::size_t>(std::lround(extension_ms * rate / 1000.0));
  const std::size_t pre_lo = start > ext ? start - ext : 0;
  const std::size_t post_hi = std::min(end + ext, n_samples);

  // Twice the frame-center position keeps the comparison in integers.
  std::vector<std::size_t> pre, interior, post;
  for (std::size_t f = 0; f < m.rows(); ++f) {
    const std::size_t c2 = 2 * f * h + w;
    if (c2 >= 2 * pre_lo && c2 < 2 * start) {
      pre.push_back(f);
    } else if (c2 >= 2 * start && c2 < 2 * end) {
      interior.push_back(f);
    } else if (c2 >= 2 * end && c2 < 2 * post_hi) {
      post.push_back(f);
    }
  }
  if (interior.empty()) {
    // Segment shorter than a hop: take the frame whose center is nearest.
    const double mid2 = static_cast<double>(start + end);
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t f = 0; f < m.rows(); ++f) {
      const double d = std::fabs(static_cast<double>(2 * f * h + w) - mid2);
      if (d < best_d) {
        best_d = d;
        best = f;
      }
    }
    interior.push_back(best);
  }

  const std::size_t d = m.cols();
  SegmentVector out;
  out.kind = frames.kind;
  out.segment = segment;
  out.values.assign(5 * d, 0.0);
  std::span<double> blocks(out.values);
  const auto parts = split_343(interior.size());
  for (std::size_t p = 0; p < 3; ++p) {
    add_mean(m, std::span(interior).subspan(parts[p].begin, parts[p].size()),
             blocks.subspan((p + 1) * d, d));
  }
  if (pre.empty()) {
    std::copy_n(blocks.begin() + d, d, blocks.begin());
  } else {
    add_mean(m, pre, blocks.subspan(0, d));
  }
  if (post.empty()) {
    std::copy_n(blocks.begin() + 3 * d, d, blocks.begin() + 4 * d);
  } else {
    add_mean(m, post, blocks.subspan(4 * d, d));
  }
  return out;
}

}  // namespace orbitsig
