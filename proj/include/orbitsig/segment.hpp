#pragma once

// Fixed-length segment vectors: five frame-mean blocks (pre-extension,
// 3-4-3 interior split, post-extension) over frames with deltas appended.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "orbitsig/frontend.hpp"

namespace orbitsig {

struct PhoneSegment {
  std::string utterance_id;
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;
  std::string label;
  std::string speaker_id;
  std::string dialect_id;

  void validate() const;
  bool operator==(const PhoneSegment&) const = default;
};

struct SegmentVector {
  std::vector<double> values;  // 15 * static_dim
  FeatureKind kind = FeatureKind::kMFC;
  PhoneSegment segment;
};

// Half-open frame index range [begin, end).
struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const FrameRange&) const = default;
};

// Boundaries at round(0.3 n) and round(0.7 n). An empty range is replaced by
// its nearest frame so every range holds at least one frame.
std::array<FrameRange, 3> split_343(std::size_t n_interior_frames);

int segment_dim(FeatureKind kind);

SegmentVector aggregate_segment(const FrameMatrix& frames, const PhoneSegment& segment,
                                std::size_t n_samples, double rate, double extension_ms = 30.0);

}  // namespace orbitsig
