#pragma once

// Text formats shared by the pipeline stages: TIMIT-style label files,
// speaker/dialect metadata, frame/segment/signature CSVs.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orbitsig/frontend.hpp"
#include "orbitsig/segment.hpp"

namespace orbitsig {

// Shortest round-trip representation (17 significant digits).
std::string format_exact(double v);
// 9 significant digits, used for frame feature CSVs.
std::string format_9(double v);
double parse_number(const std::string& text);

struct LabelLine {
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;
  std::string label;
};

// `start_sample end_sample label` per line.
std::vector<LabelLine> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<LabelLine>& lines);

struct SpeakerInfo {
  std::string speaker_id;
  std::string dialect_id;
};

// `utterance_id speaker_id dialect_id` per line.
std::map<std::string, SpeakerInfo> read_metadata(const std::filesystem::path& path);
void write_metadata(const std::filesystem::path& path,
                    const std::map<std::string, SpeakerInfo>& meta);

void write_frame_csv(std::ostream& out, const std::string& utterance, const FrameMatrix& frames,
                     bool header);

std::string segment_csv_header(std::size_t dim);
std::string segment_csv_row(const SegmentVector& v);
SegmentVector parse_segment_row(const std::string& line, FeatureKind kind, std::size_t dim);

// Segment CSV with a leading `# kind=<kind> dim=<d>` comment.
void write_segment_csv(const std::filesystem::path& path, const std::vector<SegmentVector>& rows,
                       FeatureKind kind);
struct SegmentTable {
  FeatureKind kind = FeatureKind::kMFC;
  std::size_t dim = 0;
  std::vector<SegmentVector> rows;
};
SegmentTable read_segment_csv(const std::filesystem::path& path);

// Labelled feature rows of any origin (segments or signatures).
struct FeatureTable {
  std::vector<PhoneSegment> segments;
  Matrix features;
  std::map<std::string, std::string> header;  // key=value pairs from the comment line
};

void write_signature_csv(const std::filesystem::path& path, const std::vector<PhoneSegment>& segs,
                         const Matrix& signatures, const std::string& store_id, std::size_t k,
                         std::size_t n_outputs, const std::string& estimator);

// Reads either a segment CSV or a signature CSV.
FeatureTable read_feature_csv(const std::filesystem::path& path);

}  // namespace orbitsig
