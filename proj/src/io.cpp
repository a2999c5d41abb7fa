#include "orbitsig/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "orbitsig/config_file.hpp"
#include "orbitsig/error.hpp"

namespace orbitsig {

std::string format_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double parse_number(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw Error(ErrorCode::kFormatError, "not a number: '" + text + "'");
  }
  return v;
}

namespace {

std::size_t parse_count(const std::string& text) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kFormatError, "not a sample index: '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

std::map<std::string, std::string> parse_comment_header(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream in(line.substr(1));
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

}  // namespace

std::vector<LabelLine> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open label file " + path.string());
  std::vector<LabelLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string a, b, label, extra;
    if (!(fields >> a >> b >> label) || (fields >> extra)) {
      throw Error(ErrorCode::kFormatError, path.string() + ":" + std::to_string(lineno) +
                                               ": expected `start end label`");
    }
    out.push_back({parse_count(a), parse_count(b), label});
  }
  return out;
}

void write_labels(const std::filesystem::path& path, const std::vector<LabelLine>& lines) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  for (const auto& l : lines) out << l.start_sample << ' ' << l.end_sample << ' ' << l.label << '\n';
}

std::map<std::string, SpeakerInfo> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open metadata file " + path.string());
  std::map<std::string, SpeakerInfo> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::istringstream fields(line);
    std::string utt, spk, dr, extra;
    if (!(fields >> utt >> spk >> dr) || (fields >> extra)) {
      throw Error(ErrorCode::kFormatError, path.string() + ":" + std::to_string(lineno) +
                                               ": expected `utterance speaker dialect`");
    }
    out[utt] = {spk, dr};
  }
  return out;
}

void write_metadata(const std::filesystem::path& path,
                    const std::map<std::string, SpeakerInfo>& meta) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  for (const auto& [utt, info] : meta) {
    out << utt << ' ' << info.speaker_id << ' ' << info.dialect_id << '\n';
  }
}

void write_frame_csv(std::ostream& out, const std::string& utterance, const FrameMatrix& frames,
                     bool header) {
  const std::size_t cols = frames.values.cols();
  if (header) {
    out << "utterance,frame";
    for (std::size_t c = 0; c < cols; ++c) out << ",c" << c;
    out << '\n';
  }
  for (std::size_t f = 0; f < frames.values.rows(); ++f) {
    out << utterance << ',' << f;
    for (double v : frames.values.row(f)) out << ',' << format_9(v);
    out << '\n';
  }
}

std::string segment_csv_header(std::size_t dim) {
  std::string h = "utterance,start,end,label,speaker,dialect";
  for (std::size_t i = 0; i < dim; ++i) h += ",v" + std::to_string(i);
  return h;
}

std::string segment_csv_row(const SegmentVector& v) {
  const auto& s = v.segment;
  std::string row = s.utterance_id + ',' + std::to_string(s.start_sample) + ',' +
                    std::to_string(s.end_sample) + ',' + s.label + ',' + s.speaker_id + ',' +
                    s.dialect_id;
  for (double x : v.values) row += ',' + format_exact(x);
  return row;
}

SegmentVector parse_segment_row(const std::string& line, FeatureKind kind, std::size_t dim) {
  const auto cells = split_csv(line);
  if (cells.size() != 6 + dim) {
    throw Error(ErrorCode::kFormatError, "segment row has " + std::to_string(cells.size()) +
                                             " cells, expected " + std::to_string(6 + dim));
  }
  SegmentVector v;
  v.kind = kind;
  v.segment.utterance_id = cells[0];
  v.segment.start_sample = parse_count(cells[1]);
  v.segment.end_sample = parse_count(cells[2]);
  v.segment.label = cells[3];
  v.segment.speaker_id = cells[4];
  v.segment.dialect_id = cells[5];
  v.values.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) v.values.push_back(parse_number(cells[6 + i]));
  return v;
}

void write_segment_csv(const std::filesystem::path& path, const std::vector<SegmentVector>& rows,
                       FeatureKind kind) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  const std::size_t dim = static_cast<std::size_t>(segment_dim(kind));
  out << "# kind=" << to_string(kind) << " dim=" << dim << '\n';
  out << segment_csv_header(dim) << '\n';
  for (const auto& r : rows) {
    if (r.values.size() != dim || r.kind != kind) {
      throw Error(ErrorCode::kDimensionMismatch, "segment vector does not match table kind");
    }
    out << segment_csv_row(r) << '\n';
  }
}

SegmentTable read_segment_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw Error(ErrorCode::kFormatError, path.string() + ": missing `# kind=...` header");
  }
  const auto header = parse_comment_header(line);
  if (!header.count("kind") || !header.count("dim")) {
    throw Error(ErrorCode::kFormatError, path.string() + ": not a segment CSV");
  }
  SegmentTable table;
  table.kind = parse_feature_kind(header.at("kind"));
  table.dim = parse_count(header.at("dim"));
  if (!std::getline(in, line) || line.rfind("utterance,start,end,label,speaker,dialect", 0) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": missing column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(parse_segment_row(line, table.kind, table.dim));
  }
  return table;
}

void write_signature_csv(const std::filesystem::path& path, const std::vector<PhoneSegment>& segs,
                         const Matrix& signatures, const std::string& store_id, std::size_t k,
                         std::size_t n_outputs, const std::string& estimator) {
  if (segs.size() != signatures.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "segment/signature row counts differ");
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFormatError, "cannot write " + path.string());
  out << "# store_id=" << store_id << " K=" << k << " N=" << n_outputs
      << " estimator=" << estimator << '\n';
  out << "utterance,start,end,label";
  for (std::size_t i = 0; i < signatures.cols(); ++i) out << ",s" << i;
  out << '\n';
  for (std::size_t r = 0; r < segs.size(); ++r) {
    out << segs[r].utterance_id << ',' << segs[r].start_sample << ',' << segs[r].end_sample << ','
        << segs[r].label;
    for (double v : signatures.row(r)) out << ',' << format_exact(v);
    out << '\n';
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFormatError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw Error(ErrorCode::kFormatError, path.string() + ": missing comment header");
  }
  FeatureTable table;
  table.header = parse_comment_header(line);
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormatError, path.string() + ": empty");
  const auto columns = split_csv(line);
  std::size_t meta_cols = 0;
  if (line.rfind("utterance,start,end,label,speaker,dialect", 0) == 0) {
    meta_cols = 6;
  } else if (line.rfind("utterance,start,end,label", 0) == 0) {
    meta_cols = 4;
  } else {
    throw Error(ErrorCode::kFormatError, path.string() + ": unrecognized column header");
  }
  const std::size_t p = columns.size() - meta_cols;
  table.features = Matrix(0, p);
  std::vector<double> values(p);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns.size()) {
      throw Error(ErrorCode::kFormatError, path.string() + ": row with " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(columns.size()));
    }
    PhoneSegment seg;
    seg.utterance_id = cells[0];
    seg.start_sample = parse_count(cells[1]);
    seg.end_sample = parse_count(cells[2]);
    seg.label = cells[3];
    if (meta_cols == 6) {
      seg.speaker_id = cells[4];
      seg.dialect_id = cells[5];
    }
    for (std::size_t i = 0; i < p; ++i) values[i] = parse_number(cells[meta_cols + i]);
    table.segments.push_back(std::move(seg));
    table.features.append_row(values);
  }
  return table;
}

}  // namespace orbitsig
