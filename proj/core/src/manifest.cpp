#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dmad/dataio.hpp"
#include "dmad/error.hpp"
#include "dmad/metrics.hpp"

namespace dmad {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> lines_of(std::string_view text) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string t = trim(line);
    if (!t.empty()) out.emplace_back(number, std::move(t));
  }
  return out;
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

std::optional<double> parse_factor(const std::string& text, int line) {
  if (text.empty() || text == "none") return std::nullopt;
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParseError, at_line(line) + "morph_factor '" + text + "' is not a number");
  }
  for (double f : kMorphFactors) {
    if (std::abs(value - f) < 1e-9) return f;
  }
  throw Error(ErrorKind::kSchemaError,
              at_line(line) + "morph_factor must be one of 0.3, 0.5, 0.7 (got " + text + ")");
}

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (base.empty()) return p;
  const auto rel = p.lexically_relative(base);
  return rel.empty() || *rel.begin() == ".." ? p : rel;
}

}  // namespace

std::string factor_key(double factor) { return format_double(factor); }

std::vector<PairRecord> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front().second != kManifestHeader) {
    throw Error(ErrorKind::kSchemaError,
                at_line(lines.empty() ? 1 : lines.front().first) + "expected header '" +
                    std::string(kManifestHeader) + "'");
  }
  std::vector<PairRecord> records;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, line] = lines[i];
    const auto fields = split(line, ',');
    if (fields.size() != 6) {
      throw Error(ErrorKind::kParseError,
                  at_line(number) + "expected 6 fields, got " + std::to_string(fields.size()));
    }
    PairRecord r;
    r.pair_id = fields[0];
    if (r.pair_id.empty()) throw Error(ErrorKind::kSchemaError, at_line(number) + "empty pair_id");
    if (!seen.insert(r.pair_id).second) {
      throw Error(ErrorKind::kSchemaError, at_line(number) + "duplicate pair_id " + r.pair_id);
    }
    if (fields[1].empty() || fields[2].empty()) {
      throw Error(ErrorKind::kSchemaError, at_line(number) + "empty image path");
    }
    r.suspicious_path = (base_dir / fields[1]).lexically_normal();
    r.trusted_path = (base_dir / fields[2]).lexically_normal();
    if (fields[3] == "morph") {
      r.label = Label::kMorph;
    } else if (fields[3] == "bonafide") {
      r.label = Label::kBonaFide;
    } else {
      throw Error(ErrorKind::kSchemaError,
                  at_line(number) + "label must be morph or bonafide (got '" + fields[3] + "')");
    }
    r.morph_factor = parse_factor(fields[4], number);
    for (const std::string& id : split(fields[5], ';')) {
      if (id.empty()) throw Error(ErrorKind::kSchemaError, at_line(number) + "empty subject id");
      r.subject_ids.push_back(id);
    }
    if (r.label == Label::kMorph && !r.morph_factor) {
      throw Error(ErrorKind::kSchemaError, at_line(number) + "morph pair without morph_factor");
    }
    if (r.label == Label::kMorph && r.subject_ids.size() < 2) {
      throw Error(ErrorKind::kSchemaError, at_line(number) + "morph pair needs at least two subjects");
    }
    if (r.label == Label::kBonaFide && r.morph_factor) {
      throw Error(ErrorKind::kSchemaError, at_line(number) + "bona fide pair with a morph_factor");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PairRecord> load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                          path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.filename().string() + " " + e.what());
  }
}

std::string format_manifest(const std::vector<PairRecord>& records,
                            const std::filesystem::path& base_dir) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const PairRecord& r : records) {
    out += r.pair_id + ',' + relative_to(r.suspicious_path, base_dir).generic_string() + ',' +
           relative_to(r.trusted_path, base_dir).generic_string() + ',' +
           (r.label == Label::kMorph ? "morph" : "bonafide") + ',' +
           (r.morph_factor ? factor_key(*r.morph_factor) : std::string()) + ',';
    for (std::size_t i = 0; i < r.subject_ids.size(); ++i) {
      if (i > 0) out += ';';
      out += r.subject_ids[i];
    }
    out += '\n';
  }
  return out;
}

SplitSpec parse_split(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front().second != "subject_id,side") {
    throw Error(ErrorKind::kSchemaError, "split: expected header 'subject_id,side'");
  }
  SplitSpec split_spec;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, line] = lines[i];
    const auto fields = split(line, ',');
    if (fields.size() != 2 || fields[0].empty()) {
      throw Error(ErrorKind::kParseError, "split " + at_line(number) + "expected subject_id,side");
    }
    if (fields[1] == "train") {
      split_spec.train_subjects.insert(fields[0]);
    } else if (fields[1] == "test") {
      split_spec.test_subjects.insert(fields[0]);
    } else {
      throw Error(ErrorKind::kSchemaError,
                  "split " + at_line(number) + "side must be train or test (got '" + fields[1] + "')");
    }
    if (split_spec.train_subjects.contains(fields[0]) && split_spec.test_subjects.contains(fields[0])) {
      throw Error(ErrorKind::kLeakageError,
                  "split " + at_line(number) + "subject " + fields[0] + " is on both sides");
    }
  }
  return split_spec;
}

SplitSpec load_split(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_split(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_split(const SplitSpec& split_spec) {
  std::string out = "subject_id,side\n";
  for (const auto& s : split_spec.train_subjects) out += s + ",train\n";
  for (const auto& s : split_spec.test_subjects) out += s + ",test\n";
  return out;
}

std::size_t SideCounts::morph() const {
  std::size_t total = 0;
  for (const auto& [factor, count] : morph_by_factor) total += count;
  return total;
}

SplitReport check_split(const std::vector<PairRecord>& records, const SplitSpec& split_spec) {
  std::vector<std::string> leaking;
  std::set<std::string> missing;
  for (const PairRecord& r : records) {
    bool train = false;
    bool test = false;
    for (const std::string& id : r.subject_ids) {
      const bool in_train = split_spec.train_subjects.contains(id);
      const bool in_test = split_spec.test_subjects.contains(id);
      if (!in_train && !in_test) missing.insert(id);
      train = train || in_train;
      test = test || in_test;
    }
    if (train && test) leaking.push_back(r.pair_id);
  }
  if (!leaking.empty()) {
    std::string msg = std::to_string(leaking.size()) + " pair(s) mix train and test subjects:";
    for (const auto& id : leaking) msg += ' ' + id;
    throw Error(ErrorKind::kLeakageError, msg);
  }
  if (!missing.empty()) {
    std::string msg = "subjects missing from the split:";
    for (const auto& id : missing) msg += ' ' + id;
    throw Error(ErrorKind::kSchemaError, msg);
  }

  SplitReport report;
  for (const PairRecord& r : records) {
    SideCounts& counts = side_of(r, split_spec) == Side::kTrain ? report.train : report.test;
    ++counts.pairs;
    if (r.label == Label::kMorph) {
      ++counts.morph_by_factor[factor_key(*r.morph_factor)];
    } else {
      ++counts.bonafide;
    }
  }
  if (report.train.pairs == 0) report.warnings.push_back("train side is empty");
  if (report.test.pairs == 0) report.warnings.push_back("test side is empty");
  return report;
}

Side side_of(const PairRecord& record, const SplitSpec& split_spec) {
  if (record.subject_ids.empty()) throw Error(ErrorKind::kSchemaError, "pair without subjects");
  return split_spec.train_subjects.contains(record.subject_ids.front()) ? Side::kTrain : Side::kTest;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIoError, "cannot read " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot write " + path.string() + ": " + ec.message());
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dmad
