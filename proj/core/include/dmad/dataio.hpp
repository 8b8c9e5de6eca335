#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmad/classifier.hpp"
#include "dmad/digest.hpp"
#include "dmad/imgproc.hpp"
#include "dmad/pipeline.hpp"

namespace dmad {

// ---------------------------------------------------------------- manifest

inline constexpr std::string_view kManifestHeader =
    "pair_id,suspicious_path,trusted_path,label,morph_factor,subject_ids";

inline constexpr std::array<double, 3> kMorphFactors = {0.3, 0.5, 0.7};

struct PairRecord {
  std::string pair_id;
  std::filesystem::path suspicious_path;
  std::filesystem::path trusted_path;
  Label label = Label::kBonaFide;
  std::optional<double> morph_factor;
  std::vector<std::string> subject_ids;

  bool operator==(const PairRecord&) const = default;
};

/// "0.3", "0.5", "0.7".
std::string factor_key(double factor);

/// Relative image paths are resolved against `base_dir`. kParseError for
/// malformed lines, kSchemaError for rule violations; both carry the line.
std::vector<PairRecord> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
std::vector<PairRecord> load_manifest(const std::filesystem::path& path);

/// Inverse of parse_manifest; paths are written relative to `base_dir`.
std::string format_manifest(const std::vector<PairRecord>& records,
                            const std::filesystem::path& base_dir);

// ------------------------------------------------------------------- split

enum class Side { kTrain, kTest };

struct SplitSpec {
  std::set<std::string> train_subjects;
  std::set<std::string> test_subjects;
};

/// CSV `subject_id,side` with side in {train, test}. A subject listed on
/// both sides is a kLeakageError.
SplitSpec parse_split(std::string_view text);
SplitSpec load_split(const std::filesystem::path& path);
std::string format_split(const SplitSpec& split);

struct SideCounts {
  std::size_t pairs = 0;
  std::size_t bonafide = 0;
  std::map<std::string, std::size_t> morph_by_factor;

  std::size_t morph() const;
};

struct SplitReport {
  SideCounts train;
  SideCounts test;
  std::vector<std::string> warnings;
};

/// kLeakageError naming every pair whose subjects sit on both sides;
/// kSchemaError naming subjects missing from the split.
SplitReport check_split(const std::vector<PairRecord>& records, const SplitSpec& split);

/// Side of an already checked record.
Side side_of(const PairRecord& record, const SplitSpec& split);

// ----------------------------------------------------------------- fixture

struct FixtureOptions {
  std::uint64_t seed = 7;
  int n_subjects = 12;
  int sessions = 3;
  int image_size = kFaceCropSize;
};

struct FixtureResult {
  std::filesystem::path manifest;
  std::filesystem::path split;
  std::size_t bonafide_pairs = 0;
  std::size_t morph_pairs = 0;
};

/// Writes images/, manifest.csv and split.csv under `out_dir`. Identical
/// options give byte-identical files. n_subjects < 4 is kUsageError.
FixtureResult generate_fixture(const FixtureOptions& options, const std::filesystem::path& out_dir);

/// Per-channel alpha * a + (1 - alpha) * b, rounded half to even.
RgbImage alpha_blend(const RgbImage& a, const RgbImage& b, double alpha);

/// Session capture of one synthetic subject, as written by generate_fixture.
RgbImage render_subject(std::uint64_t seed, int subject, int session, int size = kFaceCropSize);

// ----------------------------------------------------------- feature cache

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

struct FeatureCache {
  Sha256 config_hash{};
  std::vector<PairFeatures> records;
};

/// Layout (little endian): "WSNF", u32 version, 32-byte config hash,
/// u32 record count, records, u32 CRC-32 of everything before it. A record
/// is a u32-length-prefixed UTF-8 pair id followed by the Y, Cb and Cr
/// vectors, each a u32 count then that many f64.
std::vector<std::uint8_t> encode_features(const FeatureCache& cache);

/// kVersionError for a wrong magic or version, kChecksumError for
/// truncation or a CRC mismatch.
FeatureCache decode_features(std::span<const std::uint8_t> bytes);

void write_features(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache read_features(const std::filesystem::path& path);

// ------------------------------------------------------------------- model

inline constexpr std::uint32_t kModelVersion = 1;

/// "DMAD", u32 version, u32-length-prefixed JSON header, then per channel
/// u32 n, u32 dim, n f64 alphas and n * dim f64 training features, then a
/// u32 CRC-32 of everything before it.
std::vector<std::uint8_t> encode_model(const DmadModel& model);
DmadModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const DmadModel& model);
DmadModel load_model(const std::filesystem::path& path);

// ------------------------------------------------------------------- files

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dmad
