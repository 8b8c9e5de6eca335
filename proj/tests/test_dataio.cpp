#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dmad/dataio.hpp"
#include "dmad/error.hpp"
#include "test_support.hpp"

namespace dmad {
namespace {

const std::string kHeader(kManifestHeader);

std::string manifest(const std::vector<std::string>& rows) {
  std::string out = kHeader + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

TEST(Manifest, ThreeRows) {
  const auto records = parse_manifest(manifest({
                                          "p1,a.png,b.png,bonafide,,S1",
                                          "p2,m.png,b.png,morph,0.5,S1;S2",
                                          "p3,/abs/x.png,c.png,bonafide,,S3",
                                      }),
                                      "/data");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].suspicious_path, std::filesystem::path("/data/a.png"));
  EXPECT_EQ(records[1].label, Label::kMorph);
  EXPECT_EQ(records[1].morph_factor, 0.5);
  EXPECT_EQ(records[1].subject_ids, (std::vector<std::string>{"S1", "S2"}));
  EXPECT_EQ(records[2].suspicious_path, std::filesystem::path("/abs/x.png"));
  EXPECT_FALSE(records[0].morph_factor.has_value());
}

TEST(Manifest, FormatRoundTrip) {
  const std::string text = manifest({"p1,img/a.png,img/b.png,bonafide,,S1",
                                     "p2,img/m.png,img/b.png,morph,0.7,S1;S2"});
  const auto records = parse_manifest(text, "/base");
  EXPECT_EQ(format_manifest(records, "/base"), text);
  EXPECT_EQ(parse_manifest(format_manifest(records, "/base"), "/base"), records);
}

TEST(Manifest, SchemaViolationsNameTheLine) {
  const auto schema_at = [](const std::string& row, const std::string& line) {
    try {
      parse_manifest(manifest({"ok,a.png,b.png,bonafide,,S0", row}), "/");
      ADD_FAILURE() << "no error for " << row;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kSchemaError) << e.what();
      EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
    }
  };
  schema_at("p,m.png,b.png,morph,,S1;S2", "line 3");
  schema_at("p,a.png,b.png,bonafide,0.5,S1", "line 3");
  schema_at("p,m.png,b.png,morph,0.4,S1;S2", "line 3");
  schema_at("p,m.png,b.png,morph,0.3,S1", "line 3");
  schema_at("p,a.png,b.png,genuine,,S1", "line 3");
  schema_at("ok,a.png,b.png,bonafide,,S1", "line 3");
}

TEST(Manifest, ParseErrors) {
  test::expect_error(ErrorKind::kParseError,
                     [] { parse_manifest(manifest({"p1,a.png,bonafide,,S1"}), "/"); });
  test::expect_error(ErrorKind::kParseError,
                     [] { parse_manifest(manifest({"p1,m.png,b.png,morph,half,S1;S2"}), "/"); });
  test::expect_error(ErrorKind::kSchemaError, [] { parse_manifest("id,a,b\n", "/"); });
  test::expect_error(ErrorKind::kIoError, [] { load_manifest("/nonexistent/manifest.csv"); });
}

std::vector<PairRecord> protocol_records() {
  return parse_manifest(manifest({
                            "b1,a,b,bonafide,,A",
                            "b2,a,b,bonafide,,C",
                            "m1,a,b,morph,0.3,A;B",
                            "m2,a,b,morph,0.5,A;B",
                            "m3,a,b,morph,0.7,C;D",
                            "m4,a,b,morph,0.7,D;C",
                        }),
                        "/");
}

TEST(Split, CleanSplitCounts) {
  const SplitSpec split = parse_split("subject_id,side\nA,train\nB,train\nC,test\nD,test\n");
  const SplitReport r = check_split(protocol_records(), split);
  EXPECT_EQ(r.train.pairs, 3u);
  EXPECT_EQ(r.train.bonafide, 1u);
  EXPECT_EQ(r.train.morph(), 2u);
  EXPECT_EQ(r.train.morph_by_factor.at("0.3"), 1u);
  EXPECT_EQ(r.test.morph_by_factor.at("0.7"), 2u);
  EXPECT_TRUE(r.warnings.empty());

  // No subject of any record sits on both sides.
  for (const auto& rec : protocol_records()) {
    const Side side = side_of(rec, split);
    for (const auto& id : rec.subject_ids) {
      EXPECT_EQ(side == Side::kTrain ? split.train_subjects.contains(id) : split.test_subjects.contains(id), true);
    }
  }
}

TEST(Split, LeakingPairIsNamed) {
  const SplitSpec split = parse_split("subject_id,side\nA,train\nB,test\nC,test\nD,test\n");
  try {
    check_split(protocol_records(), split);
    FAIL() << "expected LeakageError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLeakageError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("m1"), std::string::npos);
    EXPECT_NE(msg.find("m2"), std::string::npos);
    EXPECT_EQ(msg.find("m3"), std::string::npos);
  }
}

TEST(Split, EmptyTestSideWarns) {
  const SplitSpec split = parse_split("subject_id,side\nA,train\nB,train\nC,train\nD,train\n");
  const SplitReport r = check_split(protocol_records(), split);
  EXPECT_EQ(r.test.pairs, 0u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Split, Errors) {
  test::expect_error(ErrorKind::kLeakageError,
                     [] { parse_split("subject_id,side\nA,train\nA,test\n"); });
  test::expect_error(ErrorKind::kSchemaError, [] { parse_split("subject_id,side\nA,validation\n"); });
  test::expect_error(ErrorKind::kSchemaError, [] { parse_split("subject,side\n"); });
  const SplitSpec partial = parse_split("subject_id,side\nA,train\nB,train\n");
  test::expect_error(ErrorKind::kSchemaError, [&] { check_split(protocol_records(), partial); });
}

TEST(Split, FormatRoundTrip) {
  SplitSpec s;
  s.train_subjects = {"S00", "S01"};
  s.test_subjects = {"S02"};
  const SplitSpec back = parse_split(format_split(s));
  EXPECT_EQ(back.train_subjects, s.train_subjects);
  EXPECT_EQ(back.test_subjects, s.test_subjects);
}

TEST(Fixture, AlphaBlendRoundsHalfToEven) {
  RgbImage a(3, 1);
  RgbImage b(3, 1);
  a.at(0, 0) = {1, 3, 5};
  b.at(0, 0) = {2, 4, 6};
  a.at(1, 0) = {0, 255, 100};
  b.at(1, 0) = {255, 0, 101};
  a.at(2, 0) = {7, 7, 7};
  b.at(2, 0) = {7, 7, 7};
  const RgbImage m = alpha_blend(a, b, 0.5);
  // (1+2)/2 = 1.5 -> 2, (3+4)/2 = 3.5 -> 4, (5+6)/2 = 5.5 -> 6
  EXPECT_EQ(m.at(0, 0), (Rgb{2, 4, 6}));
  // 127.5 -> 128 (even), 127.5 -> 128, 100.5 -> 100
  EXPECT_EQ(m.at(1, 0), (Rgb{128, 128, 100}));
  EXPECT_EQ(m.at(2, 0), (Rgb{7, 7, 7}));
}

TEST(Fixture, AlphaOneIsFirstContributor) {
  const RgbImage a = render_subject(3, 0, 1, 40);
  const RgbImage b = render_subject(3, 1, 1, 40);
  EXPECT_EQ(alpha_blend(a, b, 1.0), a);
  EXPECT_EQ(alpha_blend(a, b, 0.0), b);
  test::expect_error(ErrorKind::kDimensionMismatch,
                     [&] { alpha_blend(a, render_subject(3, 1, 1, 41), 0.5); });
}

TEST(Fixture, RenderIsDeterministicAndVaries) {
  EXPECT_EQ(render_subject(5, 2, 0, 64), render_subject(5, 2, 0, 64));
  EXPECT_NE(render_subject(5, 2, 0, 64), render_subject(5, 2, 1, 64));
  EXPECT_NE(render_subject(5, 2, 0, 64), render_subject(5, 3, 0, 64));
  EXPECT_NE(render_subject(5, 2, 0, 64), render_subject(6, 2, 0, 64));
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = test::read_bytes(e.path());
  }
  return out;
}

TEST(Fixture, SameSeedGivesIdenticalFiles) {
  test::TempDir a;
  test::TempDir b;
  const FixtureOptions o{11, 4, 3, 48};
  const FixtureResult ra = generate_fixture(o, a.path());
  generate_fixture(o, b.path());
  EXPECT_EQ(snapshot(a.path()), snapshot(b.path()));
  EXPECT_EQ(ra.bonafide_pairs, 8u);
  EXPECT_EQ(ra.morph_pairs, 12u);
}

TEST(Fixture, ManifestAndSplitAreConsistent) {
  test::TempDir dir;
  const FixtureResult r = generate_fixture(FixtureOptions{7, 6, 3, 32}, dir.path());
  const auto records = load_manifest(r.manifest);
  const SplitSpec split = load_split(r.split);
  const SplitReport report = check_split(records, split);
  EXPECT_EQ(report.train.pairs + report.test.pairs, records.size());
  for (const auto* side : {&report.train, &report.test}) {
    EXPECT_GT(side->bonafide, 0u);
    for (double f : kMorphFactors) EXPECT_GT(side->morph_by_factor.at(factor_key(f)), 0u);
  }
  for (const auto& rec : records) {
    EXPECT_TRUE(std::filesystem::exists(rec.suspicious_path)) << rec.suspicious_path;
    EXPECT_TRUE(std::filesystem::exists(rec.trusted_path));
  }
  // Manifest paths are stored relative to the fixture root.
  EXPECT_EQ(test::read_text(r.manifest).find(dir.path().string()), std::string::npos);

  const auto morph = std::find_if(records.begin(), records.end(),
                                  [](const PairRecord& p) { return p.label == Label::kMorph; });
  ASSERT_NE(morph, records.end());
  const RgbImage blended = load_image(morph->suspicious_path);
  EXPECT_EQ(blended.width(), 32);
}

TEST(Fixture, TooFewSubjects) {
  test::TempDir dir;
  test::expect_error(ErrorKind::kUsageError, [&] { generate_fixture(FixtureOptions{7, 3, 3, 32}, dir.path()); });
}

FeatureCache sample_cache(unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  FeatureCache c;
  c.config_hash = config_hash(ScatteringConfig{});
  for (int i = 0; i < 3; ++i) {
    PairFeatures p;
    p.pair_id = "pair-" + std::to_string(i) + "-\xc3\xa9";
    p.config_hash = c.config_hash;
    for (auto& ch : p.channels) {
      ch.resize(17);
      for (double& v : ch) v = std::abs(n(rng));
    }
    c.records.push_back(std::move(p));
  }
  c.records[0].channels[2][3] = std::nextafter(0.0, 1.0);
  return c;
}

TEST(FeatureCache, RoundTripIsBitwise) {
  test::TempDir dir;
  const FeatureCache c = sample_cache(1);
  write_features(dir.path() / "f.bin", c);
  const FeatureCache back = read_features(dir.path() / "f.bin");
  EXPECT_EQ(back.config_hash, c.config_hash);
  EXPECT_EQ(back.records, c.records);
  EXPECT_EQ(encode_features(back), encode_features(c));
}

TEST(FeatureCache, Layout) {
  const auto bytes = encode_features(sample_cache(2));
  ASSERT_GE(bytes.size(), 44u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "WSNF");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[40], 3);  // record count
  const std::uint32_t stored = bytes[bytes.size() - 4] | (bytes[bytes.size() - 3] << 8) |
                               (bytes[bytes.size() - 2] << 16) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  EXPECT_EQ(stored, crc32(std::span(bytes).first(bytes.size() - 4)));
}

TEST(FeatureCache, CorruptionKinds) {
  const auto good = encode_features(sample_cache(3));
  auto magic = good;
  magic[0] = 'X';
  test::expect_error(ErrorKind::kVersionError, [&] { decode_features(magic); });
  auto version = good;
  version[4] = 9;
  test::expect_error(ErrorKind::kVersionError, [&] { decode_features(version); });
  const std::vector<std::uint8_t> truncated(good.begin(), good.end() - 100);
  test::expect_error(ErrorKind::kChecksumError, [&] { decode_features(truncated); });
  auto flipped = good;
  flipped[60] ^= 0x40;
  test::expect_error(ErrorKind::kChecksumError, [&] { decode_features(flipped); });
  test::expect_error(ErrorKind::kChecksumError, [&] { decode_features(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)); });
  test::expect_error(ErrorKind::kIoError, [] { read_features("/nonexistent/f.bin"); });
}

TEST(FeatureCache, RejectsMixedConfigs) {
  FeatureCache c = sample_cache(4);
  c.records[1].config_hash[5] ^= 1;
  test::expect_error(ErrorKind::kConfigMismatch, [&] { encode_features(c); });
}

DmadModel sample_model(bool normalise) {
  const FeatureCache c = sample_cache(5);
  std::vector<PairFeatures> pairs = c.records;
  const FeatureCache more = sample_cache(6);
  pairs.insert(pairs.end(), more.records.begin(), more.records.end());
  for (auto& ch : pairs[1].channels) {
    for (double& v : ch) v += 2.0;
  }
  const std::vector<Label> labels = {Label::kBonaFide, Label::kMorph, Label::kBonaFide,
                                     Label::kMorph, Label::kBonaFide, Label::kMorph};
  TrainOptions o;
  o.normalize_scores = normalise;
  return train_dmad(pairs, labels, ScatteringConfig{}, o, ModelMetadata{"abc", 7, 0, 0});
}

TEST(Model, RoundTripScoresBitwise) {
  test::TempDir dir;
  for (bool normalise : {false, true}) {
    const DmadModel m = sample_model(normalise);
    save_model(dir.path() / "m.dmad", m);
    const DmadModel back = load_model(dir.path() / "m.dmad");
    EXPECT_EQ(back.tau, m.tau);
    EXPECT_EQ(back.config, m.config);
    EXPECT_EQ(back.metadata, m.metadata);
    EXPECT_EQ(back.normalization, m.normalization);
    EXPECT_EQ(back.policy, m.policy);
    EXPECT_EQ(encode_model(back), encode_model(m));
    for (const auto& p : sample_cache(9).records) {
      const FusedScore a = score_pair(m, p);
      const FusedScore b = score_pair(back, p);
      EXPECT_EQ(a.fused, b.fused);
      EXPECT_EQ(a.s2, b.s2);
    }
  }
}

TEST(Model, ConfigMismatchAtScoring) {
  const DmadModel m = sample_model(false);
  PairFeatures p = sample_cache(10).records[0];
  ScatteringConfig other;
  other.num_octaves = 2;
  p.config_hash = config_hash(other);
  test::expect_error(ErrorKind::kConfigMismatch, [&] { score_pair(decode_model(encode_model(m)), p); });
}

TEST(Model, CorruptionKinds) {
  const auto good = encode_model(sample_model(false));
  EXPECT_EQ(std::string(good.begin(), good.begin() + 4), "DMAD");
  auto version = good;
  version[4] = 2;
  test::expect_error(ErrorKind::kVersionError, [&] { decode_model(version); });
  auto magic = good;
  magic[1] = 'X';
  test::expect_error(ErrorKind::kVersionError, [&] { decode_model(magic); });
  const std::vector<std::uint8_t> truncated(good.begin(), good.end() - 8);
  test::expect_error(ErrorKind::kChecksumError, [&] { decode_model(truncated); });
}

TEST(Files, WriteIsAtomicReplace) {
  test::TempDir dir;
  write_file(dir.path() / "t.txt", std::string_view("first"));
  write_file(dir.path() / "t.txt", std::string_view("second"));
  EXPECT_EQ(test::read_text(dir.path() / "t.txt"), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
  test::expect_error(ErrorKind::kIoError,
                     [&] { write_file(dir.path() / "missing" / "x.txt", std::string_view("x")); });
}

}  // namespace
}  // namespace dmad
