#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

#include "dmad/dataio.hpp"
#include "dmad/error.hpp"
#include "dmad/metrics.hpp"
#include "dmad/pipeline.hpp"
#include "dmad/scattering.hpp"

namespace dmad::cli {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

// Provenance never records absolute paths or timestamps: outputs must be
// byte-identical when the same inputs are processed from another directory.
ordered_json file_entry(const fs::path& path) {
  return {{"file", path.filename().string()}, {"sha256", to_hex(sha256_file(path))}};
}

ordered_json number(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(format_double(v));
}

ScatteringConfig config_from(const std::string& path) {
  return path.empty() ? ScatteringConfig{} : load_scattering_config(path);
}

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

std::string decision_name(Label label) { return label == Label::kMorph ? "Morph" : "BonaFide"; }

/// Records of one split side (or all of them), ordered by pair id.
std::vector<PairRecord> select_records(std::vector<PairRecord> records, const SplitSpec* split,
                                       Side side) {
  if (split) {
    std::erase_if(records, [&](const PairRecord& r) { return side_of(r, *split) != side; });
  }
  std::sort(records.begin(), records.end(),
            [](const PairRecord& a, const PairRecord& b) { return a.pair_id < b.pair_id; });
  return records;
}

std::vector<PairFeatures> features_for(const std::vector<PairRecord>& records, FeatureCache& cache) {
  std::map<std::string, PairFeatures*> by_id;
  for (PairFeatures& p : cache.records) by_id[p.pair_id] = &p;
  std::vector<PairFeatures> out;
  out.reserve(records.size());
  for (const PairRecord& r : records) {
    const auto it = by_id.find(r.pair_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kSchemaError, "pair " + r.pair_id + " is missing from the feature cache");
    }
    out.push_back(std::move(*it->second));
  }
  return out;
}

ordered_json counts_json(const SideCounts& c) {
  ordered_json morph = ordered_json::object();
  for (const auto& [factor, n] : c.morph_by_factor) morph[factor] = n;
  return {{"pairs", c.pairs}, {"bonafide", c.bonafide}, {"morph", c.morph()}, {"morph_by_factor", morph}};
}

ordered_json metrics_json(const MetricsReport& m) {
  ordered_json at_apcer = ordered_json::object();
  for (const auto& [target, r] : m.bpcer_at_apcer) {
    at_apcer[format_double(target)] = {{"bpcer", r.bpcer},
                                       {"apcer", r.apcer},
                                       {"threshold", number(r.threshold)},
                                       {"achievable", r.achievable}};
  }
  return {{"n_attack", m.n_attack},
          {"n_bonafide", m.n_bonafide},
          {"d_eer", m.eer.rate},
          {"eer_threshold", number(m.eer.threshold)},
          {"apcer_at_eer_threshold", m.eer.apcer},
          {"bpcer_at_eer_threshold", m.eer.bpcer},
          {"bpcer_at_apcer", at_apcer},
          {"det_points", m.curve.points.size()}};
}

// ------------------------------------------------------------ subcommands

struct GenFixtureArgs {
  std::uint64_t seed = 7;
  int subjects = 12;
  int size = kFaceCropSize;
  std::string out;
};

int gen_fixture(const GenFixtureArgs& a, std::ostream& out) {
  FixtureOptions options;
  options.seed = a.seed;
  options.n_subjects = a.subjects;
  options.image_size = a.size;
  const FixtureResult r = generate_fixture(options, a.out);
  out << "fixture: " << r.bonafide_pairs << " bona fide + " << r.morph_pairs << " morph pairs\n"
      << "manifest: " << r.manifest.string() << "\nsplit: " << r.split.string() << "\n";
  return 0;
}

struct ExtractArgs {
  std::string manifest;
  std::string config;
  std::string out;
  int workers = 1;
};

int extract(const ExtractArgs& a, std::ostream& out) {
  const ScatteringConfig config = config_from(a.config);
  const std::vector<PairRecord> records = select_records(load_manifest(a.manifest), nullptr, Side::kTrain);
  std::vector<PairJob> jobs;
  jobs.reserve(records.size());
  for (const PairRecord& r : records) jobs.push_back({r.pair_id, r.suspicious_path, r.trusted_path});

  const FilterBank bank = build_filter_bank(config);
  FeatureCache cache;
  cache.config_hash = config_hash(config);
  cache.records = extract_batch(jobs, bank, a.workers);
  write_features(a.out, cache);

  ordered_json provenance = {
      {"command", "extract"},
      {"manifest", file_entry(a.manifest)},
      {"scattering_config", canonical_text(config)},
      {"config_hash", to_hex(cache.config_hash)},
      {"paths", path_count(config)},
      {"map_size", {output_rows(config), output_cols(config)}},
      {"frame_epsilon", bank.frame_epsilon()},
      {"pairs", cache.records.size()},
      {"cache", file_entry(a.out)},
  };
  write_json(a.out + ".json", provenance);
  out << "extracted " << cache.records.size() << " pairs, " << path_count(config) << " paths, "
      << output_rows(config) << "x" << output_cols(config) << " maps, frame epsilon "
      << bank.frame_epsilon() << "\n";
  return 0;
}

struct TrainArgs {
  std::string cache;
  std::string manifest;
  std::string split;
  std::string config;
  std::string out;
  std::string kernel = "gaussian";
  std::string bandwidth = "median-heuristic";
  double delta = kDefaultDelta;
  std::string threshold = "eer";
  bool normalize = false;
  std::uint64_t seed = 0;
};

int train(const TrainArgs& a, std::ostream& out) {
  const std::vector<PairRecord> all = load_manifest(a.manifest);
  const SplitSpec split = load_split(a.split);
  const SplitReport split_report = check_split(all, split);
  const ScatteringConfig config = config_from(a.config);

  FeatureCache cache = read_features(a.cache);
  if (cache.config_hash != config_hash(config)) {
    throw Error(ErrorKind::kConfigMismatch,
                "feature cache was extracted under a different scattering config than --config");
  }
  const std::vector<PairRecord> records = select_records(all, &split, Side::kTrain);
  const std::vector<PairFeatures> pairs = features_for(records, cache);
  std::vector<Label> labels;
  for (const PairRecord& r : records) labels.push_back(r.label);

  TrainOptions options;
  if (a.kernel == "gaussian") options.kernel.kind = KernelKind::kGaussian;
  else if (a.kernel == "linear") options.kernel.kind = KernelKind::kLinear;
  else throw Error(ErrorKind::kUsageError, "--kernel must be gaussian or linear");
  if (a.bandwidth != "median-heuristic") {
    try {
      options.kernel.bandwidth = std::stod(a.bandwidth);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kUsageError, "--bandwidth must be a number or median-heuristic");
    }
  }
  options.delta = a.delta;
  options.policy = parse_threshold_policy(a.threshold);
  options.normalize_scores = a.normalize;

  ModelMetadata metadata;
  metadata.manifest_digest = to_hex(sha256_file(a.manifest));
  metadata.seed = a.seed;
  const DmadModel model = train_dmad(pairs, labels, config, options, metadata);
  save_model(a.out, model);

  ScoreSet training;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double fused = score_pair(model, pairs[i]).fused;
    (labels[i] == Label::kMorph ? training.attack_scores : training.bonafide_scores).push_back(fused);
  }
  const EqualErrorRate eer = d_eer(training);

  ordered_json channels = ordered_json::array();
  for (Channel c : kChannels) {
    channels.push_back({{"channel", std::string(to_string(c))},
                        {"bandwidth", model[c].bandwidth},
                        {"polarity", model[c].polarity},
                        {"morph_mean", model[c].morph_mean},
                        {"bonafide_mean", model[c].bonafide_mean},
                        {"solver_residual", model[c].solver_residual}});
  }
  ordered_json report = {
      {"command", "train"},
      {"manifest", file_entry(a.manifest)},
      {"split", file_entry(a.split)},
      {"cache", file_entry(a.cache)},
      {"scattering_config", canonical_text(config)},
      {"kernel", a.kernel},
      {"bandwidth", a.bandwidth},
      {"delta", a.delta},
      {"threshold_policy", to_string(model.policy)},
      {"normalize_scores", a.normalize},
      {"seed", a.seed},
      {"split_counts", {{"train", counts_json(split_report.train)}, {"test", counts_json(split_report.test)}}},
      {"warnings", split_report.warnings},
      {"tau", model.tau},
      {"training_d_eer", eer.rate},
      {"channels", channels},
      {"model", file_entry(a.out)},
  };
  write_json(a.out + ".train.json", report);
  out << "trained on " << pairs.size() << " pairs (" << model.metadata.n_morph << " morph, "
      << model.metadata.n_bonafide << " bona fide); tau " << format_double(model.tau)
      << "; training D-EER " << eer.rate << "\n";
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string cache;
  std::string manifest;
  std::string split;
  std::string out;
  int workers = 1;
};

int eval(const EvalArgs& a, std::ostream& out) {
  const DmadModel model = load_model(a.model);
  const std::vector<PairRecord> all = load_manifest(a.manifest);
  SplitSpec split;
  if (!a.split.empty()) {
    split = load_split(a.split);
    check_split(all, split);
  }
  const std::vector<PairRecord> records =
      select_records(all, a.split.empty() ? nullptr : &split, Side::kTest);
  FeatureCache cache = read_features(a.cache);
  if (cache.config_hash != model.config_hash) {
    throw Error(ErrorKind::kConfigMismatch,
                "feature cache and model were built with different scattering configs");
  }
  const std::vector<PairFeatures> pairs = features_for(records, cache);
  const std::vector<FusedScore> scores = score_batch(model, pairs, a.workers);

  ScoreSet overall;
  std::map<std::string, ScoreSet> per_factor;
  std::string scores_csv = "pair_id,label,morph_factor,s1,s2,s3,fused,decision\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PairRecord& r = records[i];
    const FusedScore& s = scores[i];
    if (r.label == Label::kMorph) {
      overall.attack_scores.push_back(s.fused);
      per_factor[factor_key(*r.morph_factor)].attack_scores.push_back(s.fused);
    } else {
      overall.bonafide_scores.push_back(s.fused);
    }
    scores_csv += r.pair_id + ',' + (r.label == Label::kMorph ? "morph" : "bonafide") + ',' +
                  (r.morph_factor ? factor_key(*r.morph_factor) : std::string()) + ',' +
                  format_double(s.s1) + ',' + format_double(s.s2) + ',' + format_double(s.s3) + ',' +
                  format_double(s.fused) + ',' + decision_name(decide(model, s)) + '\n';
  }
  for (auto& [factor, set] : per_factor) set.bonafide_scores = overall.bonafide_scores;

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + a.out + ": " + ec.message());
  const fs::path dir(a.out);

  const MetricsReport report = evaluate_scores(overall);
  ordered_json factors = ordered_json::object();
  for (const auto& [factor, set] : per_factor) {
    const MetricsReport fr = evaluate_scores(set);
    factors[factor] = metrics_json(fr);
    write_file(dir / ("det_" + factor + ".csv"), det_csv(fr.curve));
  }
  write_file(dir / "det.csv", det_csv(report.curve));
  write_file(dir / "scores.csv", scores_csv);

  ordered_json provenance = {
      {"command", "eval"},
      {"model", file_entry(a.model)},
      {"cache", file_entry(a.cache)},
      {"manifest", file_entry(a.manifest)},
      {"split", a.split.empty() ? ordered_json(nullptr) : file_entry(a.split)},
      {"scattering_config", canonical_text(model.config)},
      {"threshold_policy", to_string(model.policy)},
      {"tau", model.tau},
  };
  ordered_json metrics = {
      {"provenance", provenance},
      {"overall", metrics_json(report)},
      {"per_factor", factors},
  };
  write_json(dir / "metrics.json", metrics);
  out << "evaluated " << records.size() << " pairs: D-EER " << report.eer.rate;
  for (const auto& [factor, j] : factors.items()) out << ", " << factor << ": " << j["d_eer"].get<double>();
  out << "\n";
  return 0;
}

struct DetectArgs {
  std::string model;
  std::string suspicious;
  std::string trusted;
  std::string config;
};

int detect(const DetectArgs& a, std::ostream& out) {
  const DmadModel model = load_model(a.model);
  if (!a.config.empty() && config_hash(load_scattering_config(a.config)) != model.config_hash) {
    throw Error(ErrorKind::kConfigMismatch, "--config does not match the model's scattering config");
  }
  const FilterBank bank = build_filter_bank(model.config);
  const FaceCrop suspicious = load_face_crop(a.suspicious, model.config.rows);
  const FaceCrop trusted = load_face_crop(a.trusted, model.config.rows);
  const PairFeatures pair = extract_pair_features(suspicious, trusted, bank, "detect", model.stencil);
  const FusedScore s = score_pair(model, pair);
  const ordered_json result = {{"s1", s.s1},
                               {"s2", s.s2},
                               {"s3", s.s3},
                               {"fused", s.fused},
                               {"decision", decision_name(decide(model, s))}};
  out << result.dump() << "\n";
  return 0;
}

struct PathsArgs {
  std::string config;
  int octaves = -1;
  std::string quality;
  std::string rotations;
  int image_size = -1;
  bool list = false;
};

std::array<int, 2> int_pair(const std::string& text, const char* flag) {
  int a = 0;
  int b = 0;
  char comma = 0;
  std::istringstream in(text);
  if (in >> a) {
    if (in >> comma) {
      if (comma == ',' && in >> b && in.eof()) return {a, b};
    } else {
      return {a, a};
    }
  }
  throw Error(ErrorKind::kUsageError, std::string(flag) + " expects N or N,M (got '" + text + "')");
}

int paths(const PathsArgs& a, std::ostream& out) {
  ScatteringConfig config = config_from(a.config);
  if (a.octaves >= 0) config.num_octaves = a.octaves;
  if (!a.quality.empty()) config.quality = int_pair(a.quality, "--Q");
  if (!a.rotations.empty()) config.rotations = int_pair(a.rotations, "--L");
  if (a.image_size > 0) config.rows = config.cols = a.image_size;
  validate(config);
  out << path_count(config) << "\n";
  if (a.list) {
    out << "order,j1,t1,j2,t2\n";
    for (const ScatteringPath& p : enumerate_paths(config)) {
      out << p.order;
      if (p.order >= 1) out << ',' << format_double(p.lambda1.scale()) << ',' << p.lambda1.rotation;
      else out << ",,";
      if (p.order == 2) out << ',' << format_double(p.lambda2.scale()) << ',' << p.lambda2.rotation;
      else out << ",,";
      out << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential morphing attack detection with wavelet scattering features", "dmad"};
  app.require_subcommand(1);

  GenFixtureArgs fixture_args;
  auto* gen_cmd = app.add_subcommand("gen-fixture", "Write a synthetic morph/bona fide fixture");
  gen_cmd->add_option("--seed", fixture_args.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--subjects", fixture_args.subjects, "Number of synthetic subjects (>= 4)")
      ->capture_default_str();
  gen_cmd->add_option("--size", fixture_args.size, "Image side in pixels")->capture_default_str();
  gen_cmd->add_option("--out", fixture_args.out, "Output directory")->required();

  ExtractArgs extract_args;
  auto* extract_cmd = app.add_subcommand("extract", "Compute feature differences for a manifest");
  extract_cmd->add_option("--manifest", extract_args.manifest, "Pair manifest CSV")->required();
  extract_cmd->add_option("--config", extract_args.config, "Scattering config (JSON or key=value)");
  extract_cmd->add_option("--out", extract_args.out, "Feature cache to write")->required();
  extract_cmd->add_option("--workers", extract_args.workers, "Extraction threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train per-channel SRKDA models on the train split");
  train_cmd->add_option("--cache", train_args.cache, "Feature cache")->required();
  train_cmd->add_option("--manifest", train_args.manifest, "Pair manifest CSV")->required();
  train_cmd->add_option("--split", train_args.split, "Subject split CSV")->required();
  train_cmd->add_option("--config", train_args.config, "Scattering config used for extraction");
  train_cmd->add_option("--out", train_args.out, "Model file to write")->required();
  train_cmd->add_option("--kernel", train_args.kernel, "gaussian or linear")->capture_default_str();
  train_cmd->add_option("--bandwidth", train_args.bandwidth, "Gaussian width or median-heuristic")
      ->capture_default_str();
  train_cmd->add_option("--delta", train_args.delta, "Ridge regulariser")->capture_default_str();
  train_cmd->add_option("--threshold", train_args.threshold, "eer or fixed:<value>")
      ->capture_default_str();
  train_cmd->add_flag("--normalize", train_args.normalize, "Min-max normalise channel scores");
  train_cmd->add_option("--seed", train_args.seed, "Seed recorded in the model metadata")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score the test split and write metrics");
  eval_cmd->add_option("--model", eval_args.model, "Model file")->required();
  eval_cmd->add_option("--cache", eval_args.cache, "Feature cache")->required();
  eval_cmd->add_option("--manifest", eval_args.manifest, "Pair manifest CSV")->required();
  eval_cmd->add_option("--split", eval_args.split, "Subject split CSV; without it every pair is scored");
  eval_cmd->add_option("--out", eval_args.out, "Output directory")->required();
  eval_cmd->add_option("--workers", eval_args.workers, "Scoring threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  DetectArgs detect_args;
  auto* detect_cmd = app.add_subcommand("detect", "Score one suspicious/trusted image pair");
  detect_cmd->add_option("--model", detect_args.model, "Model file")->required();
  detect_cmd->add_option("--suspicious", detect_args.suspicious, "Image under question")->required();
  detect_cmd->add_option("--trusted", detect_args.trusted, "Trusted live capture")->required();
  detect_cmd->add_option("--config", detect_args.config, "Expected scattering config");

  PathsArgs paths_args;
  auto* paths_cmd = app.add_subcommand("paths", "Print the scattering path count");
  paths_cmd->add_option("--config", paths_args.config, "Scattering config");
  paths_cmd->add_option("--J", paths_args.octaves, "Octaves");
  paths_cmd->add_option("--Q", paths_args.quality, "Wavelets per octave, e.g. 2,1");
  paths_cmd->add_option("--L", paths_args.rotations, "Orientations, e.g. 6,6");
  paths_cmd->add_option("--image-size", paths_args.image_size, "Square input side");
  paths_cmd->add_flag("--list", paths_args.list, "Also print every path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error_kind: " << to_string(ErrorKind::kUsageError) << ": " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) return gen_fixture(fixture_args, out);
    if (*extract_cmd) return extract(extract_args, out);
    if (*train_cmd) return train(train_args, out);
    if (*eval_cmd) return eval(eval_args, out);
    if (*detect_cmd) return detect(detect_args, out);
    if (*paths_cmd) return paths(paths_args, out);
  } catch (const Error& e) {
    err << "error_kind: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::kUsageError ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error_kind: InternalError: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dmad::cli
