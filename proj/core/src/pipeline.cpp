#include "dmad/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <thread>

#include "dmad/error.hpp"
#include "dmad/metrics.hpp"

namespace dmad {
namespace {

/// Runs body(i) for i in [0, count) on up to `workers` threads.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body body) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
}

Error with_context(const Error& e, const std::string& context) {
  return Error(e.kind(), context + ": " + e.what());
}

double normalise(double score, const std::optional<ScoreNormalization>& norm, std::size_t channel) {
  if (!norm) return score;
  const double span = norm->max[channel] - norm->min[channel];
  return span > 0.0 ? (score - norm->min[channel]) / span : score - norm->min[channel];
}

FusedScore combine(const std::array<double, 3>& raw, const std::optional<ScoreNormalization>& norm) {
  FusedScore out;
  out.s1 = normalise(raw[0], norm, 0);
  out.s2 = normalise(raw[1], norm, 1);
  out.s3 = normalise(raw[2], norm, 2);
  out.fused = out.s1 + out.s2 + out.s3;
  return out;
}

double eer_tau(const ScoreSet& scores) {
  const EqualErrorRate eer = d_eer(scores);
  if (std::isfinite(eer.threshold)) return eer.threshold;
  double best_gap = std::numeric_limits<double>::infinity();
  double tau = 0.0;
  for (const DetPoint& p : det_curve(scores).points) {
    if (!std::isfinite(p.threshold)) continue;
    const double gap = std::abs(p.apcer - p.bpcer);
    if (gap < best_gap) {
      best_gap = gap;
      tau = p.threshold;
    }
  }
  return tau;
}

}  // namespace

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::kY: return "Y";
    case Channel::kCb: return "Cb";
    case Channel::kCr: return "Cr";
  }
  return "?";
}

ImageFeatures extract_image_features(const FaceCrop& crop, const FilterBank& bank,
                                     LaplacianStencil stencil) {
  const ScatteringConfig& config = bank.config();
  if (crop.size() != config.rows || crop.size() != config.cols) {
    throw Error(ErrorKind::kDimensionMismatch,
                "crop is " + std::to_string(crop.size()) + "x" + std::to_string(crop.size()) +
                    " but the scattering network expects " + std::to_string(config.rows) + "x" +
                    std::to_string(config.cols));
  }
  const FilteredChannelSet filtered = filter_channels(rgb_to_ycbcr(crop), stencil);
  const std::array<const Plane*, 3> planes = {&filtered.ly, &filtered.lcb, &filtered.lcr};
  ImageFeatures out;
  for (std::size_t c = 0; c < 3; ++c) {
    FeatureVector v = feature_vector(scattering_transform(*planes[c], bank));
    out.layout = v.layout;
    out.channels[c] = std::move(v.values);
  }
  return out;
}

PairFeatures feature_difference(const ImageFeatures& suspicious, const ImageFeatures& trusted,
                                const Sha256& config_hash, std::string pair_id) {
  if (!(suspicious.layout == trusted.layout)) {
    throw Error(ErrorKind::kDimensionMismatch, "feature layouts of the two images differ");
  }
  PairFeatures out;
  out.pair_id = std::move(pair_id);
  out.config_hash = config_hash;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& a = suspicious.channels[c];
    const auto& b = trusted.channels[c];
    if (a.size() != b.size()) {
      throw Error(ErrorKind::kDimensionMismatch, "feature vectors of the two images differ");
    }
    auto& d = out.channels[c];
    d.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) d[k] = std::abs(a[k] - b[k]);
  }
  return out;
}

PairFeatures extract_pair_features(const FaceCrop& suspicious, const FaceCrop& trusted,
                                   const FilterBank& bank, std::string pair_id,
                                   LaplacianStencil stencil) {
  return feature_difference(extract_image_features(suspicious, bank, stencil),
                            extract_image_features(trusted, bank, stencil),
                            config_hash(bank.config()), std::move(pair_id));
}

PairFeatures extract_pair_features(const FaceCrop& suspicious, const FaceCrop& trusted,
                                   const ScatteringConfig& config, std::string pair_id) {
  return extract_pair_features(suspicious, trusted, build_filter_bank(config), std::move(pair_id));
}

FaceCrop load_face_crop(const std::filesystem::path& path, int side) {
  return crop_resize_face(load_image(path), std::nullopt, side);
}

std::vector<PairFeatures> extract_batch(const std::vector<PairJob>& jobs, const FilterBank& bank,
                                        int workers, LaplacianStencil stencil) {
  // Distinct images in sorted order; first job that references each one.
  std::map<std::filesystem::path, std::size_t> image_index;
  for (const PairJob& job : jobs) {
    image_index.emplace(job.suspicious, 0);
    image_index.emplace(job.trusted, 0);
  }
  std::vector<std::filesystem::path> images;
  images.reserve(image_index.size());
  for (auto& [path, index] : image_index) {
    index = images.size();
    images.push_back(path);
  }

  const int side = bank.config().rows;
  std::vector<ImageFeatures> features(images.size());
  std::vector<std::exception_ptr> image_errors(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    try {
      features[i] = extract_image_features(load_face_crop(images[i], side), bank, stencil);
    } catch (...) {
      image_errors[i] = std::current_exception();
    }
  });

  const Sha256 hash = config_hash(bank.config());
  std::vector<PairFeatures> out(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const PairJob& job = jobs[j];
    const std::size_t s = image_index.at(job.suspicious);
    const std::size_t t = image_index.at(job.trusted);
    for (std::size_t idx : {s, t}) {
      if (!image_errors[idx]) continue;
      try {
        std::rethrow_exception(image_errors[idx]);
      } catch (const Error& e) {
        throw with_context(e, "pair " + job.pair_id);
      }
    }
    out[j] = feature_difference(features[s], features[t], hash, job.pair_id);
  }
  return out;
}

ThresholdPolicy parse_threshold_policy(std::string_view text) {
  if (text == "eer") return {};
  constexpr std::string_view kFixed = "fixed:";
  if (text.starts_with(kFixed)) {
    const std::string value(text.substr(kFixed.size()));
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used == value.size() && std::isfinite(v)) return {ThresholdPolicy::Kind::kFixed, v};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::kUsageError,
              "threshold policy must be 'eer' or 'fixed:<number>', got '" + std::string(text) + "'");
}

std::string to_string(const ThresholdPolicy& policy) {
  return policy.kind == ThresholdPolicy::Kind::kEer ? "eer" : "fixed:" + format_double(policy.value);
}

DmadModel train_dmad(const std::vector<PairFeatures>& pairs, const std::vector<Label>& labels,
                     const ScatteringConfig& config, const TrainOptions& options,
                     ModelMetadata metadata) {
  if (pairs.size() != labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "pair and label counts differ");
  }
  DmadModel model;
  model.config = config;
  model.config_hash = config_hash(config);
  model.kernel = options.kernel;
  model.policy = options.policy;
  for (const PairFeatures& p : pairs) {
    if (p.config_hash != model.config_hash) {
      throw Error(ErrorKind::kConfigMismatch,
                  "pair " + p.pair_id + " was extracted under a different scattering config");
    }
  }
  metadata.n_morph = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kMorph));
  metadata.n_bonafide = labels.size() - metadata.n_morph;
  model.metadata = std::move(metadata);

  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::vector<double>> x;
    x.reserve(pairs.size());
    for (const PairFeatures& p : pairs) x.push_back(p.channels[c]);
    model.channels[c] = srkda_train(x, labels, options.kernel, options.delta);
  }

  std::vector<std::array<double, 3>> raw(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) raw[i][c] = srkda_project(model.channels[c], pairs[i].channels[c]);
  }
  if (options.normalize_scores) {
    ScoreNormalization norm;
    for (std::size_t c = 0; c < 3; ++c) {
      norm.min[c] = std::numeric_limits<double>::infinity();
      norm.max[c] = -std::numeric_limits<double>::infinity();
      for (const auto& r : raw) {
        norm.min[c] = std::min(norm.min[c], r[c]);
        norm.max[c] = std::max(norm.max[c], r[c]);
      }
    }
    model.normalization = norm;
  }

  if (options.policy.kind == ThresholdPolicy::Kind::kFixed) {
    model.tau = options.policy.value;
  } else {
    ScoreSet training;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double fused = combine(raw[i], model.normalization).fused;
      (labels[i] == Label::kMorph ? training.attack_scores : training.bonafide_scores).push_back(fused);
    }
    model.tau = eer_tau(training);
  }
  return model;
}

FusedScore score_pair(const DmadModel& model, const PairFeatures& pair) {
  if (pair.config_hash != model.config_hash) {
    throw Error(ErrorKind::kConfigMismatch,
                "pair " + pair.pair_id + ": features were extracted under config " +
                    to_hex(pair.config_hash).substr(0, 12) + ", model expects " +
                    to_hex(model.config_hash).substr(0, 12));
  }
  std::array<double, 3> raw{};
  for (std::size_t c = 0; c < 3; ++c) raw[c] = srkda_project(model.channels[c], pair.channels[c]);
  const FusedScore out = combine(raw, model.normalization);
  if (!std::isfinite(out.fused)) {
    throw Error(ErrorKind::kSolverError, "pair " + pair.pair_id + ": non-finite score");
  }
  return out;
}

std::vector<FusedScore> score_batch(const DmadModel& model, const std::vector<PairFeatures>& pairs,
                                    int workers) {
  std::vector<FusedScore> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    try {
      out[i] = score_pair(model, pairs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Label decide(const DmadModel& model, const FusedScore& score) {
  return score.fused >= model.tau ? Label::kMorph : Label::kBonaFide;
}

}  // namespace dmad
