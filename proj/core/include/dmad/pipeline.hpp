#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmad/classifier.hpp"
#include "dmad/digest.hpp"
#include "dmad/imgproc.hpp"
#include "dmad/scattering.hpp"

namespace dmad {

enum class Channel { kY = 0, kCb = 1, kCr = 2 };
inline constexpr std::array<Channel, 3> kChannels = {Channel::kY, Channel::kCb, Channel::kCr};
std::string_view to_string(Channel channel);

/// Scattering feature vector of each filtered colour channel of one crop.
struct ImageFeatures {
  FeatureLayout layout;
  std::array<std::vector<double>, 3> channels;
};

/// Unsigned per-channel feature difference |W_suspicious - W_trusted|.
struct PairFeatures {
  std::string pair_id;
  Sha256 config_hash{};
  std::array<std::vector<double>, 3> channels;

  const std::vector<double>& operator[](Channel c) const {
    return channels[static_cast<std::size_t>(c)];
  }
  bool operator==(const PairFeatures&) const = default;
};

/// Laplacian, then scattering, per channel. The crop side must match the
/// bank's rows and cols (kDimensionMismatch otherwise).
ImageFeatures extract_image_features(const FaceCrop& crop, const FilterBank& bank,
                                     LaplacianStencil stencil = LaplacianStencil::kFourNeighbor);

PairFeatures feature_difference(const ImageFeatures& suspicious, const ImageFeatures& trusted,
                                const Sha256& config_hash, std::string pair_id = {});

PairFeatures extract_pair_features(const FaceCrop& suspicious, const FaceCrop& trusted,
                                   const FilterBank& bank, std::string pair_id = {},
                                   LaplacianStencil stencil = LaplacianStencil::kFourNeighbor);

/// Builds a filter bank for `config`; prefer the bank overload in loops.
PairFeatures extract_pair_features(const FaceCrop& suspicious, const FaceCrop& trusted,
                                   const ScatteringConfig& config, std::string pair_id = {});

struct PairJob {
  std::string pair_id;
  std::filesystem::path suspicious;
  std::filesystem::path trusted;
};

/// Loads, centre-crops to the bank size and extracts every job on `workers`
/// threads. Each distinct image path is processed once. Output order follows
/// `jobs`; errors name the failing pair and the earliest failing job wins, so
/// results and errors do not depend on the worker count.
std::vector<PairFeatures> extract_batch(const std::vector<PairJob>& jobs, const FilterBank& bank,
                                        int workers,
                                        LaplacianStencil stencil = LaplacianStencil::kFourNeighbor);

/// Loads an image file and resamples it to a side x side face crop.
FaceCrop load_face_crop(const std::filesystem::path& path, int side);

struct ThresholdPolicy {
  enum class Kind { kEer, kFixed };
  Kind kind = Kind::kEer;
  double value = 0.0;  // used by kFixed

  bool operator==(const ThresholdPolicy&) const = default;
};

/// "eer" or "fixed:<value>". Throws kUsageError.
ThresholdPolicy parse_threshold_policy(std::string_view text);
std::string to_string(const ThresholdPolicy& policy);

/// Per-channel min-max over training scores, applied before the sum.
struct ScoreNormalization {
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  bool operator==(const ScoreNormalization&) const = default;
};

struct ModelMetadata {
  std::string manifest_digest;  // hex SHA-256 of the training manifest
  std::uint64_t seed = 0;
  std::size_t n_morph = 0;
  std::size_t n_bonafide = 0;
  bool operator==(const ModelMetadata&) const = default;
};

struct DmadModel {
  ScatteringConfig config;
  Sha256 config_hash{};
  LaplacianStencil stencil = LaplacianStencil::kFourNeighbor;
  KernelSpec kernel;
  std::array<SrkdaModel, 3> channels;
  std::optional<ScoreNormalization> normalization;
  ThresholdPolicy policy;
  double tau = 0.0;
  ModelMetadata metadata;

  const SrkdaModel& operator[](Channel c) const { return channels[static_cast<std::size_t>(c)]; }
};

struct TrainOptions {
  KernelSpec kernel;
  double delta = kDefaultDelta;
  ThresholdPolicy policy;
  bool normalize_scores = false;
};

/// s1..s3 are the (optionally normalised) channel scores; fused is their sum.
struct FusedScore {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  double fused = 0.0;
};

/// One SRKDA per channel on the same samples; tau from `options.policy`
/// (EER policy: training-set D-EER threshold, restricted to finite values).
DmadModel train_dmad(const std::vector<PairFeatures>& pairs, const std::vector<Label>& labels,
                     const ScatteringConfig& config, const TrainOptions& options,
                     ModelMetadata metadata = {});

/// Throws kConfigMismatch when the pair was extracted under another config.
FusedScore score_pair(const DmadModel& model, const PairFeatures& pair);

/// score_pair over `pairs` on up to `workers` threads; output follows input.
std::vector<FusedScore> score_batch(const DmadModel& model, const std::vector<PairFeatures>& pairs,
                                    int workers);

/// Morph iff fused >= tau.
Label decide(const DmadModel& model, const FusedScore& score);

}  // namespace dmad
