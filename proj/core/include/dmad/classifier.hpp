#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dmad/plane.hpp"

namespace dmad {

enum class Label { kBonaFide, kMorph };

enum class KernelKind { kGaussian, kLinear };

struct KernelSpec {
  KernelKind kind = KernelKind::kGaussian;
  /// Gaussian width. Empty means: use the median pairwise training distance.
  std::optional<double> bandwidth;
};

/// Dense n x n matrix; row-major like every other 2D array in the library.
using Matrix = Plane;

double squared_distance(std::span<const double> a, std::span<const double> b);

/// k(a, b) for a kernel whose bandwidth has been resolved.
double kernel_value(std::span<const double> a, std::span<const double> b, KernelKind kind,
                    double bandwidth);

/// Median of the n(n-1)/2 pairwise Euclidean distances (mean of the two
/// middle values for an even count). Falls back to the mean non-zero
/// distance, then 1.0, when the median is zero.
double median_heuristic(std::span<const std::vector<double>> features);

/// Resolves `median-heuristic` against the given training set.
double resolve_bandwidth(const KernelSpec& spec, std::span<const std::vector<double>> features);

Matrix gram_matrix(std::span<const std::vector<double>> features, const KernelSpec& spec);

/// Two-class spectral-regression kernel discriminant. Scores are oriented so
/// that a higher value means "morph".
struct SrkdaModel {
  std::vector<std::vector<double>> training_features;
  std::vector<double> alpha;
  KernelKind kernel = KernelKind::kGaussian;
  double bandwidth = 1.0;
  double delta = 0.01;
  int polarity = 1;
  double morph_mean = 0.0;
  double bonafide_mean = 0.0;
  /// max |(K + delta n I) alpha - y| after the solve.
  double solver_residual = 0.0;

  std::size_t dimension() const noexcept {
    return training_features.empty() ? 0 : training_features.front().size();
  }
};

inline constexpr double kDefaultDelta = 0.01;

/// Responses y_i = 1/n_morph (morph) or -1/n_bonafide (bona fide), solved
/// from (K + delta n I) alpha = y by Cholesky.
SrkdaModel srkda_train(std::span<const std::vector<double>> features, std::span<const Label> labels,
                       const KernelSpec& kernel, double delta = kDefaultDelta);

/// polarity * sum_i alpha_i k(x, x_i)
double srkda_project(const SrkdaModel& model, std::span<const double> x);

}  // namespace dmad
