#include "dmad/classifier.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "dmad/error.hpp"

namespace dmad {
namespace {

void check_equal_lengths(std::span<const std::vector<double>> features) {
  for (const auto& f : features) {
    if (f.size() != features.front().size()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "feature vectors differ in length (" + std::to_string(f.size()) + " vs " +
                      std::to_string(features.front().size()) + ")");
    }
  }
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double kernel_value(std::span<const double> a, std::span<const double> b, KernelKind kind,
                    double bandwidth) {
  if (kind == KernelKind::kLinear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  }
  return std::exp(-squared_distance(a, b) / (2.0 * bandwidth * bandwidth));
}

double median_heuristic(std::span<const std::vector<double>> features) {
  if (features.size() < 2) {
    throw Error(ErrorKind::kDimensionMismatch, "median heuristic needs at least two vectors");
  }
  check_equal_lengths(features);
  std::vector<double> distances;
  distances.reserve(features.size() * (features.size() - 1) / 2);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      distances.push_back(std::sqrt(squared_distance(features[i], features[j])));
    }
  }
  std::sort(distances.begin(), distances.end());
  const std::size_t m = distances.size();
  const double median =
      m % 2 == 1 ? distances[m / 2] : 0.5 * (distances[m / 2 - 1] + distances[m / 2]);
  if (median > 0.0) return median;
  double sum = 0.0;
  std::size_t nonzero = 0;
  for (double d : distances) {
    if (d > 0.0) {
      sum += d;
      ++nonzero;
    }
  }
  return nonzero > 0 ? sum / static_cast<double>(nonzero) : 1.0;
}

double resolve_bandwidth(const KernelSpec& spec, std::span<const std::vector<double>> features) {
  if (spec.kind == KernelKind::kLinear) return 1.0;
  if (spec.bandwidth) {
    if (!(*spec.bandwidth > 0.0) || !std::isfinite(*spec.bandwidth)) {
      throw Error(ErrorKind::kInvalidConfig, "kernel bandwidth must be positive");
    }
    return *spec.bandwidth;
  }
  return median_heuristic(features);
}

Matrix gram_matrix(std::span<const std::vector<double>> features, const KernelSpec& spec) {
  if (features.size() < 2) {
    throw Error(ErrorKind::kDimensionMismatch, "Gram matrix needs at least two vectors");
  }
  check_equal_lengths(features);
  const double bandwidth = resolve_bandwidth(spec, features);
  const int n = static_cast<int>(features.size());
  Matrix k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = i == j && spec.kind == KernelKind::kGaussian
                           ? 1.0
                           : kernel_value(features[static_cast<std::size_t>(i)],
                                          features[static_cast<std::size_t>(j)], spec.kind,
                                          bandwidth);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

SrkdaModel srkda_train(std::span<const std::vector<double>> features, std::span<const Label> labels,
                       const KernelSpec& kernel, double delta) {
  if (features.size() != labels.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "feature and label counts differ");
  }
  const auto n_morph = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::kMorph));
  const std::size_t n_bonafide = labels.size() - n_morph;
  if (n_morph == 0 || n_bonafide == 0) {
    throw Error(ErrorKind::kSingleClassError,
                "training needs both classes (morph=" + std::to_string(n_morph) +
                    ", bona fide=" + std::to_string(n_bonafide) + ")");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::kInvalidConfig, "regulariser delta must be positive");
  }

  SrkdaModel model;
  model.kernel = kernel.kind;
  model.bandwidth = resolve_bandwidth(kernel, features);
  model.delta = delta;
  model.training_features.assign(features.begin(), features.end());

  const Matrix k = gram_matrix(features, {kernel.kind, model.bandwidth});
  const int n = k.rows();
  Eigen::MatrixXd system(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) system(i, j) = k(i, j);
  }
  system.diagonal().array() += delta * n;

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = labels[static_cast<std::size_t>(i)] == Label::kMorph
               ? 1.0 / static_cast<double>(n_morph)
               : -1.0 / static_cast<double>(n_bonafide);
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kSolverError, "regularised kernel system is not positive definite");
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  model.solver_residual = (system * alpha - y).cwiseAbs().maxCoeff();
  if (!alpha.allFinite()) {
    throw Error(ErrorKind::kSolverError, "kernel solve produced non-finite coefficients");
  }
  model.alpha.assign(alpha.data(), alpha.data() + n);

  double morph_sum = 0.0;
  double bonafide_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double projection = 0.0;
    for (int j = 0; j < n; ++j) projection += k(i, j) * alpha(j);
    (labels[static_cast<std::size_t>(i)] == Label::kMorph ? morph_sum : bonafide_sum) += projection;
  }
  const double morph_mean = morph_sum / static_cast<double>(n_morph);
  const double bonafide_mean = bonafide_sum / static_cast<double>(n_bonafide);
  model.polarity = morph_mean >= bonafide_mean ? 1 : -1;
  model.morph_mean = model.polarity * morph_mean;
  model.bonafide_mean = model.polarity * bonafide_mean;
  return model;
}

double srkda_project(const SrkdaModel& model, std::span<const double> x) {
  if (x.size() != model.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "feature length " + std::to_string(x.size()) + " does not match model dimension " +
                    std::to_string(model.dimension()));
  }
  double score = 0.0;
  for (std::size_t i = 0; i < model.alpha.size(); ++i) {
    if (model.alpha[i] == 0.0) continue;
    score += model.alpha[i] * kernel_value(x, model.training_features[i], model.kernel,
                                           model.bandwidth);
  }
  return model.polarity * score;
}

}  // namespace dmad
