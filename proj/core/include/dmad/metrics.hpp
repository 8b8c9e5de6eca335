#pragma once

#include <map>
#include <string>
#include <vector>

namespace dmad {

/// Comparison scores split by ground truth. Higher means "attack".
struct ScoreSet {
  std::vector<double> attack_scores;
  std::vector<double> bonafide_scores;
};

/// Fraction of attack scores strictly below tau. Throws kEmptyScores.
double apcer(const ScoreSet& scores, double tau);

/// Fraction of bona fide scores at or above tau. Throws kEmptyScores.
double bpcer(const ScoreSet& scores, double tau);

/// Sorted distinct scores of both classes, the midpoints between neighbours,
/// and -inf / +inf. Covers every step of both error functions. Strictly
/// increasing: a midpoint that rounds onto a neighbour is dropped.
std::vector<double> candidate_thresholds(const ScoreSet& scores);

struct EqualErrorRate {
  /// Equal-error rate of the ROC convex hull, computed exactly.
  double rate = 0.0;
  /// Candidate threshold minimising |APCER - BPCER|; lowest one on ties.
  double threshold = 0.0;
  double apcer = 0.0;
  double bpcer = 0.0;
};

/// The hull rate is what a score-level interpolation between the two
/// operating points around the crossing achieves; with sets large enough to
/// be smooth it agrees with the step-function crossing to O(1/n).
EqualErrorRate d_eer(const ScoreSet& scores);

struct BpcerAtApcer {
  double target = 0.0;
  double bpcer = 0.0;
  double apcer = 0.0;
  double threshold = 0.0;
  /// False only when no candidate reaches APCER <= target. -inf always does,
  /// so this stays true for valid input; kept for report compatibility.
  bool achievable = true;
};

/// BPCER at the largest candidate threshold whose APCER does not exceed
/// `target`. target must lie in (0, 1).
BpcerAtApcer bpcer_at_apcer(const ScoreSet& scores, double target);

struct DetPoint {
  double threshold = 0.0;
  double apcer = 0.0;
  double bpcer = 0.0;
};

/// One point per candidate threshold, ascending.
struct DetCurve {
  std::vector<DetPoint> points;
};

DetCurve det_curve(const ScoreSet& scores);

struct MetricsReport {
  EqualErrorRate eer;
  std::map<double, BpcerAtApcer> bpcer_at_apcer;
  DetCurve curve;
  std::size_t n_attack = 0;
  std::size_t n_bonafide = 0;
};

inline const std::vector<double> kDefaultApcerTargets = {0.05, 0.10};

MetricsReport evaluate_scores(const ScoreSet& scores,
                              const std::vector<double>& apcer_targets = kDefaultApcerTargets);

/// `threshold,apcer,bpcer` with shortest round-trip decimals; thresholds at
/// the sentinels are written as -inf and inf.
std::string det_csv(const DetCurve& curve);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

}  // namespace dmad
