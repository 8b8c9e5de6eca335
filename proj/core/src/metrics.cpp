#include "dmad/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dmad/error.hpp"

namespace dmad {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kEmptyScores, std::string("non-finite ") + what + " score");
    }
  }
}

void require_attacks(const ScoreSet& s) {
  if (s.attack_scores.empty()) throw Error(ErrorKind::kEmptyScores, "no attack scores");
  check_finite(s.attack_scores, "attack");
}

void require_bonafide(const ScoreSet& s) {
  if (s.bonafide_scores.empty()) throw Error(ErrorKind::kEmptyScores, "no bona fide scores");
  check_finite(s.bonafide_scores, "bona fide");
}

void require_both(const ScoreSet& s) {
  require_attacks(s);
  require_bonafide(s);
}

/// Both classes sorted once; counts are binary searches.
class SortedScores {
 public:
  explicit SortedScores(const ScoreSet& s)
      : attack_(s.attack_scores), bonafide_(s.bonafide_scores) {
    std::sort(attack_.begin(), attack_.end());
    std::sort(bonafide_.begin(), bonafide_.end());
  }

  std::int64_t attacks_below(double tau) const {
    return std::lower_bound(attack_.begin(), attack_.end(), tau) - attack_.begin();
  }
  std::int64_t bonafide_at_or_above(double tau) const {
    return bonafide_.end() - std::lower_bound(bonafide_.begin(), bonafide_.end(), tau);
  }
  std::int64_t n_attack() const { return static_cast<std::int64_t>(attack_.size()); }
  std::int64_t n_bonafide() const { return static_cast<std::int64_t>(bonafide_.size()); }

  double apcer(double tau) const {
    return static_cast<double>(attacks_below(tau)) / static_cast<double>(n_attack());
  }
  double bpcer(double tau) const {
    return static_cast<double>(bonafide_at_or_above(tau)) / static_cast<double>(n_bonafide());
  }

 private:
  std::vector<double> attack_;
  std::vector<double> bonafide_;
};

struct HullPoint {
  std::int64_t x;  // bona fide errors * n_attack
  std::int64_t y;  // attack errors * n_bonafide
};

long double cross(const HullPoint& o, const HullPoint& a, const HullPoint& b) {
  return static_cast<long double>(a.x - o.x) * static_cast<long double>(b.y - o.y) -
         static_cast<long double>(a.y - o.y) * static_cast<long double>(b.x - o.x);
}

double convex_hull_eer(const SortedScores& sorted, const std::vector<double>& thresholds) {
  const std::int64_t na = sorted.n_attack();
  const std::int64_t nb = sorted.n_bonafide();
  std::vector<HullPoint> points;
  points.reserve(thresholds.size());
  for (double tau : thresholds) {
    points.push_back({sorted.bonafide_at_or_above(tau) * na, sorted.attacks_below(tau) * nb});
  }
  std::sort(points.begin(), points.end(), [](const HullPoint& a, const HullPoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });

  std::vector<HullPoint> hull;
  for (const HullPoint& p : points) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
    hull.push_back(p);
  }

  const long double total = static_cast<long double>(na) * static_cast<long double>(nb);
  // hull.front() has x - y < 0 (threshold +inf), hull.back() has x - y > 0.
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const HullPoint& p = hull[i];
    const HullPoint& q = hull[i + 1];
    const std::int64_t gp = p.x - p.y;
    const std::int64_t gq = q.x - q.y;
    if (gp == 0) return static_cast<double>(p.x / total);
    if (gp < 0 && gq > 0) {
      // Solve p + t (q - p) on the diagonal.
      const long double span = static_cast<long double>(gq - gp);
      const long double numerator = static_cast<long double>(p.x) * span +
                                    static_cast<long double>(-gp) * static_cast<long double>(q.x - p.x);
      return static_cast<double>(numerator / (span * total));
    }
  }
  const HullPoint& last = hull.back();
  return static_cast<double>(last.x / total);
}

}  // namespace

double apcer(const ScoreSet& scores, double tau) {
  require_attacks(scores);
  std::int64_t below = 0;
  for (double s : scores.attack_scores) below += s < tau ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(scores.attack_scores.size());
}

double bpcer(const ScoreSet& scores, double tau) {
  require_bonafide(scores);
  std::int64_t above = 0;
  for (double s : scores.bonafide_scores) above += s >= tau ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(scores.bonafide_scores.size());
}

std::vector<double> candidate_thresholds(const ScoreSet& scores) {
  require_both(scores);
  std::vector<double> distinct;
  distinct.reserve(scores.attack_scores.size() + scores.bonafide_scores.size());
  distinct.insert(distinct.end(), scores.attack_scores.begin(), scores.attack_scores.end());
  distinct.insert(distinct.end(), scores.bonafide_scores.begin(), scores.bonafide_scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> out;
  out.reserve(2 * distinct.size() + 1);
  out.push_back(-kInf);
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    if (i > 0) {
      // Neighbours one ulp apart have no double strictly between them.
      const double mid = distinct[i - 1] + 0.5 * (distinct[i] - distinct[i - 1]);
      if (mid > distinct[i - 1] && mid < distinct[i]) out.push_back(mid);
    }
    out.push_back(distinct[i]);
  }
  out.push_back(kInf);
  return out;
}

EqualErrorRate d_eer(const ScoreSet& scores) {
  const std::vector<double> thresholds = candidate_thresholds(scores);
  const SortedScores sorted(scores);

  EqualErrorRate result;
  double best_gap = kInf;
  for (double tau : thresholds) {
    const double a = sorted.apcer(tau);
    const double b = sorted.bpcer(tau);
    const double gap = std::abs(a - b);
    if (gap < best_gap) {
      best_gap = gap;
      result.threshold = tau;
      result.apcer = a;
      result.bpcer = b;
    }
  }
  result.rate = convex_hull_eer(sorted, thresholds);
  return result;
}

BpcerAtApcer bpcer_at_apcer(const ScoreSet& scores, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "APCER target must lie in (0, 1)");
  }
  const std::vector<double> thresholds = candidate_thresholds(scores);
  const SortedScores sorted(scores);

  BpcerAtApcer result;
  result.target = target;
  result.achievable = false;
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    const double a = sorted.apcer(*it);
    if (a <= target) {
      result.threshold = *it;
      result.apcer = a;
      result.bpcer = sorted.bpcer(*it);
      result.achievable = true;
      return result;
    }
  }
  result.threshold = thresholds.back();
  result.apcer = sorted.apcer(result.threshold);
  result.bpcer = sorted.bpcer(result.threshold);
  return result;
}

DetCurve det_curve(const ScoreSet& scores) {
  const std::vector<double> thresholds = candidate_thresholds(scores);
  const SortedScores sorted(scores);
  DetCurve curve;
  curve.points.reserve(thresholds.size());
  for (double tau : thresholds) curve.points.push_back({tau, sorted.apcer(tau), sorted.bpcer(tau)});
  return curve;
}

MetricsReport evaluate_scores(const ScoreSet& scores, const std::vector<double>& apcer_targets) {
  MetricsReport report;
  report.eer = d_eer(scores);
  for (double target : apcer_targets) report.bpcer_at_apcer[target] = bpcer_at_apcer(scores, target);
  report.curve = det_curve(scores);
  report.n_attack = scores.attack_scores.size();
  report.n_bonafide = scores.bonafide_scores.size();
  return report;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string det_csv(const DetCurve& curve) {
  std::string out = "threshold,apcer,bpcer\n";
  for (const DetPoint& p : curve.points) {
    out += format_double(p.threshold);
    out += ',';
    out += format_double(p.apcer);
    out += ',';
    out += format_double(p.bpcer);
    out += '\n';
  }
  return out;
}

}  // namespace dmad
