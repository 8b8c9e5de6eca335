#pragma once

#include <vector>

namespace dmad::oracle {

/// Straight loops over both score lists; no sorting or searching.
struct SweepPoint {
  double threshold;
  double apcer;
  double bpcer;
};

/// Every distinct score, every midpoint between neighbours, and +-inf.
std::vector<double> sweep_thresholds(const std::vector<double>& attack,
                                     const std::vector<double>& bonafide);

std::vector<SweepPoint> sweep(const std::vector<double>& attack, const std::vector<double>& bonafide);

/// Smallest diagonal crossing over every segment between two operating
/// points on opposite sides of APCER = BPCER (O(m^2)). Equals the convex
/// hull EER because any mix of two operating points is achievable.
double pairwise_hull_eer(const std::vector<double>& attack, const std::vector<double>& bonafide);

/// min BPCER over operating points with APCER <= target.
double min_bpcer_under(const std::vector<double>& attack, const std::vector<double>& bonafide,
                       double target);

}  // namespace dmad::oracle
