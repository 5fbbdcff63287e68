#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/laplace.hpp"
#include "bstable/reproduction.hpp"
#include "bstable/sdppp.hpp"
#include "bstable/test_function.hpp"

namespace bstable {

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct TestOutcome {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  /// Set for z-tests.
  std::optional<double> z;
  bool pass = true;
};

struct VerificationOptions {
  std::size_t reps = 10000;
  double significance = 1e-3;
  /// Target probability that an atom dropped below E's floor reaches the
  /// battery support after one branching step.
  double miss_probability = 1e-4;
  /// Largest accepted fraction of truncated draws on either side. Laplace
  /// values lie in [0, 1], so this also bounds the bias of every mean.
  double bias_budget = 1e-3;
  /// Levels for the tail-count histograms. Empty: the two largest battery edges.
  std::vector<double> count_thresholds;
  std::size_t population_cap = kDefaultPopulationCap;
};

struct VerificationReport {
  std::vector<TestOutcome> tests;
  Verdict verdict = Verdict::inconclusive;
  double significance = 0.0;
  /// Bonferroni level applied to each test.
  double per_test_level = 0.0;
  double bias_budget = 0.0;
  /// Fraction of truncated draws (largest of the two sides).
  double truncation_rate = 0.0;
  /// Floor below which E may discard atoms for the miss target to hold.
  double recommended_floor = 0.0;
  double target_floor = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<LaplaceEstimate> lhs;
  std::vector<LaplaceEstimate> rhs;
  std::vector<double> count_thresholds;
  std::vector<double> count_tv;
  std::string note;
};
nlohmann::json to_json(const VerificationReport& report);

/// Tests E = Z (*) E in law. The left side uses draws of E, the right side
/// independent draws of the branching convolution of one offspring
/// generation with E. Compared through: a two-sample z-test per battery
/// function, KS on the maximal atoms, and chi-square homogeneity (with TV
/// reported) on tail-count histograms at two levels. The verdict is pass
/// when every test passes at significance / (number of tests) and fail
/// otherwise, unless the truncation rate exceeds the bias budget, in which
/// case it is inconclusive.
VerificationReport verify_fixed_point(const ReproductionLaw& law, const MeasureSampler& target,
                                      const std::vector<TestFunction>& battery, const VerificationOptions& options,
                                      std::uint64_t seed);

/// Ramps at edges {lo, (lo+hi)/2, hi} with slope 1 and heights {0.5, 1, 2},
/// plus a unit plateau of width 2 at each edge: 12 functions.
std::vector<TestFunction> standard_battery(double lo, double hi);

/// T = -g^{-1}(F0) with g^{-1} taken by linear interpolation on the curve.
/// Throws std::out_of_range unless F0 lies strictly inside the range of the
/// curve's values.
double fit_T_phi(double F0, const GCurve& g_curve);

struct ShapeTestReport {
  double T = 0.0;
  std::vector<double> xs;
  std::vector<LaplaceEstimate> F;
  std::vector<Estimate> g_shifted;
  std::vector<double> z;
  double max_z = 0.0;
  bool pass = false;
};
nlohmann::json to_json(const ShapeTestReport& report);

/// F_phi(x) = E exp(-<tau_x E, phi>) against g(x - T_phi) at every x, within
/// 4 standard errors. F_phi(0) fixes T_phi; the remaining points are checks.
ShapeTestReport shape_test(const MeasureSampler& target, const TestFunction& phi, const std::vector<double>& xs,
                           const GCurve& g_curve, std::size_t reps, std::uint64_t seed);

}  // namespace bstable
