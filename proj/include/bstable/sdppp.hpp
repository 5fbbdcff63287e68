#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/martingale.hpp"
#include "bstable/point_measure.hpp"
#include "bstable/reproduction.hpp"
#include "bstable/stats.hpp"

namespace bstable {

/// Law of the decoration attached to each Poisson atom: an explicit finite
/// mixture of point measures, or a sampler.
///
/// `window` bounds the depth of kept atoms below the maximal atom: draws are
/// restricted to [max - window, max]. For mixtures it is computed exactly, so
/// nothing is lost; for samplers it is a truncation.
class DecorationLaw {
 public:
  static DecorationLaw mixture(std::vector<PointMeasure> components, std::vector<double> probabilities);
  /// The law of delta_0.
  static DecorationLaw dirac();
  /// Sampler-backed law. `normalized` promises every draw has maximal atom 0.
  static DecorationLaw from_sampler(MeasureSampler sampler, double window, bool normalized);

  bool normalized() const { return normalized_; }
  bool is_mixture() const { return !sampler_; }
  bool is_dirac() const;
  double window() const { return window_; }
  const std::vector<PointMeasure>& components() const { return components_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  PointMeasure draw(Rng& rng) const;

  std::string description() const;
  nlohmann::json to_json() const;
  /// {"mixture": [{"p": 0.5, "atoms": [0, -1]}, ...]} or {"dirac": true}.
  static DecorationLaw from_json(const nlohmann::json& j);

 private:
  DecorationLaw() = default;

  std::vector<PointMeasure> components_;
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  std::optional<MeasureSampler> sampler_;
  double window_ = 0.0;
  bool normalized_ = false;
};

/// Result of the change of measure D -> D*.
struct NormalizedDecoration {
  /// c = E exp(alpha max D).
  double c = 1.0;
  double c_std_error = 0.0;
  DecorationLaw star = DecorationLaw::dirac();
  /// Kish effective sample size of the importance weights (mixtures: +inf).
  double effective_sample_size = 0.0;
  bool exact = true;
};

/// Mixtures are normalised exactly: c = sum_k p_k exp(alpha max_k), component
/// k gets probability p_k exp(alpha max_k) / c and is recentred at its max.
/// Sampler laws use `budget` draws and self-normalised importance
/// resampling; the star law is the weighted empirical mixture.
NormalizedDecoration normalize_decoration(const DecorationLaw& raw, double alpha, std::size_t budget = 10000,
                                          std::uint64_t seed = 0);

/// Poisson process with intensity exp(-alpha x) dx restricted to [floor, inf):
/// Poisson(exp(-alpha floor) / alpha) atoms at floor + Exponential(alpha).
PointMeasure sample_ppp_exponential(double alpha, double floor, Rng& rng,
                                    std::size_t population_cap = kDefaultPopulationCap);

/// One SDPPP draw restricted to [floor, inf): S from `shift`, Poisson atoms of
/// intensity c S exp(-alpha x) dx (equivalently a unit-intensity process
/// shifted by log(c S) / alpha), each replaced by an independent decoration
/// translated to it. Exact above floor because normalised decorations have
/// all atoms at or below their origin. S = 0 gives the null measure.
PointMeasure sample_sdppp(const ShiftSampler& shift, double c, double alpha, const DecorationLaw& decoration,
                          double floor, Rng& rng, std::size_t population_cap = kDefaultPopulationCap);

/// The same draw conditional on the shift value s.
PointMeasure sample_sdppp_given_shift(double s, double c, double alpha, const DecorationLaw& decoration, double floor,
                                      Rng& rng, std::size_t population_cap = kDefaultPopulationCap);

MeasureSampler sdppp_sampler(ShiftSampler shift, double c, double alpha, DecorationLaw decoration, double floor);

/// Cox process with intensity c S exp(-alpha x) dx.
MeasureSampler cox_sampler(ShiftSampler shift, double c, double alpha, double floor);

/// P(max E <= x) for an SDPPP(c S, exp(-alpha x) dx, D*):
/// E exp(-c S exp(-alpha x) / alpha), averaged over `shift_values`.
Estimate max_cdf_semi_analytic(double c, std::span<const double> shift_values, double alpha, double x);
Estimate max_cdf_semi_analytic(double c, const ShiftSampler& shift, double alpha, double x, std::size_t reps,
                               std::uint64_t seed);

/// g(x) = E exp(-S exp(alpha x)).
Estimate estimate_g(std::span<const double> shift_values, double alpha, double x);
Estimate estimate_g(const ShiftSampler& shift, double alpha, double x, std::size_t reps, std::uint64_t seed);

/// g on an increasing grid, all nodes from the same S sample, which makes the
/// curve exactly non-increasing.
struct GCurve {
  std::vector<double> xs;
  std::vector<Estimate> values;

  /// Linear interpolation (values and standard errors) inside the grid.
  Estimate at(double x) const;
};
GCurve estimate_g_curve(std::span<const double> shift_values, double alpha, std::vector<double> xs);

/// Smallest x with g(x) = target on the sample-average g (continuous and
/// decreasing), by bisection. Throws when target is outside (g(hi), g(lo)).
double invert_sample_g(std::span<const double> shift_values, double alpha, double target, double lo = -60.0,
                       double hi = 60.0);

struct GAsymptoticsReport {
  CriticalCase criticality = CriticalCase::regular;
  std::vector<double> z_grid;
  /// regular: (1 - g(z)) exp(-alpha z); boundary: (1 - g(z)) / (alpha |z| exp(alpha z)).
  std::vector<Estimate> ratios;
  bool trend_toward_one = false;
  double clamp_fraction = 0.0;
  std::size_t reps = 0;
  int generations_used = 0;
};
nlohmann::json to_json(const GAsymptoticsReport& report);

/// True when the sequence moves monotonically toward 1 from its first value
/// without overshooting 1 by more than 4 standard errors. A first value
/// already within 4 standard errors of 1 requires all values to be.
bool monotone_toward_one(std::span<const Estimate> ratios);

/// Ratios on `z_grid` (negative reals) from common S draws.
GAsymptoticsReport check_g_asymptotics(CriticalCase criticality, const ShiftSampler& shift, double alpha,
                                       std::vector<double> z_grid, std::size_t reps, std::uint64_t seed);
GAsymptoticsReport g_asymptotics_from_sample(CriticalCase criticality, const ShiftSample& sample, double alpha,
                                             std::vector<double> z_grid);

}  // namespace bstable
