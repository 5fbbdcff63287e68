#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/point_measure.hpp"
#include "bstable/sdppp.hpp"
#include "bstable/stats.hpp"
#include "bstable/test_function.hpp"

namespace bstable {

/// Monte Carlo estimate of E exp(-<E, phi>).
struct LaplaceEstimate {
  double mean = 1.0;
  double std_error = 0.0;
  std::size_t reps = 0;
  std::string function_id;
  std::string sampler_id;
  /// Draws whose floor was above the left edge of phi. Their values were
  /// computed from the atoms that were kept.
  std::size_t truncation_events = 0;
};
nlohmann::json to_json(const LaplaceEstimate& e);

/// exp(-<D, phi>) averaged over `draws`, without drawing anything.
LaplaceEstimate laplace_from_draws(std::span<const PointMeasure> draws, const TestFunction& phi,
                                   std::string sampler_id = "");

/// Throws TruncationError when the sampler's declared floor is above the
/// left edge of phi, std::invalid_argument when reps < 1000.
LaplaceEstimate laplace_functional(const MeasureSampler& sampler, const TestFunction& phi, std::size_t reps,
                                   std::uint64_t seed);

/// One set of draws shared by every function of the battery.
std::vector<LaplaceEstimate> laplace_battery(const MeasureSampler& sampler, const std::vector<TestFunction>& battery,
                                             std::size_t reps, std::uint64_t seed);

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  /// Decoration draws used for Psi when the decoration is a sampler.
  std::size_t decoration_reps = 2000;
  std::uint64_t decoration_seed = 0;
  double tolerance = 1e-6;
  std::size_t initial_intervals = 256;
  /// Per panel.
  std::size_t max_intervals = std::size_t{1} << 20;
};

/// The integral I = int exp(-alpha x) (1 - exp(-Psi(x))) dx over [a, x_max],
/// Psi(x) = -log E exp(-<tau_x D, phi>), by the trapezoid rule with node
/// doubling until two successive values differ by less than the tolerance.
/// The range is cut into panels at the kinks of the integrand.
/// x_max is where the exp(-alpha x) tail drops below 1e-8.
double sdppp_laplace_integral(double alpha, const DecorationLaw& decoration, const TestFunction& phi,
                              const OracleOptions& options = {});

/// E exp(-c S I) over the given S values, with the standard error of that
/// average.
Estimate sdppp_laplace_oracle(double c, std::span<const double> shift_values, double alpha,
                              const DecorationLaw& decoration, const TestFunction& phi,
                              const OracleOptions& options = {});

}  // namespace bstable
