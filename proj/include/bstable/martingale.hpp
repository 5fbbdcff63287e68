#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstable/random.hpp"
#include "bstable/reproduction.hpp"
#include "bstable/stats.hpp"

namespace bstable {

/// A martingale was requested for a law in the wrong case.
class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MartingaleKind { additive, derivative };

/// Barrier for the additive martingale: particles below it are dropped.
/// Each dropped particle at x carries expected future mass exp(alpha x), and
/// at most sum_{k=1..n} m^k particles are ever dropped in expectation, so the
/// expected lost mass is at most miss_mass.
double additive_martingale_barrier(const ReproductionLaw& law, double alpha, int generations, double miss_mass = 1e-6);

/// W_n = <Z_n, exp_alpha> from one simulated population. Requires
/// kappa(alpha) = 0; n = 0 gives exactly 1.
double additive_martingale(const ReproductionLaw& law, double alpha, int generations, Rng& rng);

/// <Z_n, f> with f(x) = -x exp(alpha x), whose limit is non-negative because
/// atoms drift to -inf. Requires a boundary-case law (ClassificationError
/// otherwise); n = 0 gives exactly 0.
double derivative_martingale(const ReproductionLaw& law, double alpha, int generations, Rng& rng);

/// Values of one martingale trajectory at increasing `checkpoints`
/// (generation counts). No validation of the case; the additive kind is
/// unnormalised, so it is a martingale only when kappa(alpha) = 0.
std::vector<double> martingale_path(const ReproductionLaw& law, double alpha, MartingaleKind kind,
                                    const std::vector<int>& checkpoints, Rng& rng, double barrier = kNegInf);

/// The random shift S, approximated by a finite-generation martingale value
/// (or a constant / custom generator for controls).
class ShiftSampler {
 public:
  enum class Source { constant, regular, boundary, custom };

  static ShiftSampler constant(double value);
  static ShiftSampler custom(std::function<double(Rng&)> raw, std::string description);
  /// Additive (regular) or clamped derivative (boundary) martingale at
  /// `generations`. Classifies the law; throws ClassificationError unless the
  /// case is regular or boundary, and std::invalid_argument when
  /// generations < min_generations.
  static ShiftSampler martingale(const ReproductionLaw& law, double alpha, int generations, int min_generations = 12);

  /// Unclamped value (the derivative martingale may be negative).
  double draw_raw(Rng& rng) const { return raw_(rng); }
  /// max(raw, 0).
  double draw(Rng& rng) const {
    const double v = raw_(rng);
    return v > 0.0 ? v : 0.0;
  }
  double operator()(Rng& rng) const { return draw(rng); }

  Source source() const { return source_; }
  int generations() const { return generations_; }
  double alpha() const { return alpha_; }
  const std::optional<ReproductionLaw>& law() const { return law_; }
  const std::string& description() const { return description_; }
  nlohmann::json metadata() const;

 private:
  ShiftSampler(std::function<double(Rng&)> raw, Source source, std::string description)
      : raw_(std::move(raw)), source_(source), description_(std::move(description)) {}

  std::function<double(Rng&)> raw_;
  Source source_;
  int generations_ = 0;
  double alpha_ = 0.0;
  std::optional<ReproductionLaw> law_;
  std::string description_;
};

/// `reps` independent clamped shift values (replicate i uses stream (seed, i)),
/// plus the fraction that had to be clamped from below at 0.
struct ShiftSample {
  std::vector<double> values;
  double clamp_fraction = 0.0;
};
ShiftSample sample_shift_values(const ShiftSampler& shift, std::size_t reps, std::uint64_t seed);

struct SmoothingIdentityReport {
  KsResult ks;
  Estimate lhs_mean;
  Estimate rhs_mean;
  std::size_t reps = 0;
  int generations = 0;
  double lhs_clamp_fraction = 0.0;
};
nlohmann::json to_json(const SmoothingIdentityReport& report);

/// Two-sample KS comparison of S against sum_j exp(alpha z_j) S^(j), with
/// fresh offspring and fresh independent copies of S. reps >= 1000.
SmoothingIdentityReport check_smoothing_identity(const ReproductionLaw& law, double alpha, const ShiftSampler& shift,
                                                 std::size_t reps, std::uint64_t seed);

}  // namespace bstable
