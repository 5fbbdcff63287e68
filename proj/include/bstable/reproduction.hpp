#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bstable/point_measure.hpp"
#include "bstable/random.hpp"

namespace bstable {

/// Two children, independent N(mu, sigma^2) displacements.
struct BinaryGaussian {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Poisson(mean_count) children, independent N(mu, sigma^2) displacements.
struct PoissonGaussian {
  double mean_count = 2.0;
  double mu = 0.0;
  double sigma = 1.0;
};

/// Two children at fixed displacements a and b. Always lattice.
struct BinaryDeterministic {
  double a = 0.0;
  double b = 0.0;
};

/// Offspring law Z of a branching random walk, one of the built-in
/// parametric families with closed-form log-Laplace transform.
class ReproductionLaw {
 public:
  using Family = std::variant<BinaryGaussian, PoissonGaussian, BinaryDeterministic>;

  /// Validates parameters (sigma > 0, mean_count > 1, finite values).
  explicit ReproductionLaw(Family family);

  static ReproductionLaw binary_gaussian(double mu, double sigma) { return ReproductionLaw(BinaryGaussian{mu, sigma}); }
  static ReproductionLaw poisson_gaussian(double mean_count, double mu, double sigma) {
    return ReproductionLaw(PoissonGaussian{mean_count, mu, sigma});
  }
  static ReproductionLaw binary_deterministic(double a, double b) { return ReproductionLaw(BinaryDeterministic{a, b}); }

  const Family& family() const { return family_; }
  /// E Z(R).
  double mean_offspring() const;
  std::string name() const;
  std::string description() const;

 private:
  Family family_;
};

nlohmann::json to_json(const ReproductionLaw& law);
/// {"family": "binary_gaussian", "mu": .., "sigma": ..} and the analogous
/// "poisson_gaussian" (with "m") and "binary_deterministic" (with "a", "b").
ReproductionLaw law_from_json(const nlohmann::json& j);

/// Appends the atoms of one offspring draw, translated by `origin`, to `out`.
void append_offspring(const ReproductionLaw& law, double origin, Rng& rng, std::vector<double>& out);

/// One draw of Z as a point measure (exact, floor -inf).
PointMeasure sample_offspring(const ReproductionLaw& law, Rng& rng);

/// kappa(theta) = log E sum_j exp(theta z_j), theta > 0.
double kappa(const ReproductionLaw& law, double theta);
double kappa_d1(const ReproductionLaw& law, double theta);
double kappa_d2(const ReproductionLaw& law, double theta);

/// kappa has no positive root for this law.
class NoCriticalRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest positive root of kappa. Throws NoCriticalRootError.
double solve_critical_alpha(const ReproductionLaw& law);

enum class CriticalCase { regular, boundary, supercritical, indeterminate, invalid };
std::string to_string(CriticalCase c);
CriticalCase critical_case_from_string(const std::string& s);

struct CriticalityReport {
  double alpha = 0.0;
  CriticalCase criticality = CriticalCase::invalid;
  double kappa_at_alpha = 0.0;
  bool a1_ok = false;
  bool a3_ok = false;
  /// E sum_j z_j exp(alpha z_j).
  double first_moment = 0.0;
  /// 0 for analytic evaluation.
  double first_moment_std_error = 0.0;
  /// E sum_j z_j^2 exp(alpha z_j), needed finite in the boundary case.
  double second_moment = 0.0;
  /// The x log x moment conditions of the regular and boundary cases,
  /// including E[X log+ X] for X = sum_j (z_j)_+ exp(alpha z_j).
  bool xlogx_moments_ok = false;
  /// "analytic" or "assumed".
  std::string moments_basis;
};

nlohmann::json to_json(const CriticalityReport& report);

/// Tolerance on |kappa(alpha)| accepted by classify.
inline constexpr double kKappaTolerance = 1e-9;
/// Band around zero for an analytic first moment to count as boundary.
inline constexpr double kBoundaryTolerance = 1e-9;

/// Case assignment from a first moment. Analytic values (std_error == 0) use
/// the kBoundaryTolerance band; Monte Carlo values need 3 standard errors of
/// separation from zero or are indeterminate.
CriticalCase case_from_first_moment(double first_moment, double std_error);

/// Checks survival, the regular/boundary moment conditions and the non-lattice
/// condition at alpha. kappa(alpha) off zero gives an `invalid` report rather
/// than an exception.
CriticalityReport classify(const ReproductionLaw& law, double alpha);

}  // namespace bstable
