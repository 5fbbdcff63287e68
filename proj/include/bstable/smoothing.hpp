#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/martingale.hpp"

namespace bstable {

/// Function on (0, inf) stored at log-uniformly spaced nodes, linear in
/// log t between nodes. Left of the grid it is 1, right of it the value at
/// the last node.
class GridFunction {
 public:
  GridFunction(double t_min, double t_max, std::vector<double> values);
  static GridFunction tabulate(double t_min, double t_max, std::size_t nodes, const std::function<double(double)>& f);

  double operator()(double t) const { return at_log(std::log(t)); }
  /// Value at t = exp(log_t).
  double at_log(double log_t) const;

  std::size_t size() const { return values_.size(); }
  double node(std::size_t i) const;
  const std::vector<double>& values() const { return values_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }

 private:
  double t_min_;
  double t_max_;
  double log_min_;
  double step_;
  std::vector<double> values_;
};

struct SmoothingFit {
  /// Node where h is matched.
  double t0 = 0.0;
  double h = 0.0;
  /// sup over nodes of |f(t) - E exp(-h S t^alpha)|.
  double sup_distance = 0.0;
  std::vector<double> fitted;
};

struct SmoothingOptions {
  int iterations = 10;
  std::size_t mc_reps = 100000;
  /// When set, the final iterate is fitted against E exp(-h S t^alpha).
  std::optional<ShiftSampler> shift;
  std::size_t fit_reps = 100000;
};

struct SmoothingResult {
  GridFunction f;
  /// Sup-norm change made by each iteration.
  std::vector<double> residuals;
  std::optional<SmoothingFit> fit;
};
nlohmann::json to_json(const SmoothingResult& r);

/// Iterates f -> E prod_j f(t exp(z_j)) on the grid of f0, with fresh
/// offspring draws each iteration shared by all nodes. f0 must be
/// non-increasing with values in [0, 1].
SmoothingResult smoothing_iterate(const MeasureSampler& offspring, double alpha, const GridFunction& f0,
                                  const SmoothingOptions& options, std::uint64_t seed);
SmoothingResult smoothing_iterate(const ReproductionLaw& law, double alpha, const GridFunction& f0,
                                  const SmoothingOptions& options, std::uint64_t seed);

}  // namespace bstable
