#include "bstable/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "bstable/parallel.hpp"
#include "bstable/sdppp.hpp"

namespace bstable {

GridFunction::GridFunction(double t_min, double t_max, std::vector<double> values)
    : t_min_(t_min), t_max_(t_max), values_(std::move(values)) {
  if (!(t_min > 0.0 && t_max > t_min)) throw std::invalid_argument("grid needs 0 < t_min < t_max");
  if (values_.size() < 2) throw std::invalid_argument("grid needs at least two nodes");
  log_min_ = std::log(t_min);
  step_ = (std::log(t_max) - log_min_) / static_cast<double>(values_.size() - 1);
}

GridFunction GridFunction::tabulate(double t_min, double t_max, std::size_t nodes,
                                    const std::function<double(double)>& f) {
  if (nodes < 2) throw std::invalid_argument("grid needs at least two nodes");
  std::vector<double> values(nodes);
  const double lo = std::log(t_min);
  const double step = (std::log(t_max) - lo) / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) values[i] = f(std::exp(lo + step * static_cast<double>(i)));
  return GridFunction(t_min, t_max, std::move(values));
}

double GridFunction::node(std::size_t i) const { return std::exp(log_min_ + step_ * static_cast<double>(i)); }

double GridFunction::at_log(double log_t) const {
  const double u = (log_t - log_min_) / step_;
  if (u < 0.0) return 1.0;
  const double last = static_cast<double>(values_.size() - 1);
  if (u >= last) return values_.back();
  const auto i = static_cast<std::size_t>(u);
  const double w = u - static_cast<double>(i);
  return values_[i] + w * (values_[i + 1] - values_[i]);
}

nlohmann::json to_json(const SmoothingResult& r) {
  nlohmann::json j{{"residuals", r.residuals}, {"nodes", r.f.size()}, {"t_min", r.f.t_min()},
                   {"t_max", r.f.t_max()}};
  if (r.fit) {
    j["fit"] = {{"t0", r.fit->t0}, {"h", r.fit->h}, {"sup_distance", r.fit->sup_distance}};
  }
  return j;
}

SmoothingResult smoothing_iterate(const MeasureSampler& offspring, double alpha, const GridFunction& f0,
                                  const SmoothingOptions& options, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (options.iterations < 1) throw std::invalid_argument("at least one iteration is required");
  if (options.mc_reps < 1) throw std::invalid_argument("mc_reps must be positive");
  const auto& v0 = f0.values();
  for (std::size_t i = 0; i < v0.size(); ++i) {
    if (!(v0[i] >= 0.0 && v0[i] <= 1.0)) throw std::invalid_argument("f0 values must lie in [0, 1]");
    if (i > 0 && v0[i] > v0[i - 1]) throw std::invalid_argument("f0 must be non-increasing");
  }

  SmoothingResult result{f0, {}, std::nullopt};
  const std::size_t n = f0.size();
  for (int it = 0; it < options.iterations; ++it) {
    const std::uint64_t iteration_seed = domain_seed(seed, static_cast<std::uint64_t>(it));
    const auto draws = parallel_map(options.mc_reps, [&](std::size_t i) {
      Rng rng = make_stream(iteration_seed, i);
      return offspring(rng);
    });
    const GridFunction& f = result.f;
    const auto next = parallel_map(n, [&](std::size_t k) {
      const double log_t = std::log(f.node(k));
      double total = 0.0;
      for (const auto& d : draws) {
        double product = 1.0;
        for (double z : d.atoms()) product *= f.at_log(log_t + z);
        total += product;
      }
      return total / static_cast<double>(draws.size());
    });
    double residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) residual = std::max(residual, std::abs(next[k] - f.values()[k]));
    result.residuals.push_back(residual);
    result.f = GridFunction(f0.t_min(), f0.t_max(), next);
  }

  if (options.shift) {
    const auto sample = sample_shift_values(*options.shift, options.fit_reps, domain_seed(seed, 1u << 20));
    SmoothingFit fit;
    const std::size_t mid = n / 2;
    fit.t0 = result.f.node(mid);
    // E exp(-S exp(alpha x*)) = f(t0) and h t0^alpha = exp(alpha x*).
    const double x_star = invert_sample_g(sample.values, alpha, result.f.values()[mid]);
    fit.h = std::exp(alpha * x_star) / std::pow(fit.t0, alpha);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = x_star + std::log(result.f.node(k) / fit.t0);
      const double g = estimate_g(sample.values, alpha, x).mean;
      fit.fitted.push_back(g);
      fit.sup_distance = std::max(fit.sup_distance, std::abs(g - result.f.values()[k]));
    }
    result.fit = std::move(fit);
  }
  return result;
}

SmoothingResult smoothing_iterate(const ReproductionLaw& law, double alpha, const GridFunction& f0,
                                  const SmoothingOptions& options, std::uint64_t seed) {
  return smoothing_iterate(generation_sampler(law, 1), alpha, f0, options, seed);
}

}  // namespace bstable
