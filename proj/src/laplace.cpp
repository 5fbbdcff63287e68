#include "bstable/laplace.hpp"

#include <algorithm>
#include <cmath>

#include "bstable/parallel.hpp"

namespace bstable {

nlohmann::json to_json(const LaplaceEstimate& e) {
  return nlohmann::json{{"function", e.function_id}, {"sampler", e.sampler_id}, {"mean", e.mean},
                        {"std_error", e.std_error}, {"reps", e.reps}, {"truncation_events", e.truncation_events}};
}

LaplaceEstimate laplace_from_draws(std::span<const PointMeasure> draws, const TestFunction& phi,
                                   std::string sampler_id) {
  if (draws.empty()) throw std::invalid_argument("laplace_from_draws needs at least one draw");
  std::vector<double> values;
  values.reserve(draws.size());
  LaplaceEstimate out;
  for (const auto& d : draws) {
    if (d.floor() > phi.left_edge()) ++out.truncation_events;
    values.push_back(std::exp(-integrate_unchecked(d, phi)));
  }
  const Estimate e = mean_estimate(values);
  out.mean = e.mean;
  out.std_error = e.std_error;
  out.reps = e.reps;
  out.function_id = phi.id();
  out.sampler_id = std::move(sampler_id);
  return out;
}

namespace {

std::vector<PointMeasure> draw_all(const MeasureSampler& sampler, std::size_t reps, std::uint64_t seed) {
  return parallel_map(reps, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    return sampler(rng);
  });
}

void check_reps_and_floor(const MeasureSampler& sampler, double edge, std::size_t reps) {
  if (reps < 1000) throw std::invalid_argument("Laplace estimates need reps >= 1000");
  if (sampler.declared_floor > edge) {
    throw TruncationError("sampler floor is above the left edge of a test function");
  }
}

}  // namespace

LaplaceEstimate laplace_functional(const MeasureSampler& sampler, const TestFunction& phi, std::size_t reps,
                                   std::uint64_t seed) {
  check_reps_and_floor(sampler, phi.left_edge(), reps);
  const auto draws = draw_all(sampler, reps, seed);
  return laplace_from_draws(draws, phi, sampler.description);
}

std::vector<LaplaceEstimate> laplace_battery(const MeasureSampler& sampler, const std::vector<TestFunction>& battery,
                                             std::size_t reps, std::uint64_t seed) {
  for (const auto& phi : battery) check_reps_and_floor(sampler, phi.left_edge(), reps);
  const auto draws = draw_all(sampler, reps, seed);
  std::vector<LaplaceEstimate> out;
  out.reserve(battery.size());
  for (const auto& phi : battery) out.push_back(laplace_from_draws(draws, phi, sampler.description));
  return out;
}

double sdppp_laplace_integral(double alpha, const DecorationLaw& decoration, const TestFunction& phi,
                              const OracleOptions& options) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!decoration.normalized()) throw std::invalid_argument("the Laplace oracle needs a normalized decoration");
  if (phi.height() == 0.0) return 0.0;

  // Psi(x) through E exp(-<tau_x D, phi>).
  std::vector<PointMeasure> pool;
  std::vector<double> weights;
  if (decoration.is_mixture()) {
    pool = decoration.components();
    weights = decoration.probabilities();
  } else {
    pool = parallel_map(options.decoration_reps, [&](std::size_t i) {
      Rng rng = make_stream(options.decoration_seed, i);
      return decoration.draw(rng);
    });
    weights.assign(pool.size(), 1.0 / static_cast<double>(pool.size()));
  }
  auto integrand = [&](double x) {
    double laplace = 0.0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      double total = 0.0;
      for (double a : pool[k].atoms()) {
        if (x + a <= phi.left_edge()) break;
        total += phi(x + a);
      }
      laplace += weights[k] * std::exp(-total);
    }
    // 1 - exp(-Psi) = 1 - laplace.
    return std::exp(-alpha * x) * (1.0 - laplace);
  };

  const double a = phi.left_edge();
  const double b = std::max(a, std::log(1e8 / alpha) / alpha);
  if (b == a) return 0.0;

  // Panels split at the kinks of phi, and for mixtures at the kinks moved by
  // every atom, so the trapezoid rule sees a smooth integrand on each panel.
  std::vector<double> kinks{phi.left_edge(), phi.left_edge() + 1.0 / phi.slope()};
  if (phi.kind() == TestFunction::Kind::plateau) {
    kinks.push_back(phi.right_edge() - 1.0 / phi.slope());
    kinks.push_back(phi.right_edge());
  }
  std::vector<double> cuts{a, b};
  for (double k : kinks) {
    if (decoration.is_mixture()) {
      for (const auto& comp : pool) {
        for (double atom : comp.atoms()) cuts.push_back(k - atom);
      }
    } else {
      cuts.push_back(k);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double x) { return x < a || x > b; }), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Panel {
    double lo;
    double h;
    double sum;
  };
  std::vector<Panel> panels;
  std::size_t n = std::max<std::size_t>(2, options.initial_intervals / (cuts.size() - 1));
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    Panel panel{cuts[p], (cuts[p + 1] - cuts[p]) / static_cast<double>(n), 0.0};
    panel.sum = 0.5 * (integrand(cuts[p]) + integrand(cuts[p + 1]));
    for (std::size_t i = 1; i < n; ++i) panel.sum += integrand(panel.lo + panel.h * static_cast<double>(i));
    panels.push_back(panel);
  }
  auto total = [&] {
    double t = 0.0;
    for (const auto& p : panels) t += p.sum * p.h;
    return t;
  };
  double previous = total();
  while (n < options.max_intervals) {
    // Reuse the old nodes; only the midpoints are new.
    for (auto& p : panels) {
      for (std::size_t i = 0; i < n; ++i) p.sum += integrand(p.lo + p.h * (static_cast<double>(i) + 0.5));
      p.h *= 0.5;
    }
    n *= 2;
    const double current = total();
    if (std::abs(current - previous) < options.tolerance) return current;
    previous = current;
  }
  throw QuadratureError("trapezoid rule did not converge to the requested tolerance");
}

Estimate sdppp_laplace_oracle(double c, std::span<const double> shift_values, double alpha,
                              const DecorationLaw& decoration, const TestFunction& phi, const OracleOptions& options) {
  if (shift_values.empty()) throw std::invalid_argument("the Laplace oracle needs shift samples");
  const double integral = sdppp_laplace_integral(alpha, decoration, phi, options);
  std::vector<double> values;
  values.reserve(shift_values.size());
  for (double s : shift_values) values.push_back(std::exp(-c * s * integral));
  return mean_estimate(values);
}

}  // namespace bstable
