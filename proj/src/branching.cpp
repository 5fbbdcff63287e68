#include "bstable/branching.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <variant>

#include "bstable/stats.hpp"

namespace bstable {

void advance_generation(const ReproductionLaw& law, std::vector<double>& positions, double barrier, Rng& rng,
                        std::size_t population_cap) {
  std::vector<double> next;
  next.reserve(std::min<std::size_t>(population_cap, 2 * positions.size() + 8));
  auto push = [&](double x) {
    if (x < barrier) return;
    if (next.size() >= population_cap) {
      throw ResourceError("branching random walk population exceeded the cap of " + std::to_string(population_cap));
    }
    next.push_back(x);
  };
  const auto& family = law.family();
  if (const auto* f = std::get_if<BinaryGaussian>(&family)) {
    std::normal_distribution<double> normal(f->mu, f->sigma);
    for (double x : positions) {
      push(x + normal(rng));
      push(x + normal(rng));
    }
  } else if (const auto* f = std::get_if<PoissonGaussian>(&family)) {
    std::poisson_distribution<long> count(f->mean_count);
    std::normal_distribution<double> normal(f->mu, f->sigma);
    for (double x : positions) {
      for (long k = count(rng); k > 0; --k) push(x + normal(rng));
    }
  } else {
    const auto& d = std::get<BinaryDeterministic>(family);
    for (double x : positions) {
      push(x + d.a);
      push(x + d.b);
    }
  }
  positions.swap(next);
}

std::vector<double> simulate_positions(const ReproductionLaw& law, int generations, double barrier, Rng& rng,
                                       std::size_t population_cap) {
  if (generations < 0) throw std::invalid_argument("generations must be non-negative");
  std::vector<double> positions;
  if (0.0 >= barrier) positions.push_back(0.0);
  for (int k = 0; k < generations && !positions.empty(); ++k) {
    advance_generation(law, positions, barrier, rng, population_cap);
  }
  return positions;
}

PointMeasure simulate_generation(const ReproductionLaw& law, int generations, double barrier, Rng& rng,
                                 std::size_t population_cap) {
  return PointMeasure::from_atoms(simulate_positions(law, generations, barrier, rng, population_cap), barrier);
}

MeasureSampler generation_sampler(const ReproductionLaw& law, int generations, double barrier) {
  if (generations < 0) throw std::invalid_argument("generations must be non-negative");
  return MeasureSampler{
      [law, generations, barrier](Rng& rng) { return simulate_generation(law, generations, barrier, rng); },
      barrier, "Z_" + std::to_string(generations) + " of " + law.description()};
}

MeasureSampler constant_sampler(PointMeasure measure, std::string description) {
  const double floor = measure.floor();
  return MeasureSampler{[m = std::move(measure)](Rng&) { return m; }, floor, std::move(description)};
}

MeasureSampler convolve(MeasureSampler outer, MeasureSampler inner, std::size_t population_cap) {
  const double declared = std::max(outer.declared_floor, inner.declared_floor == kNegInf
                                                              ? kNegInf
                                                              : outer.declared_floor + inner.declared_floor);
  std::string description = "(" + outer.description + ") * (" + inner.description + ")";
  auto draw = [outer = std::move(outer), inner = std::move(inner), population_cap](Rng& rng) {
    const PointMeasure seeds = outer(rng);
    std::vector<double> atoms;
    double floor = seeds.floor();
    for (double d : seeds.atoms()) {
      const PointMeasure child = inner(rng);
      floor = std::max(floor, d + child.floor());
      if (atoms.size() + child.size() > population_cap) {
        throw ResourceError("branching convolution exceeded the population cap");
      }
      for (double a : child.atoms()) atoms.push_back(d + a);
    }
    return PointMeasure::from_atoms(std::move(atoms), floor);
  };
  return MeasureSampler{std::move(draw), declared, std::move(description)};
}

MeasureSampler dirac_sampler(std::function<double(Rng&)> shift, std::string description) {
  return MeasureSampler{[shift = std::move(shift)](Rng& rng) {
                          const double y = shift(rng);
                          if (y == kNegInf) return PointMeasure();
                          return PointMeasure::dirac(y);
                        },
                        kNegInf, std::move(description)};
}

double recommend_floor(double support_left, const ReproductionLaw& law, int n_steps, double miss_probability) {
  if (!(miss_probability > 0.0 && miss_probability < 1.0)) {
    throw std::invalid_argument("miss_probability must lie in (0, 1)");
  }
  if (n_steps < 0) throw std::invalid_argument("n_steps must be non-negative");
  if (n_steps == 0) return support_left;
  const double n = static_cast<double>(n_steps);
  const double expected_count = std::pow(law.mean_offspring(), n);
  const double per_particle = -std::expm1(std::log1p(-miss_probability) / expected_count);
  double q = 0.0;
  const auto& family = law.family();
  if (const auto* f = std::get_if<BinaryGaussian>(&family)) {
    q = n * f->mu + std::sqrt(n) * f->sigma * normal_upper_quantile(per_particle);
  } else if (const auto* f = std::get_if<PoissonGaussian>(&family)) {
    q = n * f->mu + std::sqrt(n) * f->sigma * normal_upper_quantile(per_particle);
  } else {
    const auto& d = std::get<BinaryDeterministic>(family);
    q = n * std::max(d.a, d.b);
  }
  return support_left - std::max(q, 0.0);
}

}  // namespace bstable
