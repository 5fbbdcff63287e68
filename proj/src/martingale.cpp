#include "bstable/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bstable/branching.hpp"
#include "bstable/parallel.hpp"

namespace bstable {

namespace {

void require_critical(const ReproductionLaw& law, double alpha) {
  if (std::abs(kappa(law, alpha)) > kKappaTolerance) {
    throw ClassificationError("kappa(alpha) is not zero for " + law.description());
  }
}

double additive_value(const std::vector<double>& positions, double alpha) {
  double total = 0.0;
  for (double x : positions) total += std::exp(alpha * x);
  return total;
}

double derivative_value(const std::vector<double>& positions, double alpha) {
  double total = 0.0;
  for (double x : positions) total -= x * std::exp(alpha * x);
  return total;
}

}  // namespace

double additive_martingale_barrier(const ReproductionLaw& law, double alpha, int generations, double miss_mass) {
  if (generations <= 0) return kNegInf;
  const double m = law.mean_offspring();
  double ever = 0.0;
  for (int k = 1; k <= generations; ++k) ever += std::pow(m, k);
  return (std::log(miss_mass) - std::log(ever)) / alpha;
}

double additive_martingale(const ReproductionLaw& law, double alpha, int generations, Rng& rng) {
  require_critical(law, alpha);
  const double barrier = additive_martingale_barrier(law, alpha, generations);
  return additive_value(simulate_positions(law, generations, barrier, rng), alpha);
}

double derivative_martingale(const ReproductionLaw& law, double alpha, int generations, Rng& rng) {
  const auto report = classify(law, alpha);
  if (report.criticality != CriticalCase::boundary) {
    throw ClassificationError("derivative martingale needs a boundary-case law; got " +
                              to_string(report.criticality));
  }
  return derivative_value(simulate_positions(law, generations, kNegInf, rng), alpha);
}

std::vector<double> martingale_path(const ReproductionLaw& law, double alpha, MartingaleKind kind,
                                    const std::vector<int>& checkpoints, Rng& rng, double barrier) {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && checkpoints.front() < 0)) {
    throw std::invalid_argument("checkpoints must be non-negative and increasing");
  }
  std::vector<double> out;
  out.reserve(checkpoints.size());
  std::vector<double> positions{0.0};
  int generation = 0;
  for (int target : checkpoints) {
    while (generation < target) {
      advance_generation(law, positions, barrier, rng);
      ++generation;
    }
    out.push_back(kind == MartingaleKind::additive ? additive_value(positions, alpha)
                                                   : derivative_value(positions, alpha));
  }
  return out;
}

ShiftSampler ShiftSampler::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("constant shift must be finite and >= 0");
  std::ostringstream os;
  os.precision(10);
  os << "constant(" << value << ")";
  return ShiftSampler([value](Rng&) { return value; }, Source::constant, os.str());
}

ShiftSampler ShiftSampler::custom(std::function<double(Rng&)> raw, std::string description) {
  return ShiftSampler(std::move(raw), Source::custom, std::move(description));
}

ShiftSampler ShiftSampler::martingale(const ReproductionLaw& law, double alpha, int generations, int min_generations) {
  if (generations < min_generations) {
    throw std::invalid_argument("shift sampler needs at least " + std::to_string(min_generations) + " generations");
  }
  const auto report = classify(law, alpha);
  std::optional<ShiftSampler> out;
  if (report.criticality == CriticalCase::regular) {
    const double barrier = additive_martingale_barrier(law, alpha, generations);
    out = ShiftSampler(
        [law, alpha, generations, barrier](Rng& rng) {
          return additive_value(simulate_positions(law, generations, barrier, rng), alpha);
        },
        Source::regular, "additive martingale W_" + std::to_string(generations) + " of " + law.description());
  } else if (report.criticality == CriticalCase::boundary) {
    out = ShiftSampler(
        [law, alpha, generations](Rng& rng) {
          return derivative_value(simulate_positions(law, generations, kNegInf, rng), alpha);
        },
        Source::boundary, "derivative martingale D_" + std::to_string(generations) + " of " + law.description());
  } else {
    throw ClassificationError("shift sampler needs a regular or boundary law; got " + to_string(report.criticality));
  }
  out->generations_ = generations;
  out->alpha_ = alpha;
  out->law_ = law;
  return *out;
}

nlohmann::json ShiftSampler::metadata() const {
  static const char* names[] = {"constant", "regular", "boundary", "custom"};
  nlohmann::json j{{"source", names[static_cast<int>(source_)]}, {"description", description_}};
  if (law_) {
    j["law"] = to_json(*law_);
    j["alpha"] = alpha_;
    j["generations_used"] = generations_;
  }
  return j;
}

ShiftSample sample_shift_values(const ShiftSampler& shift, std::size_t reps, std::uint64_t seed) {
  const auto raw = parallel_map(reps, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    return shift.draw_raw(rng);
  });
  ShiftSample out;
  out.values.reserve(reps);
  std::size_t clamped = 0;
  for (double v : raw) {
    if (v < 0.0) ++clamped;
    out.values.push_back(v > 0.0 ? v : 0.0);
  }
  out.clamp_fraction = reps == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(reps);
  return out;
}

nlohmann::json to_json(const SmoothingIdentityReport& r) {
  return nlohmann::json{{"ks_statistic", r.ks.statistic},
                        {"ks_p_value", r.ks.p_value},
                        {"lhs_mean", r.lhs_mean.mean},
                        {"lhs_std_error", r.lhs_mean.std_error},
                        {"rhs_mean", r.rhs_mean.mean},
                        {"rhs_std_error", r.rhs_mean.std_error},
                        {"reps", r.reps},
                        {"generations_used", r.generations},
                        {"lhs_clamp_fraction", r.lhs_clamp_fraction}};
}

SmoothingIdentityReport check_smoothing_identity(const ReproductionLaw& law, double alpha, const ShiftSampler& shift,
                                                 std::size_t reps, std::uint64_t seed) {
  if (reps < 1000) throw std::invalid_argument("check_smoothing_identity needs reps >= 1000");
  const ShiftSample lhs = sample_shift_values(shift, reps, domain_seed(seed, 1));
  const std::uint64_t rhs_seed = domain_seed(seed, 2);
  const auto rhs = parallel_map(reps, [&](std::size_t i) {
    Rng rng = make_stream(rhs_seed, i);
    std::vector<double> children;
    append_offspring(law, 0.0, rng, children);
    double total = 0.0;
    for (double z : children) total += std::exp(alpha * z) * shift.draw(rng);
    return total;
  });
  SmoothingIdentityReport report;
  report.ks = ks_two_sample(lhs.values, rhs);
  report.lhs_mean = mean_estimate(lhs.values);
  report.rhs_mean = mean_estimate(rhs);
  report.reps = reps;
  report.generations = shift.generations();
  report.lhs_clamp_fraction = lhs.clamp_fraction;
  return report;
}

}  // namespace bstable
