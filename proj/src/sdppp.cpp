#include "bstable/sdppp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "bstable/parallel.hpp"

namespace bstable {

DecorationLaw DecorationLaw::mixture(std::vector<PointMeasure> components, std::vector<double> probabilities) {
  if (components.empty() || components.size() != probabilities.size()) {
    throw std::invalid_argument("decoration mixture needs one probability per component");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("decoration probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("decoration probabilities must sum to 1");
  DecorationLaw law;
  law.normalized_ = true;
  for (const auto& c : components) {
    if (c.empty()) throw std::invalid_argument("decoration components need at least one atom");
    if (!c.exact()) throw std::invalid_argument("decoration components must be exact measures");
    law.window_ = std::max(law.window_, c.max_atom() - c.atoms().back());
    if (c.max_atom() != 0.0) law.normalized_ = false;
  }
  double running = 0.0;
  for (double& p : probabilities) {
    p /= total;
    running += p;
    law.cumulative_.push_back(running);
  }
  law.cumulative_.back() = 1.0;
  law.components_ = std::move(components);
  law.probabilities_ = std::move(probabilities);
  return law;
}

DecorationLaw DecorationLaw::dirac() { return mixture({PointMeasure::dirac(0.0)}, {1.0}); }

DecorationLaw DecorationLaw::from_sampler(MeasureSampler sampler, double window, bool normalized) {
  if (!(window > 0.0) || !std::isfinite(window)) throw std::invalid_argument("decoration window must be positive");
  DecorationLaw law;
  law.sampler_ = std::move(sampler);
  law.window_ = window;
  law.normalized_ = normalized;
  return law;
}

bool DecorationLaw::is_dirac() const {
  return is_mixture() && components_.size() == 1 && components_.front().size() == 1 &&
         components_.front().max_atom() == 0.0;
}

PointMeasure DecorationLaw::draw(Rng& rng) const {
  if (!sampler_) {
    if (components_.size() == 1) return components_.front();
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                                components_.size() - 1);
    return components_[k];
  }
  PointMeasure raw = (*sampler_)(rng);
  if (raw.empty()) return raw;
  if (normalized_ && raw.max_atom() != 0.0) {
    throw std::logic_error("normalized decoration sampler produced a draw with max atom != 0");
  }
  const double keep = raw.max_atom() - window_;
  std::vector<double> atoms(raw.atoms().begin(), raw.atoms().end());
  return PointMeasure::from_atoms(std::move(atoms), std::max(keep, raw.floor()));
}

std::string DecorationLaw::description() const {
  if (sampler_) return "sampler(" + sampler_->description + ")";
  return to_json().dump();
}

nlohmann::json DecorationLaw::to_json() const {
  if (sampler_) return nlohmann::json{{"sampler", sampler_->description}, {"window", window_}};
  nlohmann::json mix = nlohmann::json::array();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    mix.push_back({{"p", probabilities_[k]},
                   {"atoms", std::vector<double>(components_[k].atoms().begin(), components_[k].atoms().end())}});
  }
  return nlohmann::json{{"mixture", mix}};
}

DecorationLaw DecorationLaw::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("decoration must be a JSON object");
  if (j.value("dirac", false)) return dirac();
  if (!j.contains("mixture")) throw std::invalid_argument("decoration JSON needs a \"mixture\" array");
  std::vector<PointMeasure> components;
  std::vector<double> probabilities;
  for (const auto& entry : j.at("mixture")) {
    probabilities.push_back(entry.at("p").get<double>());
    components.push_back(PointMeasure::from_atoms(entry.at("atoms").get<std::vector<double>>()));
  }
  return mixture(std::move(components), std::move(probabilities));
}

NormalizedDecoration normalize_decoration(const DecorationLaw& raw, double alpha, std::size_t budget,
                                          std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  NormalizedDecoration out;
  std::vector<PointMeasure> components;
  std::vector<double> weights;
  if (raw.is_mixture()) {
    for (std::size_t k = 0; k < raw.components().size(); ++k) {
      const auto& comp = raw.components()[k];
      weights.push_back(raw.probabilities()[k] * std::exp(alpha * comp.max_atom()));
      components.push_back(comp.translate(-comp.max_atom()));
    }
    out.c = std::accumulate(weights.begin(), weights.end(), 0.0);
    out.c_std_error = 0.0;
    out.effective_sample_size = std::numeric_limits<double>::infinity();
    out.exact = true;
  } else {
    if (budget < 2) throw std::invalid_argument("importance resampling needs a budget of at least 2 draws");
    const auto draws = parallel_map(budget, [&](std::size_t i) {
      Rng rng = make_stream(seed, i);
      return raw.draw(rng);
    });
    std::vector<double> all_weights;
    all_weights.reserve(budget);
    for (const auto& d : draws) {
      if (d.empty()) {
        all_weights.push_back(0.0);
        continue;
      }
      const double w = std::exp(alpha * d.max_atom());
      all_weights.push_back(w);
      weights.push_back(w);
      // Recentred atoms keep only the kept window below the max.
      std::vector<double> atoms(d.atoms().begin(), d.atoms().end());
      for (double& a : atoms) a -= d.max_atom();
      components.push_back(PointMeasure::from_atoms(std::move(atoms)));
    }
    const Estimate c = mean_estimate(all_weights);
    out.c = c.mean;
    out.c_std_error = c.std_error;
    double sw = 0.0, sw2 = 0.0;
    for (double w : weights) {
      sw += w;
      sw2 += w * w;
    }
    out.effective_sample_size = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    out.exact = false;
  }
  if (!std::isfinite(out.c) || !(out.c > 0.0)) {
    throw std::runtime_error("decoration normalisation constant is not finite and positive");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  out.star = DecorationLaw::mixture(std::move(components), std::move(weights));
  return out;
}

PointMeasure sample_ppp_exponential(double alpha, double floor, Rng& rng, std::size_t population_cap) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  if (!std::isfinite(floor)) throw std::invalid_argument("PPP floor must be finite");
  const double mean = std::exp(-alpha * floor) / alpha;
  if (mean > static_cast<double>(population_cap)) {
    throw ResourceError("Poisson process above the floor has more expected atoms than the cap");
  }
  const long n = mean > 0.0 ? std::poisson_distribution<long>(mean)(rng) : 0;
  std::exponential_distribution<double> gap(alpha);
  std::vector<double> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) atoms.push_back(floor + gap(rng));
  return PointMeasure::from_atoms(std::move(atoms), floor);
}

PointMeasure sample_sdppp(const ShiftSampler& shift, double c, double alpha, const DecorationLaw& decoration,
                          double floor, Rng& rng, std::size_t population_cap) {
  if (!decoration.normalized()) throw std::invalid_argument("sample_sdppp needs a normalized decoration");
  return sample_sdppp_given_shift(shift.draw(rng), c, alpha, decoration, floor, rng, population_cap);
}

PointMeasure sample_sdppp_given_shift(double s, double c, double alpha, const DecorationLaw& decoration, double floor,
                                      Rng& rng, std::size_t population_cap) {
  if (!decoration.normalized()) throw std::invalid_argument("sample_sdppp needs a normalized decoration");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (!(s > 0.0)) return PointMeasure::from_atoms({}, floor);
  const double offset = std::log(c * s) / alpha;
  const PointMeasure base = sample_ppp_exponential(alpha, floor - offset, rng, population_cap);
  std::vector<double> atoms;
  if (decoration.is_dirac()) {
    atoms.reserve(base.size());
    for (double xi : base.atoms()) atoms.push_back(offset + xi);
  } else {
    for (double xi : base.atoms()) {
      const double origin = offset + xi;
      const PointMeasure d = decoration.draw(rng);
      for (double a : d.atoms()) {
        if (origin + a < floor) break;
        atoms.push_back(origin + a);
      }
      if (atoms.size() > population_cap) throw ResourceError("SDPPP draw exceeded the population cap");
    }
  }
  return PointMeasure::from_atoms(std::move(atoms), floor);
}

MeasureSampler sdppp_sampler(ShiftSampler shift, double c, double alpha, DecorationLaw decoration, double floor) {
  std::ostringstream os;
  os.precision(6);
  os << "SDPPP(c=" << c << " * " << shift.description() << ", alpha=" << alpha << ", D=" << decoration.description()
     << ", floor=" << floor << ")";
  if (!decoration.normalized()) throw std::invalid_argument("sdppp_sampler needs a normalized decoration");
  return MeasureSampler{[shift = std::move(shift), c, alpha, decoration = std::move(decoration), floor](Rng& rng) {
                          return sample_sdppp(shift, c, alpha, decoration, floor, rng);
                        },
                        floor, os.str()};
}

MeasureSampler cox_sampler(ShiftSampler shift, double c, double alpha, double floor) {
  auto s = sdppp_sampler(std::move(shift), c, alpha, DecorationLaw::dirac(), floor);
  s.description = "Cox" + s.description.substr(5);
  return s;
}

Estimate max_cdf_semi_analytic(double c, std::span<const double> shift_values, double alpha, double x) {
  const double scale = c * std::exp(-alpha * x) / alpha;
  std::vector<double> v;
  v.reserve(shift_values.size());
  for (double s : shift_values) v.push_back(std::exp(-scale * s));
  return mean_estimate(v);
}

Estimate max_cdf_semi_analytic(double c, const ShiftSampler& shift, double alpha, double x, std::size_t reps,
                               std::uint64_t seed) {
  if (reps < 1000) throw std::invalid_argument("max_cdf_semi_analytic needs reps >= 1000");
  return max_cdf_semi_analytic(c, sample_shift_values(shift, reps, seed).values, alpha, x);
}

Estimate estimate_g(std::span<const double> shift_values, double alpha, double x) {
  const double scale = std::exp(alpha * x);
  std::vector<double> v;
  v.reserve(shift_values.size());
  for (double s : shift_values) v.push_back(std::exp(-scale * s));
  return mean_estimate(v);
}

Estimate estimate_g(const ShiftSampler& shift, double alpha, double x, std::size_t reps, std::uint64_t seed) {
  if (reps < 1000) throw std::invalid_argument("estimate_g needs reps >= 1000");
  return estimate_g(sample_shift_values(shift, reps, seed).values, alpha, x);
}

Estimate GCurve::at(double x) const {
  if (xs.empty() || x < xs.front() || x > xs.back()) throw std::out_of_range("GCurve::at outside the grid");
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return values.back();
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return {values[lo].mean + w * (values[hi].mean - values[lo].mean),
          values[lo].std_error + w * (values[hi].std_error - values[lo].std_error), values[lo].reps};
}

GCurve estimate_g_curve(std::span<const double> shift_values, double alpha, std::vector<double> xs) {
  if (!std::is_sorted(xs.begin(), xs.end())) throw std::invalid_argument("g curve grid must be increasing");
  GCurve curve;
  curve.values.reserve(xs.size());
  for (double x : xs) curve.values.push_back(estimate_g(shift_values, alpha, x));
  curve.xs = std::move(xs);
  return curve;
}

double invert_sample_g(std::span<const double> shift_values, double alpha, double target, double lo, double hi) {
  auto g = [&](double x) {
    const double scale = std::exp(alpha * x);
    double total = 0.0;
    for (double s : shift_values) total += std::exp(-scale * s);
    return total / static_cast<double>(shift_values.size());
  };
  if (!(target < g(lo) && target > g(hi))) throw std::out_of_range("target outside the range of the sample g");
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool monotone_toward_one(std::span<const Estimate> ratios) {
  if (ratios.empty()) return false;
  const auto& first = ratios.front();
  if (std::abs(first.mean - 1.0) <= 4.0 * first.std_error) {
    return std::all_of(ratios.begin(), ratios.end(),
                       [](const Estimate& r) { return std::abs(r.mean - 1.0) <= 4.0 * r.std_error; });
  }
  const double direction = first.mean < 1.0 ? 1.0 : -1.0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    if ((1.0 - ratios[k].mean) * direction < -4.0 * ratios[k].std_error) return false;
    if (k > 0 && (ratios[k].mean - ratios[k - 1].mean) * direction < 0.0) return false;
  }
  return true;
}

nlohmann::json to_json(const GAsymptoticsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < r.z_grid.size(); ++k) {
    rows.push_back({{"z", r.z_grid[k]}, {"ratio", r.ratios[k].mean}, {"std_error", r.ratios[k].std_error}});
  }
  return nlohmann::json{{"case", to_string(r.criticality)}, {"ratios", rows},
                        {"trend_toward_one", r.trend_toward_one}, {"clamp_fraction", r.clamp_fraction},
                        {"reps", r.reps}, {"generations_used", r.generations_used}};
}

GAsymptoticsReport g_asymptotics_from_sample(CriticalCase criticality, const ShiftSample& sample, double alpha,
                                             std::vector<double> z_grid) {
  if (criticality != CriticalCase::regular && criticality != CriticalCase::boundary) {
    throw std::invalid_argument("g asymptotics are defined for regular and boundary cases");
  }
  GAsymptoticsReport report;
  report.criticality = criticality;
  report.clamp_fraction = sample.clamp_fraction;
  report.reps = sample.values.size();
  std::vector<double> per(sample.values.size());
  for (double z : z_grid) {
    if (!(z < 0.0)) throw std::invalid_argument("g asymptotics grid must be negative");
    const double t = std::exp(alpha * z);
    const double norm = criticality == CriticalCase::regular ? t : alpha * std::abs(z) * t;
    // 1 - exp(-s t) without cancellation.
    for (std::size_t i = 0; i < per.size(); ++i) per[i] = -std::expm1(-sample.values[i] * t) / norm;
    report.ratios.push_back(mean_estimate(per));
  }
  report.z_grid = std::move(z_grid);
  report.trend_toward_one = monotone_toward_one(report.ratios);
  return report;
}

GAsymptoticsReport check_g_asymptotics(CriticalCase criticality, const ShiftSampler& shift, double alpha,
                                       std::vector<double> z_grid, std::size_t reps, std::uint64_t seed) {
  auto report = g_asymptotics_from_sample(criticality, sample_shift_values(shift, reps, seed), alpha, std::move(z_grid));
  report.generations_used = shift.generations();
  return report;
}

}  // namespace bstable
