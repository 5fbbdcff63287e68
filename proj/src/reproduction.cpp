#include "bstable/reproduction.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace bstable {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

/// Gaussian families share kappa(theta) = log m + theta mu + theta^2 sigma^2 / 2.
struct GaussianView {
  double log_m;
  double mu;
  double sigma;
};

std::optional<GaussianView> gaussian_view(const ReproductionLaw& law) {
  return std::visit(Overloaded{
                        [](const BinaryGaussian& f) -> std::optional<GaussianView> {
                          return GaussianView{std::log(2.0), f.mu, f.sigma};
                        },
                        [](const PoissonGaussian& f) -> std::optional<GaussianView> {
                          return GaussianView{std::log(f.mean_count), f.mu, f.sigma};
                        },
                        [](const BinaryDeterministic&) -> std::optional<GaussianView> { return std::nullopt; },
                    },
                    law.family());
}

void check_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::domain_error("kappa: theta must be positive and finite");
}

double log_sum_exp2(double x, double y) {
  const double m = std::max(x, y);
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

}  // namespace

ReproductionLaw::ReproductionLaw(Family family) : family_(family) {
  std::visit(Overloaded{
                 [](const BinaryGaussian& f) {
                   require(std::isfinite(f.mu), "binary_gaussian: mu must be finite");
                   require(f.sigma > 0.0 && std::isfinite(f.sigma), "binary_gaussian: sigma must be positive");
                 },
                 [](const PoissonGaussian& f) {
                   require(f.mean_count > 1.0 && std::isfinite(f.mean_count),
                           "poisson_gaussian: mean offspring count must exceed 1");
                   require(std::isfinite(f.mu), "poisson_gaussian: mu must be finite");
                   require(f.sigma > 0.0 && std::isfinite(f.sigma), "poisson_gaussian: sigma must be positive");
                 },
                 [](const BinaryDeterministic& f) {
                   require(std::isfinite(f.a) && std::isfinite(f.b), "binary_deterministic: atoms must be finite");
                 },
             },
             family_);
}

double ReproductionLaw::mean_offspring() const {
  if (const auto* p = std::get_if<PoissonGaussian>(&family_)) return p->mean_count;
  return 2.0;
}

std::string ReproductionLaw::name() const {
  return std::visit(Overloaded{
                        [](const BinaryGaussian&) { return std::string("binary_gaussian"); },
                        [](const PoissonGaussian&) { return std::string("poisson_gaussian"); },
                        [](const BinaryDeterministic&) { return std::string("binary_deterministic"); },
                    },
                    family_);
}

std::string ReproductionLaw::description() const {
  std::ostringstream os;
  os.precision(10);
  std::visit(Overloaded{
                 [&](const BinaryGaussian& f) { os << "binary_gaussian(mu=" << f.mu << ", sigma=" << f.sigma << ")"; },
                 [&](const PoissonGaussian& f) {
                   os << "poisson_gaussian(m=" << f.mean_count << ", mu=" << f.mu << ", sigma=" << f.sigma << ")";
                 },
                 [&](const BinaryDeterministic& f) { os << "binary_deterministic(a=" << f.a << ", b=" << f.b << ")"; },
             },
             family_);
  return os.str();
}

nlohmann::json to_json(const ReproductionLaw& law) {
  return std::visit(Overloaded{
                        [](const BinaryGaussian& f) {
                          return nlohmann::json{{"family", "binary_gaussian"}, {"mu", f.mu}, {"sigma", f.sigma}};
                        },
                        [](const PoissonGaussian& f) {
                          return nlohmann::json{
                              {"family", "poisson_gaussian"}, {"m", f.mean_count}, {"mu", f.mu}, {"sigma", f.sigma}};
                        },
                        [](const BinaryDeterministic& f) {
                          return nlohmann::json{{"family", "binary_deterministic"}, {"a", f.a}, {"b", f.b}};
                        },
                    },
                    law.family());
}

ReproductionLaw law_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("law specification must be a JSON object");
  const std::string family = j.at("family").get<std::string>();
  if (family == "binary_gaussian") {
    return ReproductionLaw::binary_gaussian(j.at("mu").get<double>(), j.at("sigma").get<double>());
  }
  if (family == "poisson_gaussian") {
    return ReproductionLaw::poisson_gaussian(j.at("m").get<double>(), j.at("mu").get<double>(),
                                             j.at("sigma").get<double>());
  }
  if (family == "binary_deterministic") {
    return ReproductionLaw::binary_deterministic(j.at("a").get<double>(), j.at("b").get<double>());
  }
  throw std::invalid_argument("unknown law family: " + family);
}

void append_offspring(const ReproductionLaw& law, double origin, Rng& rng, std::vector<double>& out) {
  std::visit(Overloaded{
                 [&](const BinaryGaussian& f) {
                   std::normal_distribution<double> normal(f.mu, f.sigma);
                   out.push_back(origin + normal(rng));
                   out.push_back(origin + normal(rng));
                 },
                 [&](const PoissonGaussian& f) {
                   std::poisson_distribution<long> count(f.mean_count);
                   std::normal_distribution<double> normal(f.mu, f.sigma);
                   for (long k = count(rng); k > 0; --k) out.push_back(origin + normal(rng));
                 },
                 [&](const BinaryDeterministic& f) {
                   out.push_back(origin + f.a);
                   out.push_back(origin + f.b);
                 },
             },
             law.family());
}

PointMeasure sample_offspring(const ReproductionLaw& law, Rng& rng) {
  std::vector<double> atoms;
  append_offspring(law, 0.0, rng, atoms);
  return PointMeasure::from_atoms(std::move(atoms));
}

double kappa(const ReproductionLaw& law, double theta) {
  check_theta(theta);
  if (const auto g = gaussian_view(law)) {
    return g->log_m + theta * g->mu + 0.5 * theta * theta * g->sigma * g->sigma;
  }
  const auto& f = std::get<BinaryDeterministic>(law.family());
  return log_sum_exp2(theta * f.a, theta * f.b);
}

double kappa_d1(const ReproductionLaw& law, double theta) {
  check_theta(theta);
  if (const auto g = gaussian_view(law)) return g->mu + theta * g->sigma * g->sigma;
  const auto& f = std::get<BinaryDeterministic>(law.family());
  const double lse = log_sum_exp2(theta * f.a, theta * f.b);
  return f.a * std::exp(theta * f.a - lse) + f.b * std::exp(theta * f.b - lse);
}

double kappa_d2(const ReproductionLaw& law, double theta) {
  check_theta(theta);
  if (const auto g = gaussian_view(law)) return g->sigma * g->sigma;
  const auto& f = std::get<BinaryDeterministic>(law.family());
  const double lse = log_sum_exp2(theta * f.a, theta * f.b);
  const double wa = std::exp(theta * f.a - lse);
  const double wb = std::exp(theta * f.b - lse);
  const double m1 = wa * f.a + wb * f.b;
  return wa * f.a * f.a + wb * f.b * f.b - m1 * m1;
}

namespace {

// Bisection on a bracket with f(lo) > 0 >= f(hi), to relative width 1e-12.
template <class F>
double bisect_root(F&& f, double lo, double hi) {
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

// kappa is convex with kappa(0+) = log(mean count) > 0, so the smallest
// positive root is the first downward crossing.
double convex_smallest_root(const ReproductionLaw& law) {
  auto k = [&](double t) { return kappa(law, t); };
  auto k1 = [&](double t) { return kappa_d1(law, t); };
  double hi = 1.0;
  while (k(hi) > 0.0 && k1(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e8) throw NoCriticalRootError("kappa stays positive on (0, 1e8]");
  }
  if (k(hi) <= 0.0 && k1(hi) <= 0.0) return bisect_root(k, 0.0, hi);
  // kappa(hi) >= 0 with kappa'(hi) >= 0: the minimum lies in (0, hi].
  double lo = 1e-300;
  if (k1(lo) >= 0.0) throw NoCriticalRootError("kappa is non-decreasing on (0, inf)");
  double mhi = hi;
  for (int it = 0; it < 400 && mhi - lo > 1e-14 * mhi; ++it) {
    const double mid = 0.5 * (lo + mhi);
    if (k1(mid) < 0.0) {
      lo = mid;
    } else {
      mhi = mid;
    }
  }
  const double argmin = mhi;
  if (k(argmin) > 0.0) throw NoCriticalRootError("minimum of kappa is positive");
  return bisect_root(k, 0.0, argmin);
}

}  // namespace

double solve_critical_alpha(const ReproductionLaw& law) {
  const auto g = gaussian_view(law);
  if (!g) return convex_smallest_root(law);
  // sigma^2 theta^2 / 2 + mu theta + log m = 0.
  const double s2 = g->sigma * g->sigma;
  const double disc = g->mu * g->mu - 2.0 * s2 * g->log_m;
  const double scale = std::max(g->mu * g->mu, 2.0 * s2 * g->log_m);
  const double eps = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (g->mu >= 0.0) throw NoCriticalRootError("kappa has no positive root when mu >= 0");
  if (disc < -eps) throw NoCriticalRootError("kappa has no real root (mu^2 < 2 sigma^2 log m)");
  if (disc <= eps) return -g->mu / s2;  // double root
  const double root = std::sqrt(disc);
  // Product of the roots is 2 log m / sigma^2; avoids cancellation in -mu - root.
  return 2.0 * g->log_m / (-g->mu + root);
}

std::string to_string(CriticalCase c) {
  switch (c) {
    case CriticalCase::regular: return "regular";
    case CriticalCase::boundary: return "boundary";
    case CriticalCase::supercritical: return "supercritical";
    case CriticalCase::indeterminate: return "indeterminate";
    case CriticalCase::invalid: return "invalid";
  }
  return "invalid";
}

CriticalCase critical_case_from_string(const std::string& s) {
  if (s == "regular") return CriticalCase::regular;
  if (s == "boundary") return CriticalCase::boundary;
  if (s == "supercritical") return CriticalCase::supercritical;
  if (s == "indeterminate") return CriticalCase::indeterminate;
  if (s == "invalid") return CriticalCase::invalid;
  throw std::invalid_argument("unknown case: " + s);
}

nlohmann::json to_json(const CriticalityReport& r) {
  return nlohmann::json{{"alpha", r.alpha},
                        {"case", to_string(r.criticality)},
                        {"kappa_at_alpha", r.kappa_at_alpha},
                        {"a1_ok", r.a1_ok},
                        {"a3_ok", r.a3_ok},
                        {"first_moment", r.first_moment},
                        {"first_moment_std_error", r.first_moment_std_error},
                        {"second_moment", r.second_moment},
                        {"xlogx_moments_ok", r.xlogx_moments_ok},
                        {"moments_basis", r.moments_basis}};
}

CriticalCase case_from_first_moment(double first_moment, double std_error) {
  if (std_error == 0.0) {
    if (std::abs(first_moment) <= kBoundaryTolerance) return CriticalCase::boundary;
    return first_moment < 0.0 ? CriticalCase::regular : CriticalCase::supercritical;
  }
  if (std::abs(first_moment) <= 3.0 * std_error) return CriticalCase::indeterminate;
  return first_moment < 0.0 ? CriticalCase::regular : CriticalCase::supercritical;
}

CriticalityReport classify(const ReproductionLaw& law, double alpha) {
  CriticalityReport r;
  r.alpha = alpha;
  r.kappa_at_alpha = kappa(law, alpha);
  const bool critical = std::abs(r.kappa_at_alpha) <= kKappaTolerance;
  r.a1_ok = critical && law.mean_offspring() > 1.0;
  r.moments_basis = "analytic";
  if (const auto g = gaussian_view(law)) {
    const double s2 = g->sigma * g->sigma;
    const double weight = std::exp(g->log_m + alpha * g->mu + 0.5 * alpha * alpha * s2);
    const double tilted_mean = g->mu + alpha * s2;
    r.first_moment = weight * tilted_mean;
    r.second_moment = weight * (tilted_mean * tilted_mean + s2);
    r.a3_ok = true;
    // Gaussian displacements have every exponential moment.
    r.xlogx_moments_ok = true;
  } else {
    const auto& f = std::get<BinaryDeterministic>(law.family());
    r.first_moment = f.a * std::exp(alpha * f.a) + f.b * std::exp(alpha * f.b);
    r.second_moment = f.a * f.a * std::exp(alpha * f.a) + f.b * f.b * std::exp(alpha * f.b);
    // Both atoms lie on (a - b) Z + b (or on any lattice through a when a == b).
    r.a3_ok = false;
    r.xlogx_moments_ok = true;
  }
  r.criticality = critical ? case_from_first_moment(r.first_moment, 0.0) : CriticalCase::invalid;
  return r;
}

}  // namespace bstable
