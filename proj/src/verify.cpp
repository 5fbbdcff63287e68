#include "bstable/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bstable/parallel.hpp"

namespace bstable {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

namespace {

std::vector<PointMeasure> draw_all(const MeasureSampler& sampler, std::size_t reps, std::uint64_t seed) {
  return parallel_map(reps, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    return sampler(rng);
  });
}

std::size_t count_above(const PointMeasure& m, double x) {
  std::size_t k = 0;
  for (double a : m.atoms()) {
    if (a <= x) break;
    ++k;
  }
  return k;
}

std::vector<double> count_histogram(std::span<const PointMeasure> draws, double x) {
  std::vector<double> hist;
  for (const auto& d : draws) {
    const std::size_t k = count_above(d, x);
    if (hist.size() <= k) hist.resize(k + 1, 0.0);
    hist[k] += 1.0;
  }
  return hist;
}

nlohmann::json outcome_json(const TestOutcome& t) {
  nlohmann::json j{{"name", t.name}, {"statistic", t.statistic}, {"p", t.p_value}, {"pass", t.pass}};
  if (t.z) j["z"] = *t.z;
  return j;
}

}  // namespace

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.tests) tests.push_back(outcome_json(t));
  nlohmann::json lhs = nlohmann::json::array();
  nlohmann::json rhs = nlohmann::json::array();
  for (const auto& e : r.lhs) lhs.push_back(to_json(e));
  for (const auto& e : r.rhs) rhs.push_back(to_json(e));
  return nlohmann::json{{"tests", tests},
                        {"verdict", to_string(r.verdict)},
                        {"significance", r.significance},
                        {"per_test_level", r.per_test_level},
                        {"bias_budget", r.bias_budget},
                        {"truncation_rate", r.truncation_rate},
                        {"recommended_floor", r.recommended_floor},
                        {"target_floor", r.target_floor},
                        {"reps", r.reps},
                        {"seeds", {{"base", r.seed}, {"lhs_domain", 1}, {"rhs_domain", 2}}},
                        {"laplace_lhs", lhs},
                        {"laplace_rhs", rhs},
                        {"count_thresholds", r.count_thresholds},
                        {"count_tv", r.count_tv},
                        {"note", r.note}};
}

VerificationReport verify_fixed_point(const ReproductionLaw& law, const MeasureSampler& target,
                                      const std::vector<TestFunction>& battery, const VerificationOptions& options,
                                      std::uint64_t seed) {
  if (battery.size() < 8) throw std::invalid_argument("verify_fixed_point needs a battery of at least 8 functions");
  if (options.reps < 10000) throw std::invalid_argument("verify_fixed_point needs reps >= 10^4");
  if (!(options.significance > 0.0 && options.significance < 1.0)) {
    throw std::invalid_argument("significance must lie in (0, 1)");
  }
  VerificationReport report;
  report.reps = options.reps;
  report.seed = seed;
  report.significance = options.significance;
  report.bias_budget = options.bias_budget;
  report.target_floor = target.declared_floor;
  report.note = "a pass is evidence of equality in law on this battery, not proof";

  double support_left = std::numeric_limits<double>::infinity();
  double top_edge = kNegInf;
  for (const auto& phi : battery) {
    support_left = std::min(support_left, phi.left_edge());
    top_edge = std::max(top_edge, phi.left_edge());
  }
  std::vector<double> thresholds = options.count_thresholds;
  if (thresholds.empty()) {
    std::vector<double> edges;
    for (const auto& phi : battery) edges.push_back(phi.left_edge());
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    thresholds.push_back(edges.size() >= 2 ? edges[edges.size() - 2] : edges.back());
    thresholds.push_back(edges.back());
    if (thresholds[0] == thresholds[1]) thresholds.pop_back();
  }
  for (double t : thresholds) support_left = std::min(support_left, t);
  if (target.declared_floor > support_left) {
    throw TruncationError("target floor is above the battery support");
  }
  report.count_thresholds = thresholds;
  report.recommended_floor = recommend_floor(support_left, law, 1, options.miss_probability);

  const MeasureSampler rhs_sampler = convolve(generation_sampler(law, 1), target, options.population_cap);
  const auto lhs_draws = draw_all(target, options.reps, domain_seed(seed, 1));
  const auto rhs_draws = draw_all(rhs_sampler, options.reps, domain_seed(seed, 2));

  auto truncated_fraction = [&](const std::vector<PointMeasure>& draws) {
    std::size_t k = 0;
    for (const auto& d : draws) k += d.floor() > support_left ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(draws.size());
  };
  report.truncation_rate = std::max(truncated_fraction(lhs_draws), truncated_fraction(rhs_draws));

  for (const auto& phi : battery) {
    const auto a = laplace_from_draws(lhs_draws, phi, target.description);
    const auto b = laplace_from_draws(rhs_draws, phi, rhs_sampler.description);
    const double z = z_test({a.mean, a.std_error, a.reps}, {b.mean, b.std_error, b.reps});
    TestOutcome t;
    t.name = "laplace " + phi.id();
    t.statistic = b.mean - a.mean;
    t.z = z;
    t.p_value = z_p_value(z);
    report.tests.push_back(t);
    report.lhs.push_back(a);
    report.rhs.push_back(b);
  }

  // Maxima below the support are not observed exactly; they all map to -inf.
  auto maxima = [&](const std::vector<PointMeasure>& draws) {
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& d : draws) out.push_back(d.max_atom() > support_left ? d.max_atom() : kNegInf);
    return out;
  };
  {
    const auto ks = ks_two_sample(maxima(lhs_draws), maxima(rhs_draws));
    report.tests.push_back({"ks max atom", ks.statistic, ks.p_value, std::nullopt, true});
  }
  for (double x : thresholds) {
    const auto ha = count_histogram(lhs_draws, x);
    const auto hb = count_histogram(rhs_draws, x);
    const auto chi = chi_square_homogeneity(ha, hb);
    report.count_tv.push_back(tv_distance(ha, hb));
    std::ostringstream name;
    name << "tail counts above " << x;
    report.tests.push_back({name.str(), chi.statistic, chi.p_value, std::nullopt, true});
  }

  report.per_test_level = options.significance / static_cast<double>(report.tests.size());
  bool all_pass = true;
  for (auto& t : report.tests) {
    t.pass = t.p_value >= report.per_test_level;
    all_pass = all_pass && t.pass;
  }
  if (report.truncation_rate > options.bias_budget) {
    report.verdict = Verdict::inconclusive;
  } else {
    report.verdict = all_pass ? Verdict::pass : Verdict::fail;
  }
  return report;
}

std::vector<TestFunction> standard_battery(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("standard_battery needs lo < hi");
  std::vector<TestFunction> out;
  const double edges[] = {lo, 0.5 * (lo + hi), hi};
  for (double e : edges) {
    for (double h : {0.5, 1.0, 2.0}) out.push_back(TestFunction::ramp(e, 1.0, h));
  }
  for (double e : edges) out.push_back(TestFunction::plateau(e, e + 2.0, 1.0, 1.0));
  return out;
}

double fit_T_phi(double F0, const GCurve& g_curve) {
  const auto& xs = g_curve.xs;
  const auto& v = g_curve.values;
  if (xs.size() < 2 || xs.size() != v.size()) throw std::invalid_argument("g curve needs at least two nodes");
  if (!(F0 < v.front().mean && F0 > v.back().mean)) throw std::out_of_range("F0 outside the range of the g curve");
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (v[k].mean <= F0) {
      const double hi = v[k - 1].mean;
      const double lo = v[k].mean;
      const double w = hi == lo ? 0.0 : (hi - F0) / (hi - lo);
      return -(xs[k - 1] + w * (xs[k] - xs[k - 1]));
    }
  }
  throw std::out_of_range("F0 outside the range of the g curve");
}

nlohmann::json to_json(const ShapeTestReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < r.xs.size(); ++k) {
    rows.push_back({{"x", r.xs[k]}, {"F", r.F[k].mean}, {"F_std_error", r.F[k].std_error},
                    {"g", r.g_shifted[k].mean}, {"g_std_error", r.g_shifted[k].std_error}, {"z", r.z[k]}});
  }
  return nlohmann::json{{"T", r.T}, {"rows", rows}, {"max_z", r.max_z}, {"pass", r.pass}};
}

ShapeTestReport shape_test(const MeasureSampler& target, const TestFunction& phi, const std::vector<double>& xs,
                           const GCurve& g_curve, std::size_t reps, std::uint64_t seed) {
  ShapeTestReport report;
  report.xs = xs;
  const auto F0 = laplace_functional(target, phi, reps, domain_seed(seed, 0));
  report.T = fit_T_phi(F0.mean, g_curve);
  report.pass = true;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    // F_phi(x) = E exp(-<E, phi(. + x)>).
    const auto F = laplace_functional(target, phi.shifted(xs[k]), reps, domain_seed(seed, k + 1));
    const Estimate g = g_curve.at(xs[k] - report.T);
    const double z = z_test({F.mean, F.std_error, F.reps}, g);
    report.F.push_back(F);
    report.g_shifted.push_back(g);
    report.z.push_back(z);
    report.max_z = std::max(report.max_z, z);
    report.pass = report.pass && z <= 4.0;
  }
  return report;
}

}  // namespace bstable
