#include "bstable/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/decoration.hpp"
#include "bstable/laplace.hpp"
#include "bstable/martingale.hpp"
#include "bstable/parallel.hpp"
#include "bstable/reproduction.hpp"
#include "bstable/sdppp.hpp"
#include "bstable/smoothing.hpp"
#include "bstable/verify.hpp"

namespace bstable::cli {

namespace {

using nlohmann::json;

/// Bad or inconsistent user input. Maps to kExitConfigError.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out_dir = ".";
  std::string config_path;

  std::string law;
  std::string alpha = "auto";
  std::string criticality = "auto";
  int generations = 12;
  std::size_t reps = 10000;
  std::string barrier = "none";
  std::string shift;
  double c = 1.0;
  std::string decoration = "{\"dirac\": true}";
  std::string floor = "auto";
  std::string target = "cox";
  double significance = 1e-3;
  double miss = 1e-4;
  double bias_budget = 1e-3;
  std::string edges = "auto";
  std::size_t pilot_reps = 4000;
  std::string levels = "0,1,2,3,4,5";
  std::string window = "auto";
  std::size_t min_conditioned = kMinConditioned;
  double t_min = 1e-4;
  double t_max = 1e4;
  std::size_t nodes = 161;
  int iterations = 10;
  std::size_t mc_reps = 100000;
  std::string f0 = "exp";
  std::size_t fit_reps = 100000;
  std::size_t points = 25;
  double tolerance = 0.02;
  std::string report;
  std::string out;
};

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + what + " JSON: " + e.what());
  }
}

ReproductionLaw parse_law(const std::string& text) {
  if (text.empty()) throw ConfigError("--law is required");
  try {
    return law_from_json(parse_json_text(text, "law"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid law: ") + e.what());
  }
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected a number for " + what + ", got '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw ConfigError("empty list for " + what);
  return out;
}

double resolve_alpha(const ReproductionLaw& law, const std::string& alpha) {
  if (alpha == "auto") {
    try {
      return solve_critical_alpha(law);
    } catch (const NoCriticalRootError& e) {
      throw ConfigError(e.what());
    }
  }
  const double a = parse_number(alpha, "--alpha");
  if (!(a > 0.0)) throw ConfigError("--alpha must be positive");
  return a;
}

void check_case(const ReproductionLaw& law, double alpha, const std::string& requested) {
  if (requested == "auto") return;
  CriticalCase wanted;
  try {
    wanted = critical_case_from_string(requested);
  } catch (const std::exception&) {
    throw ConfigError("unknown case '" + requested + "'");
  }
  const auto actual = classify(law, alpha).criticality;
  if (actual != wanted) {
    throw ConfigError("law classifies as " + to_string(actual) + ", not " + requested);
  }
}

ShiftSampler martingale_shift(const ReproductionLaw& law, double alpha, int generations, const std::string& cse) {
  check_case(law, alpha, cse);
  try {
    return ShiftSampler::martingale(law, alpha, generations);
  } catch (const ClassificationError& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// "const:v" or "martingale:<law json>,n,case". Empty uses --law.
ShiftSampler parse_shift(const Settings& s, std::optional<double>& alpha) {
  if (s.shift.empty()) {
    const auto law = parse_law(s.law);
    if (!alpha) alpha = resolve_alpha(law, s.alpha);
    return martingale_shift(law, *alpha, s.generations, s.criticality);
  }
  if (s.shift.rfind("const:", 0) == 0) {
    const double v = parse_number(s.shift.substr(6), "--shift const");
    if (!(v >= 0.0)) throw ConfigError("constant shift must be non-negative");
    return ShiftSampler::constant(v);
  }
  if (s.shift.rfind("martingale:", 0) == 0) {
    const std::string rest = s.shift.substr(11);
    const auto c2 = rest.rfind(',');
    const auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : rest.rfind(',', c2 - 1);
    if (c1 == std::string::npos) throw ConfigError("--shift martingale:<law>,n,case needs three fields");
    const auto law = parse_law(rest.substr(0, c1));
    const double n = parse_number(rest.substr(c1 + 1, c2 - c1 - 1), "martingale generations");
    if (n != std::floor(n)) throw ConfigError("martingale generations must be an integer");
    if (!alpha) alpha = resolve_alpha(law, s.alpha);
    return martingale_shift(law, *alpha, static_cast<int>(n), rest.substr(c2 + 1));
  }
  throw ConfigError("unknown --shift '" + s.shift + "'");
}

DecorationLaw parse_decoration(const std::string& text) {
  try {
    return DecorationLaw::from_json(parse_json_text(text, "decoration"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid decoration: ") + e.what());
  }
}

/// Random point measure described by --target, plus what is needed to
/// choose levels for it.
struct Target {
  std::string kind;
  // cox / sdppp
  std::optional<ShiftSampler> shift;
  double c = 1.0;
  DecorationLaw star = DecorationLaw::dirac();
  double alpha = 1.0;
  // file
  std::shared_ptr<const std::vector<PointMeasure>> pool;
  double file_floor = kNegInf;
  json metadata;

  MeasureSampler sampler(double floor) const {
    if (kind == "file") {
      auto p = pool;
      return MeasureSampler{[p](Rng& rng) {
                              std::uniform_int_distribution<std::size_t> pick(0, p->size() - 1);
                              return (*p)[pick(rng)];
                            },
                            file_floor, "bootstrap of " + std::to_string(pool->size()) + " file draws"};
    }
    if (kind == "cox") return cox_sampler(*shift, c, alpha, floor);
    return sdppp_sampler(*shift, c, alpha, star, floor);
  }
};

std::vector<PointMeasure> read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<PointMeasure> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    try {
      out.push_back(point_measure_from_csv_row(line));
    } catch (const std::exception& e) {
      throw ConfigError("bad row in " + path + ": " + e.what());
    }
  }
  if (out.empty()) throw ConfigError(path + " holds no draws");
  return out;
}

Target build_target(const Settings& s) {
  Target t;
  if (s.target.rfind("file:", 0) == 0) {
    t.kind = "file";
    auto draws = read_measure_csv(s.target.substr(5));
    for (const auto& d : draws) t.file_floor = std::max(t.file_floor, d.floor());
    t.pool = std::make_shared<const std::vector<PointMeasure>>(std::move(draws));
    t.metadata = {{"kind", "file"}, {"path", s.target.substr(5)}, {"draws", t.pool->size()},
                  {"floor", t.file_floor == kNegInf ? json(nullptr) : json(t.file_floor)}};
    return t;
  }
  std::optional<double> alpha;
  if (s.alpha != "auto") alpha = parse_number(s.alpha, "--alpha");
  t.shift = parse_shift(s, alpha);
  t.alpha = *alpha;
  if (s.target == "cox") {
    t.kind = "cox";
    t.c = s.c;
  } else if (s.target.rfind("sdppp:", 0) == 0) {
    t.kind = "sdppp";
    const auto raw = parse_decoration(s.target.substr(6));
    const auto norm = normalize_decoration(raw, t.alpha);
    t.c = s.c * norm.c;
    t.star = norm.star;
    t.metadata["decoration_star"] = t.star.to_json();
  } else {
    throw ConfigError("unknown --target '" + s.target + "'");
  }
  if (!(t.c > 0.0)) throw ConfigError("--c must be positive");
  t.metadata["kind"] = t.kind;
  t.metadata["c"] = t.c;
  t.metadata["alpha"] = t.alpha;
  t.metadata["shift"] = t.shift->metadata();
  return t;
}

/// Quantiles of max E at the given probabilities, from a pilot S sample
/// (Cox and SDPPP targets) or from the file draws.
std::vector<double> max_quantiles(const Target& t, const std::vector<double>& probs, std::size_t pilot_reps,
                                  std::uint64_t seed) {
  std::vector<double> out;
  if (t.kind == "file") {
    std::vector<double> maxima;
    for (const auto& d : *t.pool) maxima.push_back(d.max_atom());
    std::sort(maxima.begin(), maxima.end());
    for (double p : probs) {
      const auto k = std::min(maxima.size() - 1, static_cast<std::size_t>(p * static_cast<double>(maxima.size())));
      out.push_back(std::max(maxima[k], t.file_floor));
    }
    return out;
  }
  const auto sample = sample_shift_values(*t.shift, pilot_reps, seed);
  const double zero_mass =
      static_cast<double>(std::count(sample.values.begin(), sample.values.end(), 0.0)) / sample.values.size();
  for (double p : probs) {
    const double level = zero_mass + (1.0 - zero_mass) * p;
    double lo = -60.0;
    double hi = 60.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (max_cdf_semi_analytic(t.c, sample.values, t.alpha, mid).mean < level) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

std::string resolve_path(const Settings& s, const std::string& explicit_path, const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  return (std::filesystem::path(s.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

void write_measures_csv(const std::string& path, const std::vector<PointMeasure>& draws) {
  std::ostringstream os;
  os << "floor,atoms\n";
  for (const auto& d : draws) os << to_csv_row(d) << "\n";
  write_text(path, os.str());
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json json_value(const std::string& text) {
  if (text.empty()) return text;
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

/// Every option of the command with its effective value. The worker count
/// is left out: it never changes results.
json resolved_config(const CLI::App& app, const CLI::App& sub) {
  json cfg = json::object();
  cfg["command"] = sub.get_name();
  auto add = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& key = opt->get_lnames().front();
      if (key == "help" || key == "threads") continue;
      std::string value;
      if (opt->count() > 0) {
        value = opt->results().back();
      } else {
        value = opt->get_default_str();
      }
      cfg[key] = json_value(value);
    }
  };
  add(app);
  add(sub);
  return cfg;
}

/// Fills options absent from the command line with values from the JSON
/// config file.
void apply_config_file(CLI::App& app, CLI::App& sub, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << f.rdbuf();
  const json cfg = parse_json_text(buffer.str(), "config");
  if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw ConfigError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
    opt->run_callback();
  }
}

struct Outcome {
  int code = kExitOk;
  json result;
};

// ---------------------------------------------------------------------------

Outcome cmd_classify(const Settings& s, std::ostream& out) {
  const auto law = parse_law(s.law);
  const double alpha = resolve_alpha(law, s.alpha);
  const auto report = classify(law, alpha);
  out << "case=" << to_string(report.criticality) << " alpha=" << std::setprecision(6) << report.alpha << "\n";
  return {kExitOk, to_json(report)};
}

Outcome cmd_simulate_brw(const Settings& s, std::ostream& out) {
  const auto law = parse_law(s.law);
  const double barrier = s.barrier == "none" ? kNegInf : parse_number(s.barrier, "--barrier");
  if (s.generations < 0) throw ConfigError("--generations must be non-negative");
  const auto sampler = generation_sampler(law, s.generations, barrier);
  const auto draws = parallel_map(s.reps, [&](std::size_t i) {
    Rng rng = make_stream(domain_seed(s.seed, 1), i);
    return sampler(rng);
  });
  std::vector<double> counts;
  std::vector<double> maxima;
  for (const auto& d : draws) {
    counts.push_back(static_cast<double>(d.size()));
    if (!d.empty()) maxima.push_back(d.max_atom());
  }
  const std::string csv = resolve_path(s, s.out, "simulate-brw.csv");
  write_measures_csv(csv, draws);
  const auto cnt = mean_estimate(counts);
  json r{{"count_mean", cnt.mean}, {"count_std_error", cnt.std_error}, {"csv", csv},
         {"extinct_fraction", 1.0 - static_cast<double>(maxima.size()) / static_cast<double>(draws.size())}};
  if (maxima.size() >= 2) {
    const auto mx = mean_estimate(maxima);
    r["max_mean"] = mx.mean;
    r["max_std_error"] = mx.std_error;
  }
  out << "wrote " << draws.size() << " draws to " << csv << "\n";
  return {kExitOk, r};
}

Outcome cmd_sample_shift(const Settings& s, std::ostream& out) {
  std::optional<double> alpha;
  const auto shift = parse_shift(s, alpha);
  const auto raw = parallel_map(s.reps, [&](std::size_t i) {
    Rng rng = make_stream(domain_seed(s.seed, 1), i);
    return shift.draw_raw(rng);
  });
  std::ostringstream csv_text;
  csv_text << "replicate,raw,value\n";
  std::vector<double> values;
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i] > 0.0 ? raw[i] : 0.0;
    clamped += raw[i] < 0.0 ? 1 : 0;
    values.push_back(v);
    csv_text << i << "," << fmt(raw[i]) << "," << fmt(v) << "\n";
  }
  const std::string csv = resolve_path(s, s.out, "sample-shift.csv");
  write_text(csv, csv_text.str());
  const auto e = mean_estimate(values);
  out << "mean S = " << e.mean << " +- " << e.std_error << "\n";
  return {kExitOk,
          {{"shift", shift.metadata()},
           {"mean", e.mean},
           {"std_error", e.std_error},
           {"clamp_fraction", static_cast<double>(clamped) / static_cast<double>(raw.size())},
           {"csv", csv}}};
}

Outcome cmd_sample_sdppp(const Settings& s, std::ostream& out) {
  std::optional<double> alpha;
  if (s.alpha != "auto") alpha = parse_number(s.alpha, "--alpha");
  const auto shift = parse_shift(s, alpha);
  if (!alpha) throw ConfigError("--alpha is required with a constant shift");
  const auto norm = normalize_decoration(parse_decoration(s.decoration), *alpha);
  const double c = s.c * norm.c;
  if (!(c > 0.0)) throw ConfigError("--c must be positive");
  const double floor = s.floor == "auto" ? -5.0 / *alpha : parse_number(s.floor, "--floor");
  const auto sampler = sdppp_sampler(shift, c, *alpha, norm.star, floor);
  const auto draws = parallel_map(s.reps, [&](std::size_t i) {
    Rng rng = make_stream(domain_seed(s.seed, 1), i);
    return sampler(rng);
  });
  const std::string csv = resolve_path(s, s.out, "sample-sdppp.csv");
  write_measures_csv(csv, draws);
  std::vector<double> counts;
  for (const auto& d : draws) counts.push_back(static_cast<double>(d.size()));
  const auto cnt = mean_estimate(counts);
  out << "wrote " << draws.size() << " draws to " << csv << "\n";
  return {kExitOk,
          {{"alpha", *alpha},
           {"c", c},
           {"floor", floor},
           {"decoration_star", norm.star.to_json()},
           {"shift", shift.metadata()},
           {"count_mean", cnt.mean},
           {"count_std_error", cnt.std_error},
           {"csv", csv}}};
}

Outcome cmd_verify(const Settings& s, std::ostream& out) {
  const auto law = parse_law(s.law);
  Settings with_alpha = s;
  const double alpha = resolve_alpha(law, s.alpha);
  with_alpha.alpha = fmt(alpha);
  const Target target = build_target(with_alpha);

  double lo = 0.0;
  double hi = 0.0;
  if (s.edges == "auto") {
    const auto q = max_quantiles(target, {0.1, 0.9}, s.pilot_reps, domain_seed(s.seed, 7));
    lo = q[0];
    hi = q[1];
  } else {
    const auto e = parse_list(s.edges, "--edges");
    if (e.size() != 2) throw ConfigError("--edges takes lo,hi");
    lo = e[0];
    hi = e[1];
  }
  if (!(lo < hi)) throw ConfigError("battery edges must satisfy lo < hi");
  const auto battery = standard_battery(lo, hi);
  double floor = target.file_floor;
  if (target.kind != "file") {
    floor = s.floor == "auto" ? recommend_floor(lo, law, 1, s.miss) : parse_number(s.floor, "--floor");
  }
  VerificationOptions options;
  options.reps = s.reps;
  options.significance = s.significance;
  options.miss_probability = s.miss;
  options.bias_budget = s.bias_budget;
  VerificationReport report;
  try {
    report = verify_fixed_point(law, target.sampler(floor), battery, options, domain_seed(s.seed, 1));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json r = to_json(report);
  r["target"] = target.metadata;
  r["battery_edges"] = {lo, hi};
  out << "verdict=" << to_string(report.verdict) << "\n";
  const int code = report.verdict == Verdict::pass   ? kExitOk
                   : report.verdict == Verdict::fail ? kExitStatisticalFail
                                                     : kExitInconclusive;
  return {code, r};
}

Outcome cmd_extract(const Settings& s, std::ostream& out) {
  Settings resolved = s;
  if (s.target.rfind("file:", 0) != 0 && s.alpha == "auto") resolved.alpha = fmt(resolve_alpha(parse_law(s.law), "auto"));
  const Target target = build_target(resolved);
  const auto levels = parse_list(s.levels, "--levels");
  const double window = s.window == "auto" ? 5.0 / target.alpha : parse_number(s.window, "--window");
  double floor = target.file_floor;
  if (target.kind != "file") {
    const double low = *std::min_element(levels.begin(), levels.end());
    floor = s.floor == "auto" ? low - window : parse_number(s.floor, "--floor");
  }
  const auto sampler = target.sampler(floor);
  DecorationExtraction ex;
  CountStabilization cs;
  try {
    ex = extract_decoration(sampler, levels, window, s.reps, domain_seed(s.seed, 1), s.min_conditioned);
    cs = count_stabilization(sampler, levels, s.reps, domain_seed(s.seed, 2), s.min_conditioned);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ostringstream csv_text;
  csv_text << "z,count,fraction\n";
  for (const auto& l : ex.levels) {
    for (std::size_t k = 0; k < l.count_histogram.size(); ++k) {
      csv_text << fmt(l.z) << "," << k << "," << fmt(l.count_histogram[k]) << "\n";
    }
  }
  const std::string csv = resolve_path(s, s.out, "extract-decoration.csv");
  write_text(csv, csv_text.str());
  for (const auto& w : ex.warnings) out << "warning: " << w << "\n";
  out << ex.levels.size() << " levels kept\n";
  return {kExitOk,
          {{"target", target.metadata}, {"floor", floor}, {"decoration", to_json(ex)}, {"counts", to_json(cs)},
           {"csv", csv}}};
}

Outcome cmd_smoothing(const Settings& s, std::ostream& out) {
  const auto law = parse_law(s.law);
  const double alpha = resolve_alpha(law, s.alpha);
  std::function<double(double)> f0;
  if (s.f0 == "exp") {
    f0 = [alpha](double t) { return std::exp(-std::pow(t, alpha)); };
  } else if (s.f0 == "one") {
    f0 = [](double) { return 1.0; };
  } else {
    throw ConfigError("--f0 must be exp or one");
  }
  if (s.nodes < 2) throw ConfigError("--nodes must be at least 2");
  const auto grid = GridFunction::tabulate(s.t_min, s.t_max, s.nodes, f0);
  SmoothingOptions options;
  options.iterations = s.iterations;
  options.mc_reps = s.mc_reps;
  options.fit_reps = s.fit_reps;
  if (s.fit_reps > 0) options.shift = martingale_shift(law, alpha, s.generations, s.criticality);
  SmoothingResult result = [&] {
    try {
      return smoothing_iterate(law, alpha, grid, options, domain_seed(s.seed, 1));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  std::ostringstream csv_text;
  csv_text << "t,f,fit\n";
  for (std::size_t k = 0; k < result.f.size(); ++k) {
    csv_text << fmt(result.f.node(k)) << "," << fmt(result.f.values()[k]) << ","
             << (result.fit ? fmt(result.fit->fitted[k]) : "") << "\n";
  }
  const std::string csv = resolve_path(s, s.out, "smoothing.csv");
  write_text(csv, csv_text.str());
  json r = to_json(result);
  r["alpha"] = alpha;
  r["csv"] = csv;
  out << "final residual " << result.residuals.back() << "\n";
  return {kExitOk, r};
}

Outcome cmd_max_law(const Settings& s, std::ostream& out) {
  Settings resolved = s;
  if (s.alpha == "auto") resolved.alpha = fmt(resolve_alpha(parse_law(s.law), "auto"));
  const Target target = build_target(resolved);
  if (target.kind == "file") throw ConfigError("max-law needs a cox or sdppp target");
  if (s.points < 2) throw ConfigError("--points must be at least 2");
  const auto q = max_quantiles(target, {0.01, 0.99}, s.pilot_reps, domain_seed(s.seed, 7));
  const double floor = q[0] - 1.0;
  // Each replicate records its S, so the semi-analytic CDF is averaged over
  // the shifts that produced the empirical maxima.
  struct Draw {
    double s = 0.0;
    double max = kNegInf;
  };
  const auto pairs = parallel_map(s.reps, [&](std::size_t i) {
    Rng rng = make_stream(domain_seed(s.seed, 1), i);
    Draw d;
    d.s = target.shift->draw(rng);
    d.max = sample_sdppp_given_shift(d.s, target.c, target.alpha, target.star, floor, rng).max_atom();
    return d;
  });
  std::vector<double> maxima;
  ShiftSample shift;
  std::size_t clamped = 0;
  for (const auto& d : pairs) {
    maxima.push_back(d.max);
    shift.values.push_back(d.s);
    clamped += d.s == 0.0 ? 1 : 0;
  }
  shift.clamp_fraction = static_cast<double>(clamped) / static_cast<double>(pairs.size());
  std::vector<double> sorted = maxima;
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream csv_text;
  csv_text << "x,empirical,semi_analytic,std_error\n";
  double sup = 0.0;
  json rows = json::array();
  for (std::size_t k = 0; k < s.points; ++k) {
    const double x = q[0] + (q[1] - q[0]) * static_cast<double>(k) / static_cast<double>(s.points - 1);
    const double emp = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
                       static_cast<double>(sorted.size());
    const auto semi = max_cdf_semi_analytic(target.c, shift.values, target.alpha, x);
    sup = std::max(sup, std::abs(emp - semi.mean));
    csv_text << fmt(x) << "," << fmt(emp) << "," << fmt(semi.mean) << "," << fmt(semi.std_error) << "\n";
  }
  const std::string csv = resolve_path(s, s.out, "max-law.csv");
  write_text(csv, csv_text.str());
  const bool pass = sup < s.tolerance;
  out << "sup distance " << sup << (pass ? " (pass)" : " (fail)") << "\n";
  return {pass ? kExitOk : kExitStatisticalFail,
          {{"target", target.metadata}, {"sup_distance", sup}, {"tolerance", s.tolerance}, {"pass", pass},
           {"zero_shift_fraction", shift.clamp_fraction}, {"csv", csv}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Simulation and statistical checks for stable point processes of branching random walks", "bstable"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.add_option("--seed", s.seed, "Base seed");
  app.add_option("--threads", s.threads, "Worker threads (0: all cores)");
  app.add_option("--out-dir", s.out_dir, "Directory for reports and CSV files");
  app.add_option("--config", s.config_path, "JSON file with default option values");

  auto law_opt = [&](CLI::App* c) { c->add_option("--law", s.law, "Reproduction law as JSON"); };
  auto alpha_opt = [&](CLI::App* c) { c->add_option("--alpha", s.alpha, "Exponent or auto"); };
  auto shift_opts = [&](CLI::App* c) {
    c->add_option("--case", s.criticality, "auto, regular or boundary");
    c->add_option("--generations", s.generations, "Generations of the martingale proxy for S");
  };
  auto io_opts = [&](CLI::App* c) {
    c->add_option("--report", s.report, "Report path (default <out-dir>/<command>.json)");
    c->add_option("--out", s.out, "CSV path (default <out-dir>/<command>.csv)");
  };

  auto* classify_cmd = app.add_subcommand("classify", "Critical exponent and case of a law");
  law_opt(classify_cmd);
  alpha_opt(classify_cmd);
  io_opts(classify_cmd);

  auto* brw_cmd = app.add_subcommand("simulate-brw", "Draws of generation n of a branching random walk");
  law_opt(brw_cmd);
  brw_cmd->add_option("--generations", s.generations, "Generations");
  brw_cmd->add_option("--barrier", s.barrier, "Killing barrier or none");
  brw_cmd->add_option("--reps", s.reps, "Replicates");
  io_opts(brw_cmd);

  auto* shift_cmd = app.add_subcommand("sample-shift", "Draws of the martingale proxy for S");
  law_opt(shift_cmd);
  alpha_opt(shift_cmd);
  shift_opts(shift_cmd);
  shift_cmd->add_option("--shift", s.shift, "const:v or martingale:<law>,n,case (default: --law)");
  shift_cmd->add_option("--reps", s.reps, "Replicates");
  io_opts(shift_cmd);

  auto* sdppp_cmd = app.add_subcommand("sample-sdppp", "Draws of a shifted decorated Poisson point process");
  law_opt(sdppp_cmd);
  alpha_opt(sdppp_cmd);
  shift_opts(sdppp_cmd);
  sdppp_cmd->add_option("--shift", s.shift, "const:v or martingale:<law>,n,case (default: --law)");
  sdppp_cmd->add_option("--c", s.c, "Intensity constant");
  sdppp_cmd->add_option("--decoration", s.decoration, "Decoration JSON (normalised before use)");
  sdppp_cmd->add_option("--floor", s.floor, "Floor or auto (-5/alpha)");
  sdppp_cmd->add_option("--reps", s.reps, "Replicates");
  io_opts(sdppp_cmd);

  auto target_opts = [&](CLI::App* c) {
    law_opt(c);
    alpha_opt(c);
    shift_opts(c);
    c->add_option("--shift", s.shift, "const:v or martingale:<law>,n,case (default: --law)");
    c->add_option("--c", s.c, "Intensity constant");
    c->add_option("--target", s.target, "cox, sdppp:<decoration json> or file:<csv>");
    c->add_option("--floor", s.floor, "Floor or auto");
    c->add_option("--pilot-reps", s.pilot_reps, "Shift draws used to place levels");
  };

  auto* verify_cmd = app.add_subcommand("verify-fixed-point", "Statistical test of E = Z (*) E");
  target_opts(verify_cmd);
  verify_cmd->add_option("--reps", s.reps, "Replicates per side");
  verify_cmd->add_option("--significance", s.significance, "Family-wise significance");
  verify_cmd->add_option("--miss", s.miss, "Miss probability for the floor");
  verify_cmd->add_option("--bias-budget", s.bias_budget, "Largest accepted truncation rate");
  verify_cmd->add_option("--edges", s.edges, "Battery edges lo,hi or auto");
  io_opts(verify_cmd);

  auto* extract_cmd = app.add_subcommand("extract-decoration", "Decoration and count laws seen from high maxima");
  target_opts(extract_cmd);
  extract_cmd->add_option("--levels", s.levels, "Increasing levels z");
  extract_cmd->add_option("--window", s.window, "Window W or auto (5/alpha)");
  extract_cmd->add_option("--min-conditioned", s.min_conditioned, "Draws a level must keep");
  extract_cmd->add_option("--reps", s.reps, "Replicates");
  io_opts(extract_cmd);

  auto* smoothing_cmd = app.add_subcommand("smoothing", "Grid iteration of the smoothing transform");
  law_opt(smoothing_cmd);
  alpha_opt(smoothing_cmd);
  shift_opts(smoothing_cmd);
  smoothing_cmd->add_option("--t-min", s.t_min, "Smallest grid node");
  smoothing_cmd->add_option("--t-max", s.t_max, "Largest grid node");
  smoothing_cmd->add_option("--nodes", s.nodes, "Grid nodes");
  smoothing_cmd->add_option("--iterations", s.iterations, "Iterations");
  smoothing_cmd->add_option("--mc-reps", s.mc_reps, "Offspring draws per iteration");
  smoothing_cmd->add_option("--f0", s.f0, "Starting function: exp or one");
  smoothing_cmd->add_option("--fit-reps", s.fit_reps, "Shift draws for the fit (0: no fit)");
  io_opts(smoothing_cmd);

  auto* max_cmd = app.add_subcommand("max-law", "Empirical max CDF against the semi-analytic law");
  target_opts(max_cmd);
  max_cmd->add_option("--reps", s.reps, "Replicates");
  max_cmd->add_option("--points", s.points, "Evaluation points");
  max_cmd->add_option("--tolerance", s.tolerance, "Largest accepted sup distance");
  io_opts(max_cmd);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("bstable");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  const unsigned previous_threads = worker_threads();
  try {
    if (!s.config_path.empty()) apply_config_file(app, *sub, s.config_path);
    set_worker_threads(s.threads);
    const json config = resolved_config(app, *sub);
    const std::string name = sub->get_name();
    Outcome outcome;
    if (name == "classify") {
      outcome = cmd_classify(s, out);
    } else if (name == "simulate-brw") {
      outcome = cmd_simulate_brw(s, out);
    } else if (name == "sample-shift") {
      outcome = cmd_sample_shift(s, out);
    } else if (name == "sample-sdppp") {
      outcome = cmd_sample_sdppp(s, out);
    } else if (name == "verify-fixed-point") {
      outcome = cmd_verify(s, out);
    } else if (name == "extract-decoration") {
      outcome = cmd_extract(s, out);
    } else if (name == "smoothing") {
      outcome = cmd_smoothing(s, out);
    } else {
      outcome = cmd_max_law(s, out);
    }
    const json report{{"command", name}, {"config", config}, {"result", outcome.result},
                      {"exit_code", outcome.code}};
    write_text(resolve_path(s, s.report, name + ".json"), report.dump(2) + "\n");
    set_worker_threads(previous_threads);
    return outcome.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const NoCriticalRootError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const ClassificationError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << "\n";
  } catch (const TruncationError& e) {
    set_worker_threads(previous_threads);
    err << "truncation: " << e.what() << "\n";
    return kExitInconclusive;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
  } catch (const CLI::Error& e) {
    err << "config error: " << e.what() << "\n";
  }
  set_worker_threads(previous_threads);
  return kExitConfigError;
}

}  // namespace bstable::cli
