#include "bstable/decoration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bstable/parallel.hpp"

namespace bstable {

namespace {

std::vector<PointMeasure> draw_all(const MeasureSampler& sampler, std::size_t reps, std::uint64_t seed) {
  return parallel_map(reps, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    return sampler(rng);
  });
}

void check_levels(const std::vector<double>& z_levels) {
  if (z_levels.empty()) throw std::invalid_argument("at least one level is required");
  if (!std::is_sorted(z_levels.begin(), z_levels.end()) ||
      std::adjacent_find(z_levels.begin(), z_levels.end()) != z_levels.end()) {
    throw std::invalid_argument("levels must be strictly increasing");
  }
}

std::string dropped_warning(double z, std::size_t kept, std::size_t needed) {
  std::ostringstream os;
  os << "level z=" << z << " dropped: " << kept << " conditioned draws, " << needed << " required";
  return os.str();
}

void normalise(std::vector<double>& hist, std::size_t total) {
  for (double& h : hist) h /= static_cast<double>(total);
}

}  // namespace

bool strictly_decreasing(const std::vector<double>& xs) {
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (!(xs[k] < xs[k - 1])) return false;
  }
  return true;
}

double gap_mass_near(const DecorationLevel& level, double d, double tol) {
  if (level.first_gaps.empty()) return 0.0;
  const auto lo = std::lower_bound(level.first_gaps.begin(), level.first_gaps.end(), d - tol);
  const auto hi = std::upper_bound(level.first_gaps.begin(), level.first_gaps.end(), d + tol);
  return static_cast<double>(hi - lo) / static_cast<double>(level.first_gaps.size());
}

DecorationExtraction extract_decoration(const MeasureSampler& target, std::vector<double> z_levels, double window,
                                        std::size_t reps, std::uint64_t seed, std::size_t min_conditioned) {
  check_levels(z_levels);
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  if (target.declared_floor > z_levels.front() - window) {
    throw TruncationError("target floor is above the lowest level minus the window");
  }
  const auto draws = draw_all(target, reps, seed);
  DecorationExtraction out;
  out.window = window;
  for (double z : z_levels) {
    DecorationLevel level;
    level.z = z;
    std::vector<double> second;
    for (const auto& d : draws) {
      if (d.empty() || d.max_atom() < z) continue;
      if (d.floor() > d.max_atom() - window) {
        throw TruncationError("a conditioned draw is truncated inside the window");
      }
      const double top = d.max_atom();
      std::size_t k = 0;
      for (double a : d.atoms()) {
        if (a < top - window) break;
        ++k;
      }
      if (level.count_histogram.size() <= k) level.count_histogram.resize(k + 1, 0.0);
      level.count_histogram[k] += 1.0;
      second.push_back(k >= 2 ? 1.0 : 0.0);
      level.first_gaps.push_back(k >= 2 ? top - d.atoms()[1] : window);
      ++level.conditioned;
    }
    if (level.conditioned < min_conditioned) {
      out.warnings.push_back(dropped_warning(z, level.conditioned, min_conditioned));
      continue;
    }
    normalise(level.count_histogram, level.conditioned);
    level.second_atom = mean_estimate(second);
    std::sort(level.first_gaps.begin(), level.first_gaps.end());
    out.levels.push_back(std::move(level));
  }
  for (std::size_t k = 1; k < out.levels.size(); ++k) {
    out.count_tv.push_back(tv_distance(out.levels[k - 1].count_histogram, out.levels[k].count_histogram));
    out.gap_ks.push_back(ks_two_sample(out.levels[k - 1].first_gaps, out.levels[k].first_gaps));
  }
  return out;
}

nlohmann::json to_json(const DecorationExtraction& e) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : e.levels) {
    levels.push_back({{"z", l.z},
                      {"conditioned", l.conditioned},
                      {"count_histogram", l.count_histogram},
                      {"second_atom_probability", l.second_atom.mean},
                      {"second_atom_std_error", l.second_atom.std_error}});
  }
  nlohmann::json ks = nlohmann::json::array();
  for (const auto& k : e.gap_ks) ks.push_back({{"statistic", k.statistic}, {"p", k.p_value}});
  return nlohmann::json{{"window", e.window}, {"levels", levels}, {"count_tv", e.count_tv},
                        {"gap_ks", ks},       {"warnings", e.warnings}};
}

CountStabilization count_stabilization(const MeasureSampler& target, std::vector<double> z_levels, std::size_t reps,
                                       std::uint64_t seed, std::size_t min_conditioned) {
  check_levels(z_levels);
  if (target.declared_floor > z_levels.front()) {
    throw TruncationError("target floor is above the lowest level");
  }
  const auto draws = draw_all(target, reps, seed);
  CountStabilization out;
  for (double z : z_levels) {
    CountLevel level;
    level.z = z;
    for (const auto& d : draws) {
      const std::size_t k = d.tail_count(z);
      if (k == 0) continue;
      if (level.histogram.size() <= k) level.histogram.resize(k + 1, 0.0);
      level.histogram[k] += 1.0;
      ++level.conditioned;
    }
    if (level.conditioned < min_conditioned) {
      out.warnings.push_back(dropped_warning(z, level.conditioned, min_conditioned));
      continue;
    }
    normalise(level.histogram, level.conditioned);
    out.levels.push_back(std::move(level));
  }
  for (std::size_t k = 1; k < out.levels.size(); ++k) {
    out.consecutive_tv.push_back(tv_distance(out.levels[k - 1].histogram, out.levels[k].histogram));
  }
  return out;
}

nlohmann::json to_json(const CountStabilization& c) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : c.levels) {
    levels.push_back({{"z", l.z}, {"conditioned", l.conditioned}, {"histogram", l.histogram}});
  }
  return nlohmann::json{{"levels", levels}, {"consecutive_tv", c.consecutive_tv}, {"warnings", c.warnings}};
}

}  // namespace bstable
