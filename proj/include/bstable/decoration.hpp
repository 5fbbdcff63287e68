#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bstable/branching.hpp"
#include "bstable/stats.hpp"

namespace bstable {

/// Levels keep at least this many conditioned draws or are dropped.
inline constexpr std::size_t kMinConditioned = 200;

/// Empirical law of tau_{-max E} E restricted to [-W, 0], given max E >= z.
struct DecorationLevel {
  double z = 0.0;
  std::size_t conditioned = 0;
  /// Index k: fraction of conditioned draws with k atoms in [-W, 0]
  /// (the maximal atom included, so index 0 is always empty).
  std::vector<double> count_histogram;
  /// P(a second atom in [-W, 0]).
  Estimate second_atom;
  /// max minus second atom, clipped at W (W when there is no second atom in
  /// the window). Sorted.
  std::vector<double> first_gaps;
};

struct DecorationExtraction {
  double window = 0.0;
  std::vector<DecorationLevel> levels;
  /// Between consecutive kept levels.
  std::vector<double> count_tv;
  std::vector<KsResult> gap_ks;
  std::vector<std::string> warnings;
};
nlohmann::json to_json(const DecorationExtraction& e);

/// Empirical first-gap CDF mass in [d - tol, d + tol].
double gap_mass_near(const DecorationLevel& level, double d, double tol);

/// One set of `reps` draws of E is shared by all levels. Throws
/// TruncationError when E's floor is above min(z_levels) - window.
DecorationExtraction extract_decoration(const MeasureSampler& target, std::vector<double> z_levels, double window,
                                        std::size_t reps, std::uint64_t seed,
                                        std::size_t min_conditioned = kMinConditioned);

struct CountLevel {
  double z = 0.0;
  std::size_t conditioned = 0;
  /// Index k: fraction of draws with E((z, inf)) = k among those with a
  /// positive count.
  std::vector<double> histogram;
};

struct CountStabilization {
  std::vector<CountLevel> levels;
  std::vector<double> consecutive_tv;
  std::vector<std::string> warnings;
};
nlohmann::json to_json(const CountStabilization& c);

CountStabilization count_stabilization(const MeasureSampler& target, std::vector<double> z_levels, std::size_t reps,
                                       std::uint64_t seed, std::size_t min_conditioned = kMinConditioned);

/// True when every element is strictly smaller than the one before.
bool strictly_decreasing(const std::vector<double>& xs);

}  // namespace bstable
