#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bstable/test_function.hpp"

namespace bstable {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// A consumer asked about the measure below the level where atoms were
/// discarded.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite point measure on the real line, stored as its ranked
/// (non-increasing) sequence of atoms.
///
/// `floor` records the level below which atoms were discarded when the value
/// was built; -inf means nothing was discarded. Only the part of the measure
/// on [floor, inf) is meaningful, and the checked accessors refuse questions
/// about anything lower.
class PointMeasure {
 public:
  /// The null measure.
  PointMeasure() = default;

  /// Sorts `positions` non-increasingly and drops entries below `floor`.
  /// Entries equal to -inf are treated as absent atoms. NaN and +inf are
  /// rejected, as is a NaN or +inf floor.
  static PointMeasure from_atoms(std::vector<double> positions, double floor = kNegInf);

  /// Adopts an already ranked vector (debug-checked); all atoms must be >= floor.
  static PointMeasure from_ranked(std::vector<double> ranked, double floor = kNegInf);

  static PointMeasure dirac(double position) { return from_ranked({position}); }

  std::span<const double> atoms() const { return atoms_; }
  double floor() const { return floor_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  bool exact() const { return floor_ == kNegInf; }

  /// tau_y: every atom and the floor moved by y.
  PointMeasure translate(double y) const;

  /// Largest atom, -inf for the null measure.
  double max_atom() const { return atoms_.empty() ? kNegInf : atoms_.front(); }

  /// Number of atoms in the open interval (x, inf). Throws TruncationError
  /// when x < floor.
  std::size_t tail_count(double x) const;

  /// Sum of f over atoms, without any floor check.
  template <class F>
  double sum(F&& f) const {
    double total = 0.0;
    for (double a : atoms_) total += f(a);
    return total;
  }

  friend bool operator==(const PointMeasure&, const PointMeasure&) = default;

 private:
  PointMeasure(std::vector<double> ranked, double floor) : atoms_(std::move(ranked)), floor_(floor) {}

  std::vector<double> atoms_;
  double floor_ = kNegInf;
};

/// <D, phi>. Requires phi.left_edge() >= D.floor(), otherwise atoms that
/// were discarded could have contributed; throws TruncationError.
double integrate(const PointMeasure& measure, const TestFunction& phi);

/// <D, phi> ignoring the floor. Callers account for truncation themselves.
double integrate_unchecked(const PointMeasure& measure, const TestFunction& phi);

/// JSON form: {"floor": <number|null>, "atoms": [...]}; null floor = -inf.
nlohmann::json to_json(const PointMeasure& measure);
PointMeasure point_measure_from_json(const nlohmann::json& j);

/// CSV row form "floor,atom1,atom2,..."; the floor is written as -inf when exact.
std::string to_csv_row(const PointMeasure& measure);
PointMeasure point_measure_from_csv_row(std::string_view row);

}  // namespace bstable
