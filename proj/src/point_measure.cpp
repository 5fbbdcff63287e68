#include "bstable/point_measure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace bstable {

namespace {

void check_floor(double floor) {
  if (std::isnan(floor) || floor == std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("point measure floor must be finite or -inf");
  }
}

}  // namespace

PointMeasure PointMeasure::from_atoms(std::vector<double> positions, double floor) {
  check_floor(floor);
  for (double x : positions) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("point measure atoms must be finite");
    }
  }
  std::erase_if(positions, [floor](double x) { return x < floor || x == kNegInf; });
  std::sort(positions.begin(), positions.end(), std::greater<>());
  return PointMeasure(std::move(positions), floor);
}

PointMeasure PointMeasure::from_ranked(std::vector<double> ranked, double floor) {
  check_floor(floor);
  if (!std::is_sorted(ranked.begin(), ranked.end(), std::greater<>()) ||
      (!ranked.empty() && (ranked.back() < floor || !std::isfinite(ranked.front())))) {
    throw std::invalid_argument("from_ranked: atoms must be finite, non-increasing and >= floor");
  }
  return PointMeasure(std::move(ranked), floor);
}

PointMeasure PointMeasure::translate(double y) const {
  if (!std::isfinite(y)) throw std::invalid_argument("translation must be finite");
  std::vector<double> shifted(atoms_);
  for (double& a : shifted) a += y;
  return PointMeasure(std::move(shifted), floor_ + y);
}

std::size_t PointMeasure::tail_count(double x) const {
  if (x < floor_) throw TruncationError("tail_count below the measure floor");
  const auto it = std::partition_point(atoms_.begin(), atoms_.end(), [x](double a) { return a > x; });
  return static_cast<std::size_t>(it - atoms_.begin());
}

double integrate_unchecked(const PointMeasure& measure, const TestFunction& phi) {
  const double edge = phi.left_edge();
  double total = 0.0;
  for (double a : measure.atoms()) {
    if (a <= edge) break;  // ranked: everything after is outside the support
    total += phi(a);
  }
  return total;
}

double integrate(const PointMeasure& measure, const TestFunction& phi) {
  if (phi.left_edge() < measure.floor()) {
    throw TruncationError("test function support reaches below the measure floor");
  }
  return integrate_unchecked(measure, phi);
}

nlohmann::json to_json(const PointMeasure& measure) {
  nlohmann::json j;
  j["floor"] = measure.exact() ? nlohmann::json(nullptr) : nlohmann::json(measure.floor());
  j["atoms"] = std::vector<double>(measure.atoms().begin(), measure.atoms().end());
  return j;
}

PointMeasure point_measure_from_json(const nlohmann::json& j) {
  double floor = kNegInf;
  if (j.contains("floor") && !j.at("floor").is_null()) floor = j.at("floor").get<double>();
  return PointMeasure::from_atoms(j.at("atoms").get<std::vector<double>>(), floor);
}

std::string to_csv_row(const PointMeasure& measure) {
  std::ostringstream os;
  os.precision(17);
  if (measure.exact()) {
    os << "-inf";
  } else {
    os << measure.floor();
  }
  for (double a : measure.atoms()) os << ',' << a;
  return os.str();
}

namespace {

double parse_number(std::string_view field) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (field == "-inf" || field == "-Inf" || field == "-INF") return kNegInf;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument("malformed number in CSV row: '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

PointMeasure point_measure_from_csv_row(std::string_view row) {
  std::vector<double> fields;
  std::size_t start = 0;
  while (start <= row.size()) {
    const std::size_t comma = row.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? row.size() : comma;
    fields.push_back(parse_number(row.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.empty()) throw std::invalid_argument("empty CSV row");
  const double floor = fields.front();
  fields.erase(fields.begin());
  return PointMeasure::from_atoms(std::move(fields), floor);
}

}  // namespace bstable
