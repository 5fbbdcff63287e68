#include <doctest.h>

#include <cmath>
#include <random>

#include "bstable/point_measure.hpp"
#include "bstable/test_function.hpp"

using namespace bstable;

TEST_CASE("from_atoms ranks and applies the floor") {
  const auto m = PointMeasure::from_atoms({0.5, 2.0, -1.0, kNegInf, 1.0}, -0.5);
  REQUIRE(m.size() == 3);
  CHECK(m.atoms()[0] == 2.0);
  CHECK(m.atoms()[1] == 1.0);
  CHECK(m.atoms()[2] == 0.5);
  CHECK(m.floor() == -0.5);
  CHECK_FALSE(m.exact());
  CHECK_THROWS_AS(PointMeasure::from_atoms({std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(PointMeasure::from_atoms({INFINITY}), std::invalid_argument);
}

TEST_CASE("null measure") {
  PointMeasure null;
  CHECK(null.empty());
  CHECK(null.max_atom() == kNegInf);
  CHECK(null.tail_count(0.0) == 0);
  CHECK(integrate(null, TestFunction::ramp(0.0, 1.0, 1.0)) == 0.0);
}

TEST_CASE("tail_count on the open interval and below the floor") {
  const auto m = PointMeasure::from_atoms({3.0, 1.0, 1.0, -2.0}, -3.0);
  CHECK(m.tail_count(1.0) == 1);
  CHECK(m.tail_count(0.999) == 3);
  CHECK(m.tail_count(-3.0) == 4);
  CHECK_THROWS_AS(m.tail_count(-3.5), TruncationError);
}

TEST_CASE("integrate refuses test functions reaching below the floor") {
  const auto m = PointMeasure::from_atoms({0.0, -1.0}, -2.0);
  CHECK_THROWS_AS(integrate(m, TestFunction::ramp(-3.0, 1.0, 1.0)), TruncationError);
  CHECK(integrate(m, TestFunction::ramp(-1.5, 1.0, 1.0)) == doctest::Approx(1.0 + 0.5));
}

TEST_CASE("dirac and ramp") {
  CHECK(integrate(PointMeasure::dirac(0.0), TestFunction::ramp(-1.0, 1.0, 1.0)) == 1.0);
}

TEST_CASE("randomized structural invariants on dyadic values") {
  // Dyadic rationals make translation and summation exact in floating point.
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_int_distribution<int> grid(-64, 64);
  auto dyadic = [&] { return grid(rng) / 8.0; };
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> atoms(static_cast<std::size_t>(count(rng)));
    for (double& a : atoms) a = dyadic();
    const double floor = trial % 3 == 0 ? kNegInf : -8.5;
    const auto m = PointMeasure::from_atoms(atoms, floor);
    const double y = dyadic();

    REQUIRE(m.translate(y).translate(-y) == m);

    const double x1 = dyadic();
    const double x2 = x1 + std::abs(dyadic());
    if (x1 >= m.floor()) REQUIRE(m.tail_count(x1) >= m.tail_count(x2));

    const auto phi = TestFunction::ramp(dyadic(), 0.5, 2.0);
    if (phi.left_edge() >= m.floor() && phi.left_edge() - y >= m.floor()) {
      REQUIRE(integrate(m.translate(y), phi) == integrate(m, phi.shifted(y)));
    }
  }
}

TEST_CASE("JSON and CSV round trips") {
  const auto m = PointMeasure::from_atoms({1.25, -0.5}, -2.0);
  CHECK(point_measure_from_json(to_json(m)) == m);
  CHECK(point_measure_from_csv_row(to_csv_row(m)) == m);
  const auto exact = PointMeasure::from_atoms({0.1, 0.3});
  CHECK(point_measure_from_csv_row(to_csv_row(exact)) == exact);
  CHECK(point_measure_from_csv_row(to_csv_row(PointMeasure())) == PointMeasure());
}

TEST_CASE("test functions") {
  const auto r = TestFunction::ramp(1.0, 2.0, 3.0);
  CHECK(r(0.5) == 0.0);
  CHECK(r(1.25) == doctest::Approx(1.5));
  CHECK(r(10.0) == 3.0);
  const auto p = TestFunction::plateau(0.0, 2.0, 1.0, 1.0);
  CHECK(p(1.0) == 1.0);
  CHECK(p(1.5) == doctest::Approx(0.5));
  CHECK(p(3.0) == 0.0);
  CHECK(r.shifted(0.5)(0.75) == r(1.25));
  CHECK(test_function_from_json(nlohmann::json(p)) == p);
}
