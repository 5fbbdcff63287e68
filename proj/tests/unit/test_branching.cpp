#include <doctest.h>

#include <cmath>

#include "bstable/branching.hpp"
#include "bstable/parallel.hpp"
#include "bstable/stats.hpp"

using namespace bstable;

TEST_CASE("generation zero is one particle at 0") {
  Rng rng(1);
  const auto law = ReproductionLaw::binary_gaussian(0.0, 1.0);
  CHECK(simulate_generation(law, 0, kNegInf, rng) == PointMeasure::dirac(0.0));
  CHECK(simulate_generation(law, 0, 1.0, rng).empty());
}

TEST_CASE("deterministic law gives exact positions") {
  Rng rng(1);
  const auto law = ReproductionLaw::binary_deterministic(-1.0, 0.5);
  const auto z2 = simulate_generation(law, 2, kNegInf, rng);
  REQUIRE(z2.size() == 4);
  CHECK(z2.atoms()[0] == 1.0);
  CHECK(z2.atoms()[1] == -0.5);
  CHECK(z2.atoms()[2] == -0.5);
  CHECK(z2.atoms()[3] == -2.0);
  const auto killed = simulate_generation(law, 2, -0.75, rng);
  // -1 is removed at the first step; 0.5 has children 1.0 and -0.5.
  CHECK(killed.size() == 2);
  CHECK(killed.floor() == -0.75);
}

TEST_CASE("population cap") {
  Rng rng(1);
  CHECK_THROWS_AS(simulate_positions(ReproductionLaw::binary_deterministic(0.0, 0.0), 12, kNegInf, rng, 1000),
                  ResourceError);
}

TEST_CASE("mean population size") {
  const auto law = ReproductionLaw::poisson_gaussian(1.5, 0.0, 1.0);
  const auto counts = parallel_map(20000, [&](std::size_t i) {
    Rng rng = make_stream(9, i);
    return static_cast<double>(simulate_positions(law, 4, kNegInf, rng).size());
  });
  const auto e = mean_estimate(counts);
  CHECK(std::abs(e.mean - std::pow(1.5, 4)) < 4 * e.std_error);
}

TEST_CASE("convolution floors and exact outer draws") {
  const auto outer = constant_sampler(PointMeasure::from_atoms({1.0, -1.0}));
  const auto inner = constant_sampler(PointMeasure::from_atoms({0.0, -0.5}, -2.0));
  const auto conv = convolve(outer, inner);
  Rng rng(3);
  const auto d = conv(rng);
  // -1.5 lies below the floor -1 inherited from the second inner draw.
  CHECK(d.size() == 3);
  CHECK(d.floor() == -1.0);
  CHECK(d.atoms()[0] == 1.0);
}

TEST_CASE("convolution is associative in law for deterministic measures") {
  const auto a = constant_sampler(PointMeasure::from_atoms({0.0, -1.0}));
  const auto b = constant_sampler(PointMeasure::from_atoms({0.25, -0.5}));
  const auto c = constant_sampler(PointMeasure::from_atoms({0.5}));
  Rng r1(1), r2(1);
  CHECK(convolve(convolve(a, b), c)(r1) == convolve(a, convolve(b, c))(r2));
}

TEST_CASE("dirac sampler and -inf shift") {
  const auto s = dirac_sampler([](Rng&) { return kNegInf; });
  Rng rng(1);
  CHECK(s(rng).empty());
}

TEST_CASE("recommend_floor") {
  const auto law = ReproductionLaw::binary_gaussian(-1.0, 1.0);
  CHECK(recommend_floor(2.0, law, 0, 1e-3) == 2.0);
  const double floor = recommend_floor(0.0, law, 1, 1e-3);
  CHECK(floor < 0.0);
  // Brute force: a particle at the floor, after one step, reaches 0 rarely.
  const auto hits = parallel_map(200000, [&](std::size_t i) {
    Rng rng = make_stream(4, i);
    const auto d = sample_offspring(law, rng);
    return d.max_atom() + floor >= 0.0 ? 1.0 : 0.0;
  });
  const auto e = mean_estimate(hits);
  CHECK(e.mean <= 1e-3 + 4 * e.std_error);
  const auto det = ReproductionLaw::binary_deterministic(-0.7, 0.3);
  CHECK(recommend_floor(0.0, det, 3, 1e-3) == doctest::Approx(-0.9));
  CHECK_THROWS_AS(recommend_floor(0.0, law, 1, 0.0), std::invalid_argument);
}
