#include <doctest.h>

#include <cmath>

#include "bstable/martingale.hpp"
#include "bstable/parallel.hpp"

using namespace bstable;

namespace {
const double kLn2 = std::log(2.0);
const auto kRegular = ReproductionLaw::binary_gaussian(-kLn2 - 0.5, 1.0);
const auto kBoundary = ReproductionLaw::binary_gaussian(-std::sqrt(2 * kLn2), 1.0);
}  // namespace

TEST_CASE("generation zero values") {
  Rng rng(1);
  CHECK(additive_martingale(kRegular, 1.0, 0, rng) == 1.0);
  CHECK(derivative_martingale(kBoundary, std::sqrt(2 * kLn2), 0, rng) == 0.0);
}

TEST_CASE("wrong case is refused") {
  Rng rng(1);
  CHECK_THROWS_AS(derivative_martingale(kRegular, 1.0, 3, rng), ClassificationError);
  CHECK_THROWS_AS(additive_martingale(kRegular, 0.5, 3, rng), ClassificationError);
  CHECK_THROWS_AS(ShiftSampler::martingale(ReproductionLaw::binary_gaussian(-1.0, 1.0), 1.0, 12), ClassificationError);
  CHECK_THROWS_AS(ShiftSampler::martingale(kRegular, 1.0, 5), std::invalid_argument);
}

TEST_CASE("additive martingale has mean one") {
  const auto w = parallel_map(20000, [&](std::size_t i) {
    Rng rng = make_stream(11, i);
    return additive_martingale(kRegular, 1.0, 5, rng);
  });
  const auto e = mean_estimate(w);
  CHECK(std::abs(e.mean - 1.0) < 4 * e.std_error);
}

TEST_CASE("barrier moves down with more generations and smaller miss mass") {
  const double b4 = additive_martingale_barrier(kRegular, 1.0, 4);
  const double b8 = additive_martingale_barrier(kRegular, 1.0, 8);
  CHECK(b8 < b4);
  CHECK(additive_martingale_barrier(kRegular, 1.0, 4, 1e-9) < b4);
}

TEST_CASE("martingale path checkpoints") {
  Rng a(7), b(7);
  const auto path = martingale_path(kRegular, 1.0, MartingaleKind::additive, {0, 2, 4}, a);
  REQUIRE(path.size() == 3);
  CHECK(path[0] == 1.0);
  for (double v : path) CHECK(v >= 0.0);
  // Same stream, same path.
  CHECK(martingale_path(kRegular, 1.0, MartingaleKind::additive, {0, 2, 4}, b) == path);
}

TEST_CASE("shift samplers") {
  Rng rng(1);
  const auto c = ShiftSampler::constant(2.5);
  CHECK(c.draw(rng) == 2.5);
  CHECK(c.metadata()["source"] == "constant");
  const auto neg = ShiftSampler::custom([](Rng&) { return -1.0; }, "negative");
  CHECK(neg.draw(rng) == 0.0);
  CHECK(neg.draw_raw(rng) == -1.0);
  const auto sample = sample_shift_values(neg, 10, 3);
  CHECK(sample.clamp_fraction == 1.0);
  const auto s = ShiftSampler::martingale(kBoundary, std::sqrt(2 * kLn2), 12);
  CHECK(s.source() == ShiftSampler::Source::boundary);
  CHECK(s.generations() == 12);
}

TEST_CASE("smoothing identity holds for the regular shift") {
  const auto shift = ShiftSampler::martingale(kRegular, 1.0, 12);
  const auto r = check_smoothing_identity(kRegular, 1.0, shift, 2000, 5);
  CHECK(r.ks.p_value > 0.001);
  CHECK_THROWS_AS(check_smoothing_identity(kRegular, 1.0, shift, 10, 5), std::invalid_argument);
}
