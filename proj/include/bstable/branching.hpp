#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bstable/point_measure.hpp"
#include "bstable/random.hpp"
#include "bstable/reproduction.hpp"

namespace bstable {

/// A simulation outgrew its population cap.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultPopulationCap = 10'000'000;

/// Generator of i.i.d. random point measures. Every draw has
/// floor >= declared_floor and depends only on the stream it is given.
struct MeasureSampler {
  std::function<PointMeasure(Rng&)> draw;
  double declared_floor = kNegInf;
  std::string description;

  PointMeasure operator()(Rng& rng) const { return draw(rng); }
};

/// Positions of generation n of a branching random walk started from one
/// particle at 0. Particles strictly below `barrier` are removed together
/// with their descendants. Unsorted.
std::vector<double> simulate_positions(const ReproductionLaw& law, int generations, double barrier, Rng& rng,
                                       std::size_t population_cap = kDefaultPopulationCap);

/// Replaces every particle by an independent offspring draw translated by
/// its position, then applies the barrier. Throws ResourceError past the cap.
void advance_generation(const ReproductionLaw& law, std::vector<double>& positions, double barrier, Rng& rng,
                        std::size_t population_cap = kDefaultPopulationCap);

/// Z_n with floor = barrier.
PointMeasure simulate_generation(const ReproductionLaw& law, int generations, double barrier, Rng& rng,
                                 std::size_t population_cap = kDefaultPopulationCap);

/// Sampler of Z_n (n = 1 is the offspring law itself).
MeasureSampler generation_sampler(const ReproductionLaw& law, int generations, double barrier = kNegInf);

/// Always returns the same measure.
MeasureSampler constant_sampler(PointMeasure measure, std::string description = "constant");

/// The branching convolution outer (*) inner: draw D from `outer`, attach an
/// independent `inner` draw translated by each atom of D, superpose.
///
/// The draw's floor is the highest level below which some part could be
/// missing: max over atoms d_j of (d_j + floor of the j-th inner draw), and
/// the outer draw's own floor. Atoms the outer sampler discarded below its
/// floor are not accounted for; choosing that floor is the caller's job (see
/// recommend_floor).
MeasureSampler convolve(MeasureSampler outer, MeasureSampler inner,
                        std::size_t population_cap = kDefaultPopulationCap);

/// One-atom measure at shift(rng); a -inf shift gives the null measure.
MeasureSampler dirac_sampler(std::function<double(Rng&)> shift, std::string description = "dirac");

/// Floor L such that atoms discarded below L reach [support_left, inf) after
/// n_steps generations of `law` with probability at most miss_probability.
///
/// With N = (mean offspring)^n_steps, each of the N expected descendants may
/// exceed its origin by q with probability p = 1 - (1 - miss)^(1/N); q is the
/// corresponding upper quantile of an n_steps-step displacement (normal for
/// Gaussian families, n * max(a, b) for the deterministic one). Returns
/// support_left - max(q, 0).
double recommend_floor(double support_left, const ReproductionLaw& law, int n_steps, double miss_probability);

}  // namespace bstable
