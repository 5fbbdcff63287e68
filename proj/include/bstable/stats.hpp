#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

namespace bstable {

/// A Monte Carlo mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
};

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
Estimate mean_estimate(std::span<const double> values);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' effective-size correction). Samples may contain -inf.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

/// Sup-distance between the empirical CDF of xs and `cdf`, with the
/// asymptotic p-value. `cdf` must be non-decreasing.
KsResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf);

/// |mean_a - mean_b| / sqrt(se_a^2 + se_b^2). Zero when both errors vanish and
/// the means agree; +inf when they vanish and the means differ.
double z_test(const Estimate& a, const Estimate& b);

/// Two-sided normal p-value of a z-score.
double z_p_value(double z);

/// Half the L1 distance between two histograms after normalising each to
/// total mass 1. Shorter histograms are padded with zeros.
double tv_distance(std::span<const double> a, std::span<const double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of observed counts against expected counts. Cells with
/// expected count below `min_expected` are pooled into one cell.
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected = 5.0, int fitted_parameters = 0);

/// Homogeneity of two count histograms (2 x k contingency table). Sparse
/// trailing cells are pooled so every pooled cell has pooled count >= 10.
ChiSquareResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b);

double normal_quantile(double p);
double normal_upper_quantile(double tail_probability);

}  // namespace bstable
