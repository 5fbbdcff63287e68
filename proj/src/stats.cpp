#include "bstable/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace bstable {

Estimate mean_estimate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_estimate: empty sample");
  const double n = static_cast<double>(values.size());
  // Two passes; the samples here are heavy tailed often enough that the
  // one-pass formula loses digits.
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), values.size()};
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  for (double x : v) {
    if (std::isnan(x)) throw std::invalid_argument("KS test: NaN in sample");
  }
  std::sort(v.begin(), v.end());
  return v;
}

double ks_p_value(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  const auto a = sorted_copy(xs);
  const auto b = sorted_copy(ys);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

KsResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  const auto a = sorted_copy(xs);
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < a.size()) {
    const double x = a[i];
    const std::size_t before = i;
    while (i < a.size() && a[i] == x) ++i;
    const double f = cdf(x);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(before) / n)});
  }
  return {d, ks_p_value(d, n)};
}

double z_test(const Estimate& a, const Estimate& b) {
  const double diff = std::abs(a.mean - b.mean);
  const double se = std::hypot(a.std_error, b.std_error);
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

double z_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double tv_distance(std::span<const double> a, std::span<const double> b) {
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(sa > 0.0) || !(sb > 0.0)) throw std::invalid_argument("tv_distance: empty histogram");
  const std::size_t k = std::max(a.size(), b.size());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = i < a.size() ? a[i] / sa : 0.0;
    const double q = i < b.size() ? b[i] / sb : 0.0;
    total += std::abs(p - q);
  }
  return 0.5 * total;
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                               double min_expected, int fitted_parameters) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  double stat = 0.0;
  int cells = 0;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < min_expected) {
      pooled_obs += observed[i];
      pooled_exp += expected[i];
      continue;
    }
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    return {std::numeric_limits<double>::infinity(), 1.0, 0.0};
  }
  const double dof = static_cast<double>(cells - 1 - fitted_parameters);
  if (dof < 1.0) return {stat, dof, 1.0};
  boost::math::chi_squared dist(dof);
  return {stat, dof, boost::math::cdf(boost::math::complement(dist, stat))};
}

ChiSquareResult chi_square_homogeneity(std::span<const double> a, std::span<const double> b) {
  const std::size_t k = std::max(a.size(), b.size());
  std::vector<double> ca(k, 0.0), cb(k, 0.0);
  std::copy(a.begin(), a.end(), ca.begin());
  std::copy(b.begin(), b.end(), cb.begin());
  // Pool from the top: merge a cell into its left neighbour while the pooled
  // count of the cell is small.
  std::vector<double> pa, pb;
  double acc_a = 0.0, acc_b = 0.0;
  for (std::size_t i = k; i-- > 0;) {
    acc_a += ca[i];
    acc_b += cb[i];
    if (acc_a + acc_b >= 10.0) {
      pa.push_back(acc_a);
      pb.push_back(acc_b);
      acc_a = acc_b = 0.0;
    }
  }
  if (acc_a + acc_b > 0.0) {
    if (pa.empty()) {
      pa.push_back(acc_a);
      pb.push_back(acc_b);
    } else {
      pa.back() += acc_a;
      pb.back() += acc_b;
    }
  }
  const double na = std::accumulate(pa.begin(), pa.end(), 0.0);
  const double nb = std::accumulate(pb.begin(), pb.end(), 0.0);
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("chi_square_homogeneity: empty histogram");
  const double n = na + nb;
  double stat = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double col = pa[i] + pb[i];
    const double ea = na * col / n;
    const double eb = nb * col / n;
    stat += (pa[i] - ea) * (pa[i] - ea) / ea + (pb[i] - eb) * (pb[i] - eb) / eb;
  }
  const double dof = static_cast<double>(pa.size()) - 1.0;
  if (dof < 1.0) return {stat, dof, 1.0};
  boost::math::chi_squared dist(dof);
  return {stat, dof, boost::math::cdf(boost::math::complement(dist, stat))};
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal(), p);
}

double normal_upper_quantile(double tail_probability) {
  return boost::math::quantile(boost::math::complement(boost::math::normal(), tail_probability));
}

}  // namespace bstable
