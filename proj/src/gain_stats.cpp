/*
   Copyright 2026 apdgain authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "apdgain/gain_stats.hpp"

#include <cmath>
#include <limits>

#include "apdgain/errors.hpp"

namespace apdgain {

namespace {

void check_params(double k, double mean_gain) {
  if (!(k > 0.0) || !(k < 1.0)) {
    throw ValidationError("invalid-parameter",
                          "ionization ratio k must lie strictly in (0, 1)");
  }
  if (!(mean_gain >= 1.0) || !std::isfinite(mean_gain)) {
    throw ValidationError("invalid-parameter", "mean gain must be >= 1");
  }
}

// Kahan-compensated accumulator; the pmf sums run over ~1e5 terms and feed
// tail tolerances as tight as 1e-12.
struct Accumulator {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

namespace detail {

double falling_product(double a, std::uint64_t count) {
  double product = 1.0;
  for (std::uint64_t j = 0; j < count; ++j) {
    product *= a - static_cast<double>(j);
  }
  return product;
}

SignedLog log_falling_product(double a, std::uint64_t count) {
  if (count == 0) return {0.0, 1};
  if (a < 0.0) {
    // Every factor a - j is negative; |prod| = Gamma(count - a) / Gamma(-a).
    const int sign = (count % 2 == 0) ? 1 : -1;
    return {std::lgamma(static_cast<double>(count) - a) - std::lgamma(-a),
            sign};
  }
  if (a > static_cast<double>(count) - 1.0) {
    // Every factor positive; |prod| = Gamma(a + 1) / Gamma(a - count + 1).
    return {std::lgamma(a + 1.0) -
                std::lgamma(a - static_cast<double>(count) + 1.0),
            1};
  }
  throw ValidationError("invalid-parameter",
                        "log_falling_product: factors change sign");
}

}  // namespace detail

double log_gain_pmf(double k, double mean_gain, std::uint64_t m) {
  check_params(k, mean_gain);
  if (m < 1) {
    throw ValidationError("invalid-parameter", "carrier count m must be >= 1");
  }
  const double inf = std::numeric_limits<double>::infinity();
  if (mean_gain == 1.0) return (m == 1) ? 0.0 : -inf;

  // b and d derive from the mean gain: b = (M + k - 1) / (kM) is the
  // exponential of the injected carrier's ionization integral scaled by
  // (1 - k) / k, and d = (M - 1) / M.
  const double b = (mean_gain + k - 1.0) / (k * mean_gain);
  const double log_b = std::log(b);
  if (m == 1) return k / (k - 1.0) * log_b;

  const double md = static_cast<double>(m);
  // The exact term couples a prefactor (1 - 1/k)^(m-1), sign (-1)^(m-1),
  // with a falling product of m - 1 negative factors starting at -q; the
  // signs cancel pairwise and the magnitude of the product is the rising
  // factorial q (q+1) ... (q+m-2).
  const double q = k * md / (1.0 - k);
  const auto product = detail::log_falling_product(-q, m - 1);
  const int prefactor_sign = (m % 2 == 1) ? 1 : -1;  // (-1)^(m-1)
  if (prefactor_sign * product.sign != 1) {
    throw RuntimeError("negative-probability",
                       "sign parity broke in the gain pmf evaluation");
  }
  const double exponent_b = (k + md - 1.0) / (k - 1.0);
  return (md - 1.0) * std::log((1.0 - k) / k) + product.log_mag -
         std::lgamma(md + 1.0) + exponent_b * log_b +
         (md - 1.0) * std::log((mean_gain - 1.0) / mean_gain);
}

double gain_pmf(double k, double mean_gain, std::uint64_t m) {
  return std::exp(log_gain_pmf(k, mean_gain, m));
}

double excess_noise_factor(double k, double mean_gain) {
  check_params(k, mean_gain);
  return mean_gain / k - (2.0 - 1.0 / mean_gain) * (1.0 / k - 1.0);
}

double gain_variance(double k, double mean_gain) {
  return mean_gain * mean_gain * (excess_noise_factor(k, mean_gain) - 1.0);
}

GainDistribution make_gain_distribution(double k, double mean_gain,
                                        const TruncationPolicy& policy) {
  check_params(k, mean_gain);
  if (!(policy.tail_tolerance > 0.0) || !(policy.tail_tolerance < 1.0) ||
      policy.hard_cap < 1) {
    throw ValidationError("invalid-parameter", "bad truncation policy");
  }
  GainDistribution dist;
  dist.kind = "analytic";
  dist.k = k;
  dist.mean_gain = mean_gain;
  dist.support_start = 1;
  if (mean_gain == 1.0) {
    dist.pmf = {1.0};
    dist.truncation_mass = 0.0;
    return dist;
  }

  const double sd = std::sqrt(gain_variance(k, mean_gain));
  std::uint64_t support = static_cast<std::uint64_t>(
      std::ceil(mean_gain + 20.0 * sd + 10.0));
  support = std::min(support, policy.hard_cap);

  Accumulator total;
  for (;;) {
    const std::uint64_t from = dist.pmf.size() + 1;
    dist.pmf.resize(support);
    for (std::uint64_t m = from; m <= support; ++m) {
      const double p = gain_pmf(k, mean_gain, m);
      dist.pmf[m - 1] = p;
      total.add(p);
    }
    const double tail = 1.0 - total.sum;
    if (tail <= policy.tail_tolerance) {
      dist.truncation_mass = std::max(0.0, tail);
      return dist;
    }
    if (support >= policy.hard_cap) {
      throw RuntimeError("truncation-failure",
                         "support cap reached before tail tolerance");
    }
    support = std::min(support * 2, policy.hard_cap);
  }
}

double poisson_weight(double mean, std::uint64_t n) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw ValidationError("invalid-parameter", "poisson mean must be >= 0");
  }
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(mean) - mean - std::lgamma(nd + 1.0));
}

std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      out[i + j] += a[i] * b[j];
    }
  }
  return out;
}

GainDistribution convolve_n(const GainDistribution& dist, std::size_t n,
                            std::uint64_t hard_cap) {
  GainDistribution out;
  out.kind = dist.kind;
  out.k = dist.k;
  if (n == 0) {
    out.mean_gain = 0.0;
    out.support_start = 0;
    out.pmf = {1.0};
    out.truncation_mass = 0.0;
    return out;
  }
  if (dist.pmf.empty()) {
    throw ValidationError("invalid-parameter", "convolve_n of empty pmf");
  }
  const std::uint64_t result_len = n * (dist.pmf.size() - 1) + 1;
  const std::uint64_t result_max = n * dist.support_max();
  if (result_len > hard_cap || result_max > hard_cap) {
    throw RuntimeError("support-overflow",
                       "convolution support exceeds the hard cap");
  }
  out.mean_gain = static_cast<double>(n) * dist.mean_gain;
  out.support_start = n * dist.support_start;
  out.pmf = dist.pmf;
  for (std::size_t i = 1; i < n; ++i) out.pmf = convolve(out.pmf, dist.pmf);
  Accumulator total;
  for (double p : out.pmf) total.add(p);
  out.truncation_mass = std::max(0.0, 1.0 - total.sum);
  return out;
}

double GainDistribution::sum() const {
  Accumulator acc;
  for (double p : pmf) acc.add(p);
  return acc.sum;
}

double GainDistribution::mean() const {
  Accumulator acc;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc.add(static_cast<double>(support_start + i) * pmf[i]);
  }
  return acc.sum;
}

double GainDistribution::variance() const {
  const double mu = mean();
  Accumulator acc;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double d = static_cast<double>(support_start + i) - mu;
    acc.add(d * d * pmf[i]);
  }
  return acc.sum;
}

double GainDistribution::enf() const {
  const double mu = mean();
  if (!(mu > 0.0)) {
    throw RuntimeError("degenerate-distribution",
                       "enf needs a distribution with positive mean");
  }
  Accumulator second;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const double m = static_cast<double>(support_start + i);
    second.add(m * m * pmf[i]);
  }
  return second.sum / (mu * mu);
}

}  // namespace apdgain
