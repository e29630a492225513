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
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace apdgain {

/// How far a tabulated distribution may be truncated.
struct TruncationPolicy {
  double tail_tolerance = 1e-9;
  std::uint64_t hard_cap = 1'000'000;
};

/// Distribution of an integer carrier count m >= 0.
///
/// kind tags the origin: "analytic" (evaluated from the single-injection
/// closed form), "monte-carlo" (sampled), or "empirical" (measured data).
/// pmf[i] holds P(m = support_start + i); mass beyond the stored support is
/// recorded in truncation_mass, so sum() + truncation_mass == 1.
///
/// For single-injection analytic distributions: k is the ratio of the
/// injected-carrier ionization coefficient to the opposite carrier's,
/// restricted to (0, 1); mean_gain is the exact mean of m and the support
/// starts at m = 1 (one injected carrier always exits).
struct GainDistribution {
  std::string kind = "analytic";
  double k = 0.0;
  double mean_gain = 0.0;
  std::uint64_t support_start = 1;
  std::vector<double> pmf;
  double truncation_mass = 0.0;

  double at(std::uint64_t m) const {
    return (m >= support_start && m < support_start + pmf.size())
               ? pmf[m - support_start]
               : 0.0;
  }
  std::uint64_t support_max() const {
    return pmf.empty() ? 0 : support_start + pmf.size() - 1;
  }
  /// Total represented mass (1 - truncation_mass up to rounding).
  double sum() const;
  /// Moments over the represented support; truncation biases these low by
  /// an amount bounded by truncation_mass * support_max terms.
  double mean() const;
  double variance() const;
  /// E[m^2] / E[m]^2 over the represented support.
  double enf() const;
};

/// P(m) for one injected carrier; k in (0, 1), mean_gain >= 1, m >= 1.
double gain_pmf(double k, double mean_gain, std::uint64_t m);

/// log P(m), defined for mean_gain > 1 (useful in the far tail).
double log_gain_pmf(double k, double mean_gain, std::uint64_t m);

/// Tabulates the single-injection pmf from m = 1 upward until the tail
/// mass, bounded by 1 - cumulative sum, drops to policy.tail_tolerance.
/// The initial support estimate comes from the mean and variance and is
/// doubled as needed; exceeding policy.hard_cap raises truncation-failure.
GainDistribution make_gain_distribution(double k, double mean_gain,
                                        const TruncationPolicy& policy = {});

/// Excess noise factor F = E[m^2]/E[m]^2 of the single-injection gain as a
/// function of k in (0, 1) and mean_gain >= 1.
double excess_noise_factor(double k, double mean_gain);

/// var(m) = mean_gain^2 * (excess_noise_factor - 1).
double gain_variance(double k, double mean_gain);

/// Poisson probability of n events at the given mean (mean >= 0).
double poisson_weight(double mean, std::uint64_t n);

/// Dense linear convolution; c[i] = sum_j a[j] * b[i - j].
std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b);

/// n-fold self-convolution of a distribution; n = 0 yields the point mass
/// at m = 0. Result support starts at n * dist.support_start; exceeding the
/// hard cap raises support-overflow.
GainDistribution convolve_n(const GainDistribution& dist, std::size_t n,
                            std::uint64_t hard_cap = 1'000'000);

namespace detail {

/// Magnitude-and-sign value: x = sign * exp(log_mag), sign in {-1, 0, +1}.
struct SignedLog {
  double log_mag;
  int sign;
};

/// Falling product prod_{j=0}^{count-1} (a - j) evaluated term by term.
/// Reference route for cross-checking the log-gamma evaluation.
double falling_product(double a, std::uint64_t count);

/// The same product in log-magnitude/sign form via lgamma on positive
/// arguments only: |prod| = Gamma(-a + count) / Gamma(-a) for a < 0.
SignedLog log_falling_product(double a, std::uint64_t count);

}  // namespace detail

}  // namespace apdgain
