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

#include "doctest.h"

#include "apdgain/errors.hpp"

using namespace apdgain;

namespace {
const double kGridK[] = {0.1, 0.3, 0.5, 0.7, 0.9, 0.9218};
const double kGridM[] = {1.5, 2.0, 3.7, 5.0, 13.2, 20.0};
}  // namespace

// Frozen high-precision references for the single-injection pmf.
TEST_CASE("pmf head values at the reference operating points") {
  CHECK(gain_pmf(0.9218, 3.7, 1) ==
        doctest::Approx(0.4926120222371276).epsilon(1e-12));
  CHECK(gain_pmf(0.9218, 3.7, 2) ==
        doctest::Approx(0.16675774619188782).epsilon(1e-12));
  CHECK(gain_pmf(0.9218, 3.7, 3) ==
        doctest::Approx(0.087070057865333152).epsilon(1e-12));
  CHECK(gain_pmf(0.9218, 13.2, 1) ==
        doctest::Approx(0.41073872980509979).epsilon(1e-12));
}

TEST_CASE("unity gain is a point mass at m = 1") {
  const auto dist = make_gain_distribution(0.5, 1.0, {});
  REQUIRE(dist.pmf.size() == 1);
  CHECK(dist.support_start == 1);
  CHECK(dist.pmf[0] == doctest::Approx(1.0));
  CHECK(gain_pmf(0.9, 1.0, 1) == doctest::Approx(1.0));
  CHECK(gain_pmf(0.9, 1.0, 2) == doctest::Approx(0.0));
}

TEST_CASE("pmf grid: normalization, mean, ENF, positivity, peak at one") {
  // Tight tail so the truncated moments do not contaminate the ENF check.
  TruncationPolicy policy{1e-12, 1'000'000};
  for (const double k : kGridK) {
    for (const double m : kGridM) {
      CAPTURE(k);
      CAPTURE(m);
      const auto dist = make_gain_distribution(k, m, policy);

      // normalization: retained mass + declared truncated tail = 1
      CHECK(std::abs(dist.sum() + dist.truncation_mass - 1.0) < 1e-9);

      // mean reproduces M
      CHECK(std::abs(dist.mean() - m) / m < 1e-6);

      // ENF from moments matches the closed form
      const double f_closed = excess_noise_factor(k, m);
      CHECK(std::abs(dist.enf() - f_closed) / f_closed < 1e-4);

      // positivity everywhere on the retained support
      for (const double p : dist.pmf) CHECK(p > 0.0);

      // the distribution peaks at a gain of one
      std::size_t argmax = 0;
      for (std::size_t i = 1; i < dist.pmf.size(); ++i) {
        if (dist.pmf[i] > dist.pmf[argmax]) argmax = i;
      }
      CHECK(dist.support_start + argmax == 1);
    }
  }
}

TEST_CASE("gamma-ratio routes agree to 1e-10 for m <= 50") {
  for (const double k : kGridK) {
    for (const double m : kGridM) {
      if (m == 1.0) continue;
      const double q = k * m / (1.0 - k);
      for (std::uint64_t mm = 2; mm <= 50; ++mm) {
        // route 1: lgamma difference; route 2: explicit rising product
        const double via_lgamma = std::lgamma(q + double(mm) - 1.0) -
                                  std::lgamma(q);
        double via_product = 0.0;
        for (std::uint64_t j = 0; j + 2 <= mm; ++j) {
          via_product += std::log(q + double(j));
        }
        const double scale = std::max(1.0, std::abs(via_lgamma));
        CHECK(std::abs(via_lgamma - via_product) / scale < 1e-10);
      }
    }
  }
}

TEST_CASE("signed log falling product tracks the direct product") {
  // supported domains: every factor negative (a < 0) or every factor
  // positive (a > n - 1); mixed-sign sequences are rejected
  for (const double a : {-3.3, -0.7, 9.0}) {
    for (const std::uint64_t n : {1ull, 2ull, 5ull, 8ull}) {
      CAPTURE(a);
      CAPTURE(n);
      const double direct = detail::falling_product(a, n);
      const auto sl = detail::log_falling_product(a, n);
      CHECK(sl.sign == (direct > 0.0 ? 1 : -1));
      CHECK(std::exp(sl.log_mag) ==
            doctest::Approx(std::abs(direct)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS((void)detail::log_falling_product(2.5, 5), ValidationError);
}

TEST_CASE("excess noise factor closed form") {
  CHECK(excess_noise_factor(0.9218, 3.7) ==
        doctest::Approx(3.867145948291533).epsilon(1e-12));
  CHECK(excess_noise_factor(0.9218, 13.2) ==
        doctest::Approx(14.156567848149536).epsilon(1e-12));
  // k -> 1 limit approaches F = M
  CHECK(excess_noise_factor(1.0 - 1e-9, 5.0) ==
        doctest::Approx(5.0).epsilon(1e-6));
  // unity gain is noiseless regardless of k
  for (const double k : kGridK) {
    CHECK(excess_noise_factor(k, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gain variance closed form") {
  CHECK(gain_variance(0.9218, 3.7) ==
        doctest::Approx(39.251228032111087).epsilon(1e-12));
  CHECK(gain_variance(0.9218, 13.2) ==
        doctest::Approx(2292.4003818615752).epsilon(1e-12));
  CHECK(gain_variance(0.5, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((void)make_gain_distribution(0.0, 2.0, {}),
                  ValidationError);
  CHECK_THROWS_AS((void)make_gain_distribution(1.0, 2.0, {}),
                  ValidationError);
  CHECK_THROWS_AS((void)make_gain_distribution(-0.2, 2.0, {}),
                  ValidationError);
  CHECK_THROWS_AS((void)make_gain_distribution(0.5, 0.99, {}),
                  ValidationError);
  CHECK_THROWS_AS((void)excess_noise_factor(0.5, 0.5), ValidationError);
  CHECK_THROWS_AS((void)gain_pmf(0.5, 2.0, 0), ValidationError);
}

TEST_CASE("truncation accounting") {
  TruncationPolicy policy{1e-9, 1'000'000};
  const auto dist = make_gain_distribution(0.9218, 13.2, policy);
  CHECK(dist.truncation_mass >= 0.0);
  CHECK(dist.truncation_mass < 1e-9);
  // hard cap too small to reach the tail tolerance -> error
  TruncationPolicy tiny{1e-9, 4};
  CHECK_THROWS_AS((void)make_gain_distribution(0.9218, 13.2, tiny), Error);
}

TEST_CASE("poisson weights") {
  CHECK(poisson_weight(0.1, 1) ==
        doctest::Approx(0.090483741803595957).epsilon(1e-12));
  CHECK(poisson_weight(0.1, 0) == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
  CHECK(poisson_weight(0.0, 0) == doctest::Approx(1.0));
  CHECK(poisson_weight(0.0, 3) == doctest::Approx(0.0));
  double total = 0.0;
  for (std::uint64_t n = 0; n <= 60; ++n) total += poisson_weight(4.2, n);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convolution identities") {
  const std::vector<double> x = {0.2, 0.5, 0.3};
  const std::vector<double> unit = {1.0};
  const auto same = convolve(x, unit);
  REQUIRE(same.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(same[i] == doctest::Approx(x[i]));
  }
  const auto ab = convolve(x, {0.4, 0.6});
  const auto ba = convolve({0.4, 0.6}, x);
  REQUIRE(ab.size() == ba.size());
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(ab[i] == doctest::Approx(ba[i]).epsilon(1e-14));
  }
}

TEST_CASE("n-fold self convolution scales the moments") {
  const auto dist = make_gain_distribution(0.9218, 3.7, {1e-12, 1'000'000});

  const auto zero = convolve_n(dist, 0);
  REQUIRE(zero.pmf.size() == 1);
  CHECK(zero.support_start == 0);
  CHECK(zero.pmf[0] == doctest::Approx(1.0));

  const auto one = convolve_n(dist, 1);
  CHECK(one.support_start == dist.support_start);
  CHECK(one.mean() == doctest::Approx(dist.mean()).epsilon(1e-12));

  const auto two = convolve_n(dist, 2);
  CHECK(two.support_start == 2);
  CHECK(two.mean() == doctest::Approx(2.0 * dist.mean()).epsilon(1e-9));
  CHECK(two.variance() ==
        doctest::Approx(2.0 * dist.variance()).epsilon(1e-6));

  const auto three = convolve_n(dist, 3);
  CHECK(three.mean() == doctest::Approx(3.0 * dist.mean()).epsilon(1e-9));
}

TEST_CASE("support estimate covers the needed mass") {
  // the declared tail bound holds: mass beyond the retained support is tiny
  for (const double m : {3.7, 13.2}) {
    const auto dist = make_gain_distribution(0.9218, m, {1e-9, 1'000'000});
    CHECK(dist.sum() > 1.0 - 1e-8);
  }
}
