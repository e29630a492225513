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
#include "apdgain/numerics.hpp"

#include <cmath>

#include "doctest.h"

#include "apdgain/errors.hpp"

using namespace apdgain;

TEST_CASE("brent_minimize finds a quadratic minimum") {
  const auto r = brent_minimize([](double x) { return (x - 2.5) * (x - 2.5); },
                                0.0, 10.0);
  CHECK(std::abs(r.x - 2.5) < 1e-8);
  CHECK(r.value < 1e-15);
}

TEST_CASE("brent_minimize handles an asymmetric well") {
  // min of x^4 - 3x at x = (3/4)^(1/3)
  const double expected = std::cbrt(0.75);
  const auto r = brent_minimize(
      [](double x) { return x * x * x * x - 3.0 * x; }, -2.0, 2.0);
  CHECK(std::abs(r.x - expected) < 1e-8);
}

TEST_CASE("bisect_root finds cos root") {
  const double root =
      bisect_root([](double x) { return std::cos(x); }, 0.0, 3.0, 1e-12);
  CHECK(std::abs(root - std::acos(0.0)) < 1e-10);
}

TEST_CASE("bisect_root requires a bracket") {
  CHECK_THROWS_AS(
      (void)bisect_root([](double x) { return x * x + 1.0; }, -1.0, 1.0,
                        1e-12),
      Error);
}

TEST_CASE("nelder_mead minimizes the Rosenbrock function") {
  const auto f = [](const std::vector<double>& v) {
    const double a = 1.0 - v[0];
    const double b = v[1] - v[0] * v[0];
    return a * a + 100.0 * b * b;
  };
  SimplexOptions opts;
  opts.max_iter = 20000;
  const auto r = nelder_mead(f, {-1.2, 1.0}, {0.5, 0.5}, opts);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
}

TEST_CASE("nelder_mead on a separable quadratic") {
  const auto f = [](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - double(i + 1);
      s += d * d;
    }
    return s;
  };
  const auto r = nelder_mead(f, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {});
  CHECK(r.converged);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(r.x[i] - double(i + 1)) < 1e-4);
  }
}

TEST_CASE("regularized incomplete gamma agrees with frozen references") {
  CHECK(gamma_q(0.5, 2.0) == doctest::Approx(0.04550026389635857).epsilon(1e-12));
  CHECK(gamma_q(3.2, 1.5) == doctest::Approx(0.8429738936615297).epsilon(1e-12));
  CHECK(gamma_p(1.0, 1.0) == doctest::Approx(0.6321205588285577).epsilon(1e-12));
  CHECK(gamma_p(2.0, 0.0) == 0.0);
  CHECK(gamma_p(3.0, 1e3) == doctest::Approx(1.0).epsilon(1e-12));
  // complementarity
  for (double a : {0.3, 1.0, 4.5, 20.0}) {
    for (double x : {0.1, 1.0, 5.0, 30.0}) {
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("chi-squared survival function agrees with frozen references") {
  CHECK(chi2_sf(18.307, 10) == doctest::Approx(0.05000058909139812).epsilon(1e-12));
  CHECK(chi2_sf(3.841, 1) == doctest::Approx(0.050013683763956804).epsilon(1e-12));
  CHECK(chi2_sf(123.4, 100) == doctest::Approx(0.05625009243581586).epsilon(1e-12));
  CHECK(chi2_sf(5.0, 7) == doctest::Approx(0.6599632296942824).epsilon(1e-12));
  CHECK(chi2_sf(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("chi_squared_gof is exact on matching histograms") {
  const std::vector<double> expected = {10.0, 20.0, 30.0, 40.0};
  const auto r = chi_squared_gof(expected, expected);
  CHECK(r.chi2 == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.dof == 3);
}

TEST_CASE("chi_squared_gof merges sparse bins") {
  // Bins with expected < 5 must be pooled, not dropped.
  const std::vector<double> observed = {1, 2, 50, 47, 1, 2};
  const std::vector<double> expected = {2, 2, 49, 46, 2, 2};
  const auto r = chi_squared_gof(observed, expected);
  // merged layout: {2+2+49=53...} depends on the greedy pass; just check
  // the result is a valid test outcome
  CHECK(r.dof >= 1);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
}

TEST_CASE("chi_squared_gof subtracts fitted parameters from dof") {
  const std::vector<double> expected = {10, 20, 30, 40, 50};
  const auto r0 = chi_squared_gof(expected, expected, 0);
  const auto r2 = chi_squared_gof(expected, expected, 2);
  CHECK(r0.dof == 4);
  CHECK(r2.dof == 2);
}
