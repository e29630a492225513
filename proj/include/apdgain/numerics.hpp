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
#include <functional>
#include <vector>

namespace apdgain {

struct ScalarMinResult {
  double x = 0.0;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Brent's method on [lo, hi]; terminates when the bracket shrinks below
/// xtol (plus the usual sqrt(eps)*|x| guard).
ScalarMinResult brent_minimize(const std::function<double(double)>& f,
                               double lo, double hi, double xtol = 1e-10,
                               std::size_t max_iter = 200);

/// Root of a continuous function on [lo, hi] by bisection. f(lo) and f(hi)
/// must bracket a sign change.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double xtol = 1e-12,
                   std::size_t max_iter = 200);

struct SimplexOptions {
  double ftol = 1e-10;
  std::size_t max_iter = 5000;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Nelder-Mead downhill simplex. The initial simplex is x0 plus one vertex
/// per coordinate displaced by step[i].
SimplexResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& step,
    const SimplexOptions& opts = {});

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Survival function of the chi-squared distribution with dof > 0.
double chi2_sf(double x, double dof);

struct GofResult {
  double chi2 = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Pearson chi-squared test of observed counts against expected counts.
/// Adjacent bins are merged until every expected count reaches
/// min_expected; dof = merged bins - 1 - fitted_params.
GofResult chi_squared_gof(const std::vector<double>& observed,
                          const std::vector<double>& expected,
                          std::size_t fitted_params = 0,
                          double min_expected = 5.0);

}  // namespace apdgain
