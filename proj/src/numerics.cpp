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

#include <algorithm>
#include <cmath>
#include <limits>

#include "apdgain/errors.hpp"

namespace apdgain {

ScalarMinResult brent_minimize(const std::function<double(double)>& f,
                               double lo, double hi, double xtol,
                               std::size_t max_iter) {
  if (!(lo < hi)) {
    throw ValidationError("invalid-parameter", "brent: need lo < hi");
  }
  constexpr double kGolden = 0.3819660112501051;  // 2 - golden ratio
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  double a = lo, b = hi;
  double x = a + kGolden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = eps * std::fabs(x) + xtol;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      // Parabola through (x, fx), (w, fw), (v, fv).
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_prev = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_prev) && p > q * (a - x) &&
          p < q * (b - x)) {
        parabolic = true;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) {
          d = (m - x >= 0.0) ? tol1 : -tol1;
        }
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = kGolden * e;
    }
    const double u =
        (std::fabs(d) >= tol1) ? x + d : x + ((d >= 0.0) ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, it};
}

double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double xtol, std::size_t max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw RuntimeError("no-solution", "bisect: interval does not bracket a root");
  }
  for (std::size_t it = 0; it < max_iter && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SimplexResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x0, const std::vector<double>& step,
    const SimplexOptions& opts) {
  const std::size_t n = x0.size();
  if (n == 0 || step.size() != n) {
    throw ValidationError("invalid-parameter", "simplex: bad dimensions");
  }
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::size_t it = 0;
  for (; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    if (vals[worst] - vals[best] <=
        opts.ftol * (1.0 + std::fabs(vals[best]))) {
      return {pts[best], vals[best], true, it};
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = centroid[j] + t * (pts[worst][j] - centroid[j]);
      }
      return p;
    };
    const auto reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < vals[order[0]]) {
      const auto expanded = blend(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const auto contracted = blend(fr < vals[worst] ? -0.5 : 0.5);
    const double fc = f(contracted);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) {
        pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      }
      vals[i] = f(pts[i]);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (vals[i] < vals[best]) best = i;
  }
  return {pts[best], vals[best], false, it};
}

namespace {

// Series expansion of P(a, x), effective for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) by modified Lentz, effective for x >= a + 1.
double gamma_q_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw ValidationError("invalid-parameter",
                          "gamma_p: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw ValidationError("invalid-parameter",
                          "gamma_q: need a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_sf(double x, double dof) {
  if (!(dof > 0.0)) {
    throw ValidationError("invalid-parameter", "chi2_sf: dof must be > 0");
  }
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * x);
}

GofResult chi_squared_gof(const std::vector<double>& observed,
                          const std::vector<double>& expected,
                          std::size_t fitted_params, double min_expected) {
  if (observed.size() != expected.size()) {
    throw ValidationError("invalid-parameter", "gof: size mismatch");
  }
  // Merge adjacent bins left to right until each group's expectation
  // reaches min_expected; a deficient final group joins its neighbor.
  std::vector<double> obs_m, exp_m;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i];
    if (e_acc >= min_expected) {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!exp_m.empty()) {
      obs_m.back() += o_acc;
      exp_m.back() += e_acc;
    } else if (e_acc > 0.0) {
      obs_m.push_back(o_acc);
      exp_m.push_back(e_acc);
    }
  }
  if (obs_m.size() < 2) return {0.0, 0, 1.0};
  double chi2 = 0.0;
  for (std::size_t i = 0; i < obs_m.size(); ++i) {
    const double diff = obs_m[i] - exp_m[i];
    chi2 += diff * diff / exp_m[i];
  }
  const std::size_t dof =
      std::max<std::size_t>(1, obs_m.size() - 1 - fitted_params);
  return {chi2, dof, chi2_sf(chi2, static_cast<double>(dof))};
}

}  // namespace apdgain
