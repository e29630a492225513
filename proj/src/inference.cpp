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
#include "apdgain/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apdgain/errors.hpp"
#include "apdgain/gain_stats.hpp"
#include "apdgain/rng.hpp"

namespace apdgain {

namespace {

constexpr double kKLow = 1e-3;
constexpr double kKHigh = 1.0 - 1e-6;

double weighted_sq_loss(const std::vector<EnfPoint>& points, double k) {
  double loss = 0.0;
  for (const auto& p : points) {
    const double r = p.f - excess_noise_factor(k, p.m);
    loss += p.weight * r * r;
  }
  return loss;
}

struct FreeParam {
  std::string name;
  double init = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

double get_param(const DeviceModel& d, const std::string& name) {
  if (name == "n_bar") return d.n_bar;
  if (name == "k") return d.k;
  if (name == "M") return d.mean_gain;
  if (name == "sigma_read") return d.sigma_read;
  throw ValidationError("invalid-parameter",
                        "unknown fit parameter: " + name);
}

void set_param(DeviceModel& d, const std::string& name, double value) {
  if (name == "n_bar") {
    d.n_bar = value;
  } else if (name == "k") {
    d.k = value;
  } else if (name == "M") {
    d.mean_gain = value;
  } else {
    d.sigma_read = value;
  }
}

ParameterBounds default_bounds(const std::string& name) {
  if (name == "n_bar") return {1e-9, 50.0};
  if (name == "k") return {kKLow, kKHigh};
  if (name == "M") return {1.0, 1000.0};
  return {1e-3, 100.0};  // sigma_read
}

// Inverts a small symmetric matrix in place by Gauss-Jordan with partial
// pivoting; returns false when singular.
bool invert(std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    if (std::fabs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double scale = a[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] /= scale;
      inv[col][c] /= scale;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col];
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] -= factor * a[col][c];
        inv[r][c] -= factor * inv[col][c];
      }
    }
  }
  a = std::move(inv);
  return true;
}

}  // namespace

FitResult fit_k(const std::vector<EnfPoint>& points) {
  if (points.size() < 2) {
    throw RuntimeError("degenerate-data", "fit_k needs at least 2 points");
  }
  double m_min = points[0].m, m_max = points[0].m;
  for (const auto& p : points) {
    if (!(p.m >= 1.0) || !(p.f >= 1.0) || !(p.weight > 0.0)) {
      throw ValidationError("invalid-parameter",
                            "fit_k points need M >= 1, F >= 1, weight > 0");
    }
    m_min = std::min(m_min, p.m);
    m_max = std::max(m_max, p.m);
  }
  if (m_min == m_max) {
    throw RuntimeError("degenerate-data",
                       "fit_k needs at least two distinct gains");
  }

  const auto loss = [&](double k) { return weighted_sq_loss(points, k); };
  const ScalarMinResult best = brent_minimize(loss, kKLow, kKHigh, 1e-12);

  // Curvature-based uncertainty: se = sqrt(2 / S''); with unit weights the
  // objective is residual-scaled first.
  const double h =
      std::min({1e-5, best.x - kKLow, kKHigh - best.x});
  double second = 0.0;
  if (h > 0.0) {
    second =
        (loss(best.x + h) - 2.0 * best.value + loss(best.x - h)) / (h * h);
  }
  bool unit_weights = true;
  for (const auto& p : points) unit_weights = unit_weights && p.weight == 1.0;
  double scale = 1.0;
  if (unit_weights && points.size() > 1) {
    scale = best.value / static_cast<double>(points.size() - 1);
  }
  double se = 0.0;
  if (second > 0.0) se = std::sqrt(2.0 * scale / second);

  FitResult result;
  result.parameters["k"] = best.x;
  result.standard_errors["k"] = se;
  result.objective_value = best.value;
  result.converged = true;
  result.iterations = best.iterations;
  return result;
}

std::vector<CalibratedPoint> calibrate_gain(
    const std::vector<GainCurvePoint>& curve, double unity_bias,
    const CalibrationOptions& options) {
  if (curve.empty()) {
    throw ValidationError("invalid-parameter", "empty gain curve");
  }
  double v_min = curve[0].bias_voltage, v_max = curve[0].bias_voltage;
  for (const auto& p : curve) {
    v_min = std::min(v_min, p.bias_voltage);
    v_max = std::max(v_max, p.bias_voltage);
  }
  if (unity_bias < v_min || unity_bias > v_max) {
    throw ValidationError("invalid-parameter",
                          "unity bias outside the curve's range");
  }

  std::vector<const GainCurvePoint*> window;
  for (const auto& p : curve) {
    if (std::fabs(p.bias_voltage - unity_bias) <= options.window_volts) {
      window.push_back(&p);
    }
  }
  if (window.size() < 2) {
    throw RuntimeError("no-plateau",
                       "fewer than two points in the plateau window");
  }
  double v_bar = 0.0, r_bar = 0.0;
  for (const auto* p : window) {
    v_bar += p->bias_voltage;
    r_bar += p->mean_output_carriers;
  }
  v_bar /= static_cast<double>(window.size());
  r_bar /= static_cast<double>(window.size());
  if (!(r_bar > 0.0)) {
    throw RuntimeError("no-plateau", "plateau level is not positive");
  }
  double s_vv = 0.0, s_vr = 0.0;
  for (const auto* p : window) {
    const double dv = p->bias_voltage - v_bar;
    s_vv += dv * dv;
    s_vr += dv * (p->mean_output_carriers - r_bar);
  }
  if (!(s_vv > 0.0)) {
    throw RuntimeError("no-plateau", "plateau window has no bias spread");
  }
  const double rel_slope = std::fabs(s_vr / s_vv) / r_bar;
  if (rel_slope > options.max_slope_per_volt) {
    throw RuntimeError("no-plateau",
                       "response is not flat around the unity bias");
  }

  std::vector<CalibratedPoint> out;
  out.reserve(curve.size());
  for (const auto& p : curve) {
    out.push_back({p.bias_voltage, p.mean_output_carriers / r_bar});
  }
  return out;
}

SpectrumFitResult fit_spectrum(const Histogram& hist, const DeviceModel& init,
                               const std::vector<std::string>& free,
                               const SpectrumFitOptions& options) {
  init.validate();
  if (hist.total() < 1000) {
    throw ValidationError("invalid-parameter",
                          "spectrum fit needs at least 1000 counts");
  }
  const std::uint64_t n_total = hist.total();

  // Canonical parameter order keeps the optimization deterministic no
  // matter how the caller orders `free`.
  const std::vector<std::string> canonical = {"n_bar", "k", "M", "sigma_read"};
  std::vector<FreeParam> params;
  for (const auto& name : canonical) {
    if (std::find(free.begin(), free.end(), name) == free.end()) continue;
    FreeParam fp;
    fp.name = name;
    fp.init = get_param(init, name);
    const auto it = options.bounds.find(name);
    const ParameterBounds b =
        it != options.bounds.end() ? it->second : default_bounds(name);
    fp.lo = b.lo;
    fp.hi = b.hi;
    fp.init = std::clamp(fp.init, fp.lo, fp.hi);
    params.push_back(fp);
  }
  for (const auto& name : free) {
    if (std::find(canonical.begin(), canonical.end(), name) ==
        canonical.end()) {
      throw ValidationError("invalid-parameter",
                            "unknown fit parameter: " + name);
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  auto apply = [&](const std::vector<double>& x) {
    DeviceModel d = init;
    for (std::size_t i = 0; i < params.size(); ++i) {
      set_param(d, params[i].name, x[i]);
    }
    return d;
  };
  // Poisson likelihood cells: the finite bins plus the two open tails, so
  // probability leaving a bin must land somewhere it is accounted for.
  auto nll_of_device = [&](const DeviceModel& d) {
    const std::vector<double> probs =
        bin_probabilities(d, hist.bin_edges, options.n_max, options.truncation);
    double covered = 0.0;
    for (double p : probs) covered += p;
    const std::vector<double> edge = {-1e12, hist.bin_edges.front()};
    const double below =
        bin_probabilities(d, edge, options.n_max, options.truncation)[0];
    const double above = std::max(0.0, 1.0 - covered - below);
    double nll = 0.0;
    auto cell = [&](double observed, double prob) {
      const double expected =
          std::max(static_cast<double>(n_total) * prob, 1e-300);
      nll += expected;
      if (observed > 0.0) nll -= observed * std::log(expected);
    };
    for (std::size_t b = 0; b < probs.size(); ++b) {
      cell(static_cast<double>(hist.counts[b]), probs[b]);
    }
    cell(static_cast<double>(hist.underflow), below);
    cell(static_cast<double>(hist.overflow), above);
    return nll;
  };
  auto objective = [&](const std::vector<double>& x) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (x[i] < params[i].lo || x[i] > params[i].hi) return inf;
    }
    try {
      return nll_of_device(apply(x));
    } catch (const Error&) {
      return inf;
    }
  };

  SpectrumFitResult result;
  std::vector<double> best_x;
  if (params.empty()) {
    result.fit.objective_value = nll_of_device(init);
    result.fit.converged = true;
    result.fit.iterations = 0;
  } else {
    double best_val = inf;
    bool best_converged = false;
    std::size_t best_iters = 0;
    for (std::size_t r = 0; r <= options.restarts; ++r) {
      std::vector<double> x0(params.size());
      CounterRng rng(options.restart_seed, r);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (r == 0) {
          x0[i] = params[i].init;
        } else {
          // Deterministic perturbation of the init inside the bounds.
          const double span = params[i].hi - params[i].lo;
          const double jitter =
              0.15 * std::min(span, std::fabs(params[i].init) + 0.1);
          x0[i] = std::clamp(params[i].init + jitter * (2.0 * rng.uniform() - 1.0),
                             params[i].lo + 1e-9 * span,
                             params[i].hi - 1e-9 * span);
        }
      }
      std::vector<double> step(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        step[i] = std::max(0.02 * std::fabs(x0[i]), 0.01);
        step[i] = std::min(step[i], 0.25 * (params[i].hi - params[i].lo));
        if (x0[i] + step[i] > params[i].hi) step[i] = -step[i];
      }
      const SimplexResult run =
          nelder_mead(objective, x0, step, options.simplex);
      if (run.value < best_val) {
        best_val = run.value;
        best_x = run.x;
        best_converged = run.converged;
        best_iters = run.iterations;
      }
    }
    if (!std::isfinite(best_val)) {
      throw RuntimeError("no-convergence",
                         "spectrum fit found no finite likelihood");
    }
    result.fit.objective_value = best_val;
    result.fit.converged = best_converged;
    result.fit.iterations = best_iters;
    for (std::size_t i = 0; i < params.size(); ++i) {
      result.fit.parameters[params[i].name] = best_x[i];
      const double span = params[i].hi - params[i].lo;
      if (best_x[i] - params[i].lo < 1e-6 * span ||
          params[i].hi - best_x[i] < 1e-6 * span) {
        result.bound_hits.push_back(params[i].name);
      }
    }

    // Standard errors from the inverse observed information (numerical
    // Hessian of the negative log-likelihood).
    const std::size_t n = params.size();
    std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = std::max(1e-5 * std::fabs(best_x[i]), 1e-7);
    }
    const double f0 = result.fit.objective_value;
    bool hessian_ok = true;
    for (std::size_t i = 0; i < n && hessian_ok; ++i) {
      for (std::size_t j = i; j < n && hessian_ok; ++j) {
        auto shifted = [&](double di, double dj) {
          std::vector<double> x = best_x;
          x[i] += di;
          x[j] += dj;
          const double v = objective(x);
          if (!std::isfinite(v)) hessian_ok = false;
          return v;
        };
        if (i == j) {
          hess[i][i] = (shifted(h[i], 0.0) - 2.0 * f0 + shifted(-h[i], 0.0)) /
                       (h[i] * h[i]);
        } else {
          hess[i][j] = hess[j][i] =
              (shifted(h[i], h[j]) - shifted(h[i], -h[j]) -
               shifted(-h[i], h[j]) + shifted(-h[i], -h[j])) /
              (4.0 * h[i] * h[j]);
        }
      }
    }
    if (hessian_ok && invert(hess)) {
      for (std::size_t i = 0; i < n; ++i) {
        result.fit.standard_errors[params[i].name] =
            hess[i][i] > 0.0 ? std::sqrt(hess[i][i]) : 0.0;
      }
    } else {
      for (const auto& p : params) result.fit.standard_errors[p.name] = 0.0;
    }
  }

  result.device = params.empty() ? init : apply(best_x);
  const std::vector<double> probs = bin_probabilities(
      result.device, hist.bin_edges, options.n_max, options.truncation);
  result.expected.resize(probs.size());
  result.residuals.resize(probs.size());
  std::vector<double> observed(probs.size());
  for (std::size_t b = 0; b < probs.size(); ++b) {
    result.expected[b] = static_cast<double>(n_total) * probs[b];
    observed[b] = static_cast<double>(hist.counts[b]);
    result.residuals[b] =
        result.expected[b] > 0.0
            ? (observed[b] - result.expected[b]) / std::sqrt(result.expected[b])
            : 0.0;
  }
  result.gof = chi_squared_gof(observed, result.expected, params.size());
  return result;
}

}  // namespace apdgain
