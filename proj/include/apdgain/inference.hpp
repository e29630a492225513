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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "apdgain/numerics.hpp"
#include "apdgain/spectrum.hpp"

namespace apdgain {

/// One measured (mean gain, excess noise factor) point. weight is an
/// inverse-variance weight; 1 if the uncertainty is unknown.
struct EnfPoint {
  double m = 1.0;
  double f = 1.0;
  double weight = 1.0;
};

struct FitResult {
  std::map<std::string, double> parameters;
  std::map<std::string, double> standard_errors;
  double objective_value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Weighted least squares for the ionization ratio k from (M, F) points,
/// searched over k in (1e-3, 1 - 1e-6). The standard error comes from the
/// curvature of the objective at the optimum, sqrt(2 / S''); with unit
/// weights it is additionally scaled by the residual variance.
/// Raises degenerate-data for fewer than 2 points or all-equal gains.
FitResult fit_k(const std::vector<EnfPoint>& points);

struct GainCurvePoint {
  double bias_voltage = 0.0;          // volts
  double mean_output_carriers = 0.0;  // electrons per pulse
};

struct CalibrationOptions {
  double window_volts = 0.5;          // plateau half-width around unity_bias
  double max_slope_per_volt = 0.02;   // relative slope threshold
};

struct CalibratedPoint {
  double bias_voltage = 0.0;
  double gain = 0.0;
};

/// Normalizes a response curve to the plateau around unity_bias: gain(V) =
/// response(V) / mean(response over |V - unity_bias| <= window). Raises
/// no-plateau when the window's relative slope exceeds the threshold or
/// holds fewer than two points.
std::vector<CalibratedPoint> calibrate_gain(
    const std::vector<GainCurvePoint>& curve, double unity_bias,
    const CalibrationOptions& options = {});

struct ParameterBounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct SpectrumFitOptions {
  std::size_t n_max = 3;
  TruncationPolicy truncation;
  std::map<std::string, ParameterBounds> bounds;  // overrides defaults
  std::size_t restarts = 3;
  std::uint64_t restart_seed = 0x5eed;
  SimplexOptions simplex;
};

struct SpectrumFitResult {
  FitResult fit;
  DeviceModel device;              // input model with fitted values applied
  std::vector<double> expected;    // per-bin expected counts at the optimum
  std::vector<double> residuals;   // (observed - expected) / sqrt(expected)
  std::vector<std::string> bound_hits;
  GofResult gof;
};

/// Maximum-likelihood fit of the spectrum model to a histogram using the
/// binned Poisson likelihood. free names any subset of {"n_bar", "k", "M",
/// "sigma_read"}; remaining parameters stay at their init values. The
/// simplex search restarts from deterministic random points inside the
/// bounds; the best objective wins, ties broken by lowest restart index.
SpectrumFitResult fit_spectrum(const Histogram& hist, const DeviceModel& init,
                               const std::vector<std::string>& free,
                               const SpectrumFitOptions& options = {});

}  // namespace apdgain
