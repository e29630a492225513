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

#include "apdgain/gain_stats.hpp"

namespace apdgain {

/// Two-carrier branching avalanche in a unit-length region with constant
/// ionization coefficients. The injected carrier type ionizes at rate
/// beta_l per unit length; the opposite type at beta_l / k.
struct AvalancheConfig {
  double k = 0.0;
  double beta_l = 0.0;
  std::uint64_t event_cap = 10'000'000;
  std::uint64_t seed = 0;
};

struct TrialOutcome {
  std::uint64_t m = 0;
  bool censored = false;
};

/// Deterministic mean gain of the constant-coefficient single-injection
/// avalanche; raises divergence at or beyond breakdown.
double mean_gain_from_coefficients(double k, double beta_l);

/// beta_l at which the mean gain diverges for the given k.
double breakdown_beta_l(double k);

/// Inverts mean_gain_from_coefficients in beta_l by bisection to a relative
/// tolerance of 1e-10 on the gain. Raises no-solution if m_target is not
/// reachable below breakdown.
double solve_beta_l(double k, double m_target);

/// Simulates one avalanche: a single carrier injected at the region
/// entrance, exponentially distributed free paths, each ionization adding
/// one carrier pair; m = 1 + ionization events. Randomness is keyed by
/// (cfg.seed, trial_index) only, so any scheduling of trials reproduces
/// identical outcomes. Trials reaching cfg.event_cap return censored.
TrialOutcome simulate_single_injection(const AvalancheConfig& cfg,
                                       std::uint64_t trial_index);

struct SampleSummary {
  GainDistribution dist;  // kind = "monte-carlo"; censored mass truncated
  std::uint64_t trials = 0;
  std::uint64_t censored = 0;
  double sample_mean = 0.0;
  double sample_variance = 0.0;  // unbiased, over uncensored trials
  double sample_enf = 0.0;
};

/// Runs `trials` independent avalanches on n_threads workers (0 = hardware
/// default) and histograms the gains. Results are bit-identical for any
/// thread count because trial i always consumes stream i.
SampleSummary sample_gain_histogram(const AvalancheConfig& cfg,
                                    std::uint64_t trials,
                                    unsigned n_threads = 0);

}  // namespace apdgain
