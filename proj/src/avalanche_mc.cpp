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
#include "apdgain/avalanche_mc.hpp"

#include <cmath>
#include <cstddef>
#include <thread>
#include <utility>
#include <vector>

#include "apdgain/errors.hpp"
#include "apdgain/rng.hpp"

namespace apdgain {

namespace {

void check_config(const AvalancheConfig& cfg) {
  if (!(cfg.k > 0.0) || !(cfg.k < 1.0)) {
    throw ValidationError("invalid-parameter",
                          "ionization ratio k must lie strictly in (0, 1)");
  }
  if (!(cfg.beta_l >= 0.0) || !std::isfinite(cfg.beta_l)) {
    throw ValidationError("invalid-parameter", "beta_l must be >= 0");
  }
  if (cfg.event_cap < 1) {
    throw ValidationError("invalid-parameter", "event_cap must be >= 1");
  }
}

struct WorkerTally {
  std::vector<std::uint64_t> counts;  // counts[i] = trials with m == i + 1
  std::uint64_t censored = 0;
  std::uint64_t sum_m = 0;
  unsigned __int128 sum_m2 = 0;
};

}  // namespace

double breakdown_beta_l(double k) {
  if (!(k > 0.0) || !(k < 1.0)) {
    throw ValidationError("invalid-parameter",
                          "ionization ratio k must lie strictly in (0, 1)");
  }
  return k * std::log(1.0 / k) / (1.0 - k);
}

double mean_gain_from_coefficients(double k, double beta_l) {
  const double limit = breakdown_beta_l(k);
  if (!(beta_l >= 0.0) || !std::isfinite(beta_l)) {
    throw ValidationError("invalid-parameter", "beta_l must be >= 0");
  }
  if (beta_l >= limit) {
    throw RuntimeError("divergence",
                       "beta_l is at or beyond avalanche breakdown");
  }
  return (1.0 - k) / (1.0 - k * std::exp(beta_l * (1.0 - k) / k));
}

double solve_beta_l(double k, double m_target) {
  if (!(m_target >= 1.0) || !std::isfinite(m_target)) {
    throw RuntimeError("no-solution",
                       "target mean gain must be finite and >= 1");
  }
  if (m_target == 1.0) return 0.0;
  double lo = 0.0;
  double hi = breakdown_beta_l(k) * (1.0 - 1e-12);
  if (mean_gain_from_coefficients(k, hi) < m_target) {
    throw RuntimeError("no-solution", "mean gain unreachable below breakdown");
  }
  double mid = 0.5 * hi;
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (lo + hi);
    const double err = mean_gain_from_coefficients(k, mid) - m_target;
    if (std::fabs(err) <= 1e-10 * m_target) return mid;
    if (err > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return mid;
}

TrialOutcome simulate_single_injection(const AvalancheConfig& cfg,
                                       std::uint64_t trial_index) {
  check_config(cfg);
  CounterRng rng(cfg.seed, trial_index);
  if (cfg.beta_l == 0.0) return {1, false};
  const double rate_fwd = cfg.beta_l;          // injected type, toward x = 1
  const double rate_bwd = cfg.beta_l / cfg.k;  // opposite type, toward x = 0

  std::uint64_t events = 0;
  // Explicit work stack; each ionization pushes the created pair and the
  // ionizing carrier keeps going, so the draw order is fixed by the LIFO
  // discipline and the outcome depends only on (seed, trial_index).
  std::vector<std::pair<double, bool>> pending;  // (position, injected type?)
  pending.emplace_back(0.0, true);
  while (!pending.empty()) {
    auto [x, forward] = pending.back();
    pending.pop_back();
    for (;;) {
      const double step = rng.exponential(forward ? rate_fwd : rate_bwd);
      x += forward ? step : -step;
      if (x >= 1.0 || x <= 0.0) break;
      if (++events >= cfg.event_cap) return {events + 1, true};
      pending.emplace_back(x, true);
      pending.emplace_back(x, false);
    }
  }
  return {events + 1, false};
}

SampleSummary sample_gain_histogram(const AvalancheConfig& cfg,
                                    std::uint64_t trials,
                                    unsigned n_threads) {
  check_config(cfg);
  if (trials < 1) {
    throw ValidationError("invalid-parameter", "trials must be >= 1");
  }
  unsigned workers = n_threads != 0 ? n_threads
                                    : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (static_cast<std::uint64_t>(workers) > trials) {
    workers = static_cast<unsigned>(trials);
  }

  std::vector<WorkerTally> tallies(workers);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end,
                       WorkerTally* tally) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const TrialOutcome outcome = simulate_single_injection(cfg, i);
      if (outcome.censored) {
        ++tally->censored;
        continue;
      }
      if (outcome.m > tally->counts.size()) tally->counts.resize(outcome.m);
      ++tally->counts[outcome.m - 1];
      tally->sum_m += outcome.m;
      tally->sum_m2 += static_cast<unsigned __int128>(outcome.m) * outcome.m;
    }
  };

  if (workers == 1) {
    run_range(0, trials, &tallies[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = static_cast<std::uint64_t>(w) * chunk;
      const std::uint64_t end = std::min(trials, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end, &tallies[w]);
    }
    for (auto& t : pool) t.join();
  }

  WorkerTally merged;
  for (const auto& t : tallies) {
    if (t.counts.size() > merged.counts.size()) {
      merged.counts.resize(t.counts.size());
    }
    for (std::size_t i = 0; i < t.counts.size(); ++i) {
      merged.counts[i] += t.counts[i];
    }
    merged.censored += t.censored;
    merged.sum_m += t.sum_m;
    merged.sum_m2 += t.sum_m2;
  }

  SampleSummary summary;
  summary.trials = trials;
  summary.censored = merged.censored;
  summary.dist.kind = "monte-carlo";
  summary.dist.k = cfg.k;
  summary.dist.support_start = 1;
  summary.dist.pmf.resize(merged.counts.size());
  const double denom = static_cast<double>(trials);
  for (std::size_t i = 0; i < merged.counts.size(); ++i) {
    summary.dist.pmf[i] = static_cast<double>(merged.counts[i]) / denom;
  }
  summary.dist.truncation_mass =
      static_cast<double>(merged.censored) / denom;

  const std::uint64_t kept = trials - merged.censored;
  if (kept > 0) {
    const double n = static_cast<double>(kept);
    const double sum_m = static_cast<double>(merged.sum_m);
    const double sum_m2 = static_cast<double>(merged.sum_m2);
    summary.sample_mean = sum_m / n;
    summary.sample_enf = n * sum_m2 / (sum_m * sum_m);
    summary.sample_variance =
        kept > 1 ? (sum_m2 - sum_m * sum_m / n) / (n - 1.0) : 0.0;
    summary.dist.mean_gain = summary.sample_mean;
  }
  return summary;
}

}  // namespace apdgain
