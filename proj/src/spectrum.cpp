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
#include "apdgain/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "apdgain/constants.hpp"
#include "apdgain/errors.hpp"
#include "apdgain/rng.hpp"

namespace apdgain {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// Poisson point masses covering all but < 1e-12 of the dark-count law;
// used for the unmultiplied-dark offsets of the mixture.
std::vector<double> dark_offsets(double rate) {
  std::vector<double> weights;
  double cumulative = 0.0;
  for (std::uint64_t d = 0; d <= 200; ++d) {
    weights.push_back(poisson_weight(rate, d));
    cumulative += weights.back();
    if (1.0 - cumulative < 1e-12) break;
  }
  return weights;
}

// The discrete part of the observed-electron mixture: point masses at
// integer electron counts with their weights, from multiplied primaries
// (n = 0..n_max gain convolutions) and optional unmultiplied dark counts.
struct DiscreteMixture {
  std::uint64_t support_start = 0;
  std::vector<double> mass;
  std::map<std::uint64_t, double> component_weights;
  double omitted = 0.0;  // Poisson tail beyond n_max plus truncation losses

  double at(std::uint64_t i) const {
    return (i >= support_start && i < support_start + mass.size())
               ? mass[i - support_start]
               : 0.0;
  }
  std::uint64_t support_max() const {
    return mass.empty() ? 0 : support_start + mass.size() - 1;
  }
};

DiscreteMixture build_mixture(const DeviceModel& device, std::size_t n_max,
                              const TruncationPolicy& policy) {
  device.validate();
  const double n_mult =
      device.n_bar + (device.dark_multiplied ? device.dark_rate : 0.0);

  DiscreteMixture mix;
  mix.support_start = 0;
  mix.mass.assign(1, 0.0);

  const GainDistribution single =
      make_gain_distribution(device.k, device.mean_gain, policy);
  double weight_sum = 0.0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double w = poisson_weight(n_mult, n);
    mix.component_weights[n] = w;
    weight_sum += w;
    const GainDistribution conv = convolve_n(single, n);
    const std::uint64_t needed = conv.support_max() + 1;
    if (mix.mass.size() < needed) mix.mass.resize(needed, 0.0);
    for (std::size_t i = 0; i < conv.pmf.size(); ++i) {
      mix.mass[conv.support_start + i] += w * conv.pmf[i];
    }
  }

  if (!device.dark_multiplied && device.dark_rate > 0.0) {
    const std::vector<double> dark = dark_offsets(device.dark_rate);
    std::vector<double> shifted(mix.mass.size() + dark.size() - 1, 0.0);
    for (std::size_t d = 0; d < dark.size(); ++d) {
      if (dark[d] == 0.0) continue;
      for (std::size_t i = 0; i < mix.mass.size(); ++i) {
        shifted[i + d] += dark[d] * mix.mass[i];
      }
    }
    mix.mass = std::move(shifted);
  }

  double total = 0.0;
  for (double v : mix.mass) total += v;
  mix.omitted = std::max(0.0, 1.0 - total);
  (void)weight_sum;
  return mix;
}

}  // namespace

double Readout::volts_per_electron() const {
  return voltage_gain * kElementaryCharge / c_f;
}

double DeviceModel::sigma_total() const {
  return std::sqrt(sigma_read * sigma_read + sigma_post * sigma_post);
}

void DeviceModel::validate() const {
  if (!(n_bar >= 0.0) || !std::isfinite(n_bar)) {
    throw ValidationError("invalid-parameter", "n_bar must be >= 0");
  }
  if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) {
    throw ValidationError("invalid-parameter", "dark_rate must be >= 0");
  }
  if (!(k > 0.0) || !(k < 1.0)) {
    throw ValidationError("invalid-parameter",
                          "ionization ratio k must lie strictly in (0, 1)");
  }
  if (!(mean_gain >= 1.0) || !std::isfinite(mean_gain)) {
    throw ValidationError("invalid-parameter", "mean gain must be >= 1");
  }
  if (!(sigma_read >= 0.0) || !(sigma_post >= 0.0)) {
    throw ValidationError("invalid-parameter", "noise sigmas must be >= 0");
  }
  if (!(readout.c_f > 0.0)) {
    throw ValidationError("invalid-parameter",
                          "feedback capacitance must be > 0");
  }
  if (!(readout.voltage_gain > 0.0)) {
    throw ValidationError("invalid-parameter", "voltage gain must be > 0");
  }
}

double v_out(double m, const Readout& readout) {
  if (!(readout.c_f > 0.0)) {
    throw ValidationError("invalid-parameter",
                          "feedback capacitance must be > 0");
  }
  return m * readout.volts_per_electron();
}

std::vector<PulseRecord> synthesize_pulses(const DeviceModel& device,
                                           std::uint64_t n_pulses,
                                           std::uint64_t seed,
                                           unsigned n_threads) {
  device.validate();
  const GainDistribution gain_dist =
      make_gain_distribution(device.k, device.mean_gain, {});
  std::vector<double> cdf(gain_dist.pmf.size());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < gain_dist.pmf.size(); ++i) {
    cumulative += gain_dist.pmf[i];
    cdf[i] = cumulative;
  }

  const double sigma = device.sigma_total();
  const double vpe = device.readout.volts_per_electron();

  std::vector<PulseRecord> pulses(n_pulses);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      CounterRng rng(seed, i);
      // Fixed draw order per pulse: signal count, dark count, one gain per
      // multiplied primary, then the noise deviate.
      const std::uint64_t n_signal = rng.poisson(device.n_bar);
      const std::uint64_t n_dark = rng.poisson(device.dark_rate);
      const std::uint64_t multiplied =
          n_signal + (device.dark_multiplied ? n_dark : 0);
      const std::uint64_t unmultiplied = device.dark_multiplied ? 0 : n_dark;
      std::uint64_t carriers = unmultiplied;
      for (std::uint64_t j = 0; j < multiplied; ++j) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::size_t idx =
            (it == cdf.end()) ? cdf.size() - 1
                              : static_cast<std::size_t>(it - cdf.begin());
        carriers += gain_dist.support_start + idx;
      }
      const double noise = sigma * rng.normal();
      PulseRecord& rec = pulses[i];
      rec.pulse_index = i;
      rec.primaries = n_signal + n_dark;
      rec.carriers_out = carriers;
      rec.electrons_observed = static_cast<double>(carriers) + noise;
      rec.v_out = vpe * rec.electrons_observed;
    }
  };

  unsigned workers = n_threads != 0 ? n_threads
                                    : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (n_pulses < 1024 || workers == 1) {
    run_range(0, n_pulses);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (n_pulses + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = static_cast<std::uint64_t>(w) * chunk;
      const std::uint64_t end = std::min<std::uint64_t>(n_pulses, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return pulses;
}

std::uint64_t Histogram::total() const {
  std::uint64_t n = underflow + overflow;
  for (std::uint64_t c : counts) n += c;
  return n;
}

std::vector<double> uniform_edges(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) {
    throw ValidationError("invalid-parameter", "bad histogram range");
  }
  std::vector<double> edges;
  const std::size_t bins =
      static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
  edges.reserve(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges.push_back(lo + static_cast<double>(i) * width);
  }
  return edges;
}

Histogram histogram(const std::vector<double>& values,
                    const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2 ||
      !std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) !=
          bin_edges.end()) {
    throw ValidationError("invalid-parameter",
                          "bin edges must be strictly increasing");
  }
  Histogram h;
  h.bin_edges = bin_edges;
  h.counts.assign(bin_edges.size() - 1, 0);
  for (double v : values) {
    if (v < bin_edges.front()) {
      ++h.underflow;
    } else if (v >= bin_edges.back()) {
      ++h.overflow;
    } else {
      const auto it =
          std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
      ++h.counts[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
    }
  }
  return h;
}

SpectrumDensity theoretical_spectrum(const DeviceModel& device,
                                     const std::vector<double>& grid,
                                     std::size_t n_max,
                                     const TruncationPolicy& policy) {
  if (n_max < 1) {
    throw ValidationError("invalid-parameter", "n_max must be >= 1");
  }
  if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end())) {
    throw ValidationError("invalid-parameter",
                          "grid must be increasing with >= 2 points");
  }
  const double sigma = device.sigma_total();
  double max_spacing = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    max_spacing = std::max(max_spacing, grid[i] - grid[i - 1]);
  }
  if (!(sigma > 0.0) || max_spacing > sigma / 4.0) {
    throw RuntimeError("grid-too-coarse",
                       "grid spacing must be at most sigma / 4");
  }

  const DiscreteMixture mix = build_mixture(device, n_max, policy);
  SpectrumDensity out;
  out.grid = grid;
  out.component_weights = mix.component_weights;
  out.density.resize(grid.size());

  const double window = 10.0 * sigma;
  const double norm = kInvSqrt2Pi / sigma;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    const double lo = x - window;
    const double hi = x + window;
    std::uint64_t m_lo = mix.support_start;
    if (lo > static_cast<double>(m_lo)) {
      m_lo = static_cast<std::uint64_t>(std::ceil(lo));
    }
    const std::uint64_t m_hi =
        std::min<std::uint64_t>(mix.support_max(),
                                hi < 0.0 ? 0
                                         : static_cast<std::uint64_t>(
                                               std::floor(std::max(hi, 0.0))));
    double acc = 0.0;
    for (std::uint64_t m = m_lo; m <= m_hi && m >= m_lo; ++m) {
      const double mass = mix.at(m);
      if (mass == 0.0) continue;
      const double t = (x - static_cast<double>(m)) / sigma;
      acc += mass * std::exp(-0.5 * t * t);
    }
    out.density[g] = acc * norm;
  }
  return out;
}

std::vector<double> bin_probabilities(const DeviceModel& device,
                                      const std::vector<double>& bin_edges,
                                      std::size_t n_max,
                                      const TruncationPolicy& policy) {
  if (bin_edges.size() < 2 ||
      !std::is_sorted(bin_edges.begin(), bin_edges.end())) {
    throw ValidationError("invalid-parameter",
                          "bin edges must be increasing");
  }
  const double sigma = device.sigma_total();
  if (!(sigma > 0.0)) {
    throw ValidationError("invalid-parameter",
                          "bin probabilities need sigma > 0");
  }
  const DiscreteMixture mix = build_mixture(device, n_max, policy);
  const double window = 10.0 * sigma;

  std::vector<double> probs(bin_edges.size() - 1, 0.0);
  for (std::size_t b = 0; b < probs.size(); ++b) {
    const double lo = bin_edges[b];
    const double hi = bin_edges[b + 1];
    const double m_from = lo - window;
    const double m_to = hi + window;
    std::uint64_t m_lo = mix.support_start;
    if (m_from > static_cast<double>(m_lo)) {
      m_lo = static_cast<std::uint64_t>(std::ceil(m_from));
    }
    const std::uint64_t m_hi = std::min<std::uint64_t>(
        mix.support_max(),
        m_to < 0.0
            ? 0
            : static_cast<std::uint64_t>(std::floor(std::max(m_to, 0.0))));
    double acc = 0.0;
    for (std::uint64_t m = m_lo; m <= m_hi && m >= m_lo; ++m) {
      const double mass = mix.at(m);
      if (mass == 0.0) continue;
      const double md = static_cast<double>(m);
      acc += mass *
             (normal_cdf((hi - md) / sigma) - normal_cdf((lo - md) / sigma));
    }
    probs[b] = acc;
  }
  return probs;
}

}  // namespace apdgain
