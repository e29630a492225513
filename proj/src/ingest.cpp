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
#include "apdgain/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "apdgain/errors.hpp"
#include "apdgain/rng.hpp"

namespace apdgain {

namespace {

bool parse_double(std::string_view field, double* out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' ||
                         end[-1] == '\r')) {
    --end;
  }
  const auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end && begin != end;
}

bool parse_record(const std::string& line, TraceRecord* rec) {
  const std::size_t comma = line.find(',');
  if (comma == std::string::npos) return false;
  if (line.find(',', comma + 1) != std::string::npos) return false;
  return parse_double(std::string_view(line).substr(0, comma),
                      &rec->timestamp) &&
         parse_double(std::string_view(line).substr(comma + 1),
                      &rec->voltage);
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  std::size_t parsed = 0, bad = 0;
  bool saw_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    TraceRecord rec;
    if (parse_record(line, &rec)) {
      trace.records.push_back(rec);
      ++parsed;
      saw_content = true;
      continue;
    }
    if (!saw_content) {
      // Tolerate one leading non-numeric line as the header.
      saw_content = true;
      continue;
    }
    ++bad;
    trace.warnings.push_back("line " + std::to_string(line_no) +
                             ": malformed record");
  }
  if (parsed == 0 && bad == 0) {
    trace.warnings.push_back("empty input");
    return trace;
  }
  if (static_cast<double>(bad) >
      0.001 * static_cast<double>(parsed + bad)) {
    throw RuntimeError("parse-error",
                       "more than 0.1% malformed lines (" +
                           std::to_string(bad) + " of " +
                           std::to_string(parsed + bad) + ")");
  }
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    if (!(trace.records[i].timestamp > trace.records[i - 1].timestamp)) {
      throw RuntimeError("non-monotonic-time",
                         "timestamps must increase strictly (record " +
                             std::to_string(i) + ")");
    }
  }
  return trace;
}

Trace parse_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("parse-error", "cannot open trace file: " + path);
  }
  return parse_trace(in);
}

void PulseTiming::validate() const {
  if (!(repetition_rate > 0.0) || !(pulse_width > 0.0) ||
      !(sampling_rate > 0.0)) {
    throw ValidationError("invalid-parameter",
                          "pulse timing fields must be positive");
  }
  if (!(pulse_width < 1.0 / repetition_rate)) {
    throw ValidationError("invalid-parameter",
                          "pulse width must fit inside one period");
  }
  const double ratio = sampling_rate / repetition_rate;
  if (ratio < 1.0 - 1e-9 ||
      std::fabs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    throw ValidationError("invalid-parameter",
                          "sampling rate must be an integer multiple of the "
                          "repetition rate");
  }
}

ExtractionResult extract_pulse_heights(const Trace& trace,
                                       const PulseTiming& timing,
                                       const Readout& readout,
                                       const ExtractionOptions& options) {
  timing.validate();
  if (trace.records.size() < 3) {
    throw RuntimeError("window-too-short",
                       "need at least 3 samples to extract steps");
  }
  const std::size_t per_period = static_cast<std::size_t>(
      std::llround(timing.sampling_rate / timing.repetition_rate));
  const std::size_t n_samples = trace.records.size();
  const std::size_t n_periods = n_samples / per_period;
  if (n_periods < 2) {
    throw RuntimeError("window-too-short",
                       "trace spans fewer than two pulse periods");
  }

  // Period levels: average the samples inside each complete period.
  std::vector<double> level(n_periods, 0.0);
  for (std::size_t p = 0; p < n_periods; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per_period; ++i) {
      acc += trace.records[p * per_period + i].voltage;
    }
    level[p] = acc / static_cast<double>(per_period);
  }

  // Drift is observable only between samples of the same period, where no
  // pulse lands; with one sample per period there is no such pair and the
  // drift estimate stays zero.
  std::vector<double> intra_diffs;       // volts per sample interval
  std::vector<std::size_t> diff_sample;  // sample index of each diff
  if (per_period >= 2) {
    for (std::size_t p = 0; p < n_periods; ++p) {
      for (std::size_t i = 1; i < per_period; ++i) {
        const std::size_t j = p * per_period + i;
        intra_diffs.push_back(trace.records[j].voltage -
                              trace.records[j - 1].voltage);
        diff_sample.push_back(j);
      }
    }
  }
  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double global_drift = median_of(intra_diffs);

  // Local drift at a period boundary: median over intra-period diffs whose
  // samples fall inside the window centered on the boundary.  The boundaries
  // visit the sorted diff list in order, so the window slides with two
  // cursors instead of rescanning the whole list per boundary.
  const std::size_t half_window = std::max<std::size_t>(options.drift_window / 2, 1);
  std::size_t win_lo = 0, win_hi = 0;
  std::vector<double> in_window;
  auto local_drift = [&](std::size_t boundary_sample) {
    if (intra_diffs.empty()) return 0.0;
    while (win_lo < diff_sample.size() &&
           diff_sample[win_lo] + half_window < boundary_sample) {
      ++win_lo;
    }
    if (win_hi < win_lo) win_hi = win_lo;
    while (win_hi < diff_sample.size() &&
           diff_sample[win_hi] <= boundary_sample + half_window) {
      ++win_hi;
    }
    if (win_lo >= win_hi) return global_drift;
    in_window.assign(intra_diffs.begin() + win_lo,
                     intra_diffs.begin() + win_hi);
    return median_of(in_window);
  };

  const double vpe = readout.volts_per_electron();
  const double reset_threshold = -options.reset_factor * vpe;
  ExtractionResult result;
  const double dt = 1.0 / timing.sampling_rate;
  result.drift_volts_per_second = global_drift / dt;
  for (std::size_t p = 1; p < n_periods; ++p) {
    const double drift_per_sample = local_drift(p * per_period);
    const double step =
        level[p] - level[p - 1] -
        drift_per_sample * static_cast<double>(per_period);
    if (step < reset_threshold) {
      ++result.resets;
      continue;
    }
    result.electrons.push_back(step / vpe);
  }
  return result;
}

Trace render_staircase(const std::vector<double>& electrons,
                       const PulseTiming& timing, const Readout& readout,
                       const StaircaseOptions& options) {
  timing.validate();
  const std::size_t per_period = static_cast<std::size_t>(
      std::llround(timing.sampling_rate / timing.repetition_rate));
  const double vpe = readout.volts_per_electron();
  const double dt = 1.0 / timing.sampling_rate;

  CounterRng rng(options.seed, 0);
  Trace trace;
  trace.records.reserve(electrons.size() * per_period);
  double level = 0.0;
  std::size_t sample = 0;
  for (double e : electrons) {
    // The discharger empties the integrator between periods; the pulse
    // charge then arrives before the period's first sample (the pulse
    // width is shorter than one sample interval).
    if (level > options.reset_voltage) level = 0.0;
    level += e * vpe;
    for (std::size_t i = 0; i < per_period; ++i) {
      const double t = static_cast<double>(++sample) * dt;
      double v = level + options.drift_volts_per_second * t;
      if (options.noise_volts > 0.0) v += options.noise_volts * rng.normal();
      trace.records.push_back({t, v});
    }
  }
  return trace;
}

}  // namespace apdgain
