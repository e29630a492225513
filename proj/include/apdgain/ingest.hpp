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
#include <iosfwd>
#include <string>
#include <vector>

#include "apdgain/spectrum.hpp"

namespace apdgain {

struct TraceRecord {
  double timestamp = 0.0;  // seconds
  double voltage = 0.0;    // volts
};

struct Trace {
  std::vector<TraceRecord> records;
  std::vector<std::string> warnings;  // one per tolerated malformed line
};

/// Parses a two-column (time, voltage) CSV with an optional header line.
/// Malformed lines are collected as warnings with their line numbers;
/// more than 0.1% bad lines raises parse-error, timestamps out of order
/// raise non-monotonic-time.
Trace parse_trace(std::istream& in);
Trace parse_trace_file(const std::string& path);

struct PulseTiming {
  double repetition_rate = 200.0;  // Hz
  double pulse_width = 0.5e-3;     // seconds, < 1 / repetition_rate
  double sampling_rate = 200.0;    // Hz, integer multiple of repetition

  void validate() const;
};

struct ExtractionOptions {
  std::size_t drift_window = 50;  // samples around each step
  double reset_factor = 20.0;     // reset = negative step > this * 1e- step
};

struct ExtractionResult {
  std::vector<double> electrons;      // per kept pulse period
  std::uint64_t resets = 0;           // excluded discharge steps
  double drift_volts_per_second = 0;  // median drift estimate (0 when the
                                      // trace has one sample per period)
};

/// Recovers per-pulse charge steps from an integrated staircase trace.
/// Samples are averaged within each pulse period; consecutive period
/// levels are differenced, a local linear drift estimate (from sample
/// pairs inside one period, which contain no step) is subtracted, and the
/// result is converted to electrons. Large negative steps are discharge
/// resets and are excluded.
ExtractionResult extract_pulse_heights(const Trace& trace,
                                       const PulseTiming& timing,
                                       const Readout& readout,
                                       const ExtractionOptions& options = {});

struct StaircaseOptions {
  double drift_volts_per_second = 0.0;
  double reset_voltage = 1e9;  // discharge the integrator above this level
  double noise_volts = 0.0;    // white sample noise
  std::uint64_t seed = 0;      // for sample noise only
};

/// Renders per-pulse electron counts to an ideal integrator staircase
/// sampled at timing.sampling_rate: pulse p deposits its charge during
/// period p and every later sample includes it, plus optional linear drift
/// and sample noise. The inverse of extract_pulse_heights for tests and
/// synthetic data.
Trace render_staircase(const std::vector<double>& electrons,
                       const PulseTiming& timing, const Readout& readout,
                       const StaircaseOptions& options = {});

}  // namespace apdgain
