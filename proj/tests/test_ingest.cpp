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

#include <cmath>
#include <sstream>

#include "doctest.h"

#include "apdgain/errors.hpp"
#include "apdgain/spectrum.hpp"

using namespace apdgain;

namespace {

Readout unit_readout() {
  Readout r;
  r.voltage_gain = 1.0;
  r.c_f = 0.07e-12;
  return r;
}

}  // namespace

TEST_CASE("parse_trace reads a plain two-column csv") {
  std::istringstream in(
      "time,voltage\n"
      "0.005,0.0\n"
      "0.010,1.5e-6\n"
      "0.015,2.5e-6\n");
  const Trace t = parse_trace(in);
  REQUIRE(t.records.size() == 3);
  CHECK(t.warnings.empty());
  CHECK(t.records[0].timestamp == doctest::Approx(0.005));
  CHECK(t.records[2].voltage == doctest::Approx(2.5e-6));
}

TEST_CASE("parse_trace tolerates sparse corruption with warnings") {
  std::ostringstream src;
  src << "t,v\n";
  for (int i = 0; i < 2000; ++i) {
    src << (0.005 * (i + 1)) << "," << (1e-6 * i) << "\n";
    if (i == 700) src << "###corrupted###\n";
  }
  std::istringstream in(src.str());
  const Trace t = parse_trace(in);
  CHECK(t.records.size() == 2000);
  REQUIRE(t.warnings.size() == 1);
  CHECK(t.warnings[0].find("malformed") != std::string::npos);
}

TEST_CASE("parse_trace rejects heavy corruption") {
  std::ostringstream src;
  for (int i = 0; i < 100; ++i) {
    src << (0.005 * (i + 1)) << ",0.0\n";
    if (i % 50 == 0) src << "garbage line\n";
  }
  std::istringstream in(src.str());
  CHECK_THROWS_WITH_AS((void)parse_trace(in), doctest::Contains("0.1%"),
                       RuntimeError);
}

TEST_CASE("parse_trace rejects non-monotonic timestamps") {
  std::istringstream in("0.1,0\n0.2,0\n0.15,0\n");
  CHECK_THROWS_AS((void)parse_trace(in), RuntimeError);
}

TEST_CASE("parse_trace flags empty input") {
  std::istringstream in("");
  const Trace t = parse_trace(in);
  CHECK(t.records.empty());
  REQUIRE(t.warnings.size() == 1);
  CHECK(t.warnings[0] == "empty input");
}

TEST_CASE("parse_trace_file reports missing files") {
  CHECK_THROWS_AS((void)parse_trace_file("/nonexistent/trace.csv"),
                  ValidationError);
}

TEST_CASE("pulse timing validation") {
  PulseTiming t;
  CHECK_NOTHROW(t.validate());
  t.sampling_rate = 300.0;  // not an integer multiple of 200 Hz
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = PulseTiming{};
  t.pulse_width = 1.0;  // longer than the 5 ms period
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = PulseTiming{};
  t.repetition_rate = 0.0;
  CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("exact staircase steps read back as exactly one electron") {
  const Readout readout = unit_readout();
  const double vpe = readout.volts_per_electron();
  PulseTiming timing;  // 200 Hz pulses, 200 Hz sampling: one sample each

  // hand-built ideal staircase: one unit charge per period, no drift
  Trace trace;
  for (int p = 1; p <= 50; ++p) {
    trace.records.push_back({p * 0.005, double(p) * vpe});
  }
  const auto r = extract_pulse_heights(trace, timing, readout);
  REQUIRE(r.electrons.size() == 49);
  for (const double e : r.electrons) {
    CHECK(std::abs(e - 1.0) < 1e-6);
  }
  CHECK(r.resets == 0);
  CHECK(r.drift_volts_per_second == 0.0);
}

TEST_CASE("round trip without drift is exact to 1e-6") {
  const Readout readout = unit_readout();
  PulseTiming timing;
  timing.sampling_rate = 2000.0;  // ten samples per period
  const std::vector<double> electrons = {1.0,  0.0, 2.5, 0.7, 3.1, 0.0,
                                         1.25, 4.0, 0.2, 1.8, 0.9, 2.2};
  const Trace trace = render_staircase(electrons, timing, readout);
  const auto r = extract_pulse_heights(trace, timing, readout);
  // the first pulse has no preceding baseline period and is lost
  REQUIRE(r.electrons.size() == electrons.size() - 1);
  for (std::size_t i = 0; i < r.electrons.size(); ++i) {
    CHECK(std::abs(r.electrons[i] - electrons[i + 1]) < 1e-6);
  }
}

TEST_CASE("linear drift is removed to 1 percent") {
  const Readout readout = unit_readout();
  const double vpe = readout.volts_per_electron();
  PulseTiming timing;
  timing.sampling_rate = 2000.0;

  StaircaseOptions staircase;
  // ~10 electrons/second of drift: dominates the per-period signal
  staircase.drift_volts_per_second = 10.0 * vpe;

  std::vector<double> electrons;
  for (int i = 0; i < 200; ++i) {
    electrons.push_back(1.0 + 0.5 * ((i * 7) % 5));
  }
  const Trace trace = render_staircase(electrons, timing, readout, staircase);
  const auto r = extract_pulse_heights(trace, timing, readout);
  REQUIRE(r.electrons.size() == electrons.size() - 1);
  for (std::size_t i = 0; i < r.electrons.size(); ++i) {
    CHECK(std::abs(r.electrons[i] - electrons[i + 1]) /
              std::abs(electrons[i + 1]) <
          0.01);
  }
  // the drift estimate itself is reported
  CHECK(r.drift_volts_per_second ==
        doctest::Approx(staircase.drift_volts_per_second).epsilon(1e-6));
}

TEST_CASE("one sample per period leaves drift undetectable but steps intact") {
  const Readout readout = unit_readout();
  PulseTiming timing;  // 200/200: consecutive-difference mode
  const std::vector<double> electrons = {2.0, 1.0, 3.0, 1.5, 2.5};
  const Trace trace = render_staircase(electrons, timing, readout);
  const auto r = extract_pulse_heights(trace, timing, readout);
  REQUIRE(r.electrons.size() == 4);
  for (std::size_t i = 0; i < r.electrons.size(); ++i) {
    CHECK(r.electrons[i] == doctest::Approx(electrons[i + 1]).epsilon(1e-9));
  }
  CHECK(r.drift_volts_per_second == 0.0);
}

TEST_CASE("integrator resets are excluded and counted") {
  const Readout readout = unit_readout();
  const double vpe = readout.volts_per_electron();
  PulseTiming timing;

  StaircaseOptions staircase;
  staircase.reset_voltage = 50.0 * vpe;  // discharge after ~25 pulses of 2 e-

  std::vector<double> electrons(100, 2.0);
  const Trace trace = render_staircase(electrons, timing, readout, staircase);
  const auto r = extract_pulse_heights(trace, timing, readout);

  CHECK(r.resets >= 2);
  CHECK(r.electrons.size() + r.resets == electrons.size() - 1);
  for (const double e : r.electrons) {
    CHECK(e == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("short traces are rejected") {
  const Readout readout = unit_readout();
  PulseTiming timing;
  Trace tiny;
  tiny.records = {{0.005, 0.0}, {0.010, 1e-6}};
  CHECK_THROWS_AS((void)extract_pulse_heights(tiny, timing, readout),
                  RuntimeError);

  PulseTiming fast;
  fast.sampling_rate = 2000.0;
  Trace one_period;
  for (int i = 0; i < 12; ++i) {
    one_period.records.push_back({(i + 1) * 5e-4, 0.0});
  }
  CHECK_THROWS_AS((void)extract_pulse_heights(one_period, fast, readout),
                  RuntimeError);
}

TEST_CASE("staircase sample noise is reproducible") {
  const Readout readout = unit_readout();
  PulseTiming timing;
  StaircaseOptions opts;
  opts.noise_volts = 1e-7;
  opts.seed = 13;
  const std::vector<double> electrons = {1.0, 2.0, 3.0};
  const Trace a = render_staircase(electrons, timing, readout, opts);
  const Trace b = render_staircase(electrons, timing, readout, opts);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].voltage == b.records[i].voltage);
  }
}
