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
#include "apdgain/io.hpp"

#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"

#include "apdgain/errors.hpp"
#include "apdgain/gain_stats.hpp"
#include "apdgain/spectrum.hpp"

using namespace apdgain;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("apdgain-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("gain distribution json round trip") {
  const auto dist = make_gain_distribution(0.9218, 3.7, {});
  json j = dist;
  CHECK(j.at("kind") == "analytic");
  CHECK(j.at("k") == 0.9218);
  CHECK(j.at("M") == 3.7);
  CHECK(j.at("pmf").is_array());
  CHECK(j.at("pmf")[0][0] == 1);  // [m, p] pairs

  const auto back = j.get<GainDistribution>();
  CHECK(back.k == dist.k);
  CHECK(back.mean_gain == dist.mean_gain);
  CHECK(back.support_start == dist.support_start);
  CHECK(back.truncation_mass == dist.truncation_mass);
  REQUIRE(back.pmf.size() == dist.pmf.size());
  for (std::size_t i = 0; i < dist.pmf.size(); ++i) {
    CHECK(back.pmf[i] == dist.pmf[i]);  // exact: shortest-round-trip doubles
  }
}

TEST_CASE("device model json round trip") {
  DeviceModel d;
  d.n_bar = 0.07;
  d.mean_gain = 13.2;
  d.dark_multiplied = false;
  d.readout.voltage_gain = 50.0;
  json j = d;
  const auto back = j.get<DeviceModel>();
  CHECK(back.n_bar == d.n_bar);
  CHECK(back.mean_gain == d.mean_gain);
  CHECK(back.dark_multiplied == d.dark_multiplied);
  CHECK(back.readout.voltage_gain == d.readout.voltage_gain);
  CHECK(back.readout.c_f == d.readout.c_f);
}

TEST_CASE("device model json tolerates missing keys") {
  const json j = {{"M", 5.0}};
  const auto d = j.get<DeviceModel>();
  CHECK(d.mean_gain == 5.0);
  CHECK(d.n_bar == 0.1);  // default preserved
}

TEST_CASE("histogram json round trip keeps counts and units") {
  Histogram h;
  h.bin_edges = {0.0, 1.0, 2.0};
  h.counts = {3, 4};
  h.underflow = 1;
  h.overflow = 2;
  json j = h;
  CHECK(j.at("units") == "electrons");
  const auto back = j.get<Histogram>();
  CHECK(back.bin_edges == h.bin_edges);
  CHECK(back.counts == h.counts);
  CHECK(back.underflow == 1);
  CHECK(back.overflow == 2);
}

TEST_CASE("dump_json is deterministic and key-sorted") {
  json a = {{"zebra", 1}, {"alpha", 2}};
  json b;
  b["alpha"] = 2;
  b["zebra"] = 1;
  CHECK(dump_json(a) == dump_json(b));
  CHECK(dump_json(a).find("alpha") < dump_json(a).find("zebra"));
}

TEST_CASE("csv round trip with headers") {
  TempDir tmp;
  const std::string path = tmp.file("table.csv");
  write_csv(path, {"M", "F"}, {{1.0, 1.0}, {3.7, 3.867145948291533}});
  const CsvTable table = read_csv(path);
  REQUIRE(table.header.size() == 2);
  CHECK(table.column("F") == 1);
  CHECK(table.column("missing") == -1);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[1][1] == 3.867145948291533);  // exact round trip
}

TEST_CASE("pulse csv round trip") {
  TempDir tmp;
  std::vector<PulseRecord> pulses;
  for (std::uint64_t i = 0; i < 10; ++i) {
    PulseRecord p;
    p.pulse_index = i;
    p.primaries = i % 3;
    p.carriers_out = (i % 3) * 2;
    p.electrons_observed = 0.37 * double(i) - 1.0;
    p.v_out = p.electrons_observed * 2.2888237628571429e-4;
    pulses.push_back(p);
  }
  const std::string path = tmp.file("pulses.csv");
  write_pulses_csv(path, pulses);
  const auto back = read_pulses_csv(path);
  REQUIRE(back.size() == pulses.size());
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    CHECK(back[i].pulse_index == pulses[i].pulse_index);
    CHECK(back[i].primaries == pulses[i].primaries);
    CHECK(back[i].carriers_out == pulses[i].carriers_out);
    CHECK(back[i].electrons_observed == pulses[i].electrons_observed);
    CHECK(back[i].v_out == pulses[i].v_out);
  }
}

TEST_CASE("manifest lands beside the artifact") {
  TempDir tmp;
  const std::string artifact = tmp.file("result.json");
  write_text_file(artifact, "{}");
  write_manifest(artifact, "pmf", json{{"k", 0.9218}, {"M", 3.7}},
                 {artifact});
  const std::string manifest_path = artifact + ".manifest.json";
  REQUIRE(std::filesystem::exists(manifest_path));
  const json m = json::parse(read_text_file(manifest_path));
  CHECK(m.at("tool") == "apdgain");
  CHECK(m.at("subcommand") == "pmf");
  CHECK(m.at("parameters").at("k") == 0.9218);
  CHECK(m.at("outputs").size() == 1);
  CHECK(m.contains("version"));
}

TEST_CASE("text file helpers") {
  TempDir tmp;
  const std::string path = tmp.file("note.txt");
  write_text_file(path, "alpha\nbeta\n");
  CHECK(read_text_file(path) == "alpha\nbeta\n");
  CHECK_THROWS_AS((void)read_text_file(tmp.file("missing.txt")), Error);
}

TEST_CASE("csv reader rejects malformed numeric cells") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  write_text_file(path, "a,b\n1.0,2.0\n1.0,fish\n");
  CHECK_THROWS_AS((void)read_csv(path), Error);
}
