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

#include <string>
#include <vector>

#include "json.hpp"

#include "apdgain/gain_stats.hpp"
#include "apdgain/inference.hpp"
#include "apdgain/ingest.hpp"
#include "apdgain/spectrum.hpp"

namespace apdgain {

// nlohmann-adl serializers; distributions use the shared shape
// {"kind", "k", "M", "pmf": [[m, p], ...], "truncation_mass"}.
void to_json(nlohmann::json& j, const GainDistribution& d);
void from_json(const nlohmann::json& j, GainDistribution& d);
void to_json(nlohmann::json& j, const Readout& r);
void from_json(const nlohmann::json& j, Readout& r);
void to_json(nlohmann::json& j, const DeviceModel& d);
void from_json(const nlohmann::json& j, DeviceModel& d);
void to_json(nlohmann::json& j, const Histogram& h);
void from_json(const nlohmann::json& j, Histogram& h);
void to_json(nlohmann::json& j, const SpectrumDensity& s);
void to_json(nlohmann::json& j, const FitResult& r);
void to_json(nlohmann::json& j, const PulseTiming& t);
void from_json(const nlohmann::json& j, PulseTiming& t);

/// Numeric CSV table. Cells parse as double; the header row is optional on
/// input and detected by non-numeric first line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column, or -1.
  int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_pulses_csv(const std::string& path,
                      const std::vector<PulseRecord>& pulses);
std::vector<PulseRecord> read_pulses_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Serializes with 2-space indent and a trailing newline; key order is
/// lexicographic, so equal values give byte-identical files.
std::string dump_json(const nlohmann::json& j);

/// Writes `<artifact_path>.manifest.json` describing a run: tool name and
/// version, subcommand, full parameter set, seed if any, output paths.
void write_manifest(const std::string& artifact_path,
                    const std::string& subcommand,
                    const nlohmann::json& config,
                    const std::vector<std::string>& outputs);

}  // namespace apdgain
