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

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "apdgain/constants.hpp"
#include "apdgain/errors.hpp"

namespace apdgain {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_cell(std::string_view field, double* out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin &&
         (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) {
    --end;
  }
  const auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end && begin != end;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() &&
      cells.back().back() == '\r') {
    cells.back().pop_back();
  }
  return cells;
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void to_json(nlohmann::json& j, const GainDistribution& d) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < d.pmf.size(); ++i) {
    pairs.push_back({d.support_start + i, d.pmf[i]});
  }
  j = nlohmann::json{{"kind", d.kind},
                     {"k", d.k},
                     {"M", d.mean_gain},
                     {"pmf", std::move(pairs)},
                     {"truncation_mass", d.truncation_mass}};
}

void from_json(const nlohmann::json& j, GainDistribution& d) {
  d.kind = j.value("kind", "analytic");
  d.k = j.value("k", 0.0);
  d.mean_gain = j.value("M", 0.0);
  d.truncation_mass = j.value("truncation_mass", 0.0);
  d.pmf.clear();
  d.support_start = 1;
  const auto& pairs = j.at("pmf");
  bool first = true;
  for (const auto& pair : pairs) {
    const std::uint64_t m = pair.at(0).get<std::uint64_t>();
    const double p = pair.at(1).get<double>();
    if (first) {
      d.support_start = m;
      first = false;
    }
    const std::uint64_t index = m - d.support_start;
    if (index >= d.pmf.size()) d.pmf.resize(index + 1, 0.0);
    d.pmf[index] = p;
  }
}

void to_json(nlohmann::json& j, const Readout& r) {
  j = nlohmann::json{{"voltage_gain", r.voltage_gain}, {"c_f", r.c_f}};
}

void from_json(const nlohmann::json& j, Readout& r) {
  const Readout defaults;
  r.voltage_gain = j.value("voltage_gain", defaults.voltage_gain);
  r.c_f = j.value("c_f", defaults.c_f);
}

void to_json(nlohmann::json& j, const DeviceModel& d) {
  j = nlohmann::json{{"n_bar", d.n_bar},
                     {"dark_rate", d.dark_rate},
                     {"k", d.k},
                     {"M", d.mean_gain},
                     {"sigma_read", d.sigma_read},
                     {"sigma_post", d.sigma_post},
                     {"dark_multiplied", d.dark_multiplied},
                     {"voltage_gain", d.readout.voltage_gain},
                     {"c_f", d.readout.c_f}};
}

void from_json(const nlohmann::json& j, DeviceModel& d) {
  const DeviceModel defaults;
  d.n_bar = j.value("n_bar", defaults.n_bar);
  d.dark_rate = j.value("dark_rate", defaults.dark_rate);
  d.k = j.value("k", defaults.k);
  d.mean_gain = j.value("M", defaults.mean_gain);
  d.sigma_read = j.value("sigma_read", defaults.sigma_read);
  d.sigma_post = j.value("sigma_post", defaults.sigma_post);
  d.dark_multiplied = j.value("dark_multiplied", defaults.dark_multiplied);
  d.readout.voltage_gain =
      j.value("voltage_gain", defaults.readout.voltage_gain);
  d.readout.c_f = j.value("c_f", defaults.readout.c_f);
}

void to_json(nlohmann::json& j, const Histogram& h) {
  j = nlohmann::json{{"units", "electrons"},
                     {"bin_edges", h.bin_edges},
                     {"counts", h.counts},
                     {"underflow", h.underflow},
                     {"overflow", h.overflow}};
}

void from_json(const nlohmann::json& j, Histogram& h) {
  h.bin_edges = j.at("bin_edges").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  h.underflow = j.value("underflow", 0ULL);
  h.overflow = j.value("overflow", 0ULL);
}

void to_json(nlohmann::json& j, const SpectrumDensity& s) {
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [n, w] : s.component_weights) {
    weights[std::to_string(n)] = w;
  }
  j = nlohmann::json{{"units", "electrons"},
                     {"grid", s.grid},
                     {"density", s.density},
                     {"component_weights", std::move(weights)}};
}

void to_json(nlohmann::json& j, const FitResult& r) {
  j = nlohmann::json{{"parameters", r.parameters},
                     {"standard_errors", r.standard_errors},
                     {"objective_value", r.objective_value},
                     {"converged", r.converged},
                     {"iterations", r.iterations}};
}

void to_json(nlohmann::json& j, const PulseTiming& t) {
  j = nlohmann::json{{"repetition_rate", t.repetition_rate},
                     {"pulse_width", t.pulse_width},
                     {"sampling_rate", t.sampling_rate}};
}

void from_json(const nlohmann::json& j, PulseTiming& t) {
  const PulseTiming defaults;
  t.repetition_rate = j.value("repetition_rate", defaults.repetition_rate);
  t.pulse_width = j.value("pulse_width", defaults.pulse_width);
  t.sampling_rate = j.value("sampling_rate", defaults.sampling_rate);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("parse-error", "cannot open csv file: " + path);
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!parse_cell(cells[i], &row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first_content) {
        for (const auto& c : cells) table.header.push_back(trim(c));
        first_content = false;
        continue;
      }
      throw RuntimeError("parse-error", "malformed csv line " +
                                            std::to_string(line_no) + " in " +
                                            path);
    }
    first_content = false;
    if (!table.rows.empty() && table.rows.front().size() != row.size()) {
      throw RuntimeError("parse-error",
                         "inconsistent column count at line " +
                             std::to_string(line_no) + " in " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_pulses_csv(const std::string& path,
                      const std::vector<PulseRecord>& pulses) {
  std::ostringstream out;
  out << "pulse_index,primaries,carriers_out,electrons_observed,v_out\n";
  for (const auto& p : pulses) {
    out << p.pulse_index << ',' << p.primaries << ',' << p.carriers_out << ','
        << format_double(p.electrons_observed) << ','
        << format_double(p.v_out) << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<PulseRecord> read_pulses_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int idx = table.column("pulse_index");
  const int prim = table.column("primaries");
  const int carriers = table.column("carriers_out");
  const int electrons = table.column("electrons_observed");
  const int volts = table.column("v_out");
  if (electrons < 0) {
    throw ValidationError("parse-error",
                          "pulse csv lacks an electrons_observed column: " +
                              path);
  }
  std::vector<PulseRecord> pulses;
  pulses.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    PulseRecord rec;
    rec.pulse_index =
        idx >= 0 ? static_cast<std::uint64_t>(row[idx]) : r;
    rec.primaries =
        prim >= 0 ? static_cast<std::uint64_t>(row[prim]) : 0;
    rec.carriers_out =
        carriers >= 0 ? static_cast<std::uint64_t>(row[carriers]) : 0;
    rec.electrons_observed = row[electrons];
    rec.v_out = volts >= 0 ? row[volts] : 0.0;
    pulses.push_back(rec);
  }
  return pulses;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("parse-error", "cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw RuntimeError("io-error", "cannot open for writing: " + path);
  }
  out << content;
  out.flush();
  if (!out) {
    throw RuntimeError("io-error", "write failed: " + path);
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_manifest(const std::string& artifact_path,
                    const std::string& subcommand,
                    const nlohmann::json& config,
                    const std::vector<std::string>& outputs) {
  const nlohmann::json manifest = {{"tool", "apdgain"},
                                   {"version", std::string(kVersion)},
                                   {"subcommand", subcommand},
                                   {"parameters", config},
                                   {"outputs", outputs}};
  write_text_file(artifact_path + ".manifest.json", dump_json(manifest));
}

}  // namespace apdgain
