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
#include "apdgain/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "apdgain/avalanche_mc.hpp"
#include "apdgain/constants.hpp"
#include "apdgain/errors.hpp"
#include "apdgain/gain_stats.hpp"
#include "apdgain/inference.hpp"
#include "apdgain/ingest.hpp"
#include "apdgain/io.hpp"
#include "apdgain/spectrum.hpp"

namespace apdgain {

namespace {

using nlohmann::json;

std::string resolve_out(const std::string& out_flag,
                        const std::string& default_name) {
  if (!out_flag.empty()) return out_flag;
  if (const char* dir = std::getenv("APDGAIN_OUT_DIR")) {
    return (std::filesystem::path(dir) / default_name).string();
  }
  return default_name;
}

// Effective configuration: flag defaults, overridden by the --config file,
// overridden by flags given explicitly on the command line.
class ConfigMerge {
 public:
  ConfigMerge(CLI::App* cmd, std::string* config_path)
      : cmd_(cmd), config_path_(config_path) {}

  void finalize() {
    if (!config_path_->empty()) {
      json file;
      try {
        file = json::parse(read_text_file(*config_path_));
      } catch (const json::exception& e) {
        throw ValidationError("invalid-config",
                              std::string("config file: ") + e.what());
      }
      if (!file.is_object()) {
        throw ValidationError("invalid-config",
                              "config file must hold a JSON object");
      }
      file_ = std::move(file);
    }
  }

  // Reads one parameter: CLI flag wins, then config key, then the value
  // already present in *target (the flag default). Records the result.
  template <typename T>
  void take(const std::string& flag, const std::string& key, T* target) {
    if (!cmd_->get_option(flag)->empty()) {
      // flag already wrote *target
    } else if (file_.contains(key)) {
      try {
        *target = file_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw ValidationError("invalid-config",
                              "config key '" + key + "': " + e.what());
      }
    }
    effective_[key] = *target;
  }

  void record(const std::string& key, const json& value) {
    effective_[key] = value;
  }

  const json& effective() const { return effective_; }

 private:
  CLI::App* cmd_;
  std::string* config_path_;
  json file_ = json::object();
  json effective_ = json::object();
};

void merge_device(CLI::App* cmd, ConfigMerge* m, DeviceModel* device) {
  m->take("--n-bar", "n_bar", &device->n_bar);
  m->take("--dark-rate", "dark_rate", &device->dark_rate);
  m->take("--k", "k", &device->k);
  m->take("--M", "M", &device->mean_gain);
  m->take("--sigma-read", "sigma_read", &device->sigma_read);
  m->take("--sigma-post", "sigma_post", &device->sigma_post);
  m->take("--dark-multiplied", "dark_multiplied", &device->dark_multiplied);
  m->take("--voltage-gain", "voltage_gain", &device->readout.voltage_gain);
  m->take("--c-f", "c_f", &device->readout.c_f);
}

json gof_to_json(const GofResult& g) {
  return json{{"chi2", g.chi2}, {"dof", g.dof}, {"p_value", g.p_value}};
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> names;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  return names;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("apdgain");
  for (const auto& a : args) argv_storage.push_back(a);
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

namespace {

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns the list of files written.

std::vector<std::string> cmd_pmf(const json& cfg) {
  TruncationPolicy policy{cfg.at("tail_tolerance").get<double>(),
                          cfg.at("hard_cap").get<std::uint64_t>()};
  const GainDistribution dist = make_gain_distribution(
      cfg.at("k").get<double>(), cfg.at("M").get<double>(), policy);
  const std::string out = cfg.at("out").get<std::string>();
  if (cfg.at("format").get<std::string>() == "csv") {
    std::vector<std::vector<double>> rows;
    rows.reserve(dist.pmf.size());
    for (std::size_t i = 0; i < dist.pmf.size(); ++i) {
      rows.push_back({static_cast<double>(dist.support_start + i),
                      dist.pmf[i]});
    }
    write_csv(out, {"m", "probability"}, rows);
  } else {
    write_text_file(out, dump_json(json(dist)));
  }
  return {out};
}

std::vector<std::string> cmd_enf(const json& cfg) {
  const double k = cfg.at("k").get<double>();
  std::vector<std::vector<double>> rows;
  if (cfg.contains("M")) {
    const double m = cfg.at("M").get<double>();
    rows.push_back({m, excess_noise_factor(k, m)});
  } else {
    const double lo = cfg.at("m_min").get<double>();
    const double hi = cfg.at("m_max").get<double>();
    const std::size_t points = cfg.at("points").get<std::size_t>();
    const bool log_grid = cfg.at("log_grid").get<bool>();
    if (points < 2 || !(hi > lo) || lo < 1.0) {
      throw ValidationError("invalid-parameter",
                            "need m_max > m_min >= 1 and points >= 2");
    }
    for (std::size_t i = 0; i < points; ++i) {
      const double t =
          static_cast<double>(i) / static_cast<double>(points - 1);
      const double m =
          log_grid ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
      rows.push_back({m, excess_noise_factor(k, m)});
    }
  }
  const std::string out = cfg.at("out").get<std::string>();
  if (cfg.at("format").get<std::string>() == "json") {
    json points = json::array();
    for (const auto& r : rows) points.push_back({r[0], r[1]});
    write_text_file(out, dump_json(json{{"k", k}, {"points", points}}));
  } else {
    write_csv(out, {"M", "F"}, rows);
  }
  return {out};
}

std::vector<std::string> cmd_mc(const json& cfg) {
  AvalancheConfig mc_cfg;
  mc_cfg.k = cfg.at("k").get<double>();
  mc_cfg.seed = cfg.at("seed").get<std::uint64_t>();
  mc_cfg.event_cap = cfg.at("event_cap").get<std::uint64_t>();
  if (cfg.contains("beta_l")) {
    mc_cfg.beta_l = cfg.at("beta_l").get<double>();
  } else {
    mc_cfg.beta_l = solve_beta_l(mc_cfg.k, cfg.at("M").get<double>());
  }
  const SampleSummary summary = sample_gain_histogram(
      mc_cfg, cfg.at("trials").get<std::uint64_t>(),
      cfg.at("threads").get<unsigned>());
  const json out_json{{"distribution", json(summary.dist)},
                      {"beta_l", mc_cfg.beta_l},
                      {"trials", summary.trials},
                      {"censored", summary.censored},
                      {"sample_mean", summary.sample_mean},
                      {"sample_variance", summary.sample_variance},
                      {"sample_enf", summary.sample_enf}};
  const std::string out = cfg.at("out").get<std::string>();
  write_text_file(out, dump_json(out_json));
  return {out};
}

std::vector<std::string> cmd_synth(const json& cfg) {
  DeviceModel device = cfg.get<DeviceModel>();
  const std::vector<PulseRecord> pulses = synthesize_pulses(
      device, cfg.at("pulses").get<std::uint64_t>(),
      cfg.at("seed").get<std::uint64_t>(), cfg.at("threads").get<unsigned>());
  const std::string out = cfg.at("out").get<std::string>();
  write_pulses_csv(out, pulses);
  return {out};
}

std::vector<std::string> cmd_spectrum_theory(const json& cfg) {
  const DeviceModel device = cfg.get<DeviceModel>();
  const double lo = cfg.at("x_min").get<double>();
  const double hi = cfg.at("x_max").get<double>();
  double step = cfg.at("step").get<double>();
  if (step <= 0.0) step = device.sigma_total() / 8.0;
  if (!(hi > lo) || !(step > 0.0)) {
    throw ValidationError("invalid-parameter", "need x_max > x_min, step > 0");
  }
  std::vector<double> grid;
  for (double x = lo; x <= hi + 1e-12; x += step) grid.push_back(x);
  const SpectrumDensity density = theoretical_spectrum(
      device, grid, cfg.at("n_max").get<std::size_t>(),
      TruncationPolicy{cfg.at("tail_tolerance").get<double>(), 1'000'000});
  const std::string out = cfg.at("out").get<std::string>();
  if (cfg.at("format").get<std::string>() == "csv") {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
      rows.push_back({density.grid[i], density.density[i]});
    }
    write_csv(out, {"electrons", "density"}, rows);
  } else {
    write_text_file(out, dump_json(json(density)));
  }
  return {out};
}

std::vector<std::string> cmd_fit_k(const json& cfg) {
  const CsvTable table = read_csv(cfg.at("in").get<std::string>());
  int col_m = table.column("M");
  int col_f = table.column("F");
  int col_w = table.column("weight");
  if (col_m < 0 || col_f < 0) {
    col_m = 0;
    col_f = 1;
    if (!table.rows.empty() && table.rows.front().size() > 2) col_w = 2;
  }
  std::vector<EnfPoint> points;
  for (const auto& row : table.rows) {
    EnfPoint p;
    p.m = row[col_m];
    p.f = row[col_f];
    if (col_w >= 0 && static_cast<std::size_t>(col_w) < row.size()) {
      p.weight = row[col_w];
    }
    points.push_back(p);
  }
  const FitResult fit = fit_k(points);
  const std::string out = cfg.at("out").get<std::string>();
  write_text_file(out, dump_json(json(fit)));
  return {out};
}

Histogram bin_electrons(const std::vector<double>& electrons,
                        double bin_width) {
  if (electrons.empty()) {
    throw ValidationError("invalid-parameter", "no samples to bin");
  }
  double lo = electrons.front(), hi = electrons.front();
  for (double e : electrons) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return histogram(electrons,
                   uniform_edges(std::floor(lo) - 0.5,
                                 std::ceil(hi) + 0.5, bin_width));
}

json spectrum_fit_report(const SpectrumFitResult& result) {
  return json{{"fit", json(result.fit)},
              {"device", json(result.device)},
              {"gof", gof_to_json(result.gof)},
              {"bound_hits", result.bound_hits}};
}

void write_residuals_csv(const std::string& path, const Histogram& hist,
                         const SpectrumFitResult& result) {
  std::vector<std::vector<double>> rows;
  for (std::size_t b = 0; b < result.expected.size(); ++b) {
    rows.push_back({0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]),
                    static_cast<double>(hist.counts[b]), result.expected[b],
                    result.residuals[b]});
  }
  write_csv(path, {"bin_center", "observed", "expected", "residual"}, rows);
}

std::vector<std::string> cmd_fit_spectrum(const json& cfg) {
  const std::vector<PulseRecord> pulses =
      read_pulses_csv(cfg.at("in").get<std::string>());
  std::vector<double> electrons;
  electrons.reserve(pulses.size());
  for (const auto& p : pulses) electrons.push_back(p.electrons_observed);
  const Histogram hist =
      bin_electrons(electrons, cfg.at("bin_width").get<double>());

  const DeviceModel init = cfg.get<DeviceModel>();
  SpectrumFitOptions options;
  options.n_max = cfg.at("n_max").get<std::size_t>();
  const SpectrumFitResult result =
      fit_spectrum(hist, init, split_names(cfg.at("free").get<std::string>()),
                   options);

  const std::string out = cfg.at("out").get<std::string>();
  write_text_file(out, dump_json(spectrum_fit_report(result)));
  std::vector<std::string> outputs = {out};
  const std::string residuals = cfg.at("residuals_out").get<std::string>();
  if (!residuals.empty()) {
    write_residuals_csv(residuals, hist, result);
    outputs.push_back(residuals);
  }
  return outputs;
}

std::vector<std::string> cmd_gain_curve(const json& cfg) {
  const CsvTable table = read_csv(cfg.at("in").get<std::string>());
  int col_v = table.column("bias_voltage");
  int col_r = table.column("mean_output_carriers");
  if (col_v < 0 || col_r < 0) {
    col_v = 0;
    col_r = 1;
  }
  std::vector<GainCurvePoint> curve;
  for (const auto& row : table.rows) {
    if (row.size() < 2) {
      throw ValidationError("parse-error", "gain curve rows need 2 columns");
    }
    curve.push_back({row[col_v], row[col_r]});
  }
  CalibrationOptions options;
  options.window_volts = cfg.at("window").get<double>();
  options.max_slope_per_volt = cfg.at("max_slope").get<double>();
  const std::vector<CalibratedPoint> calibrated =
      calibrate_gain(curve, cfg.at("unity_bias").get<double>(), options);

  const std::string out = cfg.at("out").get<std::string>();
  if (cfg.at("format").get<std::string>() == "json") {
    json points = json::array();
    for (const auto& p : calibrated) {
      points.push_back({p.bias_voltage, p.gain});
    }
    write_text_file(out, dump_json(json{{"points", points}}));
  } else {
    std::vector<std::vector<double>> rows;
    for (const auto& p : calibrated) rows.push_back({p.bias_voltage, p.gain});
    write_csv(out, {"bias_voltage", "M"}, rows);
  }
  return {out};
}

std::vector<std::string> cmd_analyze(const json& cfg) {
  const Trace trace = parse_trace_file(cfg.at("trace").get<std::string>());
  for (const auto& w : trace.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  const PulseTiming timing = cfg.get<PulseTiming>();
  const DeviceModel init = cfg.get<DeviceModel>();
  ExtractionOptions extraction;
  extraction.drift_window = cfg.at("drift_window").get<std::size_t>();
  extraction.reset_factor = cfg.at("reset_factor").get<double>();
  const ExtractionResult steps =
      extract_pulse_heights(trace, timing, init.readout, extraction);

  const Histogram hist =
      bin_electrons(steps.electrons, cfg.at("bin_width").get<double>());
  SpectrumFitOptions fit_options;
  fit_options.n_max = cfg.at("n_max").get<std::size_t>();
  const SpectrumFitResult result =
      fit_spectrum(hist, init, split_names(cfg.at("free").get<std::string>()),
                   fit_options);

  json report = spectrum_fit_report(result);
  report["pulses"] = steps.electrons.size();
  report["resets"] = steps.resets;
  report["drift_volts_per_second"] = steps.drift_volts_per_second;
  report["histogram"] = json(hist);

  const std::string out = cfg.at("out").get<std::string>();
  write_text_file(out, dump_json(report));
  std::vector<std::string> outputs = {out};
  const std::string residuals = cfg.at("residuals_out").get<std::string>();
  if (!residuals.empty()) {
    write_residuals_csv(residuals, hist, result);
    outputs.push_back(residuals);
  }
  return outputs;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Avalanche gain statistics toolkit"};
  app.require_subcommand(1);

  // ---- pmf -------------------------------------------------------------
  auto* pmf = app.add_subcommand(
      "pmf", "Tabulate the single-injection gain distribution");
  struct {
    double k = 0.9218;
    double m = 3.7;
    double tail = 1e-9;
    std::uint64_t cap = 1'000'000;
    std::string out, config, format = "json";
  } pmf_args;
  pmf->add_option("--k", pmf_args.k, "Ionization ratio in (0,1)");
  pmf->add_option("--M", pmf_args.m, "Mean gain");
  pmf->add_option("--tail", pmf_args.tail, "Truncation tail tolerance");
  pmf->add_option("--cap", pmf_args.cap, "Support hard cap");
  pmf->add_option("--format", pmf_args.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  pmf->add_option("--out", pmf_args.out, "Output path");
  pmf->add_option("--config", pmf_args.config, "JSON config file");

  // ---- enf -------------------------------------------------------------
  auto* enf = app.add_subcommand(
      "enf", "Excess noise factor versus mean gain");
  struct {
    double k = 0.9218;
    double m = 0.0;
    double m_min = 1.0;
    double m_max = 20.0;
    std::size_t points = 50;
    bool log_grid = false;
    std::string out, config, format = "csv";
  } enf_args;
  enf->add_option("--k", enf_args.k, "Ionization ratio in (0,1)");
  enf->add_option("--M", enf_args.m, "Evaluate at a single mean gain");
  enf->add_option("--m-min", enf_args.m_min, "Grid start");
  enf->add_option("--m-max", enf_args.m_max, "Grid end");
  enf->add_option("--points", enf_args.points, "Grid size");
  enf->add_flag("--log-grid", enf_args.log_grid, "Geometric grid spacing");
  enf->add_option("--format", enf_args.format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));
  enf->add_option("--out", enf_args.out, "Output path");
  enf->add_option("--config", enf_args.config, "JSON config file");

  // ---- mc --------------------------------------------------------------
  auto* mc = app.add_subcommand(
      "mc", "Monte Carlo avalanche gain histogram");
  struct {
    double k = 0.9218;
    double m = 3.7;
    double beta_l = -1.0;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    std::uint64_t event_cap = 10'000'000;
    unsigned threads = 0;
    std::string out, config;
  } mc_args;
  mc->add_option("--k", mc_args.k, "Ionization ratio in (0,1)");
  mc->add_option("--M", mc_args.m, "Target mean gain (beta_l solved)");
  mc->add_option("--beta-l", mc_args.beta_l,
                 "Injected-carrier ionization integral (overrides --M)");
  mc->add_option("--trials", mc_args.trials, "Number of avalanches");
  mc->add_option("--seed", mc_args.seed, "Reproducibility seed");
  mc->add_option("--event-cap", mc_args.event_cap,
                 "Per-trial ionization cap");
  mc->add_option("--threads", mc_args.threads, "Worker count (0 = auto)");
  mc->add_option("--out", mc_args.out, "Output path");
  mc->add_option("--config", mc_args.config, "JSON config file");

  // ---- synth -----------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "Synthesize per-pulse readout records");
  struct {
    DeviceModel device;
    std::uint64_t pulses = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out, config;
  } synth_args;
  auto add_device_flags = [](CLI::App* cmd, DeviceModel* device) {
    cmd->add_option("--n-bar", device->n_bar,
                    "Mean signal primaries per pulse");
    cmd->add_option("--dark-rate", device->dark_rate,
                    "Mean dark primaries per pulse");
    cmd->add_option("--k", device->k, "Ionization ratio in (0,1)");
    cmd->add_option("--M", device->mean_gain, "Mean gain");
    cmd->add_option("--sigma-read", device->sigma_read,
                    "Input-referred noise, electrons rms");
    cmd->add_option("--sigma-post", device->sigma_post,
                    "Post-amplifier noise, electrons rms");
    cmd->add_flag("--dark-multiplied,!--dark-unmultiplied",
                  device->dark_multiplied,
                  "Dark primaries pass through the multiplier");
    cmd->add_option("--voltage-gain", device->readout.voltage_gain,
                    "Post-amplifier voltage gain");
    cmd->add_option("--c-f", device->readout.c_f,
                    "Feedback capacitance, farads");
  };
  add_device_flags(synth, &synth_args.device);
  synth->add_option("--pulses", synth_args.pulses, "Number of pulses");
  synth->add_option("--seed", synth_args.seed, "Reproducibility seed");
  synth->add_option("--threads", synth_args.threads, "Worker count (0 = auto)");
  synth->add_option("--out", synth_args.out, "Output path");
  synth->add_option("--config", synth_args.config, "JSON config file");

  // ---- spectrum-theory ---------------------------------------------------
  auto* theory = app.add_subcommand(
      "spectrum-theory", "Theoretical observed-electron density");
  struct {
    DeviceModel device;
    double x_min = -20.0;
    double x_max = 80.0;
    double step = 0.0;  // 0 -> sigma / 8
    std::size_t n_max = 3;
    double tail = 1e-9;
    std::string out, config, format = "json";
  } theory_args;
  add_device_flags(theory, &theory_args.device);
  theory->add_option("--x-min", theory_args.x_min, "Grid start, electrons");
  theory->add_option("--x-max", theory_args.x_max, "Grid end, electrons");
  theory->add_option("--step", theory_args.step,
                     "Grid spacing (default sigma/8)");
  theory->add_option("--n-max", theory_args.n_max,
                     "Highest primary multiplicity in the mixture");
  theory->add_option("--tail", theory_args.tail, "Truncation tail tolerance");
  theory->add_option("--format", theory_args.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  theory->add_option("--out", theory_args.out, "Output path");
  theory->add_option("--config", theory_args.config, "JSON config file");

  // ---- fit-k -------------------------------------------------------------
  auto* fitk = app.add_subcommand(
      "fit-k", "Fit the ionization ratio to (M, F) points");
  struct {
    std::string in, out, config;
  } fitk_args;
  fitk->add_option("--in", fitk_args.in, "CSV of M,F[,weight]")->required();
  fitk->add_option("--out", fitk_args.out, "Output path");
  fitk->add_option("--config", fitk_args.config, "JSON config file");

  // ---- fit-spectrum -------------------------------------------------------
  auto* fitspec = app.add_subcommand(
      "fit-spectrum", "Fit the spectrum model to pulse data");
  struct {
    DeviceModel device;
    std::string in, out, config, residuals;
    std::string free = "n_bar,M";
    double bin_width = 1.0;
    std::size_t n_max = 3;
  } fitspec_args;
  add_device_flags(fitspec, &fitspec_args.device);
  fitspec->add_option("--in", fitspec_args.in, "Pulse CSV")->required();
  fitspec->add_option("--free", fitspec_args.free,
                      "Comma list from n_bar,k,M,sigma_read");
  fitspec->add_option("--bin-width", fitspec_args.bin_width,
                      "Histogram bin width, electrons");
  fitspec->add_option("--n-max", fitspec_args.n_max,
                      "Highest primary multiplicity in the mixture");
  fitspec->add_option("--residuals-out", fitspec_args.residuals,
                      "Optional per-bin residual CSV");
  fitspec->add_option("--out", fitspec_args.out, "Output path");
  fitspec->add_option("--config", fitspec_args.config, "JSON config file");

  // ---- gain-curve ----------------------------------------------------------
  auto* gaincurve = app.add_subcommand(
      "gain-curve", "Normalize a bias-voltage response curve");
  struct {
    std::string in, out, config, format = "csv";
    double unity_bias = 18.5;
    double window = 0.5;
    double max_slope = 0.02;
  } gc_args;
  gaincurve->add_option("--in", gc_args.in,
                        "CSV of bias_voltage,mean_output_carriers")
      ->required();
  gaincurve->add_option("--unity-bias", gc_args.unity_bias,
                        "Bias voltage defining unity gain");
  gaincurve->add_option("--window", gc_args.window,
                        "Plateau half-width, volts");
  gaincurve->add_option("--max-slope", gc_args.max_slope,
                        "Plateau relative slope limit per volt");
  gaincurve->add_option("--format", gc_args.format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));
  gaincurve->add_option("--out", gc_args.out, "Output path");
  gaincurve->add_option("--config", gc_args.config, "JSON config file");

  // ---- analyze ---------------------------------------------------------
  auto* analyze = app.add_subcommand(
      "analyze", "Trace -> pulse heights -> histogram -> spectrum fit");
  struct {
    DeviceModel device;
    PulseTiming timing;
    std::string trace, out, config, residuals;
    std::string free = "n_bar,M";
    double bin_width = 1.0;
    std::size_t n_max = 3;
    std::size_t drift_window = 50;
    double reset_factor = 20.0;
  } an_args;
  add_device_flags(analyze, &an_args.device);
  analyze->add_option("--trace", an_args.trace, "Trace CSV (time,voltage)")
      ->required();
  analyze->add_option("--repetition-rate", an_args.timing.repetition_rate,
                      "Pulse repetition rate, Hz");
  analyze->add_option("--sampling-rate", an_args.timing.sampling_rate,
                      "Trace sampling rate, Hz");
  analyze->add_option("--pulse-width", an_args.timing.pulse_width,
                      "Optical pulse width, seconds");
  analyze->add_option("--free", an_args.free,
                      "Comma list from n_bar,k,M,sigma_read");
  analyze->add_option("--n-max", an_args.n_max,
                      "Largest primary count folded into the model");
  analyze->add_option("--bin-width", an_args.bin_width,
                      "Histogram bin width, electrons");
  analyze->add_option("--drift-window", an_args.drift_window,
                      "Drift estimation window, samples");
  analyze->add_option("--reset-factor", an_args.reset_factor,
                      "Reset threshold in single-electron steps");
  analyze->add_option("--residuals-out", an_args.residuals,
                      "Optional per-bin residual CSV");
  analyze->add_option("--out", an_args.out, "Output path");
  analyze->add_option("--config", an_args.config, "JSON config file");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error code=invalid-config message=\"" << e.what()
                << "\"\n";
      return 2;
    }

    json cfg = json::object();
    std::string subcommand;
    std::vector<std::string> outputs;

    auto merge_device_cfg = [&](CLI::App* cmd, const std::string& config_path,
                                DeviceModel* device) {
      ConfigMerge merge(cmd, const_cast<std::string*>(&config_path));
      merge.finalize();
      merge_device(cmd, &merge, device);
      return merge.effective();
    };

    if (pmf->parsed()) {
      subcommand = "pmf";
      ConfigMerge merge(pmf, &pmf_args.config);
      merge.finalize();
      merge.take("--k", "k", &pmf_args.k);
      merge.take("--M", "M", &pmf_args.m);
      merge.take("--tail", "tail_tolerance", &pmf_args.tail);
      merge.take("--cap", "hard_cap", &pmf_args.cap);
      merge.take("--format", "format", &pmf_args.format);
      cfg = merge.effective();
      cfg["out"] = resolve_out(pmf_args.out,
                               pmf_args.format == "csv" ? "pmf.csv"
                                                        : "pmf.json");
      outputs = cmd_pmf(cfg);
    } else if (enf->parsed()) {
      subcommand = "enf";
      ConfigMerge merge(enf, &enf_args.config);
      merge.finalize();
      merge.take("--k", "k", &enf_args.k);
      merge.take("--m-min", "m_min", &enf_args.m_min);
      merge.take("--m-max", "m_max", &enf_args.m_max);
      merge.take("--points", "points", &enf_args.points);
      merge.take("--log-grid", "log_grid", &enf_args.log_grid);
      merge.take("--format", "format", &enf_args.format);
      cfg = merge.effective();
      if (!enf->get_option("--M")->empty()) cfg["M"] = enf_args.m;
      cfg["out"] = resolve_out(enf_args.out,
                               enf_args.format == "json" ? "enf.json"
                                                         : "enf.csv");
      outputs = cmd_enf(cfg);
    } else if (mc->parsed()) {
      subcommand = "mc";
      ConfigMerge merge(mc, &mc_args.config);
      merge.finalize();
      merge.take("--k", "k", &mc_args.k);
      merge.take("--M", "M", &mc_args.m);
      merge.take("--trials", "trials", &mc_args.trials);
      merge.take("--seed", "seed", &mc_args.seed);
      merge.take("--event-cap", "event_cap", &mc_args.event_cap);
      cfg = merge.effective();
      if (!mc->get_option("--beta-l")->empty()) {
        cfg["beta_l"] = mc_args.beta_l;
        cfg.erase("M");
      }
      cfg["threads"] = mc_args.threads;
      cfg["out"] = resolve_out(mc_args.out, "mc.json");
      outputs = cmd_mc(cfg);
      cfg.erase("threads");  // execution detail, not part of the run config
    } else if (synth->parsed()) {
      subcommand = "synth";
      cfg = merge_device_cfg(synth, synth_args.config, &synth_args.device);
      ConfigMerge merge(synth, &synth_args.config);
      merge.finalize();
      merge.take("--pulses", "pulses", &synth_args.pulses);
      merge.take("--seed", "seed", &synth_args.seed);
      cfg.update(merge.effective());
      cfg["threads"] = synth_args.threads;
      cfg["out"] = resolve_out(synth_args.out, "pulses.csv");
      outputs = cmd_synth(cfg);
      cfg.erase("threads");
    } else if (theory->parsed()) {
      subcommand = "spectrum-theory";
      cfg = merge_device_cfg(theory, theory_args.config, &theory_args.device);
      ConfigMerge merge(theory, &theory_args.config);
      merge.finalize();
      merge.take("--x-min", "x_min", &theory_args.x_min);
      merge.take("--x-max", "x_max", &theory_args.x_max);
      merge.take("--step", "step", &theory_args.step);
      merge.take("--n-max", "n_max", &theory_args.n_max);
      merge.take("--tail", "tail_tolerance", &theory_args.tail);
      merge.take("--format", "format", &theory_args.format);
      cfg.update(merge.effective());
      cfg["out"] = resolve_out(theory_args.out,
                               theory_args.format == "csv"
                                   ? "spectrum.csv"
                                   : "spectrum.json");
      outputs = cmd_spectrum_theory(cfg);
    } else if (fitk->parsed()) {
      subcommand = "fit-k";
      cfg["in"] = fitk_args.in;
      cfg["out"] = resolve_out(fitk_args.out, "fit_k.json");
      outputs = cmd_fit_k(cfg);
    } else if (fitspec->parsed()) {
      subcommand = "fit-spectrum";
      cfg = merge_device_cfg(fitspec, fitspec_args.config,
                             &fitspec_args.device);
      ConfigMerge merge(fitspec, &fitspec_args.config);
      merge.finalize();
      merge.take("--free", "free", &fitspec_args.free);
      merge.take("--bin-width", "bin_width", &fitspec_args.bin_width);
      merge.take("--n-max", "n_max", &fitspec_args.n_max);
      cfg.update(merge.effective());
      cfg["in"] = fitspec_args.in;
      cfg["residuals_out"] = fitspec_args.residuals;
      cfg["out"] = resolve_out(fitspec_args.out, "fit_spectrum.json");
      outputs = cmd_fit_spectrum(cfg);
    } else if (gaincurve->parsed()) {
      subcommand = "gain-curve";
      ConfigMerge merge(gaincurve, &gc_args.config);
      merge.finalize();
      merge.take("--unity-bias", "unity_bias", &gc_args.unity_bias);
      merge.take("--window", "window", &gc_args.window);
      merge.take("--max-slope", "max_slope", &gc_args.max_slope);
      merge.take("--format", "format", &gc_args.format);
      cfg = merge.effective();
      cfg["in"] = gc_args.in;
      cfg["out"] = resolve_out(gc_args.out,
                               gc_args.format == "json" ? "gain_curve.json"
                                                        : "gain_curve.csv");
      outputs = cmd_gain_curve(cfg);
    } else if (analyze->parsed()) {
      subcommand = "analyze";
      cfg = merge_device_cfg(analyze, an_args.config, &an_args.device);
      ConfigMerge merge(analyze, &an_args.config);
      merge.finalize();
      merge.take("--repetition-rate", "repetition_rate",
                 &an_args.timing.repetition_rate);
      merge.take("--sampling-rate", "sampling_rate",
                 &an_args.timing.sampling_rate);
      merge.take("--pulse-width", "pulse_width", &an_args.timing.pulse_width);
      merge.take("--free", "free", &an_args.free);
      merge.take("--bin-width", "bin_width", &an_args.bin_width);
      merge.take("--n-max", "n_max", &an_args.n_max);
      merge.take("--drift-window", "drift_window", &an_args.drift_window);
      merge.take("--reset-factor", "reset_factor", &an_args.reset_factor);
      cfg.update(merge.effective());
      cfg["trace"] = an_args.trace;
      cfg["residuals_out"] = an_args.residuals;
      cfg["out"] = resolve_out(an_args.out, "analyze.json");
      outputs = cmd_analyze(cfg);
    }

    write_manifest(cfg.at("out").get<std::string>(), subcommand, cfg,
                   outputs);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error code=" << e.code() << " message=\"" << e.what()
              << "\"\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error code=" << e.code() << " message=\"" << e.what()
              << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error code=runtime message=\"" << e.what() << "\"\n";
    return 1;
  }
}

}  // namespace apdgain
