// Copyright 2026 The fdbreak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fdbreak/digest.h"
#include "fdbreak/evaluation.h"
#include "fdbreak/ingest.h"
#include "fdbreak/json.h"
#include "fdbreak/models.h"
#include "fdbreak/sampler.h"
#include "fdbreak/synth.h"
#include "manifest.h"

#ifndef FDBREAK_VERSION
#define FDBREAK_VERSION "unknown"
#endif

namespace fdbreak::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::uint64_t seed = 0;
  std::string output = ".";
  unsigned threads = 1;
  std::string config;
};

struct FitFlags {
  std::string model = "lgf";
  bool fast = false;
  int chains = 4;
  int burnin = 25000;
  int draws = 25000;
  double credible_mass = 0.95;
  double rhat_threshold = 1.05;
  std::string bounds = "from-data";
  std::string breakpoint_prior = "default";
  double coefficient_scale = 10.0;
  double noise_scale = 5.0;
  double breakpoint_mean = 0.0;
  double breakpoint_scale = 10.0;
  double lgf_exponent_scale = 1.0;
  bool allow_nonconverged = false;
};

struct IngestFlags {
  std::string input;
  std::string windows = "06:00-09:00,15:00-19:00";
  std::string exclude_weekdays = "Sun,Mon,Fri,Sat";
  std::string holidays;
  int aggregation_minutes = 5;
  std::string speed_aggregation = "arithmetic";
  std::optional<int> lane;
  std::string speed_unit = "mph";
  CsvSchema columns;
};

struct FitCommandFlags {
  std::string dataset;
  bool include_draws = false;
  bool draws_csv = false;
};

struct CompareFlags {
  std::string dataset;
  std::string fit_lgf;
  std::string fit_two_regime;
  double bin_width = 10.0;
  std::size_t grid_points = 100;
  bool plug_in = false;
};

struct SimulateFlags {
  std::string spec;
  std::string model = "lgf";
  std::string params;
  std::size_t n = 100;
  double occupancy_low = 1.0;
  double occupancy_high = 35.0;
  bool truncate_negative = false;
};

struct Flags {
  CommonFlags common;
  FitFlags fit;
  IngestFlags ingest;
  FitCommandFlags fit_command;
  CompareFlags compare;
  SimulateFlags simulate;
};

struct App {
  CLI::App app{"Bayesian speed-occupancy breakpoint calibration", "fdbreak"};
  CLI::App* ingest = nullptr;
  CLI::App* fit = nullptr;
  CLI::App* compare = nullptr;
  CLI::App* simulate = nullptr;
};

void add_common(CLI::App* sub, CommonFlags& c) {
  sub->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  sub->add_option("--output", c.output, "Output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads for chains")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  sub->add_option("--config", c.config, "JSON file of option values; flags win")
      ->check(CLI::ExistingFile);
}

void add_fit_options(CLI::App* sub, FitFlags& f, bool with_model) {
  if (with_model) {
    sub->add_option("--model", f.model, "lgf or two-regime")
        ->check(CLI::IsMember({"lgf", "two-regime", "two_regime"}))
        ->capture_default_str();
  }
  sub->add_flag("--fast", f.fast, "Use 2000 burn-in and 5000 draws per chain");
  sub->add_option("--chains", f.chains, "Number of chains")->capture_default_str();
  sub->add_option("--burnin", f.burnin, "Burn-in iterations per chain")->capture_default_str();
  sub->add_option("--draws", f.draws, "Retained draws per chain")->capture_default_str();
  sub->add_option("--credible-mass", f.credible_mass)->capture_default_str();
  sub->add_option("--rhat-threshold", f.rhat_threshold)->capture_default_str();
  sub->add_option("--bounds", f.bounds, "Breakpoint bounds: from-data or LOW,HIGH")
      ->capture_default_str();
  sub->add_option("--breakpoint-prior", f.breakpoint_prior, "default, uniform or normal")
      ->capture_default_str();
  sub->add_option("--coefficient-scale", f.coefficient_scale)->capture_default_str();
  sub->add_option("--noise-scale", f.noise_scale)->capture_default_str();
  sub->add_option("--breakpoint-mean", f.breakpoint_mean)->capture_default_str();
  sub->add_option("--breakpoint-scale", f.breakpoint_scale)->capture_default_str();
  sub->add_option("--lgf-exponent-scale", f.lgf_exponent_scale)->capture_default_str();
  sub->add_flag("--allow-nonconverged", f.allow_nonconverged,
                "Keep going when R-hat exceeds the threshold");
}

void build(App& a, Flags& f) {
  a.app.require_subcommand(1);
  a.app.set_version_flag("--version", FDBREAK_VERSION);

  a.ingest = a.app.add_subcommand("ingest", "Filter and aggregate a raw detector CSV");
  add_common(a.ingest, f.common);
  auto& in = f.ingest;
  a.ingest->add_option("input", in.input, "Raw detector CSV")->required()->check(CLI::ExistingFile);
  a.ingest->add_option("--windows", in.windows, "Analysis windows HH:MM-HH:MM,...")
      ->capture_default_str();
  a.ingest->add_option("--exclude-weekdays", in.exclude_weekdays, "Weekdays to drop")
      ->capture_default_str();
  a.ingest->add_option("--holidays", in.holidays, "File of YYYY-MM-DD dates to drop")
      ->check(CLI::ExistingFile);
  a.ingest->add_option("--aggregation-minutes", in.aggregation_minutes)->capture_default_str();
  a.ingest->add_option("--speed-aggregation", in.speed_aggregation, "arithmetic or harmonic")
      ->capture_default_str();
  a.ingest->add_option("--lane", in.lane, "Lane to keep (required for multi-lane files)");
  a.ingest->add_option("--speed-unit", in.speed_unit, "mph or kmh")
      ->check(CLI::IsMember({"mph", "kmh"}))
      ->capture_default_str();
  a.ingest->add_option("--timestamp-column", in.columns.timestamp)->capture_default_str();
  a.ingest->add_option("--lane-column", in.columns.lane_id)->capture_default_str();
  a.ingest->add_option("--speed-column", in.columns.speed)->capture_default_str();
  a.ingest->add_option("--occupancy-column", in.columns.occupancy)->capture_default_str();
  a.ingest->add_option("--volume-column", in.columns.volume)->capture_default_str();

  a.fit = a.app.add_subcommand("fit", "Fit one model to a dataset CSV");
  add_common(a.fit, f.common);
  add_fit_options(a.fit, f.fit, true);
  a.fit->add_option("dataset", f.fit_command.dataset, "Dataset CSV")
      ->required()
      ->check(CLI::ExistingFile);
  a.fit->add_flag("--include-draws", f.fit_command.include_draws,
                  "Embed retained draws in the fit JSON (needed by compare)");
  a.fit->add_flag("--draws-csv", f.fit_command.draws_csv, "Also write retained draws, one CSV per chain");

  a.compare = a.app.add_subcommand("compare", "Compare LGF and two-regime fits");
  add_common(a.compare, f.common);
  add_fit_options(a.compare, f.fit, false);
  auto& cf = f.compare;
  a.compare->add_option("dataset", cf.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  auto* lgf = a.compare->add_option("--fit-lgf", cf.fit_lgf, "Precomputed LGF fit JSON")
                  ->check(CLI::ExistingFile);
  auto* two = a.compare->add_option("--fit-two-regime", cf.fit_two_regime,
                                    "Precomputed two-regime fit JSON")
                  ->check(CLI::ExistingFile);
  lgf->needs(two);
  two->needs(lgf);
  a.compare->add_option("--bin-width", cf.bin_width, "Speed bin width (mph)")->capture_default_str();
  a.compare->add_option("--grid-points", cf.grid_points, "Curve CSV resolution")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))
      ->capture_default_str();
  a.compare->add_flag("--plug-in", cf.plug_in,
                      "Predict at posterior-mean parameters instead of averaging curves");

  a.simulate = a.app.add_subcommand("simulate", "Generate a synthetic dataset CSV");
  add_common(a.simulate, f.common);
  auto& sf = f.simulate;
  a.simulate->add_option("--spec", sf.spec, "SynthSpec JSON")->check(CLI::ExistingFile);
  a.simulate->add_option("--model", sf.model, "lgf or two-regime")
      ->check(CLI::IsMember({"lgf", "two-regime", "two_regime"}))
      ->capture_default_str();
  a.simulate->add_option("--params", sf.params, "True parameters, name=value,...");
  a.simulate->add_option("--n", sf.n, "Sample size")->capture_default_str();
  a.simulate->add_option("--occupancy-low", sf.occupancy_low)->capture_default_str();
  a.simulate->add_option("--occupancy-high", sf.occupancy_high)->capture_default_str();
  a.simulate->add_flag("--truncate-negative", sf.truncate_negative,
                       "Redraw negative speeds instead of keeping them");
}

CLI::App* selected(const App& a) {
  for (CLI::App* s : {a.ingest, a.fit, a.compare, a.simulate}) {
    if (s->parsed()) return s;
  }
  return nullptr;
}

void parse(App& a, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  a.app.parse(args);
}

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) {
    return v.is_number_float() ? format_double(v.get<double>()) : v.dump();
  }
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ',';
      out += scalar_text(e, key);
    }
    return out;
  }
  throw ValidationError("config key '" + key + "' has an unsupported value");
}

// Appends "--key value" for every config entry whose flag was not given on
// the command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App* sub,
                                      const fs::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ValidationError("cannot open config " + config_path.string());
  const json config = json::parse(in);
  if (!config.is_object()) throw ValidationError("config must be a JSON object");
  std::vector<std::string> merged = args;
  for (const auto& [raw_key, value] : config.items()) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "schema-version") continue;
    if (key == "config") throw ValidationError("config files cannot nest --config");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ValidationError("unknown config key '" + raw_key + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      if (!value.is_boolean()) throw ValidationError("config key '" + raw_key + "' must be boolean");
      if (value.get<bool>()) merged.push_back("--" + key);
      continue;
    }
    merged.push_back("--" + key);
    merged.push_back(scalar_text(value, raw_key));
  }
  return merged;
}

BreakpointBounds parse_bounds_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--bounds expects from-data or LOW,HIGH");
  BreakpointBounds b;
  try {
    b.low = std::stod(text.substr(0, comma));
    b.high = std::stod(text.substr(comma + 1));
  } catch (const std::logic_error&) {
    throw ValidationError("--bounds expects from-data or LOW,HIGH");
  }
  b.validate();
  return b;
}

FitConfig resolve_fit_config(const FitFlags& f, const CLI::App* sub, std::uint64_t seed) {
  FitConfig c = f.fast ? FitConfig::fast() : FitConfig{};
  if (!f.fast || sub->count("--burnin") > 0) c.burn_in = f.burnin;
  if (!f.fast || sub->count("--draws") > 0) c.inference_draws = f.draws;
  c.n_chains = f.chains;
  c.seed = seed;
  c.credible_mass = f.credible_mass;
  c.rhat_threshold = f.rhat_threshold;
  c.lgf_exponent_scale = f.lgf_exponent_scale;
  if (f.bounds != "from-data") c.breakpoint_bounds = parse_bounds_pair(f.bounds);
  c.validate();
  return c;
}

PriorSpec resolve_prior(const FitFlags& f) {
  PriorSpec p;
  p.coefficient_scale = f.coefficient_scale;
  p.noise_scale = f.noise_scale;
  p.breakpoint_prior = parse_breakpoint_prior(f.breakpoint_prior);
  p.breakpoint_mean = f.breakpoint_mean;
  p.breakpoint_scale = f.breakpoint_scale;
  p.validate();
  return p;
}

std::string file_stem(ModelKind kind) {
  return kind == ModelKind::kLgf ? "lgf" : "two_regime";
}

// One CSV per chain, one column per parameter.
std::string chain_draws_csv(const PosteriorFit& fit, const ChainSamples& chain) {
  std::string out;
  for (const auto name : parameter_names(fit.model_kind)) {
    if (!out.empty()) out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < chain.n_draws(); ++i) {
    std::string row;
    for (double v : chain.row(i)) {
      if (!row.empty()) row += ',';
      row += format_double(v);
    }
    out += row + '\n';
  }
  return out;
}

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

class Command {
 public:
  Command(std::string name, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(name);
    manifest_.arguments = args;
    manifest_.tool_version = FDBREAK_VERSION;
    manifest_.started_at = utc_now_iso8601();
  }

  RunManifest& manifest() { return manifest_; }

  void finish(const fs::path& manifest_path) {
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(manifest_path, manifest_.to_json());
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

int cmd_ingest(const Flags& f, const std::vector<std::string>& args, std::ostream& out) {
  Command cmd("ingest", args);
  const auto& in = f.ingest;
  IngestConfig config;
  config.time_windows = parse_time_windows(in.windows);
  config.excluded_weekdays = parse_weekdays(in.exclude_weekdays);
  if (!in.holidays.empty()) config.holiday_dates = load_holidays(in.holidays);
  config.aggregation_minutes = in.aggregation_minutes;
  config.speed_aggregation = parse_speed_aggregation(in.speed_aggregation);
  config.validate();
  CsvSchema schema = in.columns;
  schema.speed_unit = in.speed_unit == "kmh" ? SpeedUnit::kKmh : SpeedUnit::kMph;

  LoadResult loaded = load_detector_csv(in.input, schema);
  std::vector<Observation> records = std::move(loaded.records);
  const auto lanes = lanes_present(records);
  if (in.lane) {
    records = select_lane(records, *in.lane);
  } else if (lanes.size() > 1) {
    throw MixedLanesError("input holds " + std::to_string(lanes.size()) +
                          " lanes; choose one with --lane");
  }
  const DetectorDataset filtered = filter_analysis_windows(records, config);
  DetectorDataset dataset = aggregate(filtered.observations, config);

  const fs::path dir = f.common.output;
  const fs::path dataset_path = dir / "dataset.csv";
  const fs::path rejects_path = dir / "rejects.csv";
  write_text_file(dataset_path, dataset_csv(dataset));
  write_text_file(rejects_path, rejects_csv(loaded.rejects));
  for (const auto& w : loaded.warnings) out << "warning: " << w << "\n";
  out << "ingest: " << loaded.data_rows << " rows read, " << loaded.rejects.size()
      << " rejected, " << filtered.size() << " in analysis windows, " << dataset.size()
      << " aggregated records\n";

  json resolved{{"time_windows", in.windows},
                {"excluded_weekdays", std::vector<unsigned>(config.excluded_weekdays.begin(),
                                                            config.excluded_weekdays.end())},
                {"holidays", in.holidays},
                {"aggregation_minutes", config.aggregation_minutes},
                {"speed_aggregation", std::string(to_string(config.speed_aggregation))},
                {"lane", in.lane ? json(*in.lane) : json(nullptr)},
                {"speed_unit", in.speed_unit}};
  cmd.manifest().resolved_config = resolved;
  cmd.manifest().add_input(in.input);
  if (!in.holidays.empty()) cmd.manifest().add_input(in.holidays);
  cmd.manifest().add_output(dataset_path);
  cmd.manifest().add_output(rejects_path);
  cmd.finish(dir / "ingest_manifest.json");
  return kOk;
}

json fit_resolved_config(const FitConfig& c, const PriorSpec& p, const CommonFlags& common) {
  return json{{"fit_config", c}, {"prior", p}, {"threads", common.threads}};
}

int cmd_fit(const Flags& f, const App& a, const std::vector<std::string>& args,
            std::ostream& out, std::ostream& err) {
  Command cmd("fit", args);
  const ModelKind kind = parse_model_kind(f.fit.model);
  const FitConfig config = resolve_fit_config(f.fit, a.fit, f.common.seed);
  const PriorSpec prior = resolve_prior(f.fit);
  const DetectorDataset data = read_dataset_csv(f.fit_command.dataset);

  RunOptions options;
  options.threads = f.common.threads;
  const PosteriorFit fit = run_chains(kind, data, prior, config, options);

  const fs::path dir = f.common.output;
  const fs::path fit_path = dir / ("fit_" + file_stem(kind) + ".json");
  write_json(fit_path, posterior_fit_to_json(fit, f.fit_command.include_draws));
  cmd.manifest().add_input(f.fit_command.dataset);
  cmd.manifest().add_output(fit_path);
  if (f.fit_command.draws_csv) {
    for (const auto& chain : fit.chains) {
      const fs::path draws_path = dir / ("draws_" + file_stem(kind) + "_chain" +
                                         std::to_string(chain.chain_index) + ".csv");
      write_text_file(draws_path, chain_draws_csv(fit, chain));
      cmd.manifest().add_output(draws_path);
    }
  }
  cmd.manifest().resolved_config = fit_resolved_config(config, prior, f.common);
  cmd.finish(dir / ("fit_" + file_stem(kind) + "_manifest.json"));

  out << "fit " << to_string(kind) << ": occupancy breakpoint "
      << fit.breakpoints.occupancy.mean << ", speed breakpoint " << fit.breakpoints.speed.mean
      << (fit.diagnostics.converged ? "" : " (NOT converged)") << "\n";
  if (!fit.diagnostics.converged) {
    err << "fit did not converge: " << fit.diagnostics.note << "\n";
    if (!f.fit.allow_nonconverged) return kNotConverged;
  }
  return kOk;
}

PosteriorFit load_fit(const fs::path& path, ModelKind expected) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open fit " + path.string());
  PosteriorFit fit = posterior_fit_from_json(json::parse(in));
  if (fit.model_kind != expected) {
    throw ValidationError(path.string() + " holds a " + std::string(to_string(fit.model_kind)) +
                          " fit");
  }
  if (!fit.has_draws()) {
    throw ValidationError(path.string() + " has no draws; refit with --include-draws");
  }
  return fit;
}

int cmd_compare(const Flags& f, const App& a, const std::vector<std::string>& args,
                std::ostream& out) {
  Command cmd("compare", args);
  const auto& cf = f.compare;
  const DetectorDataset data = read_dataset_csv(cf.dataset);
  cmd.manifest().add_input(cf.dataset);

  PosteriorFit lgf;
  PosteriorFit two;
  json resolved{{"bin_width", cf.bin_width}, {"grid_points", cf.grid_points},
                {"plug_in", cf.plug_in}, {"allow_nonconverged", f.fit.allow_nonconverged}};
  if (!cf.fit_lgf.empty()) {
    lgf = load_fit(cf.fit_lgf, ModelKind::kLgf);
    two = load_fit(cf.fit_two_regime, ModelKind::kTwoRegime);
    cmd.manifest().add_input(cf.fit_lgf);
    cmd.manifest().add_input(cf.fit_two_regime);
  } else {
    const FitConfig config = resolve_fit_config(f.fit, a.compare, f.common.seed);
    const PriorSpec prior = resolve_prior(f.fit);
    RunOptions options;
    options.threads = f.common.threads;
    lgf = run_chains(ModelKind::kLgf, data, prior, config, options);
    two = run_chains(ModelKind::kTwoRegime, data, prior, config, options);
    resolved["fit"] = fit_resolved_config(config, prior, f.common);
  }
  for (const PosteriorFit* fit : {&lgf, &two}) {
    if (!fit->diagnostics.converged && !f.fit.allow_nonconverged) {
      throw NotConverged(std::string(to_string(fit->model_kind)) +
                         " fit did not converge: " + fit->diagnostics.note);
    }
  }

  PredictOptions predict;
  predict.plug_in = cf.plug_in;
  predict.allow_nonconverged = f.fit.allow_nonconverged;
  const ComparisonReport report = compare(data, lgf, two, cf.bin_width, predict);

  const auto x = data.occupancies();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const auto grid = linear_grid(*lo, *hi, cf.grid_points);

  const fs::path dir = f.common.output;
  const fs::path report_path = dir / "comparison.json";
  const fs::path bins_path = dir / "binned_rmse.csv";
  const fs::path curve_lgf = dir / "curve_lgf.csv";
  const fs::path curve_two = dir / "curve_two_regime.csv";
  write_json(report_path, comparison_to_json(report));
  write_text_file(bins_path, binned_rmse_csv(report));
  write_text_file(curve_lgf, curve_csv(predict_mean_curve(lgf, grid, predict)));
  write_text_file(curve_two, curve_csv(predict_mean_curve(two, grid, predict)));
  for (const auto& p : {report_path, bins_path, curve_lgf, curve_two}) cmd.manifest().add_output(p);
  cmd.manifest().resolved_config = resolved;
  cmd.finish(dir / "compare_manifest.json");

  out << "compare: overall RMSE lgf " << report.lgf.overall_rmse << ", two-regime "
      << report.two_regime.overall_rmse << " over " << report.winners.size() << " bins\n";
  return kOk;
}

ModelParams parse_param_list(ModelKind kind, const std::string& text) {
  const auto names = parameter_names(kind);
  std::map<std::string, double> given;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--params expects name=value pairs");
    const std::string name = item.substr(0, eq);
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ValidationError("unknown parameter '" + name + "'");
    }
    try {
      given[name] = std::stod(item.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ValidationError("bad value for parameter '" + name + "'");
    }
  }
  std::vector<double> values;
  for (const auto name : names) {
    const auto it = given.find(std::string(name));
    if (it == given.end()) throw ValidationError("--params is missing '" + std::string(name) + "'");
    values.push_back(it->second);
  }
  return params_from_vector(kind, values);
}

int cmd_simulate(const Flags& f, const App& a, const std::vector<std::string>& args,
                 std::ostream& out) {
  Command cmd("simulate", args);
  const auto& sf = f.simulate;
  SynthSpec spec;
  if (!sf.spec.empty()) {
    std::ifstream in(sf.spec);
    spec = json::parse(in).get<SynthSpec>();
    cmd.manifest().add_input(sf.spec);
    if (a.simulate->count("--seed") > 0) spec.seed = f.common.seed;
    if (a.simulate->count("--n") > 0) spec.n = sf.n;
    if (a.simulate->count("--truncate-negative") > 0) spec.truncate_negative = sf.truncate_negative;
  } else {
    if (sf.params.empty()) throw ValidationError("simulate needs --spec or --params");
    spec.truth = parse_param_list(parse_model_kind(sf.model), sf.params);
    spec.n = sf.n;
    spec.occupancy = OccupancyRange{sf.occupancy_low, sf.occupancy_high};
    spec.seed = f.common.seed;
    spec.truncate_negative = sf.truncate_negative;
  }
  const DetectorDataset data = generate(spec);

  const fs::path dir = f.common.output;
  const fs::path dataset_path = dir / "dataset.csv";
  write_text_file(dataset_path, dataset_csv(data));
  cmd.manifest().resolved_config = json(spec);
  cmd.manifest().add_output(dataset_path);
  cmd.finish(dir / "simulate_manifest.json");
  out << "simulate: wrote " << data.size() << " records to " << dataset_path.string() << "\n";
  return kOk;
}

int dispatch(const Flags& f, const App& a, const std::vector<std::string>& args,
             std::ostream& out, std::ostream& err) {
  const CLI::App* sub = selected(a);
  if (sub == a.ingest) return cmd_ingest(f, args, out);
  if (sub == a.fit) return cmd_fit(f, a, args, out, err);
  if (sub == a.compare) return cmd_compare(f, a, args, out);
  return cmd_simulate(f, a, args, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto flags = std::make_unique<Flags>();
  auto app = std::make_unique<App>();
  try {
    build(*app, *flags);
    parse(*app, args);
    std::vector<std::string> effective = args;
    if (!flags->common.config.empty()) {
      effective = merge_config(args, selected(*app), flags->common.config);
      flags = std::make_unique<Flags>();
      app = std::make_unique<App>();
      build(*app, *flags);
      parse(*app, effective);
    }
    return dispatch(*flags, *app, effective, out, err);
  } catch (const CLI::ParseError& e) {
    const int code = app->app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const CsvSchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    // ValidationError, MixedLanesError and DatasetMismatch all land here.
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace fdbreak::cli
