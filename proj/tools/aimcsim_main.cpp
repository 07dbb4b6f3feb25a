/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aimcsim/experiments.hpp"

namespace {

using namespace aimcsim;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  int threads = 0;
  std::int64_t decimate = 0;
};

void add_common(CLI::App *cmd, CommonOpts &opts, bool config_required = true) {
  auto *c = cmd->add_option("--config", opts.config_path, "config file (JSON)");
  if (config_required) {
    c->required();
  }
  cmd->add_option("--out", opts.out_dir, "output directory override");
  cmd->add_option("--seeds", opts.seeds, "comma-separated seed list override");
  cmd->add_option("--threads", opts.threads, "worker thread override");
  cmd->add_option("--decimate", opts.decimate, "record-stride override");
}

std::vector<std::uint64_t> parse_seed_list(const std::string &text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) {
      seeds.push_back(std::stoull(tok));
    }
  }
  if (seeds.empty()) {
    throw ConfigError("empty seed list");
  }
  return seeds;
}

ExperimentConfig load_with_overrides(const CommonOpts &opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (!opts.out_dir.empty()) {
    cfg.out_dir = opts.out_dir;
  }
  if (!opts.seeds.empty()) {
    cfg.seeds = parse_seed_list(opts.seeds);
  }
  if (opts.threads > 0) {
    cfg.threads = opts.threads;
  }
  if (opts.decimate > 0) {
    cfg.decimate = opts.decimate;
  }
  cfg.validate();
  return cfg;
}

nlohmann::json result_to_json(const AnalysisResult &res) {
  nlohmann::json j;
  j["check"] = res.check;
  j["value"] = res.value;
  j["band_lo"] = res.band_lo;
  j["band_hi"] = res.band_hi;
  j["pass"] = res.pass;
  j["fit"] = {{"slope", res.fit.slope},
              {"intercept", res.fit.intercept},
              {"slope_stderr", res.fit.slope_stderr},
              {"ci95_lo", res.fit.ci95_lo},
              {"ci95_hi", res.fit.ci95_hi},
              {"n", res.fit.n}};
  j["extra"] = res.extra;
  auto &pts = j["points"] = nlohmann::json::array();
  for (const auto &[x, y] : res.points) {
    pts.push_back({x, y});
  }
  return j;
}

int cmd_calibrate(const CommonOpts &opts) {
  const ExperimentConfig cfg = load_with_overrides(opts);
  if (cfg.kind == ExperimentKind::kZsFloor) {
    const auto cells = run_zs_floor(cfg);
    write_floor_csv(cells, cfg);
    std::cout << "wrote " << cfg.out_dir << "/floor_trace.csv and "
              << cfg.out_dir << "/floor_summary.csv (" << cells.size()
              << " cells)\n";
    return 0;
  }
  if (cfg.kind != ExperimentKind::kZsSweep) {
    throw ConfigError("calibrate expects a zs_sweep or zs_floor config");
  }
  const auto sweep = calibrate_sweep(cfg);
  write_calibration_csv(sweep, cfg);
  std::cout << "wrote " << cfg.out_dir << "/calibrate.csv ("
            << sweep.cells.size() << " cells) and calibrate_minimal_n.csv\n";
  for (const auto &[dw, n] : sweep.minimal_n) {
    std::cout << "  dw_min=" << format_double(dw) << " minimal_n=" << n
              << "\n";
  }
  return 0;
}

int cmd_train(const CommonOpts &opts) {
  const ExperimentConfig cfg = load_with_overrides(opts);
  if (cfg.kind != ExperimentKind::kTrainCompare) {
    throw ConfigError("train expects a train_compare config");
  }
  const auto records = run_train_compare(cfg);
  write_train_csv(records, cfg);
  std::cout << "wrote " << records.size() << " run records and "
            << cfg.out_dir << "/train_summary.csv\n";
  return 0;
}

int cmd_pulse_budget(const CommonOpts &opts) {
  const ExperimentConfig cfg = load_with_overrides(opts);
  if (cfg.kind != ExperimentKind::kPulseBudget) {
    throw ConfigError("pulse-budget expects a pulse_budget config");
  }
  if (!(cfg.target_loss > 0.0)) {
    throw ConfigError("pulse_budget requires a positive target_loss");
  }
  const auto records = run_train_compare(cfg);
  write_budget_csv(records, cfg);
  std::cout << "wrote " << cfg.out_dir << "/pulse_budget.csv\n";
  for (const auto &rec : records) {
    std::cout << "  " << algorithm_name(rec.algorithm) << " seed=" << rec.seed;
    if (rec.steps_to_target >= 0) {
      std::cout << " pulses_to_target=" << rec.pulses_to_target
                << " (bl approx " << format_double(rec.bl_pulses_to_target)
                << ")";
    } else {
      std::cout << " FAILED to reach target within K";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_filter_check(const CommonOpts &opts, bool check) {
  const ExperimentConfig cfg = load_with_overrides(opts);
  if (cfg.kind != ExperimentKind::kFilterCheck) {
    throw ConfigError("filter-check expects a filter_check config");
  }
  const auto summary = run_filter_check(cfg);
  bool all_ok = true;
  for (const auto &row : summary) {
    const bool ok = row.max_abs_err <= 1e-9;
    all_ok = all_ok && ok;
    std::cout << "  eta=" << format_double(row.eta)
              << " max_abs_err=" << format_double(row.max_abs_err)
              << (ok ? " OK" : " EXCEEDS 1e-9") << "\n";
  }
  std::cout << "wrote " << cfg.out_dir << "/filter_response.csv\n";
  return check && !all_ok ? 3 : 0;
}

int cmd_analyze(const std::string &kind, const std::vector<std::string> &inputs,
                const std::string &out_dir, bool check) {
  std::vector<AnalysisResult> results;
  if (kind == "granularity_slope") {
    if (inputs.size() != 1) {
      throw AnalysisError("granularity_slope expects one minimal-N CSV");
    }
    results.push_back(analyze_granularity_csv(inputs[0]));
  } else if (kind == "floor_ratio") {
    if (inputs.size() != 1) {
      throw AnalysisError("floor_ratio expects one floor-summary CSV");
    }
    results.push_back(analyze_floor_ratio_csv(inputs[0]));
  } else if (kind == "geometric_rate") {
    if (inputs.size() != 2) {
      throw AnalysisError(
          "geometric_rate expects a floor-trace CSV and a floor-summary CSV");
    }
    results = analyze_geometric_rate_csv(inputs[0], inputs[1]);
  } else {
    throw ConfigError("unknown analysis kind: " + kind);
  }

  nlohmann::json out = nlohmann::json::array();
  bool all_pass = true;
  for (const auto &res : results) {
    out.push_back(result_to_json(res));
    all_pass = all_pass && res.pass;
    std::cout << res.check << ": value=" << format_double(res.value)
              << " band=[" << format_double(res.band_lo) << ", "
              << format_double(res.band_hi) << "] "
              << (res.pass ? "PASS" : "FAIL") << "\n";
  }
  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    std::ofstream f(out_dir + "/analysis_" + kind + ".json");
    f << out.dump(2) << "\n";
  }
  return check && !all_pass ? 3 : 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"analog in-memory training simulator with symmetric-point "
               "tracking"};
  app.require_subcommand(1);

  CommonOpts calibrate_opts;
  auto *calibrate = app.add_subcommand(
      "calibrate", "zero-shifting sweeps (zs_sweep / zs_floor configs)");
  add_common(calibrate, calibrate_opts);

  CommonOpts train_opts;
  auto *train =
      app.add_subcommand("train", "train-and-compare runs (train_compare)");
  add_common(train, train_opts);

  CommonOpts budget_opts;
  auto *budget = app.add_subcommand(
      "pulse-budget", "pulses to reach a target loss (pulse_budget)");
  add_common(budget, budget_opts);

  CommonOpts filter_opts;
  bool filter_check_flag = false;
  auto *filter = app.add_subcommand(
      "filter-check", "moving-average frequency-response validation");
  add_common(filter, filter_opts);
  filter->add_flag("--check", filter_check_flag,
                   "exit 3 when the 1e-9 agreement check fails");

  std::string analyze_kind;
  std::vector<std::string> analyze_inputs;
  std::string analyze_out;
  bool analyze_check = false;
  auto *analyze =
      app.add_subcommand("analyze", "scaling-law fits over emitted CSVs");
  analyze
      ->add_option("--kind", analyze_kind,
                   "granularity_slope | floor_ratio | geometric_rate")
      ->required();
  analyze->add_option("inputs", analyze_inputs, "input CSV files")->required();
  analyze->add_option("--out", analyze_out, "directory for the JSON result");
  analyze->add_flag("--check", analyze_check,
                    "exit 3 when a fitted value leaves its tolerance band");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (calibrate->parsed()) {
      return cmd_calibrate(calibrate_opts);
    }
    if (train->parsed()) {
      return cmd_train(train_opts);
    }
    if (budget->parsed()) {
      return cmd_pulse_budget(budget_opts);
    }
    if (filter->parsed()) {
      return cmd_filter_check(filter_opts, filter_check_flag);
    }
    if (analyze->parsed()) {
      return cmd_analyze(analyze_kind, analyze_inputs, analyze_out,
                         analyze_check);
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const AnalysisError &e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
