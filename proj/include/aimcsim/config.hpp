/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aimcsim/objective.hpp"
#include "aimcsim/spcal.hpp"
#include "aimcsim/tile.hpp"
#include "aimcsim/trainer.hpp"

namespace aimcsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  kZsSweep,
  kZsFloor,
  kTrainCompare,
  kPulseBudget,
  kFilterCheck,
};

inline std::string kind_name(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::kZsSweep:
    return "zs_sweep";
  case ExperimentKind::kZsFloor:
    return "zs_floor";
  case ExperimentKind::kTrainCompare:
    return "train_compare";
  case ExperimentKind::kPulseBudget:
    return "pulse_budget";
  case ExperimentKind::kFilterCheck:
    return "filter_check";
  }
  return "unknown";
}

inline ExperimentKind kind_from_name(const std::string &name) {
  if (name == "zs_sweep") {
    return ExperimentKind::kZsSweep;
  }
  if (name == "zs_floor") {
    return ExperimentKind::kZsFloor;
  }
  if (name == "train_compare") {
    return ExperimentKind::kTrainCompare;
  }
  if (name == "pulse_budget") {
    return ExperimentKind::kPulseBudget;
  }
  if (name == "filter_check") {
    return ExperimentKind::kFilterCheck;
  }
  throw ConfigError("unknown experiment kind: " + name);
}

/// Device block: response model, variation spread, granularity grid and tile
/// shape. A prescribed symmetric-point law replaces the nominal slopes when
/// sp_mean/sp_std are given.
struct DeviceSection {
  std::string model = "linear"; ///< "linear" or "constant"
  double alpha_plus = 1.2;
  double alpha_minus = 0.8;
  double tau_max = 1.0;
  double tau_min = 1.0;
  double q0 = 1.0;
  double sigma_d2d = 0.0;
  double sigma_pm = 0.0;
  std::vector<double> dw_min_grid = {1e-3};
  int rows = 1;
  int cols = 1;
  bool prescribed_sp = false;
  double sp_mean = 0.0;
  double sp_std = 0.0;
  double sp_tau = 1.0;
  double init_scale = 0.5;

  TileSpec tile_spec(double dw_min) const {
    TileSpec spec;
    if (model == "linear") {
      spec.model = LinearDevice{alpha_plus, alpha_minus, tau_max, tau_min};
    } else if (model == "constant") {
      spec.model = ConstantSymmetric{q0};
    } else {
      throw ConfigError("unknown device model: " + model);
    }
    spec.variation = DeviceVariationSpec{sigma_d2d, sigma_pm};
    spec.dw_min = dw_min;
    spec.init_scale = init_scale;
    if (prescribed_sp) {
      spec.prescribed_sp = PrescribedSp{sp_mean, sp_std, sp_tau, sigma_d2d};
    }
    return spec;
  }
};

struct ObjectiveSection {
  std::string kind = "quadratic"; ///< "quadratic" or "logistic"
  int dimension = 20;
  double mu = 0.5;
  double l = 2.0;
  double sigma = 0.1;
  int n_samples = 256;
  double lambda = 0.1;
  std::uint64_t seed = 1234;

  std::unique_ptr<Objective> build() const {
    if (kind == "quadratic") {
      return std::make_unique<QuadraticObjective>(dimension, mu, l, sigma,
                                                  seed);
    }
    if (kind == "logistic") {
      return std::make_unique<LogisticObjective>(dimension, n_samples, lambda,
                                                 seed);
    }
    throw ConfigError("unknown objective kind: " + kind);
  }
};

struct TrainerSection {
  std::int64_t iterations = 1000;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> eta;
  double chop_p = 0.0;
  std::string update_mode = "ideal"; ///< "ideal" or "pulsed"
  std::string sync_policy = "on_flip";

  TrainerConfig build(double mu) const {
    TrainerConfig cfg =
        TrainerConfig::default_rates(iterations, mu, gamma.value_or(1.0));
    if (alpha) {
      cfg.alpha = *alpha;
    }
    if (beta) {
      cfg.beta = *beta;
    }
    if (eta) {
      cfg.eta = *eta;
    }
    cfg.chop_p = chop_p;
    if (update_mode == "ideal") {
      cfg.update_mode = UpdateMode::kIdeal;
    } else if (update_mode == "pulsed") {
      cfg.update_mode = UpdateMode::kPulsed;
    } else {
      throw ConfigError("unknown update_mode: " + update_mode);
    }
    if (sync_policy == "on_flip") {
      cfg.sync_policy = SyncPolicy::kOnFlip;
    } else if (sync_policy == "every_step") {
      cfg.sync_policy = SyncPolicy::kEveryStep;
    } else if (sync_policy == "never") {
      cfg.sync_policy = SyncPolicy::kNever;
    } else {
      throw ConfigError("unknown sync_policy: " + sync_policy);
    }
    return cfg;
  }
};

/// One experiment description. Serialization is canonical: JSON with keys in
/// lexicographic order (nlohmann's default object ordering), two-space
/// indent, every field present.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kTrainCompare;
  DeviceSection device;
  ObjectiveSection objective;
  TrainerSection trainer;
  std::vector<std::string> algorithms = {"analog_sgd", "rider"};
  std::vector<std::int64_t> n_grid = {500, 1000, 2000, 4000, 8000};
  double target_rel_error = 0.01;
  std::int64_t zs_floor_steps = 0; ///< 0 sizes from 10 / (mu_q dw_min)
  double target_loss = -1.0;       ///< pulse-budget excess-loss target
  std::int64_t n_zs = -1;          ///< two-stage ZS pulses; -1 auto-sizes
  double zs_target_error = 1e-3;
  bool use_offset = false;
  double offset_mu = 0.0;
  double offset_sigma = 0.0;
  std::vector<double> eta_grid = {0.05, 0.3, 0.7, 1.0};
  int n_freq = 128;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "out";
  std::int64_t decimate = 1;
  int threads = 1;

  void validate() const {
    if (seeds.empty()) {
      throw ConfigError("seed list must be nonempty");
    }
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      for (std::size_t j = i + 1; j < seeds.size(); ++j) {
        if (seeds[i] == seeds[j]) {
          throw ConfigError("seeds must be distinct");
        }
      }
    }
    if (device.dw_min_grid.empty()) {
      throw ConfigError("dw_min grid must be nonempty");
    }
    for (double dw : device.dw_min_grid) {
      if (!(dw > 0.0)) {
        throw ConfigError("dw_min values must be positive");
      }
    }
    if (kind == ExperimentKind::kZsSweep && n_grid.empty()) {
      throw ConfigError("N grid must be nonempty for zs_sweep");
    }
    if (kind == ExperimentKind::kFilterCheck && eta_grid.empty()) {
      throw ConfigError("eta grid must be nonempty for filter_check");
    }
    if ((kind == ExperimentKind::kTrainCompare ||
         kind == ExperimentKind::kPulseBudget) &&
        algorithms.empty()) {
      throw ConfigError("algorithm list must be nonempty");
    }
    if (kind == ExperimentKind::kPulseBudget && !(target_loss > 0.0) &&
        target_loss != -1.0) {
      throw ConfigError("pulse_budget target_loss must be positive");
    }
    if (decimate < 1) {
      throw ConfigError("decimate must be >= 1");
    }
    if (threads < 1) {
      throw ConfigError("threads must be >= 1");
    }
    for (const auto &name : algorithms) {
      algorithm_from_name(name); // throws for unknown names
    }
  }
};

namespace detail {

template <typename T>
void get_to(const nlohmann::json &j, const char *key, T &out) {
  if (j.contains(key)) {
    j.at(key).get_to(out);
  }
}

template <typename T>
void get_opt(const nlohmann::json &j, const char *key,
             std::optional<T> &out) {
  if (j.contains(key) && !j.at(key).is_null()) {
    out = j.at(key).get<T>();
  } else {
    out.reset();
  }
}

} // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig &cfg) {
  nlohmann::json j;
  j["kind"] = kind_name(cfg.kind);
  auto &d = j["device"];
  d["model"] = cfg.device.model;
  d["alpha_plus"] = cfg.device.alpha_plus;
  d["alpha_minus"] = cfg.device.alpha_minus;
  d["tau_max"] = cfg.device.tau_max;
  d["tau_min"] = cfg.device.tau_min;
  d["q0"] = cfg.device.q0;
  d["sigma_d2d"] = cfg.device.sigma_d2d;
  d["sigma_pm"] = cfg.device.sigma_pm;
  d["dw_min_grid"] = cfg.device.dw_min_grid;
  d["rows"] = cfg.device.rows;
  d["cols"] = cfg.device.cols;
  d["prescribed_sp"] = cfg.device.prescribed_sp;
  d["sp_mean"] = cfg.device.sp_mean;
  d["sp_std"] = cfg.device.sp_std;
  d["sp_tau"] = cfg.device.sp_tau;
  d["init_scale"] = cfg.device.init_scale;
  auto &o = j["objective"];
  o["kind"] = cfg.objective.kind;
  o["dimension"] = cfg.objective.dimension;
  o["mu"] = cfg.objective.mu;
  o["l"] = cfg.objective.l;
  o["sigma"] = cfg.objective.sigma;
  o["n_samples"] = cfg.objective.n_samples;
  o["lambda"] = cfg.objective.lambda;
  o["seed"] = cfg.objective.seed;
  auto &t = j["trainer"];
  t["iterations"] = cfg.trainer.iterations;
  t["alpha"] = cfg.trainer.alpha ? nlohmann::json(*cfg.trainer.alpha)
                                 : nlohmann::json(nullptr);
  t["beta"] = cfg.trainer.beta ? nlohmann::json(*cfg.trainer.beta)
                               : nlohmann::json(nullptr);
  t["gamma"] = cfg.trainer.gamma ? nlohmann::json(*cfg.trainer.gamma)
                                 : nlohmann::json(nullptr);
  t["eta"] = cfg.trainer.eta ? nlohmann::json(*cfg.trainer.eta)
                             : nlohmann::json(nullptr);
  t["chop_p"] = cfg.trainer.chop_p;
  t["update_mode"] = cfg.trainer.update_mode;
  t["sync_policy"] = cfg.trainer.sync_policy;
  j["algorithms"] = cfg.algorithms;
  j["n_grid"] = cfg.n_grid;
  j["target_rel_error"] = cfg.target_rel_error;
  j["zs_floor_steps"] = cfg.zs_floor_steps;
  j["target_loss"] = cfg.target_loss;
  j["n_zs"] = cfg.n_zs;
  j["zs_target_error"] = cfg.zs_target_error;
  j["use_offset"] = cfg.use_offset;
  j["offset_mu"] = cfg.offset_mu;
  j["offset_sigma"] = cfg.offset_sigma;
  j["eta_grid"] = cfg.eta_grid;
  j["n_freq"] = cfg.n_freq;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["decimate"] = cfg.decimate;
  j["threads"] = cfg.threads;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json &j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("kind")) {
      cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    }
    if (j.contains("device")) {
      const auto &d = j.at("device");
      detail::get_to(d, "model", cfg.device.model);
      detail::get_to(d, "alpha_plus", cfg.device.alpha_plus);
      detail::get_to(d, "alpha_minus", cfg.device.alpha_minus);
      detail::get_to(d, "tau_max", cfg.device.tau_max);
      detail::get_to(d, "tau_min", cfg.device.tau_min);
      detail::get_to(d, "q0", cfg.device.q0);
      detail::get_to(d, "sigma_d2d", cfg.device.sigma_d2d);
      detail::get_to(d, "sigma_pm", cfg.device.sigma_pm);
      detail::get_to(d, "dw_min_grid", cfg.device.dw_min_grid);
      detail::get_to(d, "rows", cfg.device.rows);
      detail::get_to(d, "cols", cfg.device.cols);
      detail::get_to(d, "prescribed_sp", cfg.device.prescribed_sp);
      detail::get_to(d, "sp_mean", cfg.device.sp_mean);
      detail::get_to(d, "sp_std", cfg.device.sp_std);
      detail::get_to(d, "sp_tau", cfg.device.sp_tau);
      detail::get_to(d, "init_scale", cfg.device.init_scale);
    }
    if (j.contains("objective")) {
      const auto &o = j.at("objective");
      detail::get_to(o, "kind", cfg.objective.kind);
      detail::get_to(o, "dimension", cfg.objective.dimension);
      detail::get_to(o, "mu", cfg.objective.mu);
      detail::get_to(o, "l", cfg.objective.l);
      detail::get_to(o, "sigma", cfg.objective.sigma);
      detail::get_to(o, "n_samples", cfg.objective.n_samples);
      detail::get_to(o, "lambda", cfg.objective.lambda);
      detail::get_to(o, "seed", cfg.objective.seed);
    }
    if (j.contains("trainer")) {
      const auto &t = j.at("trainer");
      detail::get_to(t, "iterations", cfg.trainer.iterations);
      detail::get_opt(t, "alpha", cfg.trainer.alpha);
      detail::get_opt(t, "beta", cfg.trainer.beta);
      detail::get_opt(t, "gamma", cfg.trainer.gamma);
      detail::get_opt(t, "eta", cfg.trainer.eta);
      detail::get_to(t, "chop_p", cfg.trainer.chop_p);
      detail::get_to(t, "update_mode", cfg.trainer.update_mode);
      detail::get_to(t, "sync_policy", cfg.trainer.sync_policy);
    }
    detail::get_to(j, "algorithms", cfg.algorithms);
    detail::get_to(j, "n_grid", cfg.n_grid);
    detail::get_to(j, "target_rel_error", cfg.target_rel_error);
    detail::get_to(j, "zs_floor_steps", cfg.zs_floor_steps);
    detail::get_to(j, "target_loss", cfg.target_loss);
    detail::get_to(j, "n_zs", cfg.n_zs);
    detail::get_to(j, "zs_target_error", cfg.zs_target_error);
    detail::get_to(j, "use_offset", cfg.use_offset);
    detail::get_to(j, "offset_mu", cfg.offset_mu);
    detail::get_to(j, "offset_sigma", cfg.offset_sigma);
    detail::get_to(j, "eta_grid", cfg.eta_grid);
    detail::get_to(j, "n_freq", cfg.n_freq);
    detail::get_to(j, "seeds", cfg.seeds);
    detail::get_to(j, "out_dir", cfg.out_dir);
    detail::get_to(j, "decimate", cfg.decimate);
    detail::get_to(j, "threads", cfg.threads);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::string serialize_config(const ExperimentConfig &cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

inline ExperimentConfig parse_config(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

inline bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
  return config_to_json(a) == config_to_json(b);
}

} // namespace aimcsim
