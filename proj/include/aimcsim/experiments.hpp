/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "aimcsim/analysis.hpp"
#include "aimcsim/config.hpp"
#include "aimcsim/csv.hpp"
#include "aimcsim/dsp.hpp"
#include "aimcsim/spcal.hpp"
#include "aimcsim/tile.hpp"
#include "aimcsim/trainer.hpp"

namespace aimcsim {

/// Deterministic fan-out: every task writes its own pre-assigned slot, so
/// results do not depend on scheduling. Tasks pull indices from a shared
/// counter.
template <class F>
void parallel_for(std::int64_t n, int threads, F &&f) {
  threads = static_cast<int>(
      std::min<std::int64_t>(std::max(threads, 1), std::max<std::int64_t>(n, 1)));
  if (threads <= 1) {
    for (std::int64_t i = 0; i < n; ++i) {
      f(i);
    }
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n) {
          return;
        }
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
          return;
        }
      }
    });
  }
  for (auto &th : pool) {
    th.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

inline void ensure_out_dir(const std::string &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory: " + dir);
  }
}

/// Tile snapshot: one row per element (row-major) with the weight, the
/// sampled response parameters, the clip range and the closed-form symmetric
/// point; dw_min is repeated per row to keep the table flat.
inline void dump_tile_csv(const AnalogTile &tile, const std::string &path) {
  CsvWriter out(path);
  out.header({"index", "row", "col", "weight", "alpha_plus", "alpha_minus",
              "clip_lo", "clip_hi", "dw_min", "symmetric_point"});
  const auto sp = tile.symmetric_point();
  const auto w = tile.weights();
  for (int i = 0; i < tile.size(); ++i) {
    out.cell(static_cast<std::int64_t>(i));
    out.cell(static_cast<std::int64_t>(i / tile.cols()));
    out.cell(static_cast<std::int64_t>(i % tile.cols()));
    out.cell(w[i]);
    out.cell(tile.alpha_plus(i));
    out.cell(tile.alpha_minus(i));
    out.cell(tile.clip_lo(i));
    out.cell(tile.clip_hi(i));
    out.cell(tile.dw_min());
    out.cell(sp[i]);
    out.end_row();
  }
}

// --------------------------------------------------------------------------
// Calibration sweep (zs_sweep): fresh tile per (dw_min, N, seed) cell.
// --------------------------------------------------------------------------

struct CalibrationCell {
  double dw_min = 0.0;
  std::int64_t n_pulses = 0;
  std::uint64_t seed = 0;
  SpErrorStats stats;
};

struct CalibrationSweep {
  std::vector<CalibrationCell> cells;
  /// Per dw_min, the minimal N from the grid whose seed-averaged relative
  /// mean error meets the target; -1 when no grid N reaches it.
  std::vector<std::pair<double, std::int64_t>> minimal_n;
};

inline CalibrationSweep calibrate_sweep(const ExperimentConfig &cfg) {
  const auto &dws = cfg.device.dw_min_grid;
  const auto &ns = cfg.n_grid;
  const auto &seeds = cfg.seeds;
  const std::int64_t n_cells =
      static_cast<std::int64_t>(dws.size() * ns.size() * seeds.size());

  CalibrationSweep sweep;
  sweep.cells.resize(n_cells);
  parallel_for(n_cells, cfg.threads, [&](std::int64_t idx) {
    const std::size_t seed_idx = idx % seeds.size();
    const std::size_t n_idx = (idx / seeds.size()) % ns.size();
    const std::size_t dw_idx = idx / (seeds.size() * ns.size());
    const std::uint64_t cell_master = derive_seed(seeds[seed_idx], idx);

    AnalogTile tile = build_tile(cfg.device.tile_spec(dws[dw_idx]),
                                 cfg.device.rows, cfg.device.cols,
                                 derive_seed(cell_master, 0));
    RngStream zs_rng(derive_seed(cell_master, 1));
    const auto truth = tile.symmetric_point();
    const auto est = zs_stochastic(tile, ns[n_idx], zs_rng);
    CalibrationCell cell;
    cell.dw_min = dws[dw_idx];
    cell.n_pulses = ns[n_idx];
    cell.seed = seeds[seed_idx];
    cell.stats = sp_error_stats(tile, est.estimate, truth);
    sweep.cells[idx] = cell;
  });

  for (std::size_t dw_idx = 0; dw_idx < dws.size(); ++dw_idx) {
    std::int64_t best = -1;
    for (std::size_t n_idx = 0; n_idx < ns.size() && best < 0; ++n_idx) {
      double err = 0.0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const std::size_t idx =
            (dw_idx * ns.size() + n_idx) * seeds.size() + s;
        err += sweep.cells[idx].stats.rel_mean_error;
      }
      err /= static_cast<double>(seeds.size());
      if (err <= cfg.target_rel_error) {
        best = ns[n_idx];
      }
    }
    sweep.minimal_n.emplace_back(dws[dw_idx], best);
  }
  return sweep;
}

inline void write_calibration_csv(const CalibrationSweep &sweep,
                                  const ExperimentConfig &cfg) {
  ensure_out_dir(cfg.out_dir);
  {
    CsvWriter out(cfg.out_dir + "/calibrate.csv");
    out.header({"dw_min", "n_pulses", "seed", "mean_offset", "std_offset",
                "rel_mean_error", "rel_error_is_absolute", "mean_g_sq"});
    for (const auto &cell : sweep.cells) {
      out.cell(cell.dw_min);
      out.cell(cell.n_pulses);
      out.cell(cell.seed);
      out.cell(cell.stats.mean_offset);
      out.cell(cell.stats.std_offset);
      out.cell(cell.stats.rel_mean_error);
      out.cell(static_cast<std::int64_t>(cell.stats.rel_error_is_absolute));
      out.cell(cell.stats.mean_g_sq);
      out.end_row();
    }
  }
  {
    CsvWriter out(cfg.out_dir + "/calibrate_minimal_n.csv");
    out.header({"dw_min", "minimal_n", "target_rel_error"});
    for (const auto &[dw, n] : sweep.minimal_n) {
      out.cell(dw);
      out.cell(n);
      out.cell(cfg.target_rel_error);
      out.end_row();
    }
  }
}

// --------------------------------------------------------------------------
// Error-floor traces (zs_floor): long ZS runs per (dw_min, seed) recording
// mean |G|^2 and mean (w - w_sp)^2 per element.
// --------------------------------------------------------------------------

struct FloorTracePoint {
  std::int64_t n = 0;
  double mean_g_sq = 0.0;
  double mean_dist_sq = 0.0;
};

struct FloorCell {
  double dw_min = 0.0;
  std::uint64_t seed = 0;
  double plateau_g_sq = 0.0; ///< tail-half average of mean |G(W_n)|^2
  double mu_q_mean = 0.0;
  double q_max = 0.0;
  std::vector<FloorTracePoint> trace;
};

inline FloorCell run_zs_floor_cell(const TileSpec &spec, int rows, int cols,
                                   std::int64_t steps, std::uint64_t seed,
                                   std::int64_t cell_index) {
  const std::uint64_t cell_master = derive_seed(seed, cell_index);
  AnalogTile tile = build_tile(spec, rows, cols, derive_seed(cell_master, 0));
  RngStream rng(derive_seed(cell_master, 1));
  const auto sp = tile.symmetric_point();
  const int n_el = tile.size();
  std::vector<int> signs(n_el);
  const std::int64_t stride = std::max<std::int64_t>(1, steps / 2000);

  FloorCell cell;
  cell.dw_min = spec.dw_min;
  cell.seed = seed;
  cell.mu_q_mean = tile.mean_mu_q();
  cell.q_max = tile.q_max();

  double plateau_sum = 0.0;
  std::int64_t plateau_count = 0;
  for (std::int64_t n = 0; n <= steps; ++n) {
    if (n % stride == 0 || n == steps) {
      FloorTracePoint pt;
      pt.n = n;
      pt.mean_g_sq = tile.mean_g_sq();
      pt.mean_dist_sq =
          dist_sq(tile.weights(), sp) / static_cast<double>(n_el);
      cell.trace.push_back(pt);
      if (n >= steps / 2) {
        plateau_sum += pt.mean_g_sq;
        ++plateau_count;
      }
    }
    if (n == steps) {
      break;
    }
    for (int i = 0; i < n_el; ++i) {
      signs[i] = uniform01(rng) < 0.5 ? -1 : 1;
    }
    tile.pulse_step(signs);
  }
  cell.plateau_g_sq = plateau_sum / static_cast<double>(plateau_count);
  return cell;
}

inline std::vector<FloorCell> run_zs_floor(const ExperimentConfig &cfg) {
  const auto &dws = cfg.device.dw_min_grid;
  const auto &seeds = cfg.seeds;
  const std::int64_t n_cells =
      static_cast<std::int64_t>(dws.size() * seeds.size());
  std::vector<FloorCell> cells(n_cells);
  parallel_for(n_cells, cfg.threads, [&](std::int64_t idx) {
    const std::size_t seed_idx = idx % seeds.size();
    const std::size_t dw_idx = idx / seeds.size();
    const TileSpec spec = cfg.device.tile_spec(dws[dw_idx]);
    std::int64_t steps = cfg.zs_floor_steps;
    if (steps <= 0) {
      // Long enough for several decay time constants at this granularity.
      AnalogTile probe = build_tile(spec, 1, 1, 0);
      const double mu = std::max(probe.mean_mu_q(), 1e-6);
      steps = static_cast<std::int64_t>(10.0 / (mu * dws[dw_idx]));
    }
    cells[idx] = run_zs_floor_cell(spec, cfg.device.rows, cfg.device.cols,
                                   steps, seeds[seed_idx], idx);
  });
  return cells;
}

inline void write_floor_csv(const std::vector<FloorCell> &cells,
                            const ExperimentConfig &cfg) {
  ensure_out_dir(cfg.out_dir);
  {
    CsvWriter out(cfg.out_dir + "/floor_trace.csv");
    out.header({"dw_min", "seed", "n", "mean_g_sq", "mean_dist_sq"});
    for (const auto &cell : cells) {
      for (const auto &pt : cell.trace) {
        out.cell(cell.dw_min);
        out.cell(cell.seed);
        out.cell(pt.n);
        out.cell(pt.mean_g_sq);
        out.cell(pt.mean_dist_sq);
        out.end_row();
      }
    }
  }
  {
    CsvWriter out(cfg.out_dir + "/floor_summary.csv");
    out.header({"dw_min", "seed", "plateau_g_sq", "mu_q_mean", "q_max"});
    for (const auto &cell : cells) {
      out.cell(cell.dw_min);
      out.cell(cell.seed);
      out.cell(cell.plateau_g_sq);
      out.cell(cell.mu_q_mean);
      out.cell(cell.q_max);
      out.end_row();
    }
  }
}

// --------------------------------------------------------------------------
// Training comparison and pulse budgets.
// --------------------------------------------------------------------------

inline RunOptions run_options_from_config(const ExperimentConfig &cfg) {
  RunOptions opts;
  opts.record_stride = cfg.decimate;
  if (cfg.target_loss > 0.0) {
    opts.target_excess_loss = cfg.target_loss;
  }
  opts.n_zs = cfg.n_zs;
  opts.zs_target_error = cfg.zs_target_error;
  if (cfg.use_offset) {
    opts.offset = OffsetModel{cfg.offset_mu, cfg.offset_sigma};
  }
  return opts;
}

inline std::vector<RunRecord> run_train_compare(const ExperimentConfig &cfg) {
  const auto obj = cfg.objective.build();
  const TrainerConfig tcfg = cfg.trainer.build(obj->strong_convexity_mu());
  const TileSpec spec = cfg.device.tile_spec(cfg.device.dw_min_grid.front());
  const RunOptions opts = run_options_from_config(cfg);

  const std::int64_t n_runs =
      static_cast<std::int64_t>(cfg.algorithms.size() * cfg.seeds.size());
  std::vector<RunRecord> records(n_runs);
  parallel_for(n_runs, cfg.threads, [&](std::int64_t idx) {
    const std::size_t seed_idx = idx % cfg.seeds.size();
    const std::size_t alg_idx = idx / cfg.seeds.size();
    const Algorithm alg = algorithm_from_name(cfg.algorithms[alg_idx]);
    records[idx] = run(alg, spec, *obj, tcfg, cfg.seeds[seed_idx], opts);
  });
  return records;
}

inline void write_run_csv(const RunRecord &rec, const std::string &path) {
  CsvWriter out(path);
  out.header({"k", "loss", "dist_w_sq", "q_sp_dist_sq", "pq_dist_sq",
              "mean_gp_sq", "pulses"});
  for (const auto &row : rec.rows) {
    out.cell(row.k);
    out.cell(row.loss);
    out.cell(row.dist_w_sq);
    out.cell(row.q_sp_dist_sq);
    out.cell(row.pq_dist_sq);
    out.cell(row.mean_gp_sq);
    out.cell(row.pulses);
    out.end_row();
  }
}

inline void write_train_csv(const std::vector<RunRecord> &records,
                            const ExperimentConfig &cfg) {
  ensure_out_dir(cfg.out_dir);
  for (const auto &rec : records) {
    write_run_csv(rec, cfg.out_dir + "/run_" + algorithm_name(rec.algorithm) +
                           "_seed" + std::to_string(rec.seed) + ".csv");
  }
  CsvWriter out(cfg.out_dir + "/train_summary.csv");
  out.header({"algorithm", "seed", "e_k", "final_loss", "final_dist_w_sq",
              "final_q_sp_dist_sq", "final_pq_dist_sq", "final_mean_gp_sq",
              "total_pulses", "calibration_pulses"});
  for (const auto &rec : records) {
    const RunRow &last = rec.rows.back();
    out.cell(algorithm_name(rec.algorithm));
    out.cell(rec.seed);
    out.cell(rec.e_k);
    out.cell(last.loss);
    out.cell(last.dist_w_sq);
    out.cell(last.q_sp_dist_sq);
    out.cell(last.pq_dist_sq);
    out.cell(last.mean_gp_sq);
    out.cell(rec.total_pulses);
    out.cell(rec.calibration_pulses);
    out.end_row();
  }
}

inline void write_budget_csv(const std::vector<RunRecord> &records,
                             const ExperimentConfig &cfg) {
  ensure_out_dir(cfg.out_dir);
  CsvWriter out(cfg.out_dir + "/pulse_budget.csv");
  out.header({"algorithm", "seed", "reached", "steps_to_target",
              "pulses_to_target", "bl_pulses_to_target", "calibration_pulses",
              "total_pulses"});
  for (const auto &rec : records) {
    out.cell(algorithm_name(rec.algorithm));
    out.cell(rec.seed);
    out.cell(static_cast<std::int64_t>(rec.steps_to_target >= 0));
    out.cell(rec.steps_to_target);
    out.cell(rec.pulses_to_target);
    out.cell(rec.bl_pulses_to_target);
    out.cell(rec.calibration_pulses);
    out.cell(rec.total_pulses);
    out.end_row();
  }
}

// --------------------------------------------------------------------------
// Filter check.
// --------------------------------------------------------------------------

struct FilterCheckRow {
  double eta = 0.0;
  double max_abs_err = 0.0;
};

inline std::vector<FilterCheckRow>
run_filter_check(const ExperimentConfig &cfg) {
  ensure_out_dir(cfg.out_dir);
  CsvWriter out(cfg.out_dir + "/filter_response.csv");
  out.header({"eta", "omega", "analytic", "empirical", "abs_err"});
  std::vector<FilterCheckRow> summary;
  for (double eta : cfg.eta_grid) {
    const auto emp =
        empirical_frequency_response(eta, cfg.n_freq, default_tap_count(eta));
    double max_err = 0.0;
    for (const auto &[omega, mag] : emp) {
      const double analytic = ma_frequency_response(eta, omega);
      const double err = std::abs(analytic - mag);
      max_err = std::max(max_err, err);
      out.cell(eta);
      out.cell(omega);
      out.cell(analytic);
      out.cell(mag);
      out.cell(err);
      out.end_row();
    }
    summary.push_back({eta, max_err});
  }
  return summary;
}

// --------------------------------------------------------------------------
// CSV-level analysis entry points.
// --------------------------------------------------------------------------

inline AnalysisResult analyze_granularity_csv(const std::string &path,
                                              double band_lo = -1.3,
                                              double band_hi = -0.7) {
  const CsvTable table = read_csv(path);
  const int c_dw = table.column("dw_min");
  const int c_n = table.column("minimal_n");
  if (c_dw < 0 || c_n < 0) {
    throw AnalysisError("granularity CSV needs dw_min and minimal_n columns");
  }
  std::vector<std::pair<double, double>> points;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double n = table.number(r, c_n);
    if (n > 0) {
      points.emplace_back(table.number(r, c_dw), n);
    }
  }
  return granularity_slope(points, band_lo, band_hi);
}

inline AnalysisResult analyze_floor_ratio_csv(const std::string &path,
                                              double band_lo = 1.4,
                                              double band_hi = 2.8) {
  const CsvTable table = read_csv(path);
  const int c_dw = table.column("dw_min");
  const int c_pl = table.column("plateau_g_sq");
  if (c_dw < 0 || c_pl < 0) {
    throw AnalysisError("floor CSV needs dw_min and plateau_g_sq columns");
  }
  std::map<double, std::pair<double, int>> acc;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto &slot = acc[table.number(r, c_dw)];
    slot.first += table.number(r, c_pl);
    slot.second += 1;
  }
  std::map<double, double> plateau;
  for (const auto &[dw, sum_count] : acc) {
    plateau[dw] = sum_count.first / sum_count.second;
  }
  return floor_ratio(plateau, band_lo, band_hi);
}

/// One geometric-rate check per granularity present in the trace CSV, using
/// the seed-averaged distance trajectory and the seed-averaged mu_q from the
/// summary CSV.
inline std::vector<AnalysisResult>
analyze_geometric_rate_csv(const std::string &trace_path,
                           const std::string &summary_path,
                           double rate_factor = 2.0) {
  const CsvTable trace = read_csv(trace_path);
  const CsvTable summary = read_csv(summary_path);
  const int t_dw = trace.column("dw_min");
  const int t_n = trace.column("n");
  const int t_dist = trace.column("mean_dist_sq");
  const int s_dw = summary.column("dw_min");
  const int s_mu = summary.column("mu_q_mean");
  if (t_dw < 0 || t_n < 0 || t_dist < 0 || s_dw < 0 || s_mu < 0) {
    throw AnalysisError("geometric-rate CSVs missing required columns");
  }

  std::map<double, std::pair<double, int>> mu_acc;
  for (std::size_t r = 0; r < summary.rows.size(); ++r) {
    auto &slot = mu_acc[summary.number(r, s_dw)];
    slot.first += summary.number(r, s_mu);
    slot.second += 1;
  }

  std::map<double, std::map<std::int64_t, std::pair<double, int>>> traj;
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const double dw = trace.number(r, t_dw);
    const auto n = static_cast<std::int64_t>(trace.number(r, t_n));
    auto &slot = traj[dw][n];
    slot.first += trace.number(r, t_dist);
    slot.second += 1;
  }

  std::vector<AnalysisResult> results;
  for (const auto &[dw, by_n] : traj) {
    std::vector<std::pair<double, double>> points;
    for (const auto &[n, sum_count] : by_n) {
      points.emplace_back(static_cast<double>(n),
                          sum_count.first / sum_count.second);
    }
    const auto mu_it = mu_acc.find(dw);
    if (mu_it == mu_acc.end()) {
      throw AnalysisError("no mu_q summary entry for a trace granularity");
    }
    const double mu = mu_it->second.first / mu_it->second.second;
    results.push_back(geometric_rate(points, mu, dw, rate_factor));
  }
  return results;
}

} // namespace aimcsim
