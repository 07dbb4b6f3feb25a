/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

// Acceptance suite: end-to-end scaling-law and property checks at desk
// scale. Each test prints one [ACCEPTANCE nn] PASS/FAIL line with the
// measured quantities and its tolerance band.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

#include "aimcsim/experiments.hpp"
#include "aimcsim/objective.hpp"
#include "gtest/gtest.h"

namespace aimcsim {
namespace {

void report(int id, const std::string &name, bool pass,
            const std::string &detail) {
  std::printf("[ACCEPTANCE %02d] %s: %s => %s\n", id, name.c_str(),
              detail.c_str(), pass ? "PASS" : "FAIL");
  std::fflush(stdout);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TileSpec criterion4_device() {
  TileSpec spec;
  spec.dw_min = 1e-3;
  spec.prescribed_sp = PrescribedSp{0.3, 0.2, 1.0, 0.0};
  return spec;
}

// Minimal zero-shifting pulses for 1% relative mean error scale inversely
// with the response granularity: log-log slope in [-1.3, -0.7].
TEST(Acceptance, C01ZsGranularityScaling) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kZsSweep;
  cfg.device.rows = 64;
  cfg.device.cols = 64;
  cfg.device.sigma_d2d = 0.1;
  cfg.device.sigma_pm = 0.05;
  cfg.device.dw_min_grid = {4e-3, 2e-3, 1e-3, 5e-4};
  cfg.n_grid = {250, 500, 1000, 2000, 4000, 8000, 16000, 32000, 64000};
  cfg.seeds = {1, 2, 3};
  cfg.target_rel_error = 0.01;
  cfg.threads = 2;

  const CalibrationSweep sweep = calibrate_sweep(cfg);
  std::vector<std::pair<double, double>> points;
  for (const auto &[dw, n] : sweep.minimal_n) {
    ASSERT_GT(n, 0) << "no grid N reached the 1% target at dw_min=" << dw;
    points.emplace_back(dw, static_cast<double>(n));
  }
  const AnalysisResult res = granularity_slope(points, -1.3, -0.7);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "minimal-N slope vs dw_min = %.3f (band [-1.3, -0.7]), "
                "runtime %.0f s (limit 300)",
                res.value, seconds);
  report(1, "zero-shifting granularity scaling", res.pass && seconds <= 300.0,
         detail);
  EXPECT_TRUE(res.pass) << detail;
  EXPECT_LE(seconds, 300.0);
}

// The zero-shifting error floor (tail average of mean |G|^2) is linear in
// dw_min: adjacent-granularity plateau ratios sit in [1.4, 2.8].
TEST(Acceptance, C02ZsErrorFloorRatios) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::kZsFloor;
  cfg.device.rows = 16;
  cfg.device.cols = 16;
  cfg.device.sigma_d2d = 0.1;
  cfg.device.sigma_pm = 0.05;
  cfg.device.dw_min_grid = {4e-3, 2e-3, 1e-3, 5e-4};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.threads = 2;

  const auto cells = run_zs_floor(cfg);
  std::map<double, std::pair<double, int>> acc;
  for (const auto &cell : cells) {
    acc[cell.dw_min].first += cell.plateau_g_sq;
    acc[cell.dw_min].second += 1;
  }
  std::map<double, double> plateau;
  for (const auto &[dw, sc] : acc) {
    plateau[dw] = sc.first / sc.second;
  }
  const AnalysisResult res = floor_ratio(plateau, 1.4, 2.8);

  std::string ratios;
  for (double r : res.extra) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f ", r);
    ratios += buf;
  }
  report(2, "zero-shifting error-floor ratios", res.pass,
         "plateau ratios per dw_min halving = " + ratios + "(band [1.4, 2.8])");
  EXPECT_TRUE(res.pass);
}

// Last-iterate distance to the symmetric point decays geometrically with
// per-pulse rate near 2 mu_q dw_min (within a factor of 2) down to a floor
// at most 3 x 2 q_max^2 dw_min / mu_q.
TEST(Acceptance, C03ZsGeometricRate) {
  const double dw = 1e-3;
  TileSpec spec;
  spec.model = LinearDevice{1.2, 0.8, 1.0, 1.0};
  spec.dw_min = dw;

  std::map<std::int64_t, std::pair<double, int>> agg;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    AnalogTile tile = build_tile(spec, 1, 512, derive_seed(seed, 0));
    tile.fill_weights(0.8); // far from the SP at 0.2
    const auto sp = tile.symmetric_point();
    RngStream rng(derive_seed(seed, 1));
    std::vector<int> signs(tile.size());
    for (int n = 0;; ++n) {
      if (n % 10 == 0) {
        auto &slot = agg[n];
        slot.first += dist_sq(tile.weights(), sp) / tile.size();
        slot.second += 1;
      }
      if (n == 4000) {
        break;
      }
      for (int i = 0; i < tile.size(); ++i) {
        signs[i] = uniform01(rng) < 0.5 ? -1 : 1;
      }
      tile.pulse_step(signs);
    }
  }
  std::vector<std::pair<double, double>> traj;
  for (const auto &[n, sc] : agg) {
    traj.emplace_back(static_cast<double>(n), sc.first / sc.second);
  }

  AnalogTile probe = build_tile(spec, 1, 1, 0);
  const double mu_q = probe.mu_q(0);
  const double q_max = probe.q_max();
  const AnalysisResult res = geometric_rate(traj, mu_q, dw, 2.0);
  const double floor = res.extra[1];
  const double floor_bound = 3.0 * 2.0 * q_max * q_max * dw / mu_q;
  const bool pass = res.pass && floor <= floor_bound;

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "rate %.2e vs predicted %.2e (factor-2 band), floor %.2e <= "
                "bound %.2e",
                res.value, res.extra[0], floor, floor_bound);
  report(3, "zero-shifting last-iterate geometric rate", pass, detail);
  EXPECT_TRUE(res.pass) << detail;
  EXPECT_LE(floor, floor_bound);
}

// Dynamic-tracking training against the biased analog-SGD baseline on the
// pinned quadratic. This check currently FAILS and is kept as stated
// rather than loosened: with the default rate template (gamma = 1,
// eta = alpha mu, beta = alpha gamma mu) and gradient noise sigma = 0.1,
// the gradient force re-pins the residual P - Q every step, so the
// symmetric-point drift is absorbed into a stall offset of the mixed
// weight instead of pulling Q; the moving average then ratchets away from
// the symmetric point by about (eta/beta) x the integrated W gap, and the
// final floors of the tracker and the baseline coincide. The sign-chopped
// variant breaks that re-pinning and does track the symmetric point on the
// identical setup (check 11), which isolates the failure to the plain
// tracking sequence in this noise regime. No rate-constant choice within
// the template escapes it: the pull-to-SP needs E|grad| mu_q >~ A gamma F
// while the residual excursion needs (W* - W_0)/gamma within the
// conductance bounds, and both cannot hold here.
TEST(Acceptance, C04RiderVsAnalogSgdBias) {
  const int dim = 20;
  const std::int64_t iterations = 16000;
  QuadraticObjective obj(dim, 0.5, 2.0, 0.1, 12);
  const TileSpec spec = criterion4_device();
  const TrainerConfig cfg = TrainerConfig::default_rates(iterations, 0.5);
  RunOptions opts;
  opts.record_stride = iterations;

  std::vector<double> sgd_final;
  std::vector<double> rider_final;
  std::vector<double> q_ratio;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RunRecord s = run(Algorithm::kAnalogSgd, spec, obj, cfg, seed, opts);
    const RunRecord r = run(Algorithm::kRider, spec, obj, cfg, seed, opts);
    sgd_final.push_back(s.rows.back().dist_w_sq);
    rider_final.push_back(r.rows.back().dist_w_sq);
    q_ratio.push_back(r.rows.front().q_sp_dist_sq /
                      r.rows.back().q_sp_dist_sq);
  }
  const double med_sgd = median(sgd_final);
  const double med_rider = median(rider_final);
  const double med_ratio = median(q_ratio);
  const bool pass = med_rider <= med_sgd / 3.0 && med_ratio >= 10.0;

  char detail[320];
  std::snprintf(detail, sizeof(detail),
                "median final |W-W*|^2: tracker %.3e vs sgd %.3e (need <= "
                "sgd/3 = %.3e); median |Q-w_sp|^2 shrink %.1fx (need >= 10x)",
                med_rider, med_sgd, med_sgd / 3.0, med_ratio);
  report(4, "dynamic tracking beats biased analog SGD", pass, detail);
  EXPECT_LE(med_rider, med_sgd / 3.0)
      << "plain tracking stalls at the re-pinned floor here; " << detail;
  EXPECT_GE(med_ratio, 10.0)
      << "the unchopped moving average does not hold the symmetric point "
         "on this setup; "
      << detail;
}

// Total pulse cost to a fixed excess-loss target: dynamic tracking avoids
// the up-front calibration budget of the two-stage baseline. Run in the
// convergent regime (sigma = 0.02, eta constant 0.2) so both methods
// actually reach the target; the comparison itself is the pulse ordering.
TEST(Acceptance, C05PulseBudgetOrdering) {
  const int dim = 20;
  const std::int64_t iterations = 16000;
  const double dw = 2e-4;
  const double target = 10.0 * dw; // excess-loss target
  QuadraticObjective obj(dim, 0.5, 2.0, 0.02, 12);
  TileSpec spec;
  spec.dw_min = dw;
  spec.prescribed_sp = PrescribedSp{0.3, 0.2, 1.0, 0.0};

  TrainerConfig cfg = TrainerConfig::default_rates(iterations, 0.5);
  cfg.update_mode = UpdateMode::kPulsed;
  cfg.eta *= 0.2;

  RunOptions opts;
  opts.record_stride = iterations;
  opts.target_excess_loss = target;

  int wins = 0;
  int rider_reached = 0;
  int two_stage_reached = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RunRecord r = run(Algorithm::kRider, spec, obj, cfg, seed, opts);
    RunOptions ts = opts;
    ts.n_zs = -1;
    ts.zs_target_error = target;
    const RunRecord t = run(Algorithm::kTwoStage, spec, obj, cfg, seed, ts);
    rider_reached += r.steps_to_target >= 0;
    two_stage_reached += t.steps_to_target >= 0;
    if (r.steps_to_target >= 0 && t.steps_to_target >= 0 &&
        r.pulses_to_target < t.pulses_to_target) {
      ++wins;
    }
  }
  const bool pass = wins >= 8;
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "dynamic tracking cheaper in %d/10 seeds (need >= 8); "
                "targets reached: tracking %d/10, two-stage %d/10",
                wins, rider_reached, two_stage_reached);
  report(5, "pulse-budget ordering vs two-stage", pass, detail);
  EXPECT_GE(wins, 8) << detail;
}

// Analytic moving-average frequency response equals the truncated
// impulse-response DTFT to 1e-9 across the band.
TEST(Acceptance, C06FilterResponseExactness) {
  double worst = 0.0;
  for (double eta : {0.05, 0.3, 0.7, 1.0}) {
    const auto emp =
        empirical_frequency_response(eta, 128, default_tap_count(eta));
    for (const auto &[omega, mag] : emp) {
      worst =
          std::max(worst, std::abs(mag - ma_frequency_response(eta, omega)));
    }
  }
  const bool pass = worst <= 1e-9;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |analytic - empirical| = %.2e (tol 1e-9, 128 "
                "frequencies, eta in {0.05, 0.3, 0.7, 1.0})",
                worst);
  report(6, "low-pass filter response exactness", pass, detail);
  EXPECT_LE(worst, 1e-9);
}

// Moving-average shrinking: for random 5-D configurations with positive
// cosine between P - w_sp and P - Q, some eta on the 0.01..0.99 grid
// strictly shrinks the distance to the SP, 1000/1000 times. Sampling
// keeps the cosine and length ratio bounded away from zero so the grid's
// 0.01 resolution covers the admissible eta interval.
TEST(Acceptance, C07MovingAverageShrink) {
  const int dim = 5;
  RngStream rng(777);
  int successes = 0;
  const int n_configs = 1000;
  for (int c = 0; c < n_configs; ++c) {
    std::vector<double> p(dim);
    std::vector<double> q(dim);
    std::vector<double> sp(dim);
    double cos_theta = 0.0;
    double ratio = 0.0;
    do {
      for (int d = 0; d < dim; ++d) {
        p[d] = gauss(rng);
        q[d] = gauss(rng);
        sp[d] = gauss(rng);
      }
      std::vector<double> a(dim);
      std::vector<double> b(dim);
      for (int d = 0; d < dim; ++d) {
        a[d] = p[d] - sp[d];
        b[d] = p[d] - q[d];
      }
      cos_theta = dot(a, b) / std::sqrt(norm_sq(a) * norm_sq(b));
      ratio = std::sqrt(norm_sq(a) / norm_sq(b));
    } while (!(cos_theta > 0.1) || !(ratio > 0.2));

    const double base = dist_sq(p, sp);
    bool shrunk = false;
    for (int i = 1; i <= 99 && !shrunk; ++i) {
      const double eta = 0.01 * i;
      double next = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double qn = (1.0 - eta) * q[d] + eta * p[d];
        next += (qn - sp[d]) * (qn - sp[d]);
      }
      shrunk = next < base;
    }
    successes += shrunk ? 1 : 0;
  }
  const bool pass = successes == n_configs;
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "strict shrink in %d/%d configurations", successes, n_configs);
  report(7, "moving-average shrink property", pass, detail);
  EXPECT_EQ(successes, n_configs);
}

// At the optimum the mean analog-SGD update per coordinate equals
// -alpha sigma sqrt(2/pi) G(W*) (half-normal mean of the gradient noise),
// within 5% relative error over 1e5 replicates in ideal mode.
TEST(Acceptance, C08AsymmetryBiasIdentity) {
  const int dim = 8;
  const double sigma = 0.1;
  const double alpha = 0.01;
  const double wstar = 0.6;
  TileSpec spec;
  spec.model = LinearDevice{1.2, 0.8, 1.0, 1.0};
  spec.dw_min = 1e-3;
  AnalogTile tile = build_tile(spec, 1, dim, 3);
  tile.fill_weights(wstar);

  // G(0.6) = (0.8 * 1.6 - 1.2 * 0.4) / 2 = 0.4 for this device.
  const double g_at_wstar = tile.asymmetric_g(0, wstar);
  ASSERT_NEAR(g_at_wstar, 0.4, 1e-12);
  const double expected =
      -alpha * sigma * std::sqrt(2.0 / 3.14159265358979323846) * g_at_wstar;

  RngStream rng(99);
  const int n = 100000;
  std::vector<double> delta(dim);
  std::vector<double> sum(dim, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int d = 0; d < dim; ++d) {
      delta[d] = -alpha * sigma * gauss(rng); // grad f(W*) = 0 + sigma z
    }
    const auto incr = tile.ideal_increment(delta);
    for (int d = 0; d < dim; ++d) {
      sum[d] += incr[d];
    }
  }
  double worst_rel = 0.0;
  for (int d = 0; d < dim; ++d) {
    worst_rel = std::max(worst_rel,
                         std::abs(sum[d] / n - expected) / std::abs(expected));
  }
  const bool pass = worst_rel <= 0.05;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "worst per-coordinate relative error %.2f%% (tol 5%%) against "
                "-alpha sigma sqrt(2/pi) G(W*) = %.3e",
                100.0 * worst_rel, expected);
  report(8, "asymmetry-bias identity at the optimum", pass, detail);
  EXPECT_LE(worst_rel, 0.05);
}

// Discretization contract: Var(realized - ideal) scales linearly in dw_min
// (log-log slope 1 +- 0.2) and the mean vanishes within 3 standard errors.
TEST(Acceptance, C09DiscretizationContract) {
  const std::vector<double> dw_grid{1e-3, 2e-3, 4e-3, 8e-3};
  const int n_el = 64;
  const int n_calls = 10000;
  std::vector<double> log_dw;
  std::vector<double> log_var;
  bool mean_ok = true;

  for (double dw : dw_grid) {
    AnalogTile tile(1, n_el, LinearDevice{1.2, 0.8, 1.0, 1.0},
                    DeviceVariationSpec{0.1, 0.05}, dw, 4242);
    const std::vector<double> w0(tile.weights().begin(),
                                 tile.weights().end());
    const std::vector<double> delta(n_el, 1e-4);
    double sum = 0.0;
    double sum_sq = 0.0;
    const double n_samples = static_cast<double>(n_calls) * n_el;
    for (int c = 0; c < n_calls; ++c) {
      tile.set_weights(w0);
      const auto out = tile.apply_update(delta, UpdateMode::kPulsed);
      for (int i = 0; i < n_el; ++i) {
        const double b = out.realized_increment[i] - out.ideal_increment[i];
        sum += b;
        sum_sq += b * b;
      }
    }
    const double mean_b = sum / n_samples;
    const double var_b = sum_sq / n_samples - mean_b * mean_b;
    mean_ok = mean_ok && std::abs(mean_b) <= 3.0 * std::sqrt(var_b / n_samples);
    log_dw.push_back(std::log(dw));
    log_var.push_back(std::log(var_b));
  }
  const LinearFit fit = fit_line(log_dw, log_var);
  const bool pass = std::abs(fit.slope - 1.0) <= 0.2 && mean_ok;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "Var(b) log-log slope vs dw_min = %.3f (band [0.8, 1.2]), "
                "mean within 3 SE of 0: %s",
                fit.slope, mean_ok ? "yes" : "no");
  report(9, "pulse discretization contract", pass, detail);
  EXPECT_NEAR(fit.slope, 1.0, 0.2);
  EXPECT_TRUE(mean_ok);
}

// Degeneracy equivalences: the chopped variant at p = 0 with every-step
// synchronization reproduces the plain tracker bit-exactly, and a
// constant-symmetric device reduces analog SGD to exact digital SGD.
TEST(Acceptance, C10DegeneracyEquivalences) {
  bool bit_exact = true;
  {
    QuadraticObjective obj(8, 0.5, 2.0, 0.1, 3);
    TileSpec spec;
    spec.dw_min = 1e-3;
    spec.prescribed_sp = PrescribedSp{0.3, 0.2, 1.0, 0.0};
    TrainerConfig cfg = TrainerConfig::default_rates(1000, 0.5);
    cfg.update_mode = UpdateMode::kPulsed;
    cfg.chop_p = 0.0;
    cfg.sync_policy = SyncPolicy::kEveryStep;
    const RunRecord rider = run(Algorithm::kRider, spec, obj, cfg, 321);
    const RunRecord erider = run(Algorithm::kErider, spec, obj, cfg, 321);
    for (std::size_t i = 0; i < rider.rows.size(); ++i) {
      bit_exact = bit_exact && rider.rows[i].loss == erider.rows[i].loss &&
                  rider.rows[i].dist_w_sq == erider.rows[i].dist_w_sq &&
                  rider.rows[i].q_sp_dist_sq == erider.rows[i].q_sp_dist_sq &&
                  rider.rows[i].pulses == erider.rows[i].pulses;
    }
  }

  double max_dev = 0.0;
  {
    const int dim = 8;
    QuadraticObjective obj(dim, 0.5, 2.0, 0.0, 21);
    TrainerConfig cfg = TrainerConfig::default_rates(500, 0.5);
    cfg.alpha = 0.2;
    TileSpec spec;
    spec.model = ConstantSymmetric{1.0};
    spec.dw_min = 1e-3;
    AnalogTile p = build_tile(spec, 1, dim, derive_seed(77, 0));
    AnalogTile w = build_tile(spec, 1, dim, derive_seed(77, 1));
    AnalogTile qt = build_tile(spec, 1, dim, derive_seed(77, 2));
    TrainerState st(std::move(p), std::move(w), std::move(qt), 0.0, 77);
    std::vector<double> digital(st.w_tile.weights().begin(),
                                st.w_tile.weights().end());
    std::vector<double> g(dim);
    for (int k = 0; k < 500; ++k) {
      analog_sgd_step(st, obj, cfg);
      obj.grad_exact(digital, g);
      for (int d = 0; d < dim; ++d) {
        digital[d] -= cfg.alpha * g[d];
        max_dev =
            std::max(max_dev, std::abs(st.w_tile.weights()[d] - digital[d]));
      }
    }
  }
  const bool pass = bit_exact && max_dev <= 1e-12;
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "p=0 every-step-sync chopped variant == plain tracker "
                "bit-exactly: %s; symmetric-device SGD vs digital max dev "
                "%.1e (tol 1e-12)",
                bit_exact ? "yes" : "no", max_dev);
  report(10, "degeneracy equivalences", pass, detail);
  EXPECT_TRUE(bit_exact);
  EXPECT_LE(max_dev, 1e-12);
}

// Chopping benefit (soft criterion): the best flip probability in
// {0.05, 0.1, 0.2} tracks the symmetric point at least as well as p = 0
// (non-regression within 10%) on the same setup as check 4. In this noise
// regime the improvement is in fact orders of magnitude.
TEST(Acceptance, C11ChoppingBenefit) {
  const int dim = 20;
  const std::int64_t iterations = 16000;
  QuadraticObjective obj(dim, 0.5, 2.0, 0.1, 12);
  const TileSpec spec = criterion4_device();
  RunOptions opts;
  opts.record_stride = iterations;

  std::map<double, double> mean_final;
  for (double p : {0.0, 0.05, 0.1, 0.2}) {
    TrainerConfig cfg = TrainerConfig::default_rates(iterations, 0.5);
    cfg.chop_p = p;
    cfg.sync_policy = SyncPolicy::kOnFlip;
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      acc += run(Algorithm::kErider, spec, obj, cfg, seed, opts)
                 .rows.back()
                 .q_sp_dist_sq;
    }
    mean_final[p] = acc / 10.0;
  }
  double best_p = 0.05;
  for (double p : {0.05, 0.1, 0.2}) {
    if (mean_final[p] < mean_final[best_p]) {
      best_p = p;
    }
  }
  const bool pass = mean_final[best_p] <= 1.1 * mean_final[0.0];
  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "mean final |Q-w_sp|^2: p=0: %.3e, p=0.05: %.3e, p=0.1: "
                "%.3e, p=0.2: %.3e; best p=%.2f improves %.0fx",
                mean_final[0.0], mean_final[0.05], mean_final[0.1],
                mean_final[0.2], best_p, mean_final[0.0] / mean_final[best_p]);
  report(11, "chopping benefit for SP tracking", pass, detail);
  EXPECT_LE(mean_final[best_p], 1.1 * mean_final[0.0]);
}

} // namespace
} // namespace aimcsim
