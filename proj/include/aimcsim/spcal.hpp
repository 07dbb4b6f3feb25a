/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "aimcsim/tile.hpp"
#include "aimcsim/vec.hpp"

namespace aimcsim {

/// Result of a zero-shifting run. The estimate is the final iterate (or the
/// tail average when requested); pulses_used is the tile's pulse-counter
/// delta over the run. The optional trajectory holds mean |G(W_n)|^2 per
/// element at the recorded steps.
struct SPEstimate {
  std::vector<double> estimate;
  std::uint64_t pulses_used = 0;
  std::vector<std::int64_t> trajectory_steps;
  std::vector<double> trajectory;
};

/// Imperfect-calibration model for the two-stage baseline: the reference is
/// r = w_sp + mu_r + sigma_r * xi with xi standard normal per element.
struct OffsetModel {
  double mu_r = 0.0;
  double sigma_r = 0.0;
};

namespace detail {

inline std::int64_t trajectory_stride(std::int64_t n) {
  return std::max<std::int64_t>(1, n / 1000);
}

} // namespace detail

/// Stochastic zero-shifting: N steps of W <- W + eps * F(W) - |eps| * G(W)
/// with eps uniform on {-dw_min, +dw_min} independently per element and step.
/// The single-step expected drift is -dw_min * G(W), which pulls every
/// element toward its symmetric point.
inline SPEstimate zs_stochastic(AnalogTile &tile, std::int64_t n_pulses,
                                RngStream &rng, bool record_trajectory = false,
                                bool tail_average = false) {
  if (n_pulses < 0) {
    throw std::invalid_argument("pulse count must be nonnegative");
  }
  const std::uint64_t start = tile.pulse_counter();
  const int n = tile.size();
  std::vector<int> signs(n);
  std::vector<double> tail_sum;
  const std::int64_t tail_from = n_pulses - n_pulses / 2;
  const std::int64_t stride = detail::trajectory_stride(n_pulses);

  SPEstimate est;
  for (std::int64_t step = 0; step < n_pulses; ++step) {
    if (record_trajectory && step % stride == 0) {
      est.trajectory_steps.push_back(step);
      est.trajectory.push_back(tile.mean_g_sq());
    }
    for (int i = 0; i < n; ++i) {
      signs[i] = uniform01(rng) < 0.5 ? -1 : 1;
    }
    tile.pulse_step(signs);
    if (tail_average && step + 1 >= tail_from) {
      if (tail_sum.empty()) {
        tail_sum.assign(n, 0.0);
      }
      const auto w = tile.weights();
      for (int i = 0; i < n; ++i) {
        tail_sum[i] += w[i];
      }
    }
  }
  if (record_trajectory) {
    est.trajectory_steps.push_back(n_pulses);
    est.trajectory.push_back(tile.mean_g_sq());
  }

  if (tail_average && !tail_sum.empty()) {
    const double count = static_cast<double>(n_pulses - tail_from + 1);
    est.estimate.resize(n);
    for (int i = 0; i < n; ++i) {
      est.estimate[i] = tail_sum[i] / count;
    }
  } else {
    est.estimate.assign(tile.weights().begin(), tile.weights().end());
  }
  est.pulses_used = tile.pulse_counter() - start;
  return est;
}

/// Cyclic zero-shifting: N deterministic down-then-up pulse pairs. Two runs
/// from identical tiles produce identical outputs.
inline SPEstimate zs_cyclic(AnalogTile &tile, std::int64_t n_pairs,
                            bool record_trajectory = false) {
  if (n_pairs < 0) {
    throw std::invalid_argument("pair count must be nonnegative");
  }
  const std::uint64_t start = tile.pulse_counter();
  const int n = tile.size();
  const std::vector<int> down(n, -1);
  const std::vector<int> up(n, +1);
  const std::int64_t stride = detail::trajectory_stride(2 * n_pairs);

  SPEstimate est;
  for (std::int64_t step = 0; step < 2 * n_pairs; ++step) {
    if (record_trajectory && step % stride == 0) {
      est.trajectory_steps.push_back(step);
      est.trajectory.push_back(tile.mean_g_sq());
    }
    tile.pulse_step(step % 2 == 0 ? down : up);
  }
  if (record_trajectory) {
    est.trajectory_steps.push_back(2 * n_pairs);
    est.trajectory.push_back(tile.mean_g_sq());
  }
  est.estimate.assign(tile.weights().begin(), tile.weights().end());
  est.pulses_used = tile.pulse_counter() - start;
  return est;
}

/// Simulated reference device with a residual calibration offset.
inline std::vector<double> make_reference(std::span<const double> true_sp,
                                          const OffsetModel &offset,
                                          RngStream &rng) {
  std::vector<double> r(true_sp.size());
  for (std::size_t i = 0; i < true_sp.size(); ++i) {
    r[i] = true_sp[i] + offset.mu_r + offset.sigma_r * gauss(rng);
  }
  return r;
}

struct SpErrorStats {
  double mean_offset = 0.0;   ///< mean of (truth - estimate)
  double std_offset = 0.0;    ///< std of (truth - estimate)
  double rel_mean_error = 0.0;
  double mean_g_sq = 0.0;     ///< mean |G(estimate)|^2 per element
  bool rel_error_is_absolute = false; ///< set when mean(truth) == 0
};

inline SpErrorStats sp_error_stats(const AnalogTile &tile,
                                   std::span<const double> estimate,
                                   std::span<const double> truth) {
  if (estimate.size() != truth.size() ||
      estimate.size() != static_cast<std::size_t>(tile.size())) {
    throw std::invalid_argument("sp_error_stats shape mismatch");
  }
  std::vector<double> offset(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    offset[i] = truth[i] - estimate[i];
  }
  SpErrorStats stats;
  stats.mean_offset = mean(offset);
  stats.std_offset = stddev(offset);
  const double truth_mean = mean(truth);
  const double est_mean = mean(estimate);
  if (truth_mean == 0.0) {
    stats.rel_error_is_absolute = true;
    stats.rel_mean_error = std::abs(truth_mean - est_mean);
  } else {
    stats.rel_mean_error = std::abs(truth_mean - est_mean) /
                           std::abs(truth_mean);
  }
  double g_sq = 0.0;
  for (int i = 0; i < tile.size(); ++i) {
    const double g = tile.asymmetric_g(i, estimate[i]);
    g_sq += g * g;
  }
  stats.mean_g_sq = g_sq / static_cast<double>(tile.size());
  return stats;
}

/// Pulse budget for a target SP error delta (squared norm over the tile),
/// from the last-iterate rate of the monotone-device analysis:
/// N = log(2 |W_0 - W_sp|^2 / delta) / (2 mu_q dw_min).
inline std::int64_t zs_pulses_for_target(const AnalogTile &tile,
                                         double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("target error must be positive");
  }
  const auto sp = tile.symmetric_point();
  const double d0 = dist_sq(tile.weights(), sp);
  const double mu = tile.mean_mu_q();
  if (mu <= 0.0) {
    return 1;
  }
  const double n = std::log(std::max(2.0 * d0 / delta, 1.0)) /
                   (2.0 * mu * tile.dw_min());
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n)));
}

} // namespace aimcsim
