/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aimcsim/dsp.hpp"
#include "aimcsim/objective.hpp"
#include "aimcsim/spcal.hpp"
#include "aimcsim/tile.hpp"
#include "aimcsim/vec.hpp"

namespace aimcsim {

enum class Algorithm { kAnalogSgd, kRider, kErider, kTwoStage };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
  case Algorithm::kAnalogSgd:
    return "analog_sgd";
  case Algorithm::kRider:
    return "rider";
  case Algorithm::kErider:
    return "erider";
  case Algorithm::kTwoStage:
    return "two_stage";
  }
  return "unknown";
}

inline Algorithm algorithm_from_name(const std::string &name) {
  if (name == "analog_sgd") {
    return Algorithm::kAnalogSgd;
  }
  if (name == "rider") {
    return Algorithm::kRider;
  }
  if (name == "erider") {
    return Algorithm::kErider;
  }
  if (name == "two_stage") {
    return Algorithm::kTwoStage;
  }
  throw std::invalid_argument("unknown algorithm: " + name);
}

enum class SyncPolicy { kOnFlip, kEveryStep, kNever };

struct TrainerConfig {
  double alpha = 0.0;     ///< P-step learning rate
  double beta = 0.0;      ///< W-step rate
  double gamma_mix = 1.0; ///< residual scale
  double eta = 0.0;       ///< moving-average rate
  double chop_p = 0.0;    ///< chopper flip probability
  std::int64_t iterations = 0;
  UpdateMode update_mode = UpdateMode::kIdeal;
  SyncPolicy sync_policy = SyncPolicy::kOnFlip;

  /// Default rates with unit constants: alpha = 1/sqrt(K), beta =
  /// alpha * gamma * mu, eta = alpha * mu, gamma = 1.
  static TrainerConfig default_rates(std::int64_t iterations, double mu,
                                     double gamma = 1.0) {
    TrainerConfig cfg;
    cfg.iterations = iterations;
    cfg.gamma_mix = gamma;
    cfg.alpha = 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(
                          iterations, 1)));
    cfg.beta = cfg.alpha * gamma * mu;
    cfg.eta = cfg.alpha * mu;
    return cfg;
  }

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma_mix > 0.0)) {
      throw std::invalid_argument("trainer rates must be positive");
    }
    if (!(eta > 0.0) || eta > 1.0) {
      throw std::invalid_argument("eta must be in (0, 1]");
    }
    if (chop_p < 0.0 || chop_p >= 1.0) {
      throw std::invalid_argument("chop_p must be in [0, 1)");
    }
    if (iterations < 0) {
      throw std::invalid_argument("iterations must be nonnegative");
    }
  }
};

/// Coupled state of one training run. P, W and the analog reference copy
/// Qtilde live on analog tiles (vectors stored as 1 x D tiles); Q is kept in
/// exact digital arithmetic. Gradient sampling, chopping and pulse rounding
/// draw from separate streams so that degenerate configurations (chop_p = 0,
/// every-step sync) reproduce each other bit-exactly.
struct TrainerState {
  AnalogTile p_tile;
  AnalogTile w_tile;
  AnalogTile qtilde_tile;
  std::vector<double> q;
  ChopperState chopper;
  RngStream grad_rng;
  RngStream aux_rng; ///< calibration / reference sampling
  std::int64_t step_count = 0;
  std::uint64_t pulse_base = 0;

  TrainerState(AnalogTile p, AnalogTile w, AnalogTile qtilde, double chop_p,
               std::uint64_t run_seed)
      : p_tile(std::move(p)), w_tile(std::move(w)),
        qtilde_tile(std::move(qtilde)),
        chopper(chop_p, derive_seed(run_seed, 11)),
        grad_rng(derive_seed(run_seed, 10)),
        aux_rng(derive_seed(run_seed, 12)) {
    q.assign(p_tile.weights().begin(), p_tile.weights().end());
    qtilde_tile.set_weights(q);
    pulse_base = pulses_total();
  }

  std::uint64_t pulses_total() const {
    return p_tile.pulse_counter() + w_tile.pulse_counter() +
           qtilde_tile.pulse_counter();
  }

  std::uint64_t pulses_used() const { return pulses_total() - pulse_base; }
};

/// One step of plain analog SGD: the analog update applied to W with
/// increment -alpha * grad f(W; xi). Exhibits the symmetric-point drift bias
/// whenever G(W) != 0.
inline void analog_sgd_step(TrainerState &st, const Objective &obj,
                            const TrainerConfig &cfg) {
  const int d = obj.dimension();
  std::vector<double> g(d);
  obj.grad_sample(st.w_tile.weights(), st.grad_rng, g);
  std::vector<double> delta(d);
  for (int i = 0; i < d; ++i) {
    delta[i] = -cfg.alpha * g[i];
  }
  st.w_tile.apply_update(delta, cfg.update_mode);
  ++st.step_count;
}

namespace detail {

/// Shared body of the RIDER recursion (and the frozen-reference variant used
/// by the two-stage baseline):
///   1. Wbar_k = W_k + gamma (P_k - Q_k), Q read digitally
///   2. sample grad f(Wbar_k; xi_k)
///   3. P_{k+1} <- analog update of P with -alpha * grad
///   4. Q_{k+1} = (1-eta) Q_k + eta P_{k+1}   (digital, skipped when frozen)
///   5. W_{k+1} <- analog update of W with beta (P_{k+1} - Q_k)
/// The W update uses the pre-update Q_k.
inline void residual_step(TrainerState &st, const Objective &obj,
                          const TrainerConfig &cfg, bool update_q) {
  const int d = obj.dimension();
  const auto p = st.p_tile.weights();
  const auto w = st.w_tile.weights();

  std::vector<double> wbar(d);
  for (int i = 0; i < d; ++i) {
    wbar[i] = w[i] + cfg.gamma_mix * (p[i] - st.q[i]);
  }
  std::vector<double> g(d);
  obj.grad_sample(wbar, st.grad_rng, g);

  std::vector<double> delta_p(d);
  for (int i = 0; i < d; ++i) {
    delta_p[i] = -cfg.alpha * g[i];
  }
  st.p_tile.apply_update(delta_p, cfg.update_mode);

  const auto p_next = st.p_tile.weights();
  std::vector<double> q_old = st.q;
  if (update_q) {
    for (int i = 0; i < d; ++i) {
      st.q[i] = (1.0 - cfg.eta) * st.q[i] + cfg.eta * p_next[i];
    }
  }

  std::vector<double> delta_w(d);
  for (int i = 0; i < d; ++i) {
    delta_w[i] = cfg.beta * (p_next[i] - q_old[i]);
  }
  st.w_tile.apply_update(delta_w, cfg.update_mode);
  ++st.step_count;
}

} // namespace detail

inline void rider_step(TrainerState &st, const Objective &obj,
                       const TrainerConfig &cfg) {
  detail::residual_step(st, obj, cfg, true);
}

/// One step of the chopped variant. The chopper sign c_k flips with
/// probability chop_p; on a flip the analog reference copy Qtilde is
/// corrected from the digital Q by exact programming (under every-step
/// synchronization the write happens after the Q update instead, so Qtilde
/// always holds Q_k when step k reads it). The mixed weight and both analog
/// reads use Qtilde:
///   Wbar_k = W_k + gamma c_k (P_k - Qtilde_k)
///   P_{k+1} <- analog update with -alpha c_k grad f(Wbar_k; xi_k)
///   Q_{k+1} = (1-eta) Q_k + eta P_{k+1}
///   W_{k+1} <- analog update with beta c_k (P_{k+1} - Qtilde_k)
/// Note |c_k grad| = |grad|: the drift toward the symmetric point is
/// chop-invariant while the gradient component alternates sign.
inline void erider_step(TrainerState &st, const Objective &obj,
                        const TrainerConfig &cfg,
                        std::optional<int> chopper_override = {}) {
  const int d = obj.dimension();
  const int prev_sign = st.chopper.sign;
  int c = 0;
  if (chopper_override) {
    c = *chopper_override;
    st.chopper.sign = c;
  } else {
    c = chopper_next(st.chopper);
  }
  const bool flipped = c != prev_sign;

  if (cfg.sync_policy == SyncPolicy::kOnFlip && flipped) {
    st.qtilde_tile.set_weights(st.q);
  }

  const auto p = st.p_tile.weights();
  const auto w = st.w_tile.weights();
  const auto qt = st.qtilde_tile.weights();

  std::vector<double> wbar(d);
  for (int i = 0; i < d; ++i) {
    wbar[i] = w[i] + cfg.gamma_mix * c * (p[i] - qt[i]);
  }
  std::vector<double> g(d);
  obj.grad_sample(wbar, st.grad_rng, g);

  std::vector<double> delta_p(d);
  for (int i = 0; i < d; ++i) {
    delta_p[i] = -cfg.alpha * c * g[i];
  }
  st.p_tile.apply_update(delta_p, cfg.update_mode);

  const auto p_next = st.p_tile.weights();
  for (int i = 0; i < d; ++i) {
    st.q[i] = (1.0 - cfg.eta) * st.q[i] + cfg.eta * p_next[i];
  }

  std::vector<double> delta_w(d);
  for (int i = 0; i < d; ++i) {
    delta_w[i] = cfg.beta * c * (p_next[i] - qt[i]);
  }
  st.w_tile.apply_update(delta_w, cfg.update_mode);

  if (cfg.sync_policy == SyncPolicy::kEveryStep) {
    st.qtilde_tile.set_weights(st.q);
  }
  ++st.step_count;
}

/// Per-iteration metrics. Distances are squared norms over the full vector;
/// mean_gp_sq is |G_p(P_k)|^2 averaged per element. For analog SGD (which has
/// no P/Q sequences) the P/Q columns are zero and the G column reports the W
/// device instead.
struct RunRow {
  std::int64_t k = 0;
  double loss = 0.0;         ///< f(Wbar_k)
  double dist_w_sq = 0.0;    ///< |W_k - W*|^2
  double q_sp_dist_sq = 0.0; ///< |Q_k - w_sp|^2
  double pq_dist_sq = 0.0;   ///< |P_k - Q_k|^2
  double mean_gp_sq = 0.0;   ///< mean |G_p(P_k)|^2
  std::uint64_t pulses = 0;  ///< pulse cycles consumed so far
};

struct RunRecord {
  Algorithm algorithm = Algorithm::kAnalogSgd;
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  int dimension = 0;
  std::vector<RunRow> rows;
  /// Average over k < K of |W_k - W*|^2 + |P_k - Q_k|^2 + |G_p(P_k)|^2
  /// (unit constants on the P and G terms).
  double e_k = 0.0;
  std::uint64_t total_pulses = 0;
  std::uint64_t calibration_pulses = 0;
  std::int64_t steps_to_target = -1; ///< -1 when the target was never reached
  std::uint64_t pulses_to_target = 0;
  double bl_pulses_to_target = -1.0;
  std::vector<double> true_sp; ///< P-device symmetric points
};

struct RunOptions {
  std::int64_t record_stride = 1;
  std::optional<double> target_excess_loss;
  double bl_constant = 5.0; ///< average pulse length for the BL-style budget
  std::int64_t n_zs = -1;   ///< two-stage: ZS pulses; -1 sizes from zs_target
  double zs_target_error = 1e-3; ///< two-stage auto-sizing target (sq. norm)
  std::optional<OffsetModel> offset; ///< two-stage: simulated reference
};

/// Executes K steps of one algorithm, recording metrics before each step and
/// after the last one. Rows are decimated by record_stride but k = 0 and
/// k = K are always present; E_K is accumulated over every k < K regardless
/// of decimation. Deterministic per seed.
class TrainingRun {
public:
  TrainingRun(Algorithm alg, TrainerState state, const Objective &obj,
              TrainerConfig cfg)
      : alg_(alg), st_(std::move(state)), obj_(obj), cfg_(std::move(cfg)) {
    cfg_.validate();
    sp_ = st_.p_tile.symmetric_point();
  }

  TrainerState &state() { return st_; }

  RunRecord execute(const RunOptions &opts) {
    RunRecord rec;
    rec.algorithm = alg_;
    rec.iterations = cfg_.iterations;
    rec.dimension = obj_.dimension();
    rec.true_sp = sp_;

    if (alg_ == Algorithm::kTwoStage) {
      run_calibration(opts, rec);
    }

    double ek_sum = 0.0;
    const std::int64_t k_max = cfg_.iterations;
    for (std::int64_t k = 0; k <= k_max; ++k) {
      const RunRow row = current_row();
      if (k < k_max) {
        ek_sum += row.dist_w_sq + row.pq_dist_sq +
                  row.mean_gp_sq * obj_.dimension();
      }
      if (opts.target_excess_loss && rec.steps_to_target < 0 &&
          row.loss - obj_.optimum_value() <= *opts.target_excess_loss) {
        rec.steps_to_target = k;
        rec.pulses_to_target = row.pulses;
        rec.bl_pulses_to_target =
            static_cast<double>(rec.calibration_pulses) +
            static_cast<double>(k) * opts.bl_constant;
      }
      if (k % std::max<std::int64_t>(opts.record_stride, 1) == 0 ||
          k == k_max) {
        rec.rows.push_back(row);
      }
      if (k < k_max) {
        step();
      }
    }
    rec.e_k = k_max > 0 ? ek_sum / static_cast<double>(k_max) : 0.0;
    rec.total_pulses = st_.pulses_used();
    return rec;
  }

private:
  void run_calibration(const RunOptions &opts, RunRecord &rec) {
    const std::uint64_t before = st_.pulses_used();
    if (opts.offset) {
      // Imperfect calibration: program the believed SP onto P and freeze it.
      const auto ref = make_reference(sp_, *opts.offset, st_.aux_rng);
      st_.p_tile.set_weights(ref);
    } else {
      std::int64_t n = opts.n_zs;
      if (n < 0) {
        n = zs_pulses_for_target(st_.p_tile, opts.zs_target_error);
      }
      zs_stochastic(st_.p_tile, n, st_.aux_rng);
    }
    st_.q.assign(st_.p_tile.weights().begin(), st_.p_tile.weights().end());
    st_.qtilde_tile.set_weights(st_.q);
    rec.calibration_pulses = st_.pulses_used() - before;
  }

  void step() {
    switch (alg_) {
    case Algorithm::kAnalogSgd:
      analog_sgd_step(st_, obj_, cfg_);
      break;
    case Algorithm::kRider:
      rider_step(st_, obj_, cfg_);
      break;
    case Algorithm::kErider:
      erider_step(st_, obj_, cfg_);
      break;
    case Algorithm::kTwoStage:
      detail::residual_step(st_, obj_, cfg_, false);
      break;
    }
  }

  RunRow current_row() const {
    const int d = obj_.dimension();
    RunRow row;
    row.k = st_.step_count;
    row.pulses = st_.pulses_used();

    const auto w = st_.w_tile.weights();
    const auto p = st_.p_tile.weights();
    std::vector<double> wbar(w.begin(), w.end());
    switch (alg_) {
    case Algorithm::kAnalogSgd:
      break;
    case Algorithm::kRider:
    case Algorithm::kTwoStage:
      for (int i = 0; i < d; ++i) {
        wbar[i] += cfg_.gamma_mix * (p[i] - st_.q[i]);
      }
      break;
    case Algorithm::kErider: {
      const auto qt = st_.qtilde_tile.weights();
      for (int i = 0; i < d; ++i) {
        wbar[i] += cfg_.gamma_mix * st_.chopper.sign * (p[i] - qt[i]);
      }
      break;
    }
    }

    row.loss = obj_.value(wbar);
    row.dist_w_sq = dist_sq(w, obj_.optimum());
    if (alg_ == Algorithm::kAnalogSgd) {
      row.mean_gp_sq = st_.w_tile.mean_g_sq();
    } else {
      row.q_sp_dist_sq = dist_sq(st_.q, sp_);
      row.pq_dist_sq = dist_sq(p, st_.q);
      row.mean_gp_sq = st_.p_tile.mean_g_sq();
    }
    return row;
  }

  Algorithm alg_;
  TrainerState st_;
  const Objective &obj_;
  TrainerConfig cfg_;
  std::vector<double> sp_;
};

/// Builds the three tiles (independent parameter draws), assembles the
/// trainer state and executes one run. Substream indices: 0/1/2 for the
/// P/W/Qtilde tiles, 10/11/12 for gradient/chopper/calibration draws.
inline RunRecord run(Algorithm alg, const TileSpec &device,
                     const Objective &obj, const TrainerConfig &cfg,
                     std::uint64_t seed, const RunOptions &opts = {}) {
  const int d = obj.dimension();
  AnalogTile p = build_tile(device, 1, d, derive_seed(seed, 0));
  AnalogTile w = build_tile(device, 1, d, derive_seed(seed, 1));
  AnalogTile qt = build_tile(device, 1, d, derive_seed(seed, 2));
  TrainerState state(std::move(p), std::move(w), std::move(qt), cfg.chop_p,
                     seed);
  TrainingRun runner(alg, std::move(state), obj, cfg);
  RunRecord rec = runner.execute(opts);
  rec.seed = seed;
  return rec;
}

/// Two-stage baseline as a standalone entry point: ZS calibration on the P
/// device (or a simulated reference when an offset model is supplied), then
/// the residual recursion with the reference frozen.
inline RunRecord two_stage_train(const TileSpec &device, const Objective &obj,
                                 const TrainerConfig &cfg, std::int64_t n_zs,
                                 const std::optional<OffsetModel> &offset,
                                 std::uint64_t seed, RunOptions opts = {}) {
  opts.n_zs = n_zs;
  opts.offset = offset;
  return run(Algorithm::kTwoStage, device, obj, cfg, seed, opts);
}

} // namespace aimcsim
