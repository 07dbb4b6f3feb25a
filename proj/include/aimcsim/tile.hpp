/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aimcsim/response.hpp"
#include "aimcsim/rng.hpp"

namespace aimcsim {

enum class DeviceKind { kLinear, kConstantSymmetric };

enum class UpdateMode { kIdeal, kPulsed };

/// Instrumentation returned by AnalogTile::apply_update. The ideal increment
/// is the noiseless analog update dW * F(W) - |dW| * G(W); the realized
/// increment is the change actually applied to the weights (after pulse
/// discretization and clipping). Pulses are counted as parallel pulse cycles:
/// one cycle addresses every element of the tile at once, so a call emits
/// max_d n_d cycles when element d receives n_d pulses.
struct UpdateOutcome {
  std::vector<double> ideal_increment;
  std::vector<double> realized_increment;
  std::uint64_t pulses_emitted = 0;
  std::int64_t clip_events = 0;
};

/// A matrix of analog weights with per-element response parameters, the unit
/// on which all pulse updates act. Single-owner mutable state; all randomness
/// (parameter sampling, weight init, stochastic pulse rounding) comes from the
/// tile's own stream so a fixed seed reproduces the tile bit-exactly.
class AnalogTile {
public:
  AnalogTile(int rows, int cols, const ResponseModel &model,
             const DeviceVariationSpec &variation, double dw_min,
             std::uint64_t seed, double init_scale = 0.5)
      : rows_(rows), cols_(cols), dw_min_(dw_min),
        rng_(derive_seed(seed, 0)) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("tile dimensions must be >= 1");
    }
    if (!(dw_min > 0.0)) {
      throw std::invalid_argument("dw_min must be positive");
    }
    if (init_scale < 0.0 || init_scale > 1.0) {
      throw std::invalid_argument("init_scale must be in [0, 1]");
    }
    validate_model(model);
    validate_variation(variation);

    const int n = rows_ * cols_;
    alpha_plus_.resize(n);
    alpha_minus_.resize(n);
    clip_lo_.resize(n);
    clip_hi_.resize(n);
    weights_.resize(n);

    if (const auto *lin = std::get_if<LinearDevice>(&model)) {
      kind_ = DeviceKind::kLinear;
      tau_max_ = lin->tau_max;
      tau_min_ = lin->tau_min;
      for (int i = 0; i < n; ++i) {
        double ap = 0.0;
        double am = 0.0;
        do {
          const double g = std::exp(variation.sigma_d2d * gauss(rng_));
          const double r = variation.sigma_pm * gauss(rng_);
          ap = lin->alpha_plus * g + r;
          am = lin->alpha_minus * g - r;
        } while (ap <= 0.0 || am <= 0.0);
        alpha_plus_[i] = ap;
        alpha_minus_[i] = am;
        clip_lo_[i] = -tau_min_;
        clip_hi_[i] = tau_max_;
      }
    } else {
      kind_ = DeviceKind::kConstantSymmetric;
      const double q0 = std::get<ConstantSymmetric>(model).q0;
      // sigma_pm does not apply: the device stays symmetric by definition.
      for (int i = 0; i < n; ++i) {
        const double g = std::exp(variation.sigma_d2d * gauss(rng_));
        alpha_plus_[i] = q0 * g;
        alpha_minus_[i] = q0 * g;
        clip_lo_[i] = -kConstantDeviceBound;
        clip_hi_[i] = kConstantDeviceBound;
      }
    }

    for (int i = 0; i < n; ++i) {
      std::uniform_real_distribution<double> init(init_scale * clip_lo_[i],
                                                  init_scale * clip_hi_[i]);
      weights_[i] = init(rng_);
    }
  }

  /// Builds a linear tile whose per-element symmetric points follow a
  /// prescribed normal law: each element draws sp ~ N(sp_mean, sp_std^2)
  /// (resampled until |sp| <= 0.9 tau) and gets alpha_plus = g (1 + sp/tau),
  /// alpha_minus = g (1 - sp/tau) so its SP is exactly sp.
  static AnalogTile with_symmetric_points(int rows, int cols, double sp_mean,
                                          double sp_std, double tau,
                                          double dw_min, std::uint64_t seed,
                                          double sigma_d2d = 0.0,
                                          double init_scale = 0.5) {
    if (!(tau > 0.0) || sp_std < 0.0) {
      throw std::invalid_argument("tau must be positive, sp_std nonnegative");
    }
    AnalogTile tile(rows, cols, LinearDevice{1.0, 1.0, tau, tau},
                    DeviceVariationSpec{}, dw_min, seed, init_scale);
    RngStream sp_rng(derive_seed(seed, 1));
    const int n = rows * cols;
    for (int i = 0; i < n; ++i) {
      double sp = 0.0;
      do {
        sp = sp_mean + sp_std * gauss(sp_rng);
      } while (std::abs(sp) > 0.9 * tau);
      const double g = std::exp(sigma_d2d * gauss(sp_rng));
      tile.alpha_plus_[i] = g * (1.0 + sp / tau);
      tile.alpha_minus_[i] = g * (1.0 - sp / tau);
    }
    return tile;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  double dw_min() const { return dw_min_; }
  DeviceKind kind() const { return kind_; }
  std::uint64_t pulse_counter() const { return pulse_counter_; }
  std::int64_t clip_counter() const { return clip_counter_; }
  RngStream &rng() { return rng_; }

  std::span<const double> weights() const { return weights_; }

  /// Exact weight programming (digital-to-analog writes carry no noise);
  /// values are clamped into the physical clip range.
  void set_weights(std::span<const double> w) {
    check_shape(w.size());
    for (int i = 0; i < size(); ++i) {
      weights_[i] = std::clamp(w[i], clip_lo_[i], clip_hi_[i]);
    }
  }

  void fill_weights(double value) {
    for (int i = 0; i < size(); ++i) {
      weights_[i] = std::clamp(value, clip_lo_[i], clip_hi_[i]);
    }
  }

  double alpha_plus(int i) const { return alpha_plus_[i]; }
  double alpha_minus(int i) const { return alpha_minus_[i]; }
  double tau_max() const { return tau_max_; }
  double tau_min() const { return tau_min_; }
  double clip_lo(int i) const { return clip_lo_[i]; }
  double clip_hi(int i) const { return clip_hi_[i]; }

  double q_plus(int i, double w) const {
    return kind_ == DeviceKind::kLinear
               ? alpha_plus_[i] * (1.0 - w / tau_max_)
               : alpha_plus_[i];
  }

  double q_minus(int i, double w) const {
    return kind_ == DeviceKind::kLinear
               ? alpha_minus_[i] * (1.0 + w / tau_min_)
               : alpha_minus_[i];
  }

  double symmetric_f(int i, double w) const {
    return 0.5 * (q_minus(i, w) + q_plus(i, w));
  }

  double asymmetric_g(int i, double w) const {
    return 0.5 * (q_minus(i, w) - q_plus(i, w));
  }

  /// F and G evaluated element-wise at the current weights.
  std::pair<std::vector<double>, std::vector<double>> response_fg() const {
    std::vector<double> f(size());
    std::vector<double> g(size());
    for (int i = 0; i < size(); ++i) {
      f[i] = symmetric_f(i, weights_[i]);
      g[i] = asymmetric_g(i, weights_[i]);
    }
    return {std::move(f), std::move(g)};
  }

  double mean_g_sq() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) {
      const double g = asymmetric_g(i, weights_[i]);
      s += g * g;
    }
    return s / static_cast<double>(size());
  }

  /// Monotone modulus of G for a linear element: G'(w) is the constant
  /// (alpha_minus/tau_min + alpha_plus/tau_max) / 2.
  double mu_q(int i) const {
    return kind_ == DeviceKind::kLinear
               ? 0.5 * (alpha_minus_[i] / tau_min_ + alpha_plus_[i] / tau_max_)
               : 0.0;
  }

  double mean_mu_q() const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) {
      s += mu_q(i);
    }
    return s / static_cast<double>(size());
  }

  /// Global response bounds over the tile, evaluated at the clip boundaries
  /// (the linear model attains its extremes there). Note q_min is 0 for
  /// linear tiles clipped exactly at [-tau_min, tau_max].
  double q_min() const {
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
      lo = std::min({lo, q_plus(i, clip_lo_[i]), q_plus(i, clip_hi_[i]),
                     q_minus(i, clip_lo_[i]), q_minus(i, clip_hi_[i])});
    }
    return lo;
  }

  double q_max() const {
    double hi = 0.0;
    for (int i = 0; i < size(); ++i) {
      hi = std::max({hi, q_plus(i, clip_lo_[i]), q_plus(i, clip_hi_[i]),
                     q_minus(i, clip_lo_[i]), q_minus(i, clip_hi_[i])});
    }
    return hi;
  }

  /// Noiseless analog increment dW * F(W) - |dW| * G(W) at the current
  /// weights, computed per element as dW * q_plus (dW >= 0) or dW * q_minus
  /// (dW < 0). Does not mutate the tile.
  std::vector<double> ideal_increment(std::span<const double> delta) const {
    check_shape(delta.size());
    std::vector<double> incr(size());
    for (int i = 0; i < size(); ++i) {
      const double d = delta[i];
      incr[i] = d >= 0.0 ? d * q_plus(i, weights_[i])
                         : d * q_minus(i, weights_[i]);
    }
    return incr;
  }

  /// Applies a desired increment to the tile. Ideal mode realizes the analog
  /// update exactly (no discretization error). Pulsed mode stochastically
  /// rounds |dW_d| / dw_min to an integer pulse count per element and applies
  /// the signed pulses with the response frozen at the pre-update weight
  /// (single-shot linearization). Results are clipped to the bounds.
  UpdateOutcome apply_update(std::span<const double> delta, UpdateMode mode) {
    check_shape(delta.size());
    for (int i = 0; i < size(); ++i) {
      if (std::isnan(delta[i])) {
        throw std::invalid_argument("NaN entry in update increment");
      }
    }

    UpdateOutcome out;
    out.ideal_increment = ideal_increment(delta);
    out.realized_increment.resize(size());

    std::uint64_t max_pulses = 0;
    for (int i = 0; i < size(); ++i) {
      double applied = 0.0;
      if (mode == UpdateMode::kIdeal) {
        applied = out.ideal_increment[i];
      } else if (delta[i] != 0.0) {
        const double n_real = std::abs(delta[i]) / dw_min_;
        std::uint64_t n = static_cast<std::uint64_t>(n_real);
        const double frac = n_real - static_cast<double>(n);
        if (uniform01(rng_) < frac) {
          ++n;
        }
        max_pulses = std::max(max_pulses, n);
        const double q = delta[i] >= 0.0 ? q_plus(i, weights_[i])
                                         : q_minus(i, weights_[i]);
        const double sign = delta[i] >= 0.0 ? 1.0 : -1.0;
        applied = sign * static_cast<double>(n) * dw_min_ * q;
      }
      const double target = weights_[i] + applied;
      const double clipped = std::clamp(target, clip_lo_[i], clip_hi_[i]);
      if (clipped != target) {
        ++out.clip_events;
        out.realized_increment[i] = clipped - weights_[i];
      } else {
        out.realized_increment[i] = applied;
      }
      weights_[i] = clipped;
    }

    if (mode == UpdateMode::kPulsed) {
      out.pulses_emitted = max_pulses;
      pulse_counter_ += max_pulses;
    }
    clip_counter_ += out.clip_events;
    return out;
  }

  /// One pulse cycle with a given polarity per element: +1 applies
  /// +dw_min * q_plus(w), -1 applies -dw_min * q_minus(w). Advances the
  /// pulse counter by one cycle. This is the primitive the zero-shifting
  /// dynamics are built on.
  void pulse_step(std::span<const int> signs) {
    check_shape(signs.size());
    for (int i = 0; i < size(); ++i) {
      const double w = weights_[i];
      const double incr = signs[i] > 0 ? dw_min_ * q_plus(i, w)
                                       : -dw_min_ * q_minus(i, w);
      const double target = w + incr;
      const double clipped = std::clamp(target, clip_lo_[i], clip_hi_[i]);
      if (clipped != target) {
        ++clip_counter_;
      }
      weights_[i] = clipped;
    }
    ++pulse_counter_;
  }

  /// Per-element symmetric point, closed form for the linear model:
  /// w_sp = (alpha_plus - alpha_minus) / (alpha_plus/tau_max +
  /// alpha_minus/tau_min). ConstantSymmetric tiles return 0 by convention
  /// (G == 0 everywhere, any point is symmetric).
  std::vector<double> symmetric_point() const {
    std::vector<double> sp(size(), 0.0);
    if (kind_ == DeviceKind::kLinear) {
      for (int i = 0; i < size(); ++i) {
        sp[i] = (alpha_plus_[i] - alpha_minus_[i]) /
                (alpha_plus_[i] / tau_max_ + alpha_minus_[i] / tau_min_);
      }
    }
    return sp;
  }

  /// Generic route to the symmetric point: bisection on G over the clip
  /// range. Throws std::domain_error when G has the same sign at both
  /// bounds. ConstantSymmetric tiles return 0 by the same convention as the
  /// closed form.
  std::vector<double> symmetric_point_bisect(double tol = 1e-13,
                                             int max_iter = 200) const {
    std::vector<double> sp(size(), 0.0);
    if (kind_ != DeviceKind::kLinear) {
      return sp;
    }
    for (int i = 0; i < size(); ++i) {
      double lo = clip_lo_[i];
      double hi = clip_hi_[i];
      double g_lo = asymmetric_g(i, lo);
      double g_hi = asymmetric_g(i, hi);
      if (g_lo == 0.0) {
        sp[i] = lo;
        continue;
      }
      if (g_hi == 0.0) {
        sp[i] = hi;
        continue;
      }
      if ((g_lo > 0.0) == (g_hi > 0.0)) {
        throw std::domain_error(
            "no symmetric point: G has the same sign at both clip bounds");
      }
      for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = asymmetric_g(i, mid);
        if (g_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((g_mid > 0.0) == (g_lo > 0.0)) {
          lo = mid;
          g_lo = g_mid;
        } else {
          hi = mid;
        }
      }
      sp[i] = 0.5 * (lo + hi);
    }
    return sp;
  }

private:
  static constexpr double kConstantDeviceBound = 2.0;

  void check_shape(std::size_t n) const {
    if (n != static_cast<std::size_t>(size())) {
      throw std::invalid_argument("shape mismatch with tile size");
    }
  }

  int rows_;
  int cols_;
  double dw_min_;
  DeviceKind kind_ = DeviceKind::kLinear;
  double tau_max_ = 0.0;
  double tau_min_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> alpha_plus_;  // q0 for constant-symmetric tiles
  std::vector<double> alpha_minus_;
  std::vector<double> clip_lo_;
  std::vector<double> clip_hi_;
  std::uint64_t pulse_counter_ = 0;
  std::int64_t clip_counter_ = 0;
  RngStream rng_;
};

/// Declarative tile description used by the experiment harness: either a
/// response model plus device variation, or a prescribed symmetric-point law.
struct PrescribedSp {
  double mean = 0.0;
  double std = 0.0;
  double tau = 1.0;
  double sigma_d2d = 0.0;
};

struct TileSpec {
  ResponseModel model = LinearDevice{};
  DeviceVariationSpec variation;
  double dw_min = 1e-3;
  std::optional<PrescribedSp> prescribed_sp;
  double init_scale = 0.5;
};

inline AnalogTile build_tile(const TileSpec &spec, int rows, int cols,
                             std::uint64_t seed) {
  if (spec.prescribed_sp) {
    const auto &p = *spec.prescribed_sp;
    return AnalogTile::with_symmetric_points(rows, cols, p.mean, p.std, p.tau,
                                             spec.dw_min, seed, p.sigma_d2d,
                                             spec.init_scale);
  }
  return AnalogTile(rows, cols, spec.model, spec.variation, spec.dw_min, seed,
                    spec.init_scale);
}

} // namespace aimcsim
