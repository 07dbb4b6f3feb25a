/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <stdexcept>
#include <variant>

namespace aimcsim {

/// Linear resistive device response. A positive pulse changes the weight by
/// dw_min * q_plus(w), a negative pulse by -dw_min * q_minus(w), with
///
///   q_plus(w)  = alpha_plus  * (1 - w / tau_max)
///   q_minus(w) = alpha_minus * (1 + w / tau_min)
///
/// tau_min is the magnitude of the lower weight bound: q_minus vanishes at
/// w = -tau_min and q_plus at w = +tau_max, so both responses stay positive
/// strictly inside the conductance range [-tau_min, tau_max].
struct LinearDevice {
  double alpha_plus = 1.2;
  double alpha_minus = 0.8;
  double tau_max = 1.0;
  double tau_min = 1.0;
};

/// Constant response q_plus == q_minus == q0; no update asymmetry (G == 0).
struct ConstantSymmetric {
  double q0 = 1.0;
};

using ResponseModel = std::variant<LinearDevice, ConstantSymmetric>;

/// Device-to-device spread of the per-element response slopes. Element slopes
/// are sampled as alpha_plus = base_plus * g + r, alpha_minus = base_minus * g
/// - r with g = exp(sigma_d2d * xi1) and r = sigma_pm * xi2 (xi1, xi2 standard
/// normal); draws with a nonpositive slope are rejected and resampled.
struct DeviceVariationSpec {
  double sigma_d2d = 0.0; ///< slope-magnitude spread
  double sigma_pm = 0.0;  ///< up/down asymmetry spread
};

inline void validate_model(const ResponseModel &model) {
  if (const auto *lin = std::get_if<LinearDevice>(&model)) {
    if (lin->alpha_plus <= 0.0 || lin->alpha_minus <= 0.0 ||
        lin->tau_max <= 0.0 || lin->tau_min <= 0.0) {
      throw std::invalid_argument("LinearDevice parameters must be positive");
    }
  } else {
    const auto &cs = std::get<ConstantSymmetric>(model);
    if (cs.q0 <= 0.0) {
      throw std::invalid_argument("ConstantSymmetric q0 must be positive");
    }
  }
}

inline void validate_variation(const DeviceVariationSpec &variation) {
  if (variation.sigma_d2d < 0.0 || variation.sigma_pm < 0.0) {
    throw std::invalid_argument("variation spreads must be nonnegative");
  }
}

} // namespace aimcsim
