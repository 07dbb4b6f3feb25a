/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aimcsim/rng.hpp"

namespace aimcsim {

/// Magnitude response of the moving-average recursion
/// q_{k+1} = (1 - eta) q_k + eta p_{k+1}, a first-order IIR low-pass filter
/// with a single pole at z = 1 - eta:
///
///   |H(e^{jw})| = eta / sqrt(1 + (1-eta)^2 - 2 (1-eta) cos w).
inline double ma_frequency_response(double eta, double omega) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("eta must be in (0, 1]");
  }
  const double a = 1.0 - eta;
  return eta / std::sqrt(1.0 + a * a - 2.0 * a * std::cos(omega));
}

/// Tap count making the truncated impulse response accurate to 1e-12:
/// ceil(ln(1e-12) / ln(1 - eta)).
inline int default_tap_count(double eta) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("eta must be in (0, 1]");
  }
  if (eta == 1.0) {
    return 1;
  }
  return static_cast<int>(
      std::ceil(std::log(1e-12) / std::log(1.0 - eta)));
}

/// Empirical route to the same response: truncate the impulse response
/// h_k = eta (1-eta)^k and evaluate its DTFT magnitude on n_freq uniform
/// frequencies over [0, pi] (the response is symmetric in omega). Throws
/// when the truncation tail (1-eta)^{n_taps} is not below 1e-12.
inline std::vector<std::pair<double, double>>
empirical_frequency_response(double eta, int n_freq, int n_taps) {
  if (!(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("eta must be in (0, 1]");
  }
  if (n_freq < 2) {
    throw std::invalid_argument("need at least two frequencies");
  }
  const double tail = eta == 1.0 && n_taps >= 1
                          ? 0.0
                          : std::pow(1.0 - eta, n_taps);
  if (!(tail < 1e-12)) {
    throw std::domain_error("tap count too small for 1e-12 truncation");
  }

  std::vector<double> taps(n_taps);
  double h = eta;
  for (int k = 0; k < n_taps; ++k) {
    taps[k] = h;
    h *= 1.0 - eta;
  }

  constexpr double kPi = 3.14159265358979323846;
  std::vector<std::pair<double, double>> response(n_freq);
  for (int j = 0; j < n_freq; ++j) {
    const double omega = kPi * j / (n_freq - 1);
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n_taps; ++k) {
      acc += taps[k] * std::exp(std::complex<double>(0.0, -omega * k));
    }
    response[j] = {omega, std::abs(acc)};
  }
  return response;
}

/// Random sign that flips with probability p at every step.
struct ChopperState {
  int sign = 1;
  double flip_prob = 0.0;
  RngStream rng;

  ChopperState() : rng(0) {}
  ChopperState(double p, std::uint64_t seed) : flip_prob(p), rng(seed) {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("flip probability must be in [0, 1]");
    }
  }
};

inline int chopper_next(ChopperState &state) {
  if (uniform01(state.rng) < state.flip_prob) {
    state.sign = -state.sign;
  }
  return state.sign;
}

inline std::vector<int> chopper_sequence(ChopperState &state,
                                         std::int64_t length) {
  if (length < 0) {
    throw std::invalid_argument("sequence length must be nonnegative");
  }
  std::vector<int> seq(length);
  for (std::int64_t k = 0; k < length; ++k) {
    seq[k] = chopper_next(state);
  }
  return seq;
}

} // namespace aimcsim
