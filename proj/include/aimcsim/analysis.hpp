/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aimcsim {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  int n = 0;
};

/// Ordinary least squares; requires at least 3 points so the residual
/// stderr is defined.
inline LinearFit fit_line(std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size()) {
    throw AnalysisError("fit_line: size mismatch");
  }
  const int n = static_cast<int>(x.size());
  if (n < 3) {
    throw AnalysisError("fit_line: need at least 3 points");
  }
  double mx = 0.0;
  double my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw AnalysisError("fit_line: degenerate x values");
  }
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  const double sigma2 = n > 2 ? ss_res / (n - 2) : 0.0;
  fit.slope_stderr = std::sqrt(sigma2 / sxx);
  fit.ci95_lo = fit.slope - 1.96 * fit.slope_stderr;
  fit.ci95_hi = fit.slope + 1.96 * fit.slope_stderr;
  return fit;
}

/// Outcome of one scaling-law check: the fitted quantity, the declared
/// tolerance band and the raw points the fit used.
struct AnalysisResult {
  std::string check;
  double value = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  bool pass = false;
  LinearFit fit;
  std::vector<std::pair<double, double>> points;
  std::vector<double> extra; ///< per-check detail (ratios, plateaus, ...)
};

/// Fits log(minimal N) against log(dw_min). The inverse-linear law predicts
/// slope -1; default band [-1.3, -0.7].
inline AnalysisResult
granularity_slope(const std::vector<std::pair<double, double>> &dw_vs_n,
                  double band_lo = -1.3, double band_hi = -0.7) {
  if (dw_vs_n.size() < 3) {
    throw AnalysisError("granularity_slope: need at least 3 points");
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto &[dw, n] : dw_vs_n) {
    if (!(dw > 0.0) || !(n > 0.0)) {
      throw AnalysisError("granularity_slope: nonpositive point");
    }
    lx.push_back(std::log(dw));
    ly.push_back(std::log(n));
  }
  AnalysisResult res;
  res.check = "granularity_slope";
  res.fit = fit_line(lx, ly);
  res.value = res.fit.slope;
  res.band_lo = band_lo;
  res.band_hi = band_hi;
  res.pass = res.value >= band_lo && res.value <= band_hi;
  res.points = dw_vs_n;
  return res;
}

/// Plateau ratios between adjacent granularities (each dw against the next
/// smaller one). The error floor is linear in dw_min, so each ratio should
/// sit near 2; default band [1.4, 2.8].
inline AnalysisResult
floor_ratio(const std::map<double, double> &plateau_by_dw,
            double band_lo = 1.4, double band_hi = 2.8) {
  if (plateau_by_dw.size() < 2) {
    throw AnalysisError("floor_ratio: need at least 2 plateaus");
  }
  AnalysisResult res;
  res.check = "floor_ratio";
  res.band_lo = band_lo;
  res.band_hi = band_hi;
  res.pass = true;
  // std::map iterates in increasing dw; ratio = plateau(dw) / plateau(dw/2).
  auto it = plateau_by_dw.begin();
  auto prev = it++;
  for (; it != plateau_by_dw.end(); ++it, ++prev) {
    if (!(prev->second > 0.0)) {
      throw AnalysisError("floor_ratio: nonpositive plateau");
    }
    const double ratio = it->second / prev->second;
    res.extra.push_back(ratio);
    res.pass = res.pass && ratio >= band_lo && ratio <= band_hi;
    res.points.emplace_back(it->first, ratio);
  }
  res.value = res.extra.empty() ? 0.0 : res.extra.front();
  return res;
}

/// Fits log E|W_n - w_sp|^2 against n over the pre-floor region and compares
/// the decay rate against the predicted per-pulse rate 2 mu_q dw_min
/// (within a given factor). The floor is estimated from the trajectory tail.
inline AnalysisResult
geometric_rate(const std::vector<std::pair<double, double>> &traj,
               double mu_q, double dw_min, double rate_factor = 2.0,
               double fit_floor_multiple = 30.0) {
  if (traj.size() < 3) {
    throw AnalysisError("geometric_rate: need at least 3 points");
  }
  // Tail quarter estimates the floor.
  double floor = 0.0;
  const std::size_t tail_from = traj.size() - traj.size() / 4 - 1;
  for (std::size_t i = tail_from; i < traj.size(); ++i) {
    floor += traj[i].second;
  }
  floor /= static_cast<double>(traj.size() - tail_from);

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto &[n, v] : traj) {
    if (v > fit_floor_multiple * floor && v > 0.0) {
      xs.push_back(n);
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 3) {
    throw AnalysisError("geometric_rate: too few pre-floor points");
  }
  AnalysisResult res;
  res.check = "geometric_rate";
  res.fit = fit_line(xs, ys);
  res.value = -res.fit.slope; // decay rate per pulse
  const double predicted = 2.0 * mu_q * dw_min;
  res.band_lo = predicted / rate_factor;
  res.band_hi = predicted * rate_factor;
  res.pass = res.value >= res.band_lo && res.value <= res.band_hi;
  res.extra = {predicted, floor};
  res.points = traj;
  return res;
}

} // namespace aimcsim
