/**
 * (C) Copyright 2026 the aimcsim authors.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "aimcsim/rng.hpp"
#include "aimcsim/vec.hpp"

namespace aimcsim {

/// Stochastic gradient oracle with a known optimum. Both synthetic objectives
/// keep the oracle unbiased: the sample average of grad_sample equals
/// grad_exact.
class Objective {
public:
  virtual ~Objective() = default;
  virtual int dimension() const = 0;
  virtual double value(std::span<const double> w) const = 0;
  virtual void grad_exact(std::span<const double> w,
                          std::span<double> out) const = 0;
  virtual void grad_sample(std::span<const double> w, RngStream &rng,
                           std::span<double> out) const = 0;
  virtual std::span<const double> optimum() const = 0;
  virtual double optimum_value() const = 0;
  virtual double strong_convexity_mu() const = 0;
  virtual double smoothness_l() const = 0;
  virtual double noise_sigma() const = 0;

  double excess_loss(std::span<const double> w) const {
    return value(w) - optimum_value();
  }
};

/// f(W) = 1/2 (W - W*)^T A (W - W*) with A diagonal, eigenvalues log-spaced
/// in [mu, L]. The stochastic gradient adds i.i.d. N(0, sigma^2) noise per
/// coordinate, so the total gradient variance is sigma^2 * D.
class QuadraticObjective : public Objective {
public:
  QuadraticObjective(int dimension, double mu, double l, double sigma,
                     std::uint64_t seed, double wstar_lo = 0.4,
                     double wstar_hi = 0.8)
      : mu_(mu), l_(l), sigma_(sigma) {
    if (dimension < 1 || !(mu > 0.0) || !(l >= mu) || sigma < 0.0) {
      throw std::invalid_argument("invalid quadratic objective parameters");
    }
    a_.resize(dimension);
    for (int d = 0; d < dimension; ++d) {
      const double t = dimension > 1
                           ? static_cast<double>(d) / (dimension - 1)
                           : 0.0;
      a_[d] = mu * std::pow(l / mu, t);
    }
    wstar_.resize(dimension);
    RngStream rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> u(wstar_lo, wstar_hi);
    for (int d = 0; d < dimension; ++d) {
      wstar_[d] = u(rng);
    }
  }

  /// Identity-Hessian variant (A = I), used for closed-form lower-level
  /// checks of the bilevel formulation.
  static QuadraticObjective identity_hessian(int dimension, double sigma,
                                             std::uint64_t seed) {
    return QuadraticObjective(dimension, 1.0, 1.0, sigma, seed);
  }

  int dimension() const override { return static_cast<int>(a_.size()); }

  double value(std::span<const double> w) const override {
    double s = 0.0;
    for (int d = 0; d < dimension(); ++d) {
      const double e = w[d] - wstar_[d];
      s += a_[d] * e * e;
    }
    return 0.5 * s;
  }

  void grad_exact(std::span<const double> w,
                  std::span<double> out) const override {
    for (int d = 0; d < dimension(); ++d) {
      out[d] = a_[d] * (w[d] - wstar_[d]);
    }
  }

  void grad_sample(std::span<const double> w, RngStream &rng,
                   std::span<double> out) const override {
    grad_exact(w, out);
    for (int d = 0; d < dimension(); ++d) {
      out[d] += sigma_ * gauss(rng);
    }
  }

  std::span<const double> optimum() const override { return wstar_; }
  double optimum_value() const override { return 0.0; }
  double strong_convexity_mu() const override { return mu_; }
  double smoothness_l() const override { return l_; }
  double noise_sigma() const override { return sigma_; }
  std::span<const double> hessian_diagonal() const { return a_; }

  void set_optimum(std::span<const double> wstar) {
    if (wstar.size() != wstar_.size()) {
      throw std::invalid_argument("optimum dimension mismatch");
    }
    wstar_.assign(wstar.begin(), wstar.end());
  }

private:
  double mu_;
  double l_;
  double sigma_;
  std::vector<double> a_;
  std::vector<double> wstar_;
};

/// Ridge-regularized logistic regression on a fixed synthetic dataset:
/// f(W) = 1/n sum_i log(1 + exp(-y_i x_i^T W)) + lambda/2 |W|^2. The
/// stochastic gradient draws one sample uniformly; the optimum is solved by
/// Newton iteration at construction.
class LogisticObjective : public Objective {
public:
  LogisticObjective(int dimension, int n_samples, double lambda,
                    std::uint64_t seed)
      : lambda_(lambda), n_samples_(n_samples) {
    if (dimension < 1 || n_samples < 1 || !(lambda > 0.0)) {
      throw std::invalid_argument("invalid logistic objective parameters");
    }
    RngStream rng(derive_seed(seed, 0));
    x_.resize(static_cast<std::size_t>(n_samples) * dimension);
    y_.resize(n_samples);
    std::vector<double> w_true(dimension);
    std::uniform_real_distribution<double> u(0.3, 0.7);
    for (int d = 0; d < dimension; ++d) {
      w_true[d] = u(rng);
    }
    for (int i = 0; i < n_samples; ++i) {
      double margin = 0.0;
      for (int d = 0; d < dimension; ++d) {
        const double xv = gauss(rng);
        x_[static_cast<std::size_t>(i) * dimension + d] = xv;
        margin += xv * w_true[d];
      }
      y_[i] = uniform01(rng) < sigmoid(margin) ? 1.0 : -1.0;
    }
    dim_ = dimension;
    solve_optimum();
    compute_constants();
  }

  int dimension() const override { return dim_; }

  double value(std::span<const double> w) const override {
    double s = 0.0;
    for (int i = 0; i < n_samples_; ++i) {
      s += log1pexp(-y_[i] * sample_margin(i, w));
    }
    return s / n_samples_ + 0.5 * lambda_ * norm_sq(w);
  }

  void grad_exact(std::span<const double> w,
                  std::span<double> out) const override {
    for (int d = 0; d < dim_; ++d) {
      out[d] = lambda_ * w[d];
    }
    for (int i = 0; i < n_samples_; ++i) {
      const double coef = -y_[i] * sigmoid(-y_[i] * sample_margin(i, w)) /
                          n_samples_;
      const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
      for (int d = 0; d < dim_; ++d) {
        out[d] += coef * xi[d];
      }
    }
  }

  void grad_sample(std::span<const double> w, RngStream &rng,
                   std::span<double> out) const override {
    const int i = std::uniform_int_distribution<int>(0, n_samples_ - 1)(rng);
    const double coef = -y_[i] * sigmoid(-y_[i] * sample_margin(i, w));
    const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
    for (int d = 0; d < dim_; ++d) {
      out[d] = coef * xi[d] + lambda_ * w[d];
    }
  }

  std::span<const double> optimum() const override { return wstar_; }
  double optimum_value() const override { return fstar_; }
  double strong_convexity_mu() const override { return lambda_; }
  double smoothness_l() const override { return l_; }
  double noise_sigma() const override { return sigma_; }

private:
  static double sigmoid(double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                    : std::exp(t) / (1.0 + std::exp(t));
  }

  static double log1pexp(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }

  double sample_margin(int i, std::span<const double> w) const {
    const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
    double m = 0.0;
    for (int d = 0; d < dim_; ++d) {
      m += xi[d] * w[d];
    }
    return m;
  }

  void solve_optimum() {
    wstar_.assign(dim_, 0.0);
    std::vector<double> grad(dim_);
    std::vector<double> h(static_cast<std::size_t>(dim_) * dim_);
    std::vector<double> step(dim_);
    for (int iter = 0; iter < 100; ++iter) {
      grad_exact(wstar_, grad);
      if (std::sqrt(norm_sq(grad)) < 1e-13) {
        break;
      }
      // Newton step with the exact dense Hessian.
      std::fill(h.begin(), h.end(), 0.0);
      for (int d = 0; d < dim_; ++d) {
        h[static_cast<std::size_t>(d) * dim_ + d] = lambda_;
      }
      for (int i = 0; i < n_samples_; ++i) {
        const double m = sample_margin(i, wstar_);
        const double s = sigmoid(-y_[i] * m);
        const double coef = s * (1.0 - s) / n_samples_;
        const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
        for (int a = 0; a < dim_; ++a) {
          for (int b = 0; b < dim_; ++b) {
            h[static_cast<std::size_t>(a) * dim_ + b] += coef * xi[a] * xi[b];
          }
        }
      }
      solve_spd(h, grad, step);
      for (int d = 0; d < dim_; ++d) {
        wstar_[d] -= step[d];
      }
    }
    fstar_ = value(wstar_);
  }

  /// Gaussian elimination with partial pivoting; the systems are tiny.
  static void solve_spd(std::vector<double> a, std::vector<double> b,
                        std::vector<double> &x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
      int pivot = col;
      for (int r = col + 1; r < n; ++r) {
        if (std::abs(a[static_cast<std::size_t>(r) * n + col]) >
            std::abs(a[static_cast<std::size_t>(pivot) * n + col])) {
          pivot = r;
        }
      }
      if (pivot != col) {
        for (int c = 0; c < n; ++c) {
          std::swap(a[static_cast<std::size_t>(col) * n + c],
                    a[static_cast<std::size_t>(pivot) * n + c]);
        }
        std::swap(b[col], b[pivot]);
      }
      const double diag = a[static_cast<std::size_t>(col) * n + col];
      for (int r = col + 1; r < n; ++r) {
        const double f = a[static_cast<std::size_t>(r) * n + col] / diag;
        for (int c = col; c < n; ++c) {
          a[static_cast<std::size_t>(r) * n + c] -=
              f * a[static_cast<std::size_t>(col) * n + c];
        }
        b[r] -= f * b[col];
      }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
      double s = b[r];
      for (int c = r + 1; c < n; ++c) {
        s -= a[static_cast<std::size_t>(r) * n + c] * x[c];
      }
      x[r] = s / a[static_cast<std::size_t>(r) * n + r];
    }
  }

  void compute_constants() {
    // L = lambda + 0.25 * lambda_max(X^T X / n) via power iteration.
    std::vector<double> v(dim_, 1.0);
    std::vector<double> xv(dim_);
    double eig = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      std::fill(xv.begin(), xv.end(), 0.0);
      for (int i = 0; i < n_samples_; ++i) {
        const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
        double m = 0.0;
        for (int d = 0; d < dim_; ++d) {
          m += xi[d] * v[d];
        }
        for (int d = 0; d < dim_; ++d) {
          xv[d] += m * xi[d] / n_samples_;
        }
      }
      eig = std::sqrt(norm_sq(xv));
      if (eig == 0.0) {
        break;
      }
      for (int d = 0; d < dim_; ++d) {
        v[d] = xv[d] / eig;
      }
    }
    l_ = lambda_ + 0.25 * eig;

    // Report the sampling-noise level at the optimum.
    std::vector<double> g(dim_);
    std::vector<double> gbar(dim_);
    grad_exact(wstar_, gbar);
    double var = 0.0;
    for (int i = 0; i < n_samples_; ++i) {
      const double coef = -y_[i] * sigmoid(-y_[i] * sample_margin(i, wstar_));
      const double *xi = &x_[static_cast<std::size_t>(i) * dim_];
      for (int d = 0; d < dim_; ++d) {
        const double gd = coef * xi[d] + lambda_ * wstar_[d];
        var += (gd - gbar[d]) * (gd - gbar[d]);
      }
    }
    sigma_ = std::sqrt(var / n_samples_);
  }

  double lambda_;
  int n_samples_;
  int dim_ = 0;
  double l_ = 0.0;
  double sigma_ = 0.0;
  double fstar_ = 0.0;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> wstar_;
};

} // namespace aimcsim
