#pragma once
// Bernstein polynomial basis on [0, 1], the monotone coefficient map, and the
// log-time scaler.

#include <span>
#include <vector>

#include "tramsurv/core.hpp"

namespace tramsurv {

/// Numerically safe softplus: max(z, 0) + log1p(exp(-|z|)).
double softplus(double z) noexcept;
/// Inverse of softplus for y > 0.
double softplus_inverse(double y) noexcept;
/// Logistic sigmoid, the derivative of softplus.
double sigmoid(double z) noexcept;

/// b_k(u) = C(K,k) u^k (1-u)^(K-k), k = 0..K. Throws InvalidOrder for K < 1.
std::vector<double> bernstein_eval(int order, double u);
void bernstein_eval_into(int order, double u, std::span<double> out);

/// d/du b(u)^T theta. theta must have K+1 entries.
double bernstein_deriv(int order, double u, std::span<const double> theta);

/// theta_1 = gamma_1, theta_k = gamma_1 + sum_{j=2..k} softplus(gamma_j).
std::vector<double> monotone_reparam(std::span<const double> gamma);

/// Back-propagates d/dtheta onto gamma for theta = monotone_reparam(gamma).
void monotone_reparam_backward(std::span<const double> gamma,
                               std::span<const double> grad_theta,
                               std::span<double> grad_gamma);

/// A Bernstein polynomial b(u)^T theta on [0,1], continued linearly outside
/// the unit interval with the endpoint slope.
class BernsteinCurve {
 public:
  explicit BernsteinCurve(std::vector<double> theta);

  int order() const noexcept { return static_cast<int>(theta_.size()) - 1; }
  std::span<const double> theta() const noexcept { return theta_; }

  double value(double u) const;
  double slope(double u) const;

  /// Partial derivatives of value(u) and slope(u) with respect to theta.
  void grad(double u, std::span<double> d_value, std::span<double> d_slope) const;

 private:
  std::vector<double> theta_;
};

/// a_lo = min log t - margin * range, b_hi = max log t + margin * range over
/// all finite recorded times. A degenerate range is widened to +-0.5.
LogTimeScaler fit_scaler(const SurvivalDataset& dataset, double margin = 0.0);

}  // namespace tramsurv
