#include "tramsurv/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tramsurv/error.hpp"

namespace tramsurv {

double softplus(double z) noexcept {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double softplus_inverse(double y) noexcept {
  // log(exp(y) - 1), stable for both small and large y.
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_order(int order) {
  if (order < 1) {
    throw Error(ErrorCode::InvalidOrder,
                "Bernstein order must be >= 1, got " + std::to_string(order));
  }
}

// In-place degree elevation recurrence; out must hold order+1 entries.
void bernstein_fill(int order, double u, std::span<double> out) {
  const double v = 1.0 - u;
  std::fill(out.begin(), out.begin() + order + 1, 0.0);
  out[0] = 1.0;
  for (int n = 1; n <= order; ++n) {
    for (int k = n; k >= 1; --k) out[k] = v * out[k] + u * out[k - 1];
    out[0] *= v;
  }
}

}  // namespace

void bernstein_eval_into(int order, double u, std::span<double> out) {
  check_order(order);
  if (out.size() != static_cast<std::size_t>(order) + 1) {
    throw Error(ErrorCode::DimensionMismatch, "bernstein_eval_into: output size");
  }
  bernstein_fill(order, u, out);
}

std::vector<double> bernstein_eval(int order, double u) {
  check_order(order);
  std::vector<double> out(static_cast<std::size_t>(order) + 1);
  bernstein_fill(order, u, out);
  return out;
}

double bernstein_deriv(int order, double u, std::span<const double> theta) {
  check_order(order);
  if (theta.size() != static_cast<std::size_t>(order) + 1) {
    throw Error(ErrorCode::DimensionMismatch, "bernstein_deriv: theta size");
  }
  std::vector<double> lower(static_cast<std::size_t>(order));
  if (order == 1) {
    lower[0] = 1.0;
  } else {
    bernstein_fill(order - 1, u, lower);
  }
  double s = 0.0;
  for (int k = 0; k < order; ++k) s += (theta[k + 1] - theta[k]) * lower[k];
  return order * s;
}

std::vector<double> monotone_reparam(std::span<const double> gamma) {
  std::vector<double> theta(gamma.size());
  if (gamma.empty()) return theta;
  double acc = gamma[0];
  theta[0] = acc;
  for (std::size_t k = 1; k < gamma.size(); ++k) {
    acc += softplus(gamma[k]);
    theta[k] = acc;
  }
  return theta;
}

void monotone_reparam_backward(std::span<const double> gamma,
                               std::span<const double> grad_theta,
                               std::span<double> grad_gamma) {
  const std::size_t n = gamma.size();
  if (grad_theta.size() != n || grad_gamma.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "monotone_reparam_backward: sizes");
  }
  // d theta_k / d gamma_j = sigmoid(gamma_j) for 2 <= j <= k, 1 for j = 1.
  double suffix = 0.0;
  for (std::size_t j = n; j-- > 1;) {
    suffix += grad_theta[j];
    grad_gamma[j] = sigmoid(gamma[j]) * suffix;
  }
  if (n > 0) grad_gamma[0] = suffix + grad_theta[0];
}

BernsteinCurve::BernsteinCurve(std::vector<double> theta) : theta_(std::move(theta)) {
  check_order(order());
}

double BernsteinCurve::value(double u) const {
  const int k = order();
  if (u < 0.0) return theta_[0] + k * (theta_[1] - theta_[0]) * u;
  if (u > 1.0) return theta_[k] + k * (theta_[k] - theta_[k - 1]) * (u - 1.0);
  double basis[64];
  std::vector<double> heap;
  std::span<double> b;
  if (k < 64) {
    b = std::span<double>(basis, static_cast<std::size_t>(k) + 1);
  } else {
    heap.resize(static_cast<std::size_t>(k) + 1);
    b = heap;
  }
  bernstein_fill(k, u, b);
  double s = 0.0;
  for (int i = 0; i <= k; ++i) s += b[i] * theta_[i];
  return s;
}

double BernsteinCurve::slope(double u) const {
  const int k = order();
  if (u < 0.0) return k * (theta_[1] - theta_[0]);
  if (u > 1.0) return k * (theta_[k] - theta_[k - 1]);
  return bernstein_deriv(k, u, theta_);
}

void BernsteinCurve::grad(double u, std::span<double> d_value,
                          std::span<double> d_slope) const {
  const int k = order();
  std::fill(d_value.begin(), d_value.end(), 0.0);
  std::fill(d_slope.begin(), d_slope.end(), 0.0);
  if (u < 0.0) {
    d_value[0] = 1.0 - k * u;
    d_value[1] = k * u;
    d_slope[0] = -k;
    d_slope[1] = k;
    return;
  }
  if (u > 1.0) {
    d_value[k - 1] = -k * (u - 1.0);
    d_value[k] = 1.0 + k * (u - 1.0);
    d_slope[k - 1] = -k;
    d_slope[k] = k;
    return;
  }
  bernstein_fill(k, u, d_value);
  std::vector<double> lower(static_cast<std::size_t>(k));
  if (k == 1) {
    lower[0] = 1.0;
  } else {
    bernstein_fill(k - 1, u, lower);
  }
  for (int i = 0; i < k; ++i) {
    d_slope[i] -= k * lower[i];
    d_slope[i + 1] += k * lower[i];
  }
}

LogTimeScaler fit_scaler(const SurvivalDataset& dataset, double margin) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& obs : dataset.observations) {
    for (double t : {obs.time_lower, obs.time_upper}) {
      if (!std::isfinite(t) || t <= 0.0) continue;
      const double u = std::log(t);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  if (!std::isfinite(lo)) {
    throw Error(ErrorCode::EmptyDataset, "fit_scaler: no finite positive times");
  }
  const double range = hi - lo;
  if (range <= 0.0) return LogTimeScaler{lo - 0.5, hi + 0.5};
  return LogTimeScaler{lo - margin * range, hi + margin * range};
}

}  // namespace tramsurv
