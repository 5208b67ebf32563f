#pragma once
// Transformation functions h(t | x) for the six parameterizations, their
// gradients, and the conditional distribution F(t | x) = F_Z(h(t | x)).
//
//   Baseline             h = b(u)' g(gamma)
//   LinearShift          h = a + softplus(b_raw) log t + phi' w
//   LinearScale          h = a + softplus(phi' w) log t
//   BernsteinShift       h = b(u)' g(gamma) + phi' w
//   BernsteinShiftScale  h = softplus(phi' beta) b(u)' g(gamma) + phi' w
//   BernsteinFlexible    h = b(u)' g(phi)
//
// with u = scaler(log t) and g the monotone reparameterization. Outside the
// scaler range the Bernstein polynomial continues linearly.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tramsurv/basis.hpp"
#include "tramsurv/core.hpp"
#include "tramsurv/likelihood.hpp"

namespace tramsurv {

/// Dimension of phi(x) consumed by the head: d, or K+1 for BernsteinFlexible.
std::size_t feature_dim(const ModelSpec& spec) noexcept;

/// Offsets of the active head parameters inside the flat head vector.
struct HeadLayout {
  explicit HeadLayout(const ModelSpec& spec);

  std::size_t size = 0;
  std::optional<std::size_t> a;
  std::optional<std::size_t> b_raw;
  std::optional<std::size_t> gamma;  // K+1 entries
  std::optional<std::size_t> w;      // d entries
  std::optional<std::size_t> beta;   // d entries
  std::size_t gamma_len = 0;
  std::size_t feature_len = 0;
};

struct HeadParams {
  double a = 0.0;
  double b_raw = 0.0;
  std::vector<double> w;
  std::vector<double> gamma;
  std::vector<double> beta;

  static HeadParams unpack(const ModelSpec& spec, std::span<const double> flat);
  std::vector<double> pack(const ModelSpec& spec) const;
};

/// h(t) for one subject with every covariate-dependent quantity resolved.
class SubjectTransform {
 public:
  static SubjectTransform linear(double intercept, double slope, double shift);
  static SubjectTransform bernstein(std::vector<double> theta, LogTimeScaler scaler,
                                    double scale, double shift);

  /// Requires t > 0 (finite).
  TransformValue eval(double t) const;
  double h(double t) const { return eval(t).h; }

  /// Log-time at which h reaches z (bracketed bisection).
  double solve_log_time(double z, const LogTimeScaler& hint) const;

 private:
  double h_of_log_time(double v) const;

  bool is_linear_ = true;
  double intercept_ = 0.0;
  double slope_ = 1.0;
  double scale_ = 1.0;
  double shift_ = 0.0;
  LogTimeScaler scaler_;
  std::optional<BernsteinCurve> curve_;
};

/// Builds h(. | x) from head parameters and extractor features.
SubjectTransform resolve_transform(const ModelSpec& spec, std::span<const double> head,
                                   std::span<const double> features,
                                   const LogTimeScaler& scaler);

/// Throws NonPositiveTime for t <= 0 and DimensionMismatch on bad sizes.
TransformValue eval_transform(const ModelSpec& spec, std::span<const double> head,
                              std::span<const double> features, double t,
                              const LogTimeScaler& scaler);

struct TransformGradient {
  std::vector<double> head;      // HeadLayout order
  std::vector<double> features;  // feature_dim(spec) entries
};

/// Gradient of upstream_h * h(t) + upstream_dhdt * h'(t).
TransformGradient grad_transform(const ModelSpec& spec, std::span<const double> head,
                                 std::span<const double> features, double t,
                                 const LogTimeScaler& scaler, double upstream_h,
                                 double upstream_dhdt);

/// Accumulating variant used by the likelihood gradient.
void grad_transform_acc(const ModelSpec& spec, std::span<const double> head,
                        std::span<const double> features, double t,
                        const LogTimeScaler& scaler, double upstream_h, double upstream_dhdt,
                        std::span<double> head_grad, std::span<double> feature_grad);

/// Checks layout sizes, finiteness, scaler ordering and monotone coefficients.
void validate_model(const FittedModel& model);

// ---------------------------------------------------------------------------
// Predictive distributions

class PredictiveDistribution {
 public:
  virtual ~PredictiveDistribution() = default;

  virtual double cdf(double t) const = 0;
  virtual double survivor(double t) const = 0;
  virtual double pdf(double t) const = 0;
  virtual double quantile(double p) const = 0;
  /// Negative log-likelihood of one observation under this distribution.
  virtual double nll(const Observation& obs) const = 0;

  double median() const { return quantile(0.5); }
};

class ConditionalDistribution final : public PredictiveDistribution {
 public:
  ConditionalDistribution(Family family, SubjectTransform transform, LogTimeScaler scaler);

  double cdf(double t) const override;
  double survivor(double t) const override;
  double pdf(double t) const override;
  double quantile(double p) const override;
  double nll(const Observation& obs) const override;

  /// Likelihood terms including derivatives; shared with the trainer.
  LikelihoodTerms terms(const Observation& obs) const;

  TransformValue transform(double t) const { return transform_.eval(t); }
  Family family() const noexcept { return family_; }
  const LogTimeScaler& scaler() const noexcept { return scaler_; }

 private:
  Family family_;
  SubjectTransform transform_;
  LogTimeScaler scaler_;
};

/// Extracts features for x and resolves the subject's distribution.
ConditionalDistribution conditional_distribution(const FittedModel& model,
                                                 std::span<const double> x);

}  // namespace tramsurv
