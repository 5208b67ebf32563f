#include "tramsurv/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tramsurv/error.hpp"
#include "tramsurv/feature.hpp"
#include "tramsurv/kernels.hpp"
#include "tramsurv/target.hpp"

namespace tramsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp() stays finite and nonzero on this log-time range.
constexpr double kMinLogTime = -700.0;
constexpr double kMaxLogTime = 700.0;

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

void require_positive_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::NonPositiveTime,
                "transform: time must be positive and finite, got " + std::to_string(t));
  }
}

}  // namespace

std::size_t feature_dim(const ModelSpec& spec) noexcept {
  switch (spec.parameterization) {
    case Parameterization::Baseline: return 0;
    case Parameterization::BernsteinFlexible:
      return static_cast<std::size_t>(spec.bernstein_order) + 1;
    default: return spec.extractor.output_dim;
  }
}

HeadLayout::HeadLayout(const ModelSpec& spec) {
  const std::size_t k1 = static_cast<std::size_t>(std::max(spec.bernstein_order, 1)) + 1;
  const std::size_t d = spec.extractor.output_dim;
  auto take = [&](std::size_t n) {
    const std::size_t at = size;
    size += n;
    return at;
  };
  switch (spec.parameterization) {
    case Parameterization::Baseline:
      gamma = take(k1);
      gamma_len = k1;
      break;
    case Parameterization::LinearShift:
      a = take(1);
      b_raw = take(1);
      w = take(d);
      feature_len = d;
      break;
    case Parameterization::LinearScale:
      a = take(1);
      w = take(d);
      feature_len = d;
      break;
    case Parameterization::BernsteinShift:
      gamma = take(k1);
      gamma_len = k1;
      w = take(d);
      feature_len = d;
      break;
    case Parameterization::BernsteinShiftScale:
      gamma = take(k1);
      gamma_len = k1;
      w = take(d);
      beta = take(d);
      feature_len = d;
      break;
    case Parameterization::BernsteinFlexible:
      feature_len = k1;
      break;
  }
}

HeadParams HeadParams::unpack(const ModelSpec& spec, std::span<const double> flat) {
  const HeadLayout L(spec);
  require(flat.size() == L.size, "head parameter vector has the wrong length");
  HeadParams p;
  if (L.a) p.a = flat[*L.a];
  if (L.b_raw) p.b_raw = flat[*L.b_raw];
  auto slice = [&](std::optional<std::size_t> at, std::size_t n) {
    if (!at) return std::vector<double>{};
    auto s = flat.subspan(*at, n);
    return std::vector<double>(s.begin(), s.end());
  };
  p.gamma = slice(L.gamma, L.gamma_len);
  p.w = slice(L.w, L.feature_len);
  p.beta = slice(L.beta, L.feature_len);
  return p;
}

std::vector<double> HeadParams::pack(const ModelSpec& spec) const {
  const HeadLayout L(spec);
  std::vector<double> flat(L.size, 0.0);
  if (L.a) flat[*L.a] = a;
  if (L.b_raw) flat[*L.b_raw] = b_raw;
  auto put = [&](std::optional<std::size_t> at, const std::vector<double>& v, std::size_t n) {
    if (!at) return;
    require(v.size() == n, "head parameter block has the wrong length");
    std::copy(v.begin(), v.end(), flat.begin() + static_cast<std::ptrdiff_t>(*at));
  };
  put(L.gamma, gamma, L.gamma_len);
  put(L.w, w, L.feature_len);
  put(L.beta, beta, L.feature_len);
  return flat;
}

// ---------------------------------------------------------------------------

SubjectTransform SubjectTransform::linear(double intercept, double slope, double shift) {
  SubjectTransform s;
  s.is_linear_ = true;
  s.intercept_ = intercept;
  s.slope_ = slope;
  s.shift_ = shift;
  return s;
}

SubjectTransform SubjectTransform::bernstein(std::vector<double> theta, LogTimeScaler scaler,
                                             double scale, double shift) {
  SubjectTransform s;
  s.is_linear_ = false;
  s.curve_.emplace(std::move(theta));
  s.scaler_ = scaler;
  s.scale_ = scale;
  s.shift_ = shift;
  return s;
}

TransformValue SubjectTransform::eval(double t) const {
  const double log_t = std::log(t);
  if (is_linear_) {
    return {intercept_ + slope_ * log_t + shift_, slope_ / t};
  }
  const double u = scaler_.scale(log_t);
  return {scale_ * curve_->value(u) + shift_, scale_ * curve_->slope(u) / (scaler_.width() * t)};
}

double SubjectTransform::h_of_log_time(double v) const {
  if (is_linear_) return intercept_ + slope_ * v + shift_;
  return scale_ * curve_->value(scaler_.scale(v)) + shift_;
}

double SubjectTransform::solve_log_time(double z, const LogTimeScaler& hint) const {
  double lo = hint.a_lo;
  double hi = hint.b_hi;
  double step = std::max(hi - lo, 1.0);
  while (h_of_log_time(lo) > z && lo > kMinLogTime) {
    lo = std::max(lo - step, kMinLogTime);
    step *= 2.0;
  }
  step = std::max(hi - lo, 1.0);
  while (h_of_log_time(hi) < z && hi < kMaxLogTime) {
    hi = std::min(hi + step, kMaxLogTime);
    step *= 2.0;
  }
  for (int iter = 0; iter < 300; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(mid))) break;
    if (h_of_log_time(mid) < z) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SubjectTransform resolve_transform(const ModelSpec& spec, std::span<const double> head,
                                   std::span<const double> features,
                                   const LogTimeScaler& scaler) {
  const HeadLayout L(spec);
  require(head.size() == L.size, "head parameter vector has the wrong length");
  require(features.size() == L.feature_len, "feature vector has the wrong length");
  auto block = [&](std::optional<std::size_t> at, std::size_t n) { return head.subspan(*at, n); };

  switch (spec.parameterization) {
    case Parameterization::LinearShift:
      return SubjectTransform::linear(head[*L.a], softplus(head[*L.b_raw]),
                                      kernels::dot(features, block(L.w, L.feature_len)));
    case Parameterization::LinearScale:
      return SubjectTransform::linear(
          head[*L.a], softplus(kernels::dot(features, block(L.w, L.feature_len))), 0.0);
    case Parameterization::Baseline:
      return SubjectTransform::bernstein(monotone_reparam(block(L.gamma, L.gamma_len)), scaler,
                                         1.0, 0.0);
    case Parameterization::BernsteinShift:
      return SubjectTransform::bernstein(monotone_reparam(block(L.gamma, L.gamma_len)), scaler,
                                         1.0,
                                         kernels::dot(features, block(L.w, L.feature_len)));
    case Parameterization::BernsteinShiftScale:
      return SubjectTransform::bernstein(
          monotone_reparam(block(L.gamma, L.gamma_len)), scaler,
          softplus(kernels::dot(features, block(L.beta, L.feature_len))),
          kernels::dot(features, block(L.w, L.feature_len)));
    case Parameterization::BernsteinFlexible:
      return SubjectTransform::bernstein(monotone_reparam(features), scaler, 1.0, 0.0);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown parameterization");
}

TransformValue eval_transform(const ModelSpec& spec, std::span<const double> head,
                              std::span<const double> features, double t,
                              const LogTimeScaler& scaler) {
  require_positive_time(t);
  return resolve_transform(spec, head, features, scaler).eval(t);
}

void grad_transform_acc(const ModelSpec& spec, std::span<const double> head,
                        std::span<const double> features, double t,
                        const LogTimeScaler& scaler, double upstream_h, double upstream_dhdt,
                        std::span<double> head_grad, std::span<double> feature_grad) {
  require_positive_time(t);
  const HeadLayout L(spec);
  require(head.size() == L.size && head_grad.size() == L.size,
          "head parameter vector has the wrong length");
  require(features.size() == L.feature_len && feature_grad.size() == L.feature_len,
          "feature vector has the wrong length");
  const double gh = upstream_h;
  const double gd = upstream_dhdt;
  const double log_t = std::log(t);
  const std::size_t d = L.feature_len;

  auto shift_grad = [&]() {
    for (std::size_t i = 0; i < d; ++i) {
      head_grad[*L.w + i] += gh * features[i];
      feature_grad[i] += gh * head[*L.w + i];
    }
  };

  switch (spec.parameterization) {
    case Parameterization::LinearShift: {
      head_grad[*L.a] += gh;
      head_grad[*L.b_raw] += sigmoid(head[*L.b_raw]) * (gh * log_t + gd / t);
      shift_grad();
      return;
    }
    case Parameterization::LinearScale: {
      const double z = kernels::dot(features, head.subspan(*L.w, d));
      const double dz = sigmoid(z) * (gh * log_t + gd / t);
      head_grad[*L.a] += gh;
      for (std::size_t i = 0; i < d; ++i) {
        head_grad[*L.w + i] += dz * features[i];
        feature_grad[i] += dz * head[*L.w + i];
      }
      return;
    }
    default:
      break;
  }

  // Bernstein family.
  const bool flexible = spec.parameterization == Parameterization::BernsteinFlexible;
  const std::span<const double> gamma = flexible ? features : head.subspan(*L.gamma, L.gamma_len);
  const BernsteinCurve curve(monotone_reparam(gamma));
  const double u = scaler.scale(log_t);
  const double du_dt = 1.0 / (scaler.width() * t);
  const std::size_t k1 = gamma.size();
  std::vector<double> d_value(k1), d_slope(k1), grad_theta(k1), grad_gamma(k1);
  curve.grad(u, d_value, d_slope);

  double c = 1.0;
  double z_beta = 0.0;
  if (spec.parameterization == Parameterization::BernsteinShiftScale) {
    z_beta = kernels::dot(features, head.subspan(*L.beta, d));
    c = softplus(z_beta);
  }
  for (std::size_t k = 0; k < k1; ++k) {
    grad_theta[k] = c * (gh * d_value[k] + gd * du_dt * d_slope[k]);
  }
  monotone_reparam_backward(gamma, grad_theta, grad_gamma);

  if (flexible) {
    for (std::size_t k = 0; k < k1; ++k) feature_grad[k] += grad_gamma[k];
    return;
  }
  for (std::size_t k = 0; k < k1; ++k) head_grad[*L.gamma + k] += grad_gamma[k];
  if (spec.parameterization == Parameterization::Baseline) return;

  shift_grad();
  if (spec.parameterization == Parameterization::BernsteinShiftScale) {
    const double dc = gh * curve.value(u) + gd * curve.slope(u) * du_dt;
    const double dz = dc * sigmoid(z_beta);
    for (std::size_t i = 0; i < d; ++i) {
      head_grad[*L.beta + i] += dz * features[i];
      feature_grad[i] += dz * head[*L.beta + i];
    }
  }
}

TransformGradient grad_transform(const ModelSpec& spec, std::span<const double> head,
                                 std::span<const double> features, double t,
                                 const LogTimeScaler& scaler, double upstream_h,
                                 double upstream_dhdt) {
  const HeadLayout L(spec);
  TransformGradient g;
  g.head.assign(L.size, 0.0);
  g.features.assign(L.feature_len, 0.0);
  grad_transform_acc(spec, head, features, t, scaler, upstream_h, upstream_dhdt, g.head,
                     g.features);
  return g;
}

void validate_model(const FittedModel& model) {
  validate_spec(model.spec);
  const HeadLayout L(model.spec);
  if (model.head_params.size() != L.size) {
    throw Error(ErrorCode::MalformedArtifact,
                "head_params: expected " + std::to_string(L.size) + " values, got " +
                    std::to_string(model.head_params.size()));
  }
  const std::size_t n_extractor =
      uses_extractor(model.spec.parameterization)
          ? ExtractorLayout(model.spec.extractor).parameter_count()
          : 0;
  if (model.extractor_params.size() != n_extractor) {
    throw Error(ErrorCode::MalformedArtifact,
                "extractor_params: expected " + std::to_string(n_extractor) + " values, got " +
                    std::to_string(model.extractor_params.size()));
  }
  auto all_finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!all_finite(model.head_params) || !all_finite(model.extractor_params)) {
    throw Error(ErrorCode::MalformedArtifact, "model parameters must be finite");
  }
  if (!std::isfinite(model.scaler.a_lo) || !std::isfinite(model.scaler.b_hi) ||
      !(model.scaler.b_hi > model.scaler.a_lo)) {
    throw Error(ErrorCode::MalformedArtifact, "scaler requires finite b_hi > a_lo");
  }
  if (L.gamma) {
    const auto theta = monotone_reparam(
        std::span<const double>(model.head_params).subspan(*L.gamma, L.gamma_len));
    for (std::size_t k = 1; k < theta.size(); ++k) {
      if (!(theta[k] > theta[k - 1])) {
        throw Error(ErrorCode::MalformedArtifact, "Bernstein coefficients are not increasing");
      }
    }
  }
}

// ---------------------------------------------------------------------------

ConditionalDistribution::ConditionalDistribution(Family family, SubjectTransform transform,
                                                 LogTimeScaler scaler)
    : family_(family), transform_(std::move(transform)), scaler_(scaler) {}

double ConditionalDistribution::cdf(double t) const {
  if (!(t > 0.0)) return 0.0;
  if (t == kInf) return 1.0;
  return target::cdf(family_, transform_.h(t));
}

double ConditionalDistribution::survivor(double t) const {
  if (!(t > 0.0)) return 1.0;
  if (t == kInf) return 0.0;
  return target::survivor(family_, transform_.h(t));
}

double ConditionalDistribution::pdf(double t) const {
  if (!(t > 0.0) || t == kInf) return 0.0;
  const auto v = transform_.eval(t);
  return std::exp(target::log_density(family_, v.h) + std::log(v.dh_dt));
}

double ConditionalDistribution::quantile(double p) const {
  const double z = target::quantile(family_, p);
  return std::exp(transform_.solve_log_time(z, scaler_));
}

LikelihoodTerms ConditionalDistribution::terms(const Observation& obs) const {
  require_positive_time(obs.time_lower);
  const TransformValue lower = transform_.eval(obs.time_lower);
  TransformValue upper{kInf, 0.0};
  if (obs.censoring == CensoringKind::Interval && std::isfinite(obs.time_upper)) {
    upper = transform_.eval(obs.time_upper);
  }
  return likelihood_terms(family_, obs.censoring, lower, upper);
}

double ConditionalDistribution::nll(const Observation& obs) const { return terms(obs).nll; }

ConditionalDistribution conditional_distribution(const FittedModel& model,
                                                 std::span<const double> x) {
  const ModelSpec& spec = model.spec;
  std::vector<double> features;
  if (uses_extractor(spec.parameterization)) {
    if (x.size() != spec.extractor.input_dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "covariate vector has length " + std::to_string(x.size()) + ", model expects " +
                      std::to_string(spec.extractor.input_dim));
    }
    features = extractor_features(spec.extractor, model.extractor_params, x);
  }
  return ConditionalDistribution(
      spec.family, resolve_transform(spec, model.head_params, features, model.scaler),
      model.scaler);
}

}  // namespace tramsurv
