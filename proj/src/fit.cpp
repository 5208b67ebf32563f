#include "tramsurv/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>

#include "tramsurv/basis.hpp"
#include "tramsurv/error.hpp"
#include "tramsurv/feature.hpp"
#include "tramsurv/kernels.hpp"
#include "tramsurv/log.hpp"
#include "tramsurv/random.hpp"
#include "tramsurv/target.hpp"

namespace tramsurv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TrainConfig train_config_from_spec(const ModelSpec& spec) {
  TrainConfig c;
  c.epochs = spec.epochs;
  c.lr_extractor = spec.lr_extractor;
  c.lr_head = spec.lr_head;
  c.early_stopping_patience = spec.early_stopping_patience;
  c.seed = spec.seed;
  return c;
}

void validate_train_config(const TrainConfig& c) {
  if (c.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (c.early_stopping_patience < 0 || c.epochs < 0) {
    throw Error(ErrorCode::InvalidArgument, "epochs and patience must be non-negative");
  }
  if (!(c.lr_extractor > 0.0) || !(c.lr_head > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning rates must be positive");
  }
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "validation_fraction must lie in (0, 1)");
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
  }
  if (!(c.clip_norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "clip_norm must be positive");
}

// ---------------------------------------------------------------------------

std::vector<double> model_parameters(const FittedModel& model) {
  std::vector<double> p(model.head_params);
  p.insert(p.end(), model.extractor_params.begin(), model.extractor_params.end());
  return p;
}

void set_model_parameters(FittedModel& model, std::span<const double> params) {
  const std::size_t nh = model.head_params.size();
  if (params.size() != nh + model.extractor_params.size()) {
    throw Error(ErrorCode::DimensionMismatch, "set_model_parameters: size");
  }
  std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(nh),
            model.head_params.begin());
  std::copy(params.begin() + static_cast<std::ptrdiff_t>(nh), params.end(),
            model.extractor_params.begin());
}

double nll_observation(const FittedModel& model, const Observation& obs) {
  return conditional_distribution(model, obs.covariates).nll(obs);
}

double nll_sum(const FittedModel& model, std::span<const Observation> observations) {
  double total = 0.0;
  for (const auto& obs : observations) total += nll_observation(model, obs);
  return total;
}

BatchNll nll_batch(const FittedModel& model, std::span<const Observation> observations) {
  if (observations.empty()) throw Error(ErrorCode::InvalidArgument, "nll_batch: empty batch");
  const ModelSpec& spec = model.spec;
  const HeadLayout layout(spec);
  const std::size_t nh = model.head_params.size();
  BatchNll out;
  out.gradient.assign(nh + model.extractor_params.size(), 0.0);
  std::span<double> head_grad(out.gradient.data(), nh);
  std::span<double> ext_grad(out.gradient.data() + nh, model.extractor_params.size());
  std::vector<double> feature_grad(layout.feature_len);
  const bool with_extractor = uses_extractor(spec.parameterization);

  for (const auto& obs : observations) {
    ExtractorOutput forward;
    if (with_extractor) {
      if (obs.covariates.size() != spec.extractor.input_dim) {
        throw Error(ErrorCode::DimensionMismatch, "nll_batch: covariate length");
      }
      forward = extractor_forward(spec.extractor, model.extractor_params, obs.covariates);
    }
    const ConditionalDistribution dist(
        spec.family, resolve_transform(spec, model.head_params, forward.features, model.scaler),
        model.scaler);
    const LikelihoodTerms terms = dist.terms(obs);
    out.nll += terms.nll;
    if (terms.clamped) {
      ++out.clamped;
      continue;
    }
    std::fill(feature_grad.begin(), feature_grad.end(), 0.0);
    grad_transform_acc(spec, model.head_params, forward.features, obs.time_lower, model.scaler,
                       terms.d_h_lower, terms.d_dhdt_lower, head_grad, feature_grad);
    if (obs.censoring == CensoringKind::Interval && std::isfinite(obs.time_upper)) {
      grad_transform_acc(spec, model.head_params, forward.features, obs.time_upper,
                         model.scaler, terms.d_h_upper, 0.0, head_grad, feature_grad);
    }
    if (with_extractor) {
      extractor_backward_acc(spec.extractor, model.extractor_params, forward.tape, feature_grad,
                             ext_grad);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Split validation_split(std::size_t n, double validation_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream stream(rng::key(seed, 0x73706c6974ULL));
  stream.shuffle(order.begin(), order.end());
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  Split s;
  if (n_val == 0 || n_val >= n) {
    s.train = order;
    s.validation = order;
    return s;
  }
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

Split bootstrap_split(std::size_t n, std::uint64_t seed, std::size_t member) {
  rng::Stream stream(rng::key(seed, 0x626f6f74ULL, member));
  Split s;
  s.train.resize(n);
  std::vector<char> drawn(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    s.train[i] = stream.index(n);
    drawn[s.train[i]] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!drawn[i]) s.validation.push_back(i);
  }
  if (s.validation.empty()) s.validation = s.train;
  return s;
}

FittedModel initial_model(const ModelSpec& spec, const LogTimeScaler& scaler, std::uint64_t seed) {
  validate_spec(spec);
  FittedModel m;
  m.spec = spec;
  m.scaler = scaler;
  const HeadLayout layout(spec);
  m.head_params.assign(layout.size, 0.0);
  if (uses_extractor(spec.parameterization)) {
    m.extractor_params = init_params(spec.extractor, seed);
  }
  // h starts as the straight line from the 2% to the 98% target quantile
  // across the scaler range.
  const double z_lo = target::quantile(spec.family, 0.02);
  const double z_hi = target::quantile(spec.family, 0.98);
  const int k = std::max(spec.bernstein_order, 1);
  auto gamma_line = [&](double span_scale) {
    std::vector<double> g(static_cast<std::size_t>(k) + 1);
    g[0] = z_lo / span_scale;
    for (int j = 1; j <= k; ++j) g[j] = softplus_inverse((z_hi - z_lo) / (k * span_scale));
    return g;
  };

  switch (spec.parameterization) {
    case Parameterization::LinearShift: {
      const double slope = (z_hi - z_lo) / scaler.width();
      m.head_params[*layout.a] = z_lo - slope * scaler.a_lo;
      m.head_params[*layout.b_raw] = softplus_inverse(slope);
      break;
    }
    case Parameterization::LinearScale: {
      // The first feature starts as the constant 1 so that softplus(phi'w)
      // can carry the initial slope; its weights are free to move later.
      const ExtractorLayout el(spec.extractor);
      const auto& last = el.layers().back();
      std::fill_n(m.extractor_params.begin() + static_cast<std::ptrdiff_t>(last.weight_offset),
                  last.in, 0.0);
      m.extractor_params[last.bias_offset] = 1.0;
      const double slope = (z_hi - z_lo) / scaler.width();
      m.head_params[*layout.w] = softplus_inverse(slope);
      m.head_params[*layout.a] = z_lo - slope * scaler.a_lo;
      break;
    }
    case Parameterization::Baseline:
    case Parameterization::BernsteinShift: {
      const auto g = gamma_line(1.0);
      std::copy(g.begin(), g.end(), m.head_params.begin() + static_cast<std::ptrdiff_t>(*layout.gamma));
      break;
    }
    case Parameterization::BernsteinShiftScale: {
      const auto g = gamma_line(std::numbers::ln2);  // softplus(0) scale at beta = 0
      std::copy(g.begin(), g.end(), m.head_params.begin() + static_cast<std::ptrdiff_t>(*layout.gamma));
      break;
    }
    case Parameterization::BernsteinFlexible: {
      const ExtractorLayout el(spec.extractor);
      const auto& last = el.layers().back();
      const auto g = gamma_line(1.0);
      std::copy(g.begin(), g.end(),
                m.extractor_params.begin() + static_cast<std::ptrdiff_t>(last.bias_offset));
      break;
    }
  }
  return m;
}

std::vector<double> learning_rates(const ModelSpec& spec, const TrainConfig& config) {
  const HeadLayout layout(spec);
  std::vector<double> lr(layout.size, config.lr_head);
  if (!uses_extractor(spec.parameterization)) return lr;
  const ExtractorLayout el(spec.extractor);
  lr.resize(layout.size + el.parameter_count(), config.lr_extractor);
  if (spec.parameterization == Parameterization::BernsteinFlexible) {
    // The output layer produces the Bernstein coefficients and plays the
    // role of the transformation head.
    const auto& last = el.layers().back();
    std::fill(lr.begin() + static_cast<std::ptrdiff_t>(layout.size + last.weight_offset),
              lr.end(), config.lr_head);
  }
  return lr;
}

namespace {

double mean_nll(const FittedModel& model, const SurvivalDataset& data,
                const std::vector<std::size_t>& idx) {
  double total = 0.0;
  for (std::size_t i : idx) total += nll_observation(model, data.observations[i]);
  return total / static_cast<double>(idx.size());
}

}  // namespace

FitResult fit_split(const SurvivalDataset& dataset, const ModelSpec& spec_in,
                    const TrainConfig& config, const Split& split, const LogTimeScaler& scaler) {
  validate_train_config(config);
  ModelSpec spec = spec_in;
  spec.epochs = config.epochs;
  spec.lr_extractor = config.lr_extractor;
  spec.lr_head = config.lr_head;
  spec.early_stopping_patience = config.early_stopping_patience;
  spec.seed = config.seed;
  validate_spec(spec);
  if (uses_extractor(spec.parameterization) &&
      spec.extractor.input_dim != dataset.num_features()) {
    throw Error(ErrorCode::DimensionMismatch,
                "extractor input_dim " + std::to_string(spec.extractor.input_dim) +
                    " does not match the dataset's " + std::to_string(dataset.num_features()) +
                    " covariates");
  }
  if (split.train.empty() || split.validation.empty()) {
    throw Error(ErrorCode::EmptyDataset, "fit: empty training or validation set");
  }
  if (std::none_of(split.train.begin(), split.train.end(),
                   [&](std::size_t i) { return dataset.observations[i].is_event(); })) {
    throw Error(ErrorCode::AllCensored, "fit: training set has no exact event times");
  }

  FitResult result;
  result.model = initial_model(spec, scaler, config.seed);
  FittedModel& state = result.model;
  const std::vector<double> lr = learning_rates(spec, config);
  std::vector<double> params = model_parameters(state);
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> best_params = params;
  double best_val = mean_nll(state, dataset, split.validation);
  if (!std::isfinite(best_val)) best_val = kInf;
  int since_best = 0;

  std::vector<std::size_t> order = split.train;
  std::vector<Observation> batch;
  batch.reserve(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng::Stream stream(rng::key(config.seed, 0x65706f6368ULL, static_cast<std::uint64_t>(epoch)));
    stream.shuffle(order.begin(), order.end());
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t steps = 0;
    double norm_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset.observations[order[i]]);
      BatchNll b = nll_batch(state, batch);
      result.interval_clamps += b.clamped;
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (double& g : b.gradient) g *= inv;
      const double norm = std::sqrt(kernels::dot(b.gradient, b.gradient));
      if (!std::isfinite(norm) || !std::isfinite(b.nll)) {
        throw Error(ErrorCode::NonFiniteLoss,
                    "non-finite loss or gradient in epoch " + std::to_string(epoch),
                    static_cast<std::size_t>(epoch));
      }
      norm_sum += norm;
      ++steps;
      if (norm > config.clip_norm) {
        const double s = config.clip_norm / norm;
        for (double& g : b.gradient) g *= s;
        ++rec.clipped;
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] + b.gradient[i];
        params[i] -= lr[i] * velocity[i];
      }
      set_model_parameters(state, params);
    }
    rec.grad_norm = steps > 0 ? norm_sum / static_cast<double>(steps) : 0.0;
    rec.train_nll = mean_nll(state, dataset, split.train);
    rec.validation_nll = mean_nll(state, dataset, split.validation);
    if (!std::isfinite(rec.train_nll)) {
      throw Error(ErrorCode::NonFiniteLoss, "non-finite training NLL in epoch " + std::to_string(epoch),
                  static_cast<std::size_t>(epoch));
    }
    result.history.push_back(rec);
    logger().info("epoch={} train_nll={:.6f} val_nll={:.6f} grad_norm={:.4g} clipped={}", epoch,
                  rec.train_nll, rec.validation_nll, rec.grad_norm, rec.clipped);
    if (rec.clipped > 0) logger().debug("epoch {}: clipped {} gradient steps", epoch, rec.clipped);

    if (rec.validation_nll < best_val) {
      best_val = rec.validation_nll;
      best_params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stopping_patience) {
      break;
    }
  }
  if (result.interval_clamps > 0) {
    logger().warn("{} interval likelihood terms were clamped at epsilon", result.interval_clamps);
  }

  set_model_parameters(state, best_params);
  state.train_nll = mean_nll(state, dataset, split.train);
  state.validation_nll = mean_nll(state, dataset, split.validation);
  validate_model(state);
  return result;
}

FitResult fit(const SurvivalDataset& dataset, const ModelSpec& spec, const TrainConfig& config) {
  const SurvivalDataset& data = dataset;
  validate_dataset(data, ValidationMode::Fitting);
  const LogTimeScaler scaler = fit_scaler(data);
  return fit_split(data, spec, config,
                   validation_split(data.size(), config.validation_fraction, config.seed), scaler);
}

// ---------------------------------------------------------------------------

TrainConfig member_config(const TrainConfig& config, std::size_t member) {
  TrainConfig c = config;
  c.seed = rng::key(config.seed, 0x6d656d626572ULL, member);
  return c;
}

std::vector<std::size_t> select_top(std::span<const double> validation_nlls,
                                    std::span<const std::uint64_t> seeds, std::size_t m) {
  std::vector<std::size_t> idx(validation_nlls.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (validation_nlls[a] != validation_nlls[b]) return validation_nlls[a] < validation_nlls[b];
    return seeds[a] < seeds[b];
  });
  idx.resize(std::min(m, idx.size()));
  return idx;
}

EnsembleResult fit_ensemble(const SurvivalDataset& dataset, const ModelSpec& spec,
                            const TrainConfig& config, std::size_t b, std::size_t m,
                            std::size_t jobs) {
  if (m < 1 || b < m) throw Error(ErrorCode::InvalidArgument, "ensemble requires B >= M >= 1");
  validate_dataset(dataset, ValidationMode::Fitting);
  const LogTimeScaler scaler = fit_scaler(dataset);

  EnsembleResult out;
  out.fits.resize(b);
  std::vector<std::exception_ptr> errors(b);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < b; i = next++) {
      try {
        const TrainConfig cfg = member_config(config, i);
        out.fits[i] = fit_split(dataset, spec, cfg, bootstrap_split(dataset.size(), config.seed, i),
                                scaler);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, b);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> vals(b);
  std::vector<std::uint64_t> seeds(b);
  for (std::size_t i = 0; i < b; ++i) {
    vals[i] = out.fits[i].model.validation_nll;
    seeds[i] = out.fits[i].model.spec.seed;
    out.candidates.push_back({i, seeds[i], vals[i], false});
  }
  for (std::size_t i : select_top(vals, seeds, m)) {
    out.candidates[i].selected = true;
    out.ensemble.members.push_back(out.fits[i].model);
    out.ensemble.member_validation_nlls.push_back(vals[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

EnsembleDistribution::EnsembleDistribution(std::vector<ConditionalDistribution> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble has no members");
}

double EnsembleDistribution::cdf(double t) const {
  double s = 0.0;
  for (const auto& d : members_) s += d.cdf(t);
  return s / static_cast<double>(members_.size());
}

double EnsembleDistribution::survivor(double t) const {
  double s = 0.0;
  for (const auto& d : members_) s += d.survivor(t);
  return s / static_cast<double>(members_.size());
}

double EnsembleDistribution::pdf(double t) const {
  double s = 0.0;
  for (const auto& d : members_) s += d.pdf(t);
  return s / static_cast<double>(members_.size());
}

double EnsembleDistribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::ProbabilityOutOfRange, "quantile: probability must lie in (0, 1)");
  }
  // The mixture quantile lies between the smallest and largest member quantile.
  double lo = kInf;
  double hi = -kInf;
  for (const auto& d : members_) {
    const double v = std::log(d.quantile(p));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (int iter = 0; iter < 300 && hi > lo; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= 1e-14 * std::max(1.0, std::abs(mid))) break;
    if (cdf(std::exp(mid)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

double EnsembleDistribution::nll(const Observation& obs) const {
  // Mixture likelihood: -log(M^-1 sum_m exp(-nll_m)).
  std::vector<double> ll(members_.size());
  for (std::size_t i = 0; i < members_.size(); ++i) ll[i] = -members_[i].nll(obs);
  const double mx = *std::max_element(ll.begin(), ll.end());
  if (!std::isfinite(mx)) return -mx;
  double s = 0.0;
  for (double v : ll) s += std::exp(v - mx);
  return -(mx + std::log(s / static_cast<double>(members_.size())));
}

EnsembleDistribution ensemble_distribution(const EnsembleModel& ensemble,
                                           std::span<const double> x) {
  std::vector<ConditionalDistribution> members;
  members.reserve(ensemble.members.size());
  for (const auto& m : ensemble.members) members.push_back(conditional_distribution(m, x));
  return EnsembleDistribution(std::move(members));
}

double ensemble_cdf(const EnsembleModel& ensemble, std::span<const double> x, double t) {
  return ensemble_distribution(ensemble, x).cdf(t);
}

}  // namespace tramsurv
