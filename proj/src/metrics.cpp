#include "tramsurv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "tramsurv/error.hpp"

namespace tramsurv {

Concordance concordance(std::span<const double> times, std::span<const int> events,
                        std::span<const double> risk) {
  const std::size_t n = times.size();
  if (events.size() != n || risk.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "c_index: inputs differ in length");
  }
  // Half-counts are kept as integers so the result does not depend on order.
  std::uint64_t twice_num = 0;
  std::uint64_t den = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!events[j]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(times[j] < times[i])) continue;
      ++den;
      if (risk[j] > risk[i]) {
        twice_num += 2;
      } else if (risk[j] == risk[i]) {
        twice_num += 1;
      }
    }
  }
  if (den == 0) throw Error(ErrorCode::NoComparablePairs, "c_index: no comparable pairs");
  return {static_cast<double>(twice_num) / (2.0 * static_cast<double>(den)),
          static_cast<std::size_t>(den)};
}

double c_index(std::span<const double> times, std::span<const int> events,
               std::span<const double> risk) {
  return concordance(times, events, risk).c_index;
}

double log_score(const PredictiveDistribution& distribution, const Observation& obs) {
  if (obs.censoring != CensoringKind::Exact && obs.censoring != CensoringKind::Right) {
    throw Error(ErrorCode::UnsupportedCensoringKind,
                "log_score covers exact and right-censored observations, got " +
                    std::string(to_string(obs.censoring)));
  }
  return distribution.nll(obs);
}

// ---------------------------------------------------------------------------

double simpson(const std::function<double(double)>& f, double a, double b, const Quadrature& q) {
  if (!(b > a)) return 0.0;
  // Endpoints are taken as one-sided limits from inside the interval so a
  // jump exactly at an endpoint does not leak into the integral.
  const double ends = f(std::nextafter(a, b)) + f(std::nextafter(b, a));
  std::size_t n = std::max<std::size_t>(2, q.initial_panels + (q.initial_panels & 1));
  double even = 0.0;
  double odd = 0.0;
  {
    const double h = (b - a) / static_cast<double>(n);
    for (std::size_t i = 1; i < n; ++i) {
      (i % 2 ? odd : even) += f(a + static_cast<double>(i) * h);
    }
  }
  double prev = (b - a) / static_cast<double>(n) / 3.0 * (ends + 4.0 * odd + 2.0 * even);
  while (n < q.max_panels) {
    n *= 2;
    const double h = (b - a) / static_cast<double>(n);
    even += odd;
    odd = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f(a + static_cast<double>(i) * h);
    const double cur = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    if (std::abs(cur - prev) <= q.rel_tol * std::abs(cur) + q.abs_tol) return cur;
    prev = cur;
  }
  throw Error(ErrorCode::QuadratureNonConvergence,
              "Simpson quadrature did not converge with " + std::to_string(n) + " panels on [" +
                  std::to_string(a) + ", " + std::to_string(b) + "]");
}

namespace {

double piecewise(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breakpoints, const Quadrature& q) {
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += simpson(f, cuts[i], cuts[i + 1], q);
  return total;
}

}  // namespace

double crps(const std::function<double(double)>& cdf, double t, bool event, double t_max,
            std::span<const double> breakpoints, const Quadrature& q) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidArgument, "crps: t must be positive and finite");
  }
  if (!(t_max >= t) || !std::isfinite(t_max)) {
    throw Error(ErrorCode::InvalidArgument, "crps: requires t <= t_max");
  }
  auto F2 = [&](double u) {
    const double F = cdf(u);
    return F * F;
  };
  // F may behave like u^s with s < 1 near zero, which Simpson handles badly.
  // Halve toward zero until the remaining piece, bounded by c F(c)^2, is negligible.
  double first = t;
  for (double c : breakpoints) {
    if (c > 0.0 && c < first) first = c;
  }
  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  for (double c = first; c > 0.0 && cuts.size() < breakpoints.size() + 1100; c *= 0.5) {
    cuts.push_back(c);
    if (c * F2(c) <= q.abs_tol) break;
  }
  // The CDF changes on the log-time scale, so panels double in width above as well.
  for (double c = 2.0 * first; c < t_max; c *= 2.0) cuts.push_back(c);
  const double below = piecewise(F2, 0.0, t, cuts, q);
  if (!event) return below;
  const double above = piecewise(
      [&](double u) {
        const double S = 1.0 - cdf(u);
        return S * S;
      },
      t, t_max, cuts, q);
  return below + above;
}

double crps(const ConditionalDistribution& distribution, double t, bool event, double t_max) {
  const LogTimeScaler& s = distribution.scaler();
  const double cuts[] = {std::exp(s.a_lo), std::exp(s.b_hi)};
  return crps([&](double u) { return distribution.cdf(u); }, t, event, t_max, cuts);
}

double crps(const EnsembleDistribution& distribution, double t, bool event, double t_max) {
  std::vector<double> cuts;
  for (const auto& m : distribution.members()) {
    cuts.push_back(std::exp(m.scaler().a_lo));
    cuts.push_back(std::exp(m.scaler().b_hi));
  }
  return crps([&](double u) { return distribution.cdf(u); }, t, event, t_max, cuts);
}

// ---------------------------------------------------------------------------

namespace {

// Order-independent mean: sum the sorted values.
double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <class MakeDist>
EvaluationReport evaluate_with(const SurvivalDataset& raw, const LogTimeScaler& scaler,
                               MakeDist&& make) {
  const SurvivalDataset dataset = validate_dataset(raw, ValidationMode::Scoring);
  EvaluationReport r;
  r.n_subjects = dataset.size();
  r.t_max = std::exp(scaler.b_hi);
  for (const auto& o : dataset.observations) {
    if (o.censoring == CensoringKind::Exact || o.censoring == CensoringKind::Right) {
      r.t_max = std::max(r.t_max, o.time_lower);
    }
  }
  std::vector<double> times;
  std::vector<int> events;
  std::vector<double> risk;
  std::vector<double> nlls;
  std::vector<double> crpss;
  for (const auto& o : dataset.observations) {
    const auto dist = make(o.covariates);
    SubjectScore s;
    s.nll = dist.nll(o);
    if (o.censoring == CensoringKind::Exact || o.censoring == CensoringKind::Right) {
      s.crps = crps(dist, o.time_lower, o.is_event(), r.t_max);
      crpss.push_back(*s.crps);
    }
    s.risk = -dist.median();
    times.push_back(o.time_lower);
    events.push_back(o.is_event() ? 1 : 0);
    risk.push_back(s.risk);
    nlls.push_back(s.nll);
    r.per_subject.push_back(s);
  }
  r.mean_nll = sorted_mean(nlls);
  if (!crpss.empty()) r.mean_crps = sorted_mean(crpss);
  try {
    const Concordance c = concordance(times, events, risk);
    r.c_index = c.c_index;
    r.n_comparable_pairs = c.comparable_pairs;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoComparablePairs) throw;
  }
  return r;
}

}  // namespace

EvaluationReport evaluate(const FittedModel& model, const SurvivalDataset& dataset) {
  return evaluate_with(dataset, model.scaler, [&](const std::vector<double>& x) {
    return conditional_distribution(model, x);
  });
}

EvaluationReport evaluate(const EnsembleModel& ensemble, const SurvivalDataset& dataset) {
  if (ensemble.members.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble has no members");
  return evaluate_with(dataset, ensemble.members.front().scaler,
                       [&](const std::vector<double>& x) {
                         return ensemble_distribution(ensemble, x);
                       });
}

nlohmann::json report_to_json(const EvaluationReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json subjects = json::array();
  for (const auto& s : r.per_subject) {
    subjects.push_back({{"nll", s.nll}, {"crps", opt(s.crps)}, {"risk", s.risk}});
  }
  return json{
      {"n_subjects", r.n_subjects},
      {"n_comparable_pairs", r.n_comparable_pairs},
      {"t_max", r.t_max},
      {"aggregate", {{"mean_nll", r.mean_nll}, {"mean_crps", opt(r.mean_crps)},
                     {"c_index", opt(r.c_index)}}},
      {"per_subject", std::move(subjects)},
  };
}

}  // namespace tramsurv
