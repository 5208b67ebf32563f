#pragma once
// Harrell's c-index, the log-score and the CRPS for censored outcomes.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tramsurv/core.hpp"
#include "tramsurv/fit.hpp"
#include "tramsurv/transform.hpp"

namespace tramsurv {

struct Concordance {
  double c_index = 0.5;
  std::size_t comparable_pairs = 0;
};

/// Pairs (i, j) with T_j < T_i and event_j count; a pair is concordant when
/// risk_j > risk_i, ties in risk count 1/2. Throws NoComparablePairs.
Concordance concordance(std::span<const double> times, std::span<const int> events,
                        std::span<const double> risk);

double c_index(std::span<const double> times, std::span<const int> events,
               std::span<const double> risk);

/// -log f(t) for exact and -log S(t) for right-censored observations; the same
/// code path as the training NLL. Other kinds throw UnsupportedCensoringKind.
double log_score(const PredictiveDistribution& distribution, const Observation& obs);

struct Quadrature {
  std::size_t initial_panels = 512;
  std::size_t max_panels = 8192;
  double rel_tol = 1e-7;
  double abs_tol = 1e-14;
};

/// Composite Simpson with panel doubling. Throws QuadratureNonConvergence.
double simpson(const std::function<double(double)>& f, double a, double b,
               const Quadrature& q = {});

/// int_0^t F(u)^2 du + event * int_t^t_max (1 - F(u))^2 du. Each integral is
/// split at `breakpoints` (kinks of F) before quadrature.
double crps(const std::function<double(double)>& cdf, double t, bool event, double t_max,
            std::span<const double> breakpoints = {}, const Quadrature& q = {});

/// Uses the distribution's scaler edges as breakpoints.
double crps(const ConditionalDistribution& distribution, double t, bool event, double t_max);
double crps(const EnsembleDistribution& distribution, double t, bool event, double t_max);

struct SubjectScore {
  double nll = 0.0;
  std::optional<double> crps;  // exact and right-censored subjects only
  double risk = 0.0;           // negative predicted median
};

struct EvaluationReport {
  std::vector<SubjectScore> per_subject;
  double mean_nll = 0.0;
  std::optional<double> mean_crps;
  std::optional<double> c_index;
  std::size_t n_subjects = 0;
  std::size_t n_comparable_pairs = 0;
  double t_max = 0.0;
};

/// t_max defaults to max(exp(scaler.b_hi), largest evaluated time).
EvaluationReport evaluate(const FittedModel& model, const SurvivalDataset& dataset);
EvaluationReport evaluate(const EnsembleModel& ensemble, const SurvivalDataset& dataset);

nlohmann::json report_to_json(const EvaluationReport& report);

}  // namespace tramsurv
