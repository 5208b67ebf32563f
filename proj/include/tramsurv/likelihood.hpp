#pragma once
// Per-observation negative log-likelihood written in terms of the
// transformation function values. This is the single implementation behind
// both training (fit) and scoring (metrics).

#include "tramsurv/core.hpp"

namespace tramsurv {

/// Floor applied to the interval probability F(h_u) - F(h_l).
inline constexpr double kIntervalEpsilon = 1e-12;

struct TransformValue {
  double h = 0.0;
  double dh_dt = 1.0;
};

struct LikelihoodTerms {
  double nll = 0.0;
  // Partial derivatives of nll.
  double d_h_lower = 0.0;     // w.r.t. h at the lower (or only) time
  double d_dhdt_lower = 0.0;  // w.r.t. h'(t), exact events only
  double d_h_upper = 0.0;     // w.r.t. h at the upper time, intervals only
  bool clamped = false;       // interval probability hit the epsilon floor
};

/// Exact:    -log f_Z(h) - log h'
/// Right:    -log(1 - F_Z(h))
/// Left:     -log F_Z(h)
/// Interval: -log(F_Z(h_upper) - F_Z(h_lower)); an infinite upper time must be
///           passed with upper.h = +inf and reduces to the right-censored term.
LikelihoodTerms likelihood_terms(Family family, CensoringKind kind, TransformValue lower,
                                 TransformValue upper = {});

}  // namespace tramsurv
