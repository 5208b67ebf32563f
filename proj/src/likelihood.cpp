#include "tramsurv/likelihood.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tramsurv/target.hpp"

namespace tramsurv {

namespace {

LikelihoodTerms right_terms(Family family, double h) {
  LikelihoodTerms r;
  r.nll = -target::log_survivor(family, h);
  r.d_h_lower = -target::d_log_survivor(family, h);
  return r;
}

LikelihoodTerms interval_terms(Family family, double hl, double hu) {
  if (hu == std::numeric_limits<double>::infinity()) return right_terms(family, hl);
  LikelihoodTerms r;
  // log(F(hu) - F(hl)) evaluated on whichever tail keeps precision.
  double log_diff;
  const double log_fu = target::log_cdf(family, hu);
  if (log_fu < -std::numbers::ln2) {
    const double log_fl = target::log_cdf(family, hl);
    log_diff = log_fu + std::log1p(-std::exp(log_fl - log_fu));
  } else {
    const double log_sl = target::log_survivor(family, hl);
    const double log_su = target::log_survivor(family, hu);
    log_diff = log_sl + std::log1p(-std::exp(log_su - log_sl));
  }
  if (!(hu > hl) || !(log_diff >= std::log(kIntervalEpsilon))) {
    r.nll = -std::log(kIntervalEpsilon);
    r.clamped = true;
    return r;
  }
  r.nll = -log_diff;
  r.d_h_upper = -std::exp(target::log_density(family, hu) - log_diff);
  r.d_h_lower = std::exp(target::log_density(family, hl) - log_diff);
  return r;
}

}  // namespace

LikelihoodTerms likelihood_terms(Family family, CensoringKind kind, TransformValue lower,
                                 TransformValue upper) {
  switch (kind) {
    case CensoringKind::Exact: {
      LikelihoodTerms r;
      r.nll = -target::log_density(family, lower.h) - std::log(lower.dh_dt);
      r.d_h_lower = -target::d_log_density(family, lower.h);
      r.d_dhdt_lower = -1.0 / lower.dh_dt;
      return r;
    }
    case CensoringKind::Right:
      return right_terms(family, lower.h);
    case CensoringKind::Left: {
      LikelihoodTerms r;
      r.nll = -target::log_cdf(family, lower.h);
      r.d_h_lower = -target::d_log_cdf(family, lower.h);
      return r;
    }
    case CensoringKind::Interval:
      return interval_terms(family, lower.h, upper.h);
  }
  return {};
}

}  // namespace tramsurv
