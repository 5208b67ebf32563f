#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "test_support.hpp"
#include "tramsurv/error.hpp"
#include "tramsurv/feature.hpp"
#include "tramsurv/fit.hpp"

using namespace tramsurv;
using doctest::Approx;

namespace {

// LinearShift with a zero extractor: h = a + softplus(b_raw) log t.
FittedModel plain_linear_shift(Family f, double a, double b) {
  FittedModel m;
  m.spec = testing::small_spec(Parameterization::LinearShift, f, 1, {});
  m.spec.extractor.output_dim = 1;
  m.scaler = {-1.0, 1.0};
  m.head_params = {a, softplus_inverse(b), 0.0};
  m.extractor_params.assign(ExtractorLayout(m.spec.extractor).parameter_count(), 0.0);
  return m;
}

TrainConfig quick_config(std::uint64_t seed, int epochs = 30) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = seed;
  c.early_stopping_patience = 10;
  return c;
}

}  // namespace

TEST_CASE("observation NLL examples") {
  const auto lg = plain_linear_shift(Family::Logistic, 0.0, 1.0);
  const auto mev = plain_linear_shift(Family::MinimumExtremeValue, 0.0, 1.0);
  CHECK(nll_observation(lg, Observation::exact(1.0, {0.3})) == Approx(std::log(4.0)));
  CHECK(nll_observation(lg, Observation::right(1.0, {0.3})) == Approx(std::log(2.0)));
  CHECK(nll_observation(mev, Observation::right(1.0, {0.3})) == Approx(1.0));
  CHECK(nll_observation(lg, Observation::interval(std::exp(-1.0), std::exp(1.0), {0.3})) ==
        Approx(-std::log(oracle::logistic_cdf(1.0) - oracle::logistic_cdf(-1.0))));
  CHECK(nll_observation(lg, Observation::left(1.0, {0.3})) == Approx(std::log(2.0)));
}

TEST_CASE("batch NLL is additive and order invariant") {
  rng::Stream rs(51);
  const FittedModel m =
      testing::random_model(Parameterization::BernsteinShiftScale, Family::Logistic, 2, rs);
  const auto obs = testing::random_observations(m, 12, rs);
  const auto one = nll_batch(m, std::span(obs).first(1));
  CHECK(one.nll == nll_observation(m, obs[0]));

  std::vector<Observation> twice(obs);
  twice.insert(twice.end(), obs.begin(), obs.end());
  const auto a = nll_batch(m, obs);
  const auto b = nll_batch(m, twice);
  CHECK(b.nll == Approx(2.0 * a.nll).epsilon(1e-14));
  for (std::size_t i = 0; i < a.gradient.size(); ++i) {
    CHECK(b.gradient[i] == Approx(2.0 * a.gradient[i]).epsilon(1e-12));
  }
  std::vector<Observation> rev(obs.rbegin(), obs.rend());
  CHECK(nll_batch(m, rev).nll == Approx(a.nll).epsilon(1e-14));
  CHECK(nll_sum(m, obs) == Approx(a.nll).epsilon(1e-14));
  CHECK_THROWS_AS(nll_batch(m, std::span<const Observation>{}), Error);
}

TEST_CASE("batch gradient matches central differences") {
  rng::Stream rs(53);
  for (auto p : testing::kAllParameterizations) {
    for (auto f : testing::kAllFamilies) {
      for (int draw = 0; draw < 3; ++draw) {
        FittedModel m = testing::random_model(p, f, 3, rs);
        const auto obs = testing::random_observations(m, 8, rs);
        const auto g = nll_batch(m, obs);
        const auto theta = model_parameters(m);
        auto loss = [&](const std::vector<double>& th) {
          FittedModel mm = m;
          set_model_parameters(mm, th);
          return nll_sum(mm, obs);
        };
        double worst = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
          const double fd = oracle::central_difference(loss, theta, i, 1e-6 * (1.0 + std::abs(theta[i])));
          worst = std::max(worst, oracle::gradient_error(g.gradient[i], fd));
        }
        INFO(to_string(p), " ", to_string(f));
        CHECK(worst <= 1e-5);
      }
    }
  }
}

TEST_CASE("splits") {
  const Split s = validation_split(100, 0.2, 5);
  CHECK(s.validation.size() == 20);
  CHECK(s.train.size() == 80);
  std::vector<std::size_t> all(s.train);
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);
  CHECK(validation_split(100, 0.2, 5).train == s.train);
  CHECK(validation_split(100, 0.2, 6).train != s.train);
  const Split tiny = validation_split(2, 0.2, 1);
  CHECK(tiny.train == tiny.validation);

  const Split b = bootstrap_split(50, 3, 2);
  CHECK(b.train.size() == 50);
  for (std::size_t v : b.validation) {
    CHECK(std::find(b.train.begin(), b.train.end(), v) == b.train.end());
  }
  CHECK(bootstrap_split(50, 3, 2).train == b.train);
  CHECK(bootstrap_split(50, 3, 1).train != b.train);
}

TEST_CASE("per-parameter learning rates") {
  TrainConfig c;
  c.lr_extractor = 0.001;
  c.lr_head = 0.1;
  const ModelSpec s = testing::small_spec(Parameterization::BernsteinShift, Family::Logistic, 2);
  const auto lr = learning_rates(s, c);
  const HeadLayout hl(s);
  CHECK(lr.size() == hl.size + ExtractorLayout(s.extractor).parameter_count());
  for (std::size_t i = 0; i < lr.size(); ++i) CHECK(lr[i] == (i < hl.size ? 0.1 : 0.001));

  const ModelSpec fx = testing::small_spec(Parameterization::BernsteinFlexible, Family::Logistic, 2);
  const auto lf = learning_rates(fx, c);
  const ExtractorLayout el(fx.extractor);
  const auto last = el.layers().back();
  for (std::size_t i = 0; i < lf.size(); ++i) CHECK(lf[i] == (i >= last.weight_offset ? 0.1 : 0.001));
}

TEST_CASE("initial models are valid and centred on the data range") {
  for (auto p : testing::kAllParameterizations) {
    for (auto f : testing::kAllFamilies) {
      const ModelSpec s = testing::small_spec(p, f, 2);
      const LogTimeScaler sc{-1.0, 2.0};
      const FittedModel m = initial_model(s, sc, 3);
      CHECK_NOTHROW(validate_model(m));
      const auto d = conditional_distribution(m, std::vector<double>{0.0, 0.0});
      const double lo = d.cdf(std::exp(sc.a_lo)), hi = d.cdf(std::exp(sc.b_hi));
      INFO(to_string(p), " ", to_string(f));
      CHECK(lo < 0.2);
      CHECK(hi > 0.8);
    }
  }
}

TEST_CASE("fit: determinism, improvement and baseline invariance") {
  const SurvivalDataset ds = testing::simulate_exponential(300, 7, 0.0, {0.8, -0.5}, 0.3);
  const ModelSpec spec = testing::small_spec(Parameterization::BernsteinShift, Family::Logistic, 2);
  const TrainConfig cfg = quick_config(9);
  const FitResult a = fit(ds, spec, cfg);
  const FitResult b = fit(ds, spec, cfg);
  CHECK(serialize_model(a.model) == serialize_model(b.model));
  CHECK(a.model == b.model);

  const FittedModel init = initial_model(a.model.spec, a.model.scaler, cfg.seed);
  const Split split = validation_split(ds.size(), cfg.validation_fraction, cfg.seed);
  const auto train = ds.subset(split.train);
  CHECK(nll_sum(a.model, train.observations) <= nll_sum(init, train.observations));
  CHECK(a.model.train_nll == Approx(nll_sum(a.model, train.observations) / train.size()).epsilon(1e-12));
  CHECK_FALSE(a.history.empty());

  const ModelSpec base = testing::small_spec(Parameterization::Baseline, Family::Logistic, 2);
  const FitResult r = fit(ds, base, cfg);
  const auto d1 = conditional_distribution(r.model, std::vector<double>{1.0, 1.0});
  const auto d2 = conditional_distribution(r.model, std::vector<double>{-2.0, 0.5});
  for (double t : {0.1, 1.0, 3.0}) CHECK(d1.cdf(t) == d2.cdf(t));
}

TEST_CASE("fit rejects data without events") {
  SurvivalDataset ds;
  ds.feature_names = {"x"};
  ds.observations = {Observation::right(1.0, {0.0}), Observation::right(2.0, {1.0})};
  try {
    fit(ds, testing::small_spec(Parameterization::LinearShift, Family::Logistic, 1), quick_config(1));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllCensored);
  }
  TrainConfig bad = quick_config(1);
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(bad), Error);
}

TEST_CASE("exponential data recovers the generating coefficients") {
  const SurvivalDataset ds = testing::simulate_exponential(2000, 101, 0.0, {0.0});
  ModelSpec spec = testing::small_spec(Parameterization::LinearShift, Family::MinimumExtremeValue, 1, {});
  spec.extractor.output_dim = 1;
  TrainConfig cfg = quick_config(3, 200);
  cfg.lr_head = spec.lr_head;
  cfg.lr_extractor = spec.lr_extractor;
  cfg.early_stopping_patience = 20;
  const FitResult r = fit(ds, spec, cfg);
  const auto& h = r.model.head_params;
  const auto& e = r.model.extractor_params;  // [W, c]
  double xbar = 0.0;
  for (const auto& o : ds.observations) xbar += o.covariates[0];
  xbar /= ds.size();
  const double intercept = h[0] + h[2] * (e[0] * xbar + e[1]);
  CHECK(std::abs(intercept) <= 0.1);
  CHECK(std::abs(softplus(h[1]) - 1.0) <= 0.1);
}

TEST_CASE("ensembles") {
  const SurvivalDataset ds = testing::simulate_exponential(200, 13, 0.0, {0.7}, 0.3);
  const ModelSpec spec = testing::small_spec(Parameterization::LinearShift, Family::MinimumExtremeValue, 1);
  TrainConfig cfg = quick_config(21, 20);
  cfg.lr_head = spec.lr_head;
  cfg.lr_extractor = spec.lr_extractor;

  SUBCASE("B = M = 1 equals the fit on the first bootstrap") {
    const auto r = fit_ensemble(ds, spec, cfg, 1, 1);
    const FitResult direct =
        fit_split(ds, spec, member_config(cfg, 0), bootstrap_split(ds.size(), cfg.seed, 0), fit_scaler(ds));
    REQUIRE(r.ensemble.members.size() == 1);
    CHECK(r.ensemble.members[0] == direct.model);
  }
  SUBCASE("top-M picks the lowest validation NLLs, independent of thread count") {
    const auto r = fit_ensemble(ds, spec, cfg, 5, 2, 1);
    const auto r4 = fit_ensemble(ds, spec, cfg, 5, 2, 4);
    std::vector<double> v;
    for (const auto& c : r.candidates) v.push_back(c.validation_nll);
    std::sort(v.begin(), v.end());
    REQUIRE(r.ensemble.member_validation_nlls.size() == 2);
    CHECK(r.ensemble.member_validation_nlls[0] == v[0]);
    CHECK(r.ensemble.member_validation_nlls[1] == v[1]);
    CHECK(r.ensemble.members == r4.ensemble.members);
    int selected = 0;
    for (const auto& c : r.candidates) selected += c.selected;
    CHECK(selected == 2);
  }
  SUBCASE("ensemble NLL on held-out data does not exceed the median member") {
    const SurvivalDataset test = testing::simulate_exponential(300, 14, 0.0, {0.7}, 0.3);
    TrainConfig longer = cfg;
    longer.epochs = 150;
    longer.early_stopping_patience = 20;
    const SurvivalDataset train = testing::simulate_exponential(600, 13, 0.0, {0.7}, 0.3);
    const auto r = fit_ensemble(train, spec, longer, 10, 5, 4);
    std::vector<double> member_nll;
    for (const auto& m : r.ensemble.members) member_nll.push_back(nll_sum(m, test.observations));
    double ens = 0.0;
    for (const auto& o : test.observations) ens += ensemble_distribution(r.ensemble, o.covariates).nll(o);
    std::sort(member_nll.begin(), member_nll.end());
    CHECK(ens <= member_nll[member_nll.size() / 2]);
  }
  CHECK_THROWS_AS(fit_ensemble(ds, spec, cfg, 2, 3), Error);
}

TEST_CASE("select_top breaks ties by seed") {
  const std::vector<double> v{0.5, 0.2, 0.2, 0.9, 0.1};
  const std::vector<std::uint64_t> s{1, 9, 4, 2, 7};
  CHECK(select_top(v, s, 3) == std::vector<std::size_t>{4, 2, 1});
}

TEST_CASE("ensemble CDF averaging") {
  const auto a = plain_linear_shift(Family::MinimumExtremeValue, 0.0, 1.0);
  EnsembleModel same{{a, a, a}, {1, 1, 1}};
  const std::vector<double> x{0.0};
  for (double t : {0.1, 1.0, 5.0}) {
    CHECK(ensemble_cdf(same, x, t) == Approx(conditional_distribution(a, x).cdf(t)).epsilon(1e-15));
  }
  // cdf(1) = 0.2 and 0.6 for two exponentials with rates -log(0.8), -log(0.4).
  const auto m1 = plain_linear_shift(Family::MinimumExtremeValue, std::log(-std::log(0.8)), 1.0);
  const auto m2 = plain_linear_shift(Family::MinimumExtremeValue, std::log(-std::log(0.4)), 1.0);
  EnsembleModel pair{{m1, m2}, {0, 0}};
  CHECK(ensemble_cdf(pair, x, 1.0) == Approx(0.4).epsilon(1e-12));
  const auto d = ensemble_distribution(pair, x);
  CHECK(d.cdf(d.quantile(0.3)) == Approx(0.3).epsilon(1e-10));
  CHECK(d.nll(Observation::exact(1.0, x)) <=
        0.5 * (nll_observation(m1, Observation::exact(1.0, x)) + nll_observation(m2, Observation::exact(1.0, x))));

  rng::Stream rs(61);
  for (int trial = 0; trial < 10; ++trial) {
    EnsembleModel e;
    for (int k = 0; k < 4; ++k) {
      e.members.push_back(testing::random_model(Parameterization::BernsteinShift, Family::Logistic, 2, rs));
      e.members.back().scaler = e.members.front().scaler;
    }
    const std::vector<double> xx{rs.normal(), rs.normal()};
    const auto ed = ensemble_distribution(e, xx);
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double v = ed.cdf(std::exp(-6.0 + 12.0 * i / 999.0));
      CHECK(v >= prev);
      prev = v;
    }
  }
}
