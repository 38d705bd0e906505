#include <catch2/catch_amalgamated.hpp>

#include "berknash/example_zoo.hpp"
#include "berknash/model.hpp"

using namespace berknash;

TEST_CASE("normal interval masses are tail-stable and sum to one") {
  // partition [-10, 10] into 400 cells: total mass equals the box mass
  const double mu = 2.5, sd = 0.7;
  double tot = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double lo = -10.0 + 20.0 * i / 400.0, hi = -10.0 + 20.0 * (i + 1) / 400.0;
    const double m = normal_interval_mass(lo, hi, mu, sd);
    REQUIRE(m >= 0.0);
    tot += m;
  }
  const double box = normal_interval_mass(-10.0, 10.0, mu, sd);
  CHECK(std::abs(tot - box) < 1e-10);
  // far-tail cells keep relative precision (no cancellation to zero)
  CHECK(normal_interval_mass(-10.0, -9.95, 2.5, 0.7) > 0.0);
}

TEST_CASE("gaussian-linear masses match the paper symmetries") {
  SMDPSpec s;
  s.state_axes = {{"s", -kInf, kInf, AxisSpacing::Uniform, 0.0}};
  s.action = {0.0, 0.0, false, 0.0, {0.0}};
  s.theta_box = {{0.0, 2.0}, {0.0, 1.0}};
  GaussianLinear1D tru;
  tru.a = Coef::lit(0.5);
  tru.b = Coef::lit(1.0);
  s.true_kernel.coords = {tru};
  GaussianLinear1D mod;
  mod.a = Coef::param(0);
  mod.b = Coef::param(1);
  s.model_family.coords = {mod};
  s.payoff.kind = PayoffKind::Constant;
  s.discount = 0.95;

  // s=0: half the mass below zero
  CHECK(kernel_mass(s, {}, {0.0}, 0.0, {{-1e9, 0.0}}) == Catch::Approx(0.5).margin(1e-12));
  // s=2: mean is 1, so (-inf, 1] carries half
  CHECK(kernel_mass(s, {}, {2.0}, 0.0, {{-1e9, 1.0}}) == Catch::Approx(0.5).margin(1e-10));
  // model family at the true parameter point reproduces the true kernel
  CHECK(kernel_mass(s, {0.5, 1.0}, {1.3}, 0.0, {{-2.0, 0.7}}) ==
        Catch::Approx(kernel_mass(s, {}, {1.3}, 0.0, {{-2.0, 0.7}})).epsilon(1e-14));
}

TEST_CASE("truncated exponential closed form") {
  // integral of (1/theta) e^{-e/theta} / (1 - e^{-b/theta}) over [0,1], theta=1, b=2
  const double expect = (1.0 - std::exp(-1.0)) / (1.0 - std::exp(-2.0));
  CHECK(trunc_exp_interval_mass(0.0, 1.0, 1.0, 2.0) == Catch::Approx(expect).epsilon(1e-14));
  // full support
  CHECK(trunc_exp_interval_mass(0.0, 2.0, 1.0, 2.0) == Catch::Approx(1.0).epsilon(1e-14));
  // far-tail difference stays positive
  CHECK(trunc_exp_interval_mass(600.0, 601.0, 1.0, kInf) > 0.0);
}

TEST_CASE("kernel mass is monotone under cell inclusion") {
  SMDPSpec s;
  s.state_axes = {{"s", -kInf, kInf, AxisSpacing::Uniform, 0.0}};
  s.action = {0.0, 0.0, false, 0.0, {0.0}};
  s.theta_box = {{0.0, 2.0}};
  GaussianLinear1D tru;
  tru.a = Coef::lit(0.5);
  tru.b = Coef::lit(1.0);
  s.true_kernel.coords = {tru};
  s.model_family.coords = {tru};
  s.payoff.kind = PayoffKind::Constant;
  s.discount = 0.9;
  const double inner = kernel_mass(s, {}, {1.0}, 0.0, {{-0.5, 0.5}});
  const double outer = kernel_mass(s, {}, {1.0}, 0.0, {{-1.0, 1.0}});
  CHECK(inner <= outer);
}

TEST_CASE("spec validation rejects bad domains") {
  Example ex = make_example("ar1");
  SMDPSpec s = ex.spec;
  s.discount = 1.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s.discount = -0.1;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = ex.spec;
  s.theta_box[0].second = kInf;  // unbounded parameter box
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = ex.spec;
  s.action.explicit_values.clear();
  s.action.lo = 0.0;
  s.action.hi = kInf;  // unbounded action domain
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("ar1 example matches its declared constants") {
  Example ex = make_example("ar1", {{"a0", 0.5}, {"b0", 1.0}});
  ex.spec.validate();
  const auto& g = std::get<GaussianLinear1D>(ex.spec.true_kernel.coords[0]);
  CHECK(g.a.literal == 0.5);
  CHECK(g.b.literal == 1.0);
  CHECK(ex.spec.action.explicit_values.size() == 1);
  // absolute continuity on the dense set b > 0: mass-positivity agrees
  // between any two parameter points with positive dispersion
  const std::vector<double> th1 = {0.3, 0.4}, th2 = {1.7, 0.9};
  for (double lo = -8.0; lo < 8.0; lo += 2.0) {
    const double m1 = kernel_mass(ex.spec, th1, {1.0}, 0.0, {{lo, lo + 2.0}});
    const double m2 = kernel_mass(ex.spec, th2, {1.0}, 0.0, {{lo, lo + 2.0}});
    CHECK((m1 > 0.0) == (m2 > 0.0));
  }
}

TEST_CASE("unknown example parameters are rejected with the field name") {
  CHECK_THROWS_AS(make_example("ar1", {{"bogus", 1.0}}), ConfigError);
  CHECK_THROWS_AS(make_example("nope"), ConfigError);
}

TEST_CASE("savings rejects nonstationary parameters") {
  CHECK_THROWS_AS(make_example("savings", {{"beta", 1.0}}), DomainError);
  CHECK_THROWS_AS(make_example("savings", {{"beta", 1.2}}), DomainError);
}

TEST_CASE("state-boundedness envelope holds on sampled triples") {
  Example ex = make_example("ar1-action");
  const auto& p = ex.spec.payoff;
  REQUIRE(p.growth == GrowthClass::StateBounded);
  for (double s = -8.0; s <= 8.0; s += 1.0)
    for (double sp = -8.0; sp <= 8.0; sp += 1.0) {
      const double val = p.base({s}, 1.0) + p.coef({s}, 1.0) * sp;
      CHECK(std::abs(val) <= p.growth_A + p.growth_B * std::max(std::abs(s), std::abs(sp)) + 1e-12);
    }
}
