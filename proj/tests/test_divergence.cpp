#include <catch2/catch_amalgamated.hpp>

#include "berknash/divergence.hpp"
#include "berknash/example_zoo.hpp"
#include "berknash/stationary.hpp"

using namespace berknash;

namespace {

FiniteSMDP ar1_grid(double a0, double b0, double radius, size_t cells, size_t na = 21,
                    size_t nb = 10) {
  Example ex = make_example("ar1", {{"a0", a0}, {"b0", b0}});
  ex.grids.state_cells = {cells};
  ex.grids.theta_points = {na, nb};
  return discretize_smdp(ex.spec, {{-radius, radius}}, ex.grids);
}

std::vector<double> degenerate_m(const FiniteSMDP& f, double s_value) {
  std::vector<double> m(f.n_states() * f.n_actions(), 0.0);
  m[f.states.axes[0].locate(s_value) * f.n_actions()] = 1.0;
  return m;
}

// independent naive recomputation: dense rows, triple loop
double naive_weighted_kl(const std::vector<double>& m, size_t t, const FiniteSMDP& f) {
  double acc = 0.0;
  for (size_t s = 0; s < f.n_states(); ++s)
    for (size_t x = 0; x < f.n_actions(); ++x) {
      const double w = m[s * f.n_actions() + x];
      if (w == 0.0) continue;
      const auto p = f.dense_true_row(s, x);
      const auto q = f.dense_model_row(t, s, x);
      for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        acc += w * p[i] * std::log(p[i] / q[i]);
      }
    }
  return acc;
}

}  // namespace

TEST_CASE("relative entropy row conventions") {
  CHECK(relative_entropy_row({0.5, 0.5}, {0.5, 0.5}).value() == 0.0);
  CHECK(relative_entropy_row({1.0, 0.0}, {0.5, 0.5}).value() ==
        Catch::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(relative_entropy_row({0.5, 0.5}, {1.0, 0.0}).is_infinite());
  CHECK_THROWS_AS(relative_entropy_row({0.5, 0.5}, {1.0}), ShapeError);
}

TEST_CASE("weighted KL vanishes exactly at the true parameter point") {
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 10.0, 201);
  const size_t t_true = f.thetas.nearest({0.5, 1.0});
  std::vector<double> m(f.n_states(), 0.0);
  // any measure: use q0
  for (size_t s = 0; s < f.n_states(); ++s) m[s] = f.q0[s];
  CHECK(weighted_kl(m, t_true, f).value() == 0.0);
}

TEST_CASE("degenerate measure matches the closed form within grid error") {
  // K(delta_{s=1}, (0.7,1)) = (1 + (0.5-0.7)^2)/2 - 1/2 = 0.02
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 10.0, 401);
  const auto m = degenerate_m(f, 1.0);
  const size_t t = f.thetas.nearest({0.7, 1.0});
  const double s_cell = f.states.axes[0].centers[f.states.axes[0].locate(1.0)];
  const double closed = std::log(1.0 / 1.0) +
                        (1.0 + std::pow(0.5 * s_cell - 0.7 * s_cell, 2)) / 2.0 - 0.5;
  CHECK(weighted_kl(m, t, f).value() == Catch::Approx(closed).margin(1e-4));
}

TEST_CASE("domination failure with positive weight is infinite") {
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 10.0, 201);
  const size_t t_bad = f.thetas.nearest({2.0, 0.1});
  const auto m = degenerate_m(f, 9.9);  // model mass underflows at the edge
  CHECK(weighted_kl(m, t_bad, f).is_infinite());
  // but zero weight on the offending cells keeps it finite
  const auto m0 = degenerate_m(f, 0.0);
  CHECK_FALSE(weighted_kl(m0, f.thetas.nearest({0.5, 0.5}), f).is_infinite());
}

TEST_CASE("weighted KL is affine in the measure") {
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 10.0, 101, 5, 3);
  const auto m1 = degenerate_m(f, 2.0);
  const auto m2 = degenerate_m(f, -3.0);
  const double alpha = 0.3;
  std::vector<double> mix(m1.size());
  for (size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * m1[i] + (1 - alpha) * m2[i];
  for (size_t t = 0; t < f.n_thetas(); t += 4) {
    const double lhs = weighted_kl(mix, t, f).value();
    const double rhs =
        alpha * weighted_kl(m1, t, f).value() + (1 - alpha) * weighted_kl(m2, t, f).value();
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("weighted KL matches the naive triple loop bit for bit") {
  // tiny spaces so the dense recomputation is exact
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 4.0, 4, 2, 2);
  std::vector<double> m(f.n_states() * f.n_actions());
  double tot = 0.0;
  for (size_t i = 0; i < m.size(); ++i) tot += (m[i] = 1.0 + static_cast<double>(i % 3));
  for (double& v : m) v /= tot;
  for (size_t t = 0; t < f.n_thetas(); ++t) {
    const double fast = weighted_kl(m, t, f).value();
    const double naive = naive_weighted_kl(m, t, f);
    if (std::isinf(naive)) CHECK(std::isinf(fast));
    else CHECK(fast == Catch::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("closest parameters of a correctly specified model is a singleton") {
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 10.0, 201);
  const Policy pol = pure_policy(std::vector<size_t>(f.n_states(), 0), 1);
  const JointMeasure m = stationary_distribution(f, pol);
  const KLProfile prof = closest_parameters(m.weights, f);
  REQUIRE(prof.argmin_set.size() == 1);
  const auto tp = f.thetas.point(prof.argmin_set[0]);
  CHECK(tp[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(tp[1] == Catch::Approx(1.0).margin(1e-12));
  CHECK(prof.min_value().value() == 0.0);
}

TEST_CASE("singleton parameter grid yields the whole grid as argmin") {
  const FiniteSMDP f = ar1_grid(0.5, 1.0, 8.0, 51, 1, 1);
  std::vector<double> m(f.n_states(), 0.0);
  for (size_t s = 0; s < f.n_states(); ++s) m[s] = f.q0[s];
  const KLProfile prof = closest_parameters(m, f);
  CHECK(prof.argmin_set.size() == f.n_thetas());
}

TEST_CASE("all-infinite profile raises the no-dominating-parameter error") {
  // model pinned to a point mass that never covers the spread-out truth
  SMDPSpec s;
  s.state_axes = {{"s", 0.0, 1.0, AxisSpacing::Uniform, 0.0}};
  s.action = {0.0, 0.0, false, 0.0, {0.0}};
  s.theta_box = {{0.0, 1.0}};
  Uniform1D tru{0.0, 1.0};
  PointMass1D mod;
  mod.at = Coef::param(0);
  s.true_kernel.coords = {tru};
  s.model_family.coords = {mod};
  s.payoff.kind = PayoffKind::Constant;
  s.discount = 0.5;
  GridSpec g;
  g.state_cells = {8};
  g.action_points = 1;
  g.theta_points = {4};
  const FiniteSMDP f = discretize_smdp(s, {{0.0, 1.0}}, g);
  std::vector<double> m(f.n_states(), 1.0 / f.n_states());
  CHECK_THROWS_AS(closest_parameters(m, f), NoDominatingParameterError);
}
