#include <catch2/catch_amalgamated.hpp>

#include "berknash/example_zoo.hpp"
#include "berknash/rng.hpp"
#include "berknash/stationary.hpp"
#include "test_util.hpp"

using namespace berknash;
using bn_test::TabularDef;
using bn_test::make_tabular;

namespace {

FiniteSMDP two_state_chain() {
  TabularDef d;
  d.S = 2;
  d.X = 1;
  d.T = 1;
  d.true_rows = {{0.9, 0.1}, {0.2, 0.8}};
  d.model_rows = {d.true_rows};
  d.payoff_base = {0.0, 0.0};
  d.payoff_coef = {0.0, 0.0};
  return d.q0 = {1.0, 0.0}, make_tabular(d);
}

}  // namespace

TEST_CASE("two-state chain balance equations") {
  const FiniteSMDP f = two_state_chain();
  const Policy pol = pure_policy({0, 0}, 1);
  const JointMeasure m = stationary_distribution(f, pol, 1e-12);
  const auto ms = m.marginal_state(2, 1);
  CHECK(ms[0] == Catch::Approx(2.0 / 3.0).margin(1e-9));
  CHECK(ms[1] == Catch::Approx(1.0 / 3.0).margin(1e-9));
  CHECK(stationarity_residual(m, f) <= 1e-9);
}

TEST_CASE("identity chain returns the initial distribution") {
  TabularDef d;
  d.S = 3;
  d.X = 1;
  d.T = 1;
  d.true_rows = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  d.model_rows = {d.true_rows};
  d.payoff_base = {0, 0, 0};
  d.payoff_coef = {0, 0, 0};
  d.q0 = {0.2, 0.5, 0.3};
  const FiniteSMDP f = make_tabular(d);
  const JointMeasure m = stationary_distribution(f, pure_policy({0, 0, 0}, 1));
  const auto ms = m.marginal_state(3, 1);
  CHECK(ms[0] == Catch::Approx(0.2).margin(1e-12));
  CHECK(ms[1] == Catch::Approx(0.5).margin(1e-12));
  CHECK(ms[2] == Catch::Approx(0.3).margin(1e-12));
}

TEST_CASE("hand residual: one-step image of the uniform split") {
  const FiniteSMDP f = two_state_chain();
  JointMeasure m;
  m.weights = {0.5, 0.5};
  // image: (0.5*0.9 + 0.5*0.2, 0.5*0.1 + 0.5*0.8) = (0.55, 0.45)
  CHECK(stationarity_residual(m, f) == Catch::Approx(0.05).margin(1e-14));
}

TEST_CASE("full mass moves off a non-recurrent point") {
  TabularDef d;
  d.S = 2;
  d.X = 1;
  d.T = 1;
  d.true_rows = {{0.0, 1.0}, {0.0, 1.0}};
  d.model_rows = {d.true_rows};
  d.payoff_base = {0, 0};
  d.payoff_coef = {0, 0};
  const FiniteSMDP f = make_tabular(d);
  JointMeasure m;
  m.weights = {1.0, 0.0};  // delta at s0, but Q(s0->s0) = 0
  CHECK(stationarity_residual(m, f) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("power iteration matches the null-space solve on random chains") {
  Philox4x32 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const size_t n = 3 + trial % 4;
    TabularDef d;
    d.S = n;
    d.X = 1;
    d.T = 1;
    std::vector<std::vector<double>> P(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i) {
      double tot = 0.0;
      for (size_t j = 0; j < n; ++j) tot += (P[i][j] = 0.05 + rng.uniform01());
      for (size_t j = 0; j < n; ++j) P[i][j] /= tot;
    }
    d.true_rows = P;
    d.model_rows = {P};
    d.payoff_base.assign(n, 0.0);
    d.payoff_coef.assign(n, 0.0);
    const FiniteSMDP f = make_tabular(d);
    const JointMeasure m =
        stationary_distribution(f, pure_policy(std::vector<size_t>(n, 0), 1), 1e-13);
    const auto oracle = bn_test::nullspace_stationary(P);
    const auto ms = m.marginal_state(n, 1);
    double tv = 0.0;
    for (size_t i = 0; i < n; ++i) tv += std::abs(ms[i] - oracle[i]);
    CHECK(0.5 * tv < 1e-8);
  }
}

TEST_CASE("period-2 chain converges through automatic damping") {
  TabularDef d;
  d.S = 2;
  d.X = 1;
  d.T = 1;
  d.true_rows = {{0.0, 1.0}, {1.0, 0.0}};  // pure flip
  d.model_rows = {d.true_rows};
  d.payoff_base = {0, 0};
  d.payoff_coef = {0, 0};
  d.q0 = {1.0, 0.0};
  const FiniteSMDP f = make_tabular(d);
  const JointMeasure m = stationary_distribution(f, pure_policy({0, 0}, 1), 1e-10);
  const auto ms = m.marginal_state(2, 1);
  CHECK(ms[0] == Catch::Approx(0.5).margin(1e-8));
}

TEST_CASE("non-convergence carries the residual") {
  TabularDef d;
  d.S = 2;
  d.X = 1;
  d.T = 1;
  d.true_rows = {{0.99, 0.01}, {0.01, 0.99}};  // slow mixer
  d.model_rows = {d.true_rows};
  d.payoff_base = {0, 0};
  d.payoff_coef = {0, 0};
  d.q0 = {1.0, 0.0};
  const FiniteSMDP f = make_tabular(d);
  CHECK_THROWS_AS(stationary_distribution(f, pure_policy({0, 0}, 1), 1e-12, 3),
                  NonConvergenceError);
  bool conv = true;
  const JointMeasure m = stationary_distribution(f, pure_policy({0, 0}, 1), 1e-12, 3, &conv);
  CHECK_FALSE(conv);
  CHECK(m.weights.size() == 2);
  CHECK(m.residual > 1e-12);
}

TEST_CASE("row-stochasticity is preserved by the chain image") {
  const FiniteSMDP f = two_state_chain();
  JointMeasure m;
  m.weights = {0.3, 0.7};
  // one-step image must remain a probability vector: residual well-defined
  const double r = stationarity_residual(m, f);
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
}

TEST_CASE("discretized ar1 stationary matches the normal law cell masses") {
  Example ex = make_example("ar1", {{"a0", 0.5}, {"b0", 1.0}});
  ex.grids.state_cells = {401};
  ex.grids.theta_points = {3, 2};
  const FiniteSMDP f = discretize_smdp(ex.spec, {{-10.0, 10.0}}, ex.grids);
  const JointMeasure m =
      stationary_distribution(f, pure_policy(std::vector<size_t>(f.n_states(), 0), 1), 1e-12);
  const auto ms = m.marginal_state(f.n_states(), 1);
  // N(0, b0^2/(1-a0^2)) = N(0, 4/3)
  const double sd = std::sqrt(4.0 / 3.0);
  double tv = 0.0;
  for (size_t s = 0; s < f.n_states(); ++s) {
    const double cell = normal_interval_mass(f.states.axes[0].edges[s],
                                             f.states.axes[0].edges[s + 1], 0.0, sd);
    tv += std::abs(ms[s] - cell);
  }
  CHECK(0.5 * tv < 0.02);
}
