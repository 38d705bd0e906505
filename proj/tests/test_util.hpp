#pragma once

#include <vector>

#include "berknash/discretize.hpp"
#include "berknash/model.hpp"

namespace bn_test {

using namespace berknash;

// Hand-built finite SMDP on a single tabulated axis: explicit true rows
// [s][x] -> row, model rows [t][s][x] -> row, payoff tables base/coef.
struct TabularDef {
  size_t S = 2, X = 1, T = 1;
  std::vector<std::vector<double>> true_rows;                // [s*X+x][S]
  std::vector<std::vector<std::vector<double>>> model_rows;  // [t][s*X+x][S]
  std::vector<double> payoff_base;                           // [s*X+x]
  std::vector<double> payoff_coef;                           // [s*X+x], next-state weight
  double discount = 0.9;
  std::vector<double> q0;  // optional, length S
};

inline FiniteSMDP make_tabular(const TabularDef& d) {
  SMDPSpec spec;
  spec.state_axes = {{"s", 0.0, static_cast<double>(d.S), AxisSpacing::Uniform, 0.0}};
  if (d.X == 1) {
    spec.action = {0.0, 0.0, false, 0.0, {0.0}};
  } else {
    std::vector<double> xs(d.X);
    for (size_t x = 0; x < d.X; ++x) xs[x] = static_cast<double>(x);
    spec.action = {0.0, static_cast<double>(d.X - 1), false, 0.0, xs};
  }
  spec.theta_box = {{0.0, static_cast<double>(d.T - 1)}};

  Tabulated1D tru;
  tru.edges.resize(d.S + 1);
  for (size_t i = 0; i <= d.S; ++i) tru.edges[i] = static_cast<double>(i);
  tru.dep_axis = 0;
  tru.dep_action = d.X > 1;
  tru.n_dep_state = d.S;
  tru.n_actions = d.X;
  tru.rows = d.true_rows;
  if (!tru.dep_action) {
    // rows keyed by state only
    tru.rows.clear();
    for (size_t s = 0; s < d.S; ++s) tru.rows.push_back(d.true_rows[s * d.X]);
  }

  Tabulated1D mod = tru;
  mod.dep_theta = true;
  mod.rows.clear();
  for (size_t t = 0; t < d.T; ++t) {
    if (tru.dep_action)
      for (size_t i = 0; i < d.S * d.X; ++i) mod.rows.push_back(d.model_rows[t][i]);
    else
      for (size_t s = 0; s < d.S; ++s) mod.rows.push_back(d.model_rows[t][s * d.X]);
  }

  spec.true_kernel.coords = {tru};
  spec.model_family.coords = {mod};

  spec.payoff.kind = PayoffKind::Tabulated;
  spec.payoff.base_table = d.payoff_base;
  spec.payoff.coef_table = d.payoff_coef;
  spec.payoff.table_states = d.S;
  spec.payoff.table_actions = d.X;
  spec.payoff.next_axis = 0;
  spec.discount = d.discount;

  GridSpec g;
  g.state_cells = {d.S};
  g.action_points = d.X;
  g.theta_points = {d.T};

  FiniteSMDP f = discretize_smdp(spec, {{0.0, static_cast<double>(d.S)}}, g);
  if (!d.q0.empty()) f.q0 = d.q0;
  return f;
}

// dense-linear-algebra oracle: stationary distribution by solving
// (P^T - I) pi = 0 with Gaussian elimination on the normalized system
inline std::vector<double> nullspace_stationary(const std::vector<std::vector<double>>& P) {
  const size_t n = P.size();
  // rows: (P^T - I), replace the last with the normalization constraint
  std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  for (size_t j = 0; j < n; ++j) A[n - 1][j] = 1.0;
  A[n - 1][n] = 1.0;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[piv], A[col]);
    for (size_t r = 0; r < n; ++r) {
      if (r == col || A[col][col] == 0.0) continue;
      const double fac = A[r][col] / A[col][col];
      for (size_t c = col; c <= n; ++c) A[r][c] -= fac * A[col][c];
    }
  }
  std::vector<double> pi(n);
  for (size_t i = 0; i < n; ++i) pi[i] = A[i][n] / A[i][i];
  return pi;
}

}  // namespace bn_test
