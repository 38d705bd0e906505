#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "berknash/discretize.hpp"
#include "berknash/errors.hpp"

namespace berknash {

// Joint probability vector over state x action cells.
struct JointMeasure {
  std::vector<double> weights;  // [s*|X|+x]
  double residual = 0.0;        // recorded TV residual of the power iteration
  size_t iterations = 0;

  std::vector<double> marginal_state(size_t n_states, size_t n_actions) const {
    std::vector<double> ms(n_states, 0.0);
    for (size_t s = 0; s < n_states; ++s)
      for (size_t x = 0; x < n_actions; ++x) ms[s] += weights[s * n_actions + x];
    return ms;
  }
};

// Per-state distribution over actions.
struct Policy {
  std::vector<double> probs;  // [s*|X|+x], rows sum to 1
};

inline Policy pure_policy(const std::vector<size_t>& action_per_state, size_t n_actions) {
  Policy p;
  p.probs.assign(action_per_state.size() * n_actions, 0.0);
  for (size_t s = 0; s < action_per_state.size(); ++s)
    p.probs[s * n_actions + action_per_state[s]] = 1.0;
  return p;
}

inline double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return 0.5 * d;
}

namespace detail {

// Sparse view of a policy: per state, the (action, probability) pairs with
// positive mass and the true-kernel row key of the dynamic axis.
struct SparsePolicy {
  struct Entry {
    uint32_t s, x;
    uint32_t key;
    double p;
  };
  std::vector<Entry> entries;

  static SparsePolicy build(const FiniteSMDP& f, const Policy& pol, size_t dyn) {
    SparsePolicy sp;
    const size_t S = f.n_states(), X = f.n_actions();
    const auto& deps = f.axes_k[dyn].true_deps;
    sp.entries.reserve(S);
    for (size_t s = 0; s < S; ++s)
      for (size_t x = 0; x < X; ++x) {
        const double p = pol.probs[s * X + x];
        if (p > 0.0)
          sp.entries.push_back({static_cast<uint32_t>(s), static_cast<uint32_t>(x),
                                static_cast<uint32_t>(deps.key(f.states, X, s, x)), p});
      }
    return sp;
  }
};

// One-step state image of a joint measure under the true kernel: mass is
// grouped per distinct row key, pushed through the dynamic axis, and spread
// over the iid axes' fixed rows.
inline void joint_image(const FiniteSMDP& f, const std::vector<double>& joint,
                        std::vector<double>& out) {
  const size_t S = f.n_states(), X = f.n_actions();
  out.assign(S, 0.0);
  const auto dyn_opt = f.sole_dynamic_axis();
  if (dyn_opt) {
    const size_t dyn = *dyn_opt;
    const auto& ak = f.axes_k[dyn];
    std::vector<double> wkey(ak.true_deps.keyspace(f.states, X), 0.0);
    for (size_t s = 0; s < S; ++s)
      for (size_t x = 0; x < X; ++x) {
        const double w = joint[s * X + x];
        if (w != 0.0) wkey[ak.true_deps.key(f.states, X, s, x)] += w;
      }
    std::vector<double> g(ak.n_cells, 0.0);
    for (size_t key = 0; key < wkey.size(); ++key) {
      if (wkey[key] == 0.0) continue;
      const double* r = ak.true_rows.data() + key * ak.n_cells;
      for (size_t c = 0; c < ak.n_cells; ++c) g[c] += wkey[key] * r[c];
    }
    for (size_t ns = 0; ns < S; ++ns) {
      double m = g[f.states.coord(ns, dyn)];
      if (m == 0.0) continue;
      for (size_t a = 0; a < f.axes_k.size(); ++a) {
        if (a == dyn) continue;
        m *= f.axes_k[a].true_rows[f.states.coord(ns, a)];
      }
      out[ns] = m;
    }
    return;
  }
  for (size_t s = 0; s < S; ++s)
    for (size_t x = 0; x < X; ++x) {
      const double w = joint[s * X + x];
      if (w == 0.0) continue;
      for (size_t ns = 0; ns < S; ++ns) out[ns] += w * f.true_cell_mass(s, x, ns);
    }
}

// Image of a state distribution under the chain induced by a sparse policy.
inline void chain_image(const FiniteSMDP& f, const SparsePolicy& sp, size_t dyn,
                        const std::vector<double>& ms, std::vector<double>& out,
                        std::vector<double>& wkey) {
  const size_t S = f.n_states();
  const auto& ak = f.axes_k[dyn];
  wkey.assign(ak.true_deps.keyspace(f.states, f.n_actions()), 0.0);
  for (const auto& e : sp.entries) {
    const double w = ms[e.s] * e.p;
    if (w != 0.0) wkey[e.key] += w;
  }
  std::vector<double> g(ak.n_cells, 0.0);
  for (size_t key = 0; key < wkey.size(); ++key) {
    if (wkey[key] == 0.0) continue;
    const double* r = ak.true_rows.data() + key * ak.n_cells;
    for (size_t c = 0; c < ak.n_cells; ++c) g[c] += wkey[key] * r[c];
  }
  out.assign(S, 0.0);
  for (size_t ns = 0; ns < S; ++ns) {
    double m = g[f.states.coord(ns, dyn)];
    if (m == 0.0) continue;
    for (size_t a = 0; a < f.axes_k.size(); ++a) {
      if (a == dyn) continue;
      m *= f.axes_k[a].true_rows[f.states.coord(ns, a)];
    }
    out[ns] = m;
  }
}

// Dense fallback for multi-dynamic-axis (test-scale) problems.
inline void chain_image_dense(const FiniteSMDP& f, const Policy& pol,
                              const std::vector<double>& ms, std::vector<double>& out) {
  const size_t S = f.n_states(), X = f.n_actions();
  std::vector<double> joint(S * X);
  for (size_t s = 0; s < S; ++s)
    for (size_t x = 0; x < X; ++x) joint[s * X + x] = ms[s] * pol.probs[s * X + x];
  joint_image(f, joint, out);
}

}  // namespace detail

// Stationary joint measure of the true chain under a policy, by power
// iteration from q0 (or a warm start). Detected period-2 oscillation
// switches on 0.5 damping. With converged_out non-null, non-convergence is
// reported through the flag and the last iterate instead of an exception.
inline JointMeasure stationary_distribution(const FiniteSMDP& f, const Policy& pol,
                                            double eps_tv = 1e-10, size_t max_iter = 100000,
                                            bool* converged_out = nullptr,
                                            const std::vector<double>* ms_init = nullptr) {
  const size_t S = f.n_states(), X = f.n_actions();
  if (pol.probs.size() != S * X) throw ShapeError("policy has wrong shape");
  for (size_t s = 0; s < S; ++s) {
    double rowsum = 0.0;
    for (size_t x = 0; x < X; ++x) rowsum += pol.probs[s * X + x];
    if (std::abs(rowsum - 1.0) > 1e-8) throw DomainError("policy rows must sum to 1");
  }

  const auto dyn_opt = f.sole_dynamic_axis();
  detail::SparsePolicy sp;
  if (dyn_opt) sp = detail::SparsePolicy::build(f, pol, *dyn_opt);

  std::vector<double> ms = (ms_init && ms_init->size() == S) ? *ms_init : f.q0;
  std::vector<double> next, prev, wkey;
  bool damped = false;
  double resid = kInf;
  size_t it = 0;
  for (; it < max_iter; ++it) {
    if (dyn_opt) detail::chain_image(f, sp, *dyn_opt, ms, next, wkey);
    else detail::chain_image_dense(f, pol, ms, next);
    resid = tv_distance(next, ms);
    if (!damped && !prev.empty() && tv_distance(next, prev) < 0.01 * resid) damped = true;
    prev = ms;
    if (damped)
      for (size_t s = 0; s < S; ++s) next[s] = 0.5 * (next[s] + ms[s]);
    ms.swap(next);
    if (resid <= eps_tv) break;
  }
  if (converged_out) *converged_out = resid <= eps_tv;
  if (resid > eps_tv && !converged_out)
    throw NonConvergenceError("power iteration did not reach tolerance after " +
                                  std::to_string(max_iter) + " sweeps",
                              resid);

  JointMeasure m;
  m.residual = resid;
  m.iterations = it + 1;
  m.weights.assign(S * X, 0.0);
  if (dyn_opt) {
    for (const auto& e : sp.entries) m.weights[e.s * X + e.x] = ms[e.s] * e.p;
  } else {
    for (size_t s = 0; s < S; ++s)
      for (size_t x = 0; x < X; ++x) m.weights[s * X + x] = ms[s] * pol.probs[s * X + x];
  }
  return m;
}

// TV distance between the state marginal of m and its one-step image under
// the true kernel; zero exactly at stationarity.
inline double stationarity_residual(const JointMeasure& m, const FiniteSMDP& f) {
  const size_t S = f.n_states(), X = f.n_actions();
  if (m.weights.size() != S * X) throw ShapeError("measure has wrong shape");
  const auto ms = m.marginal_state(S, X);
  std::vector<double> img;
  detail::joint_image(f, m.weights, img);
  return tv_distance(ms, img);
}

}  // namespace berknash
