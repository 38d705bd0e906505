#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "berknash/discretize.hpp"
#include "berknash/errors.hpp"

namespace berknash {

// Belief-mixed transition kernel Q_bar = sum_theta nu(theta) Q_theta, kept in
// the same factored per-axis form as the FiniteSMDP. Rows are mixed over the
// support of nu only.
struct MixedKernel {
  const FiniteSMDP* f = nullptr;
  std::vector<double> nu;
  // per axis (empty for shared axes): [mkey][cell] rows and [mkey] moments
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<double>> moments;
  size_t degenerate_rows = 0;  // keys where some support theta had zero mass

  const double* row(size_t axis, size_t s_flat, size_t x_idx) const {
    const auto& ak = f->axes_k[axis];
    if (ak.model_shared) return f->true_row(axis, s_flat, x_idx);
    const size_t mk = ak.model_deps.key(f->states, f->n_actions(), s_flat, x_idx);
    return rows[axis].data() + mk * ak.n_cells;
  }

  const double* row_by_key(size_t axis, size_t key) const {
    const auto& ak = f->axes_k[axis];
    if (ak.model_shared) return ak.true_rows.data() + key * ak.n_cells;
    return rows[axis].data() + key * ak.n_cells;
  }

  double moment(size_t axis, size_t s_flat, size_t x_idx) const {
    const auto& ak = f->axes_k[axis];
    if (ak.model_shared)
      return ak.true_moment[ak.true_deps.key(f->states, f->n_actions(), s_flat, x_idx)];
    return moments[axis][ak.model_deps.key(f->states, f->n_actions(), s_flat, x_idx)];
  }

  std::vector<double> dense_row(size_t s_flat, size_t x_idx) const {
    std::vector<double> out(f->n_states(), 1.0);
    for (size_t ns = 0; ns < f->n_states(); ++ns)
      for (size_t a = 0; a < f->axes_k.size(); ++a)
        out[ns] *= row(a, s_flat, x_idx)[f->states.coord(ns, a)];
    return out;
  }
};

inline MixedKernel mix_kernel(const std::vector<double>& nu, const FiniteSMDP& f) {
  if (nu.size() != f.n_thetas()) throw ShapeError("belief has wrong length");
  double tot = 0.0;
  for (double v : nu) {
    if (v < 0.0) throw DomainError("belief weights must be nonnegative");
    tot += v;
  }
  if (std::abs(tot - 1.0) > 1e-8) throw DomainError("belief must sum to 1");

  MixedKernel mk;
  mk.f = &f;
  mk.nu = nu;
  mk.rows.resize(f.axes_k.size());
  mk.moments.resize(f.axes_k.size());

  std::vector<size_t> support;
  for (size_t t = 0; t < nu.size(); ++t)
    if (nu[t] > 0.0) support.push_back(t);

  std::vector<double> row;
  for (size_t a = 0; a < f.axes_k.size(); ++a) {
    const auto& ak = f.axes_k[a];
    if (ak.model_shared) continue;
    const size_t mks = ak.model_deps.keyspace(f.states, f.n_actions());
    mk.rows[a].assign(mks * ak.n_cells, 0.0);
    mk.moments[a].assign(mks, 0.0);
    for (size_t key = 0; key < mks; ++key) {
      double* out = mk.rows[a].data() + key * ak.n_cells;
      double valid = 0.0;
      for (size_t t : support) {
        if (!f.model_row(a, t, key, row)) {
          ++mk.degenerate_rows;
          continue;
        }
        for (size_t c = 0; c < ak.n_cells; ++c) out[c] += nu[t] * row[c];
        valid += nu[t];
      }
      if (valid <= 0.0) {
        // model silent at this key under the entire belief support; keep the
        // operator stochastic with a uniform placeholder row
        std::fill(out, out + ak.n_cells, 1.0 / static_cast<double>(ak.n_cells));
      } else if (valid < 1.0) {
        for (size_t c = 0; c < ak.n_cells; ++c) out[c] /= valid;
      }
      double mom = 0.0;
      for (size_t c = 0; c < ak.n_cells; ++c) mom += out[c] * f.states.axes[a].centers[c];
      mk.moments[a][key] = mom;
    }
  }
  return mk;
}

struct ValueFunction {
  std::vector<double> values;
  double sup_residual = 0.0;
  size_t iterations = 0;
};

struct PolicyCorrespondence {
  std::vector<std::vector<size_t>> optimal;  // per state, ascending action indices
  double gap = 0.0;
};

namespace detail {

// Per-sweep scratch shared across Bellman evaluations: the contraction of V
// onto the dynamic axis and expected values per distinct row key. No
// |S| x |X| temporaries are materialized.
struct BellmanScratch {
  std::vector<double> W;       // V contracted over iid axes, per dynamic cell
  std::vector<double> ev_key;  // E[V] per dynamic-axis row key
  std::vector<double> mom_key; // payoff-axis moment per key (cached once)
  std::vector<double> next;    // T(V)
  bool moments_ready = false;
};

// The dynamic-axis dependency key layout used by the mixed kernel.
inline const DepKey& mixed_deps(const FiniteSMDP& f, const MixedKernel* mixed, size_t axis) {
  const auto& ak = f.axes_k[axis];
  return (mixed && !ak.model_shared) ? ak.model_deps : ak.true_deps;
}

// Fill scratch.ev_key for the current V.
inline void build_ev_keys(const FiniteSMDP& f, const MixedKernel* mixed,
                          const std::vector<double>& V, size_t dyn, BellmanScratch& ws) {
  const auto& ak = f.axes_k[dyn];
  const size_t nd = ak.n_cells;
  ws.W.assign(nd, 0.0);
  for (size_t ns = 0; ns < f.n_states(); ++ns) {
    double w = V[ns];
    if (w == 0.0) continue;
    for (size_t a = 0; a < f.axes_k.size(); ++a) {
      if (a == dyn) continue;
      w *= f.axes_k[a].true_rows[f.states.coord(ns, a)];
    }
    ws.W[f.states.coord(ns, dyn)] += w;
  }
  const DepKey& deps = mixed_deps(f, mixed, dyn);
  const size_t ks = deps.keyspace(f.states, f.n_actions());
  ws.ev_key.assign(ks, 0.0);
  for (size_t key = 0; key < ks; ++key) {
    const double* r = mixed ? mixed->row_by_key(dyn, key)
                            : f.axes_k[dyn].true_rows.data() + key * nd;
    double acc = 0.0;
    for (size_t c = 0; c < nd; ++c) acc += r[c] * ws.W[c];
    ws.ev_key[key] = acc;
  }
}

// Payoff-axis mixed moments per dynamic key (constant across sweeps).
inline void build_moment_keys(const FiniteSMDP& f, const MixedKernel* mixed, size_t dyn,
                              BellmanScratch& ws) {
  if (ws.moments_ready) return;
  ws.moments_ready = true;
  if (!f.payoff_has_coef) return;
  const DepKey& deps = mixed_deps(f, mixed, dyn);
  const size_t ks = deps.keyspace(f.states, f.n_actions());
  ws.mom_key.assign(ks, 0.0);
  // the payoff axis may differ from the dynamic axis only when it is iid
  if (f.payoff_axis != dyn) {
    const auto& pk = f.axes_k[f.payoff_axis];
    const double m = pk.true_moment[0];
    std::fill(ws.mom_key.begin(), ws.mom_key.end(), m);
    return;
  }
  const auto& ak = f.axes_k[dyn];
  for (size_t key = 0; key < ks; ++key) {
    if (mixed && !ak.model_shared) ws.mom_key[key] = mixed->moments[dyn][key];
    else ws.mom_key[key] = ak.true_moment[key];
  }
}

// One Bellman sweep: V <- T(V); returns the sup-norm change. The optional
// out_policy collects all actions within `gap` of each state's maximum.
inline double bellman_sweep(const FiniteSMDP& f, const MixedKernel* mixed,
                            std::vector<double>& V, BellmanScratch& ws,
                            PolicyCorrespondence* out_policy = nullptr, double gap = 0.0) {
  const size_t S = f.n_states(), X = f.n_actions();
  const auto dyn_opt = f.sole_dynamic_axis();
  const double delta = f.discount;

  if (!dyn_opt) {
    // generic dense fallback for multi-dynamic-axis (test-scale) problems
    ws.next.assign(S, 0.0);
    if (out_policy) out_policy->optimal.assign(S, {});
    double change = 0.0;
    for (size_t s = 0; s < S; ++s) {
      double best = -kInf;
      std::vector<double> q(X);
      for (size_t x = 0; x < X; ++x) {
        double ev = 0.0, mom = 0.0;
        for (size_t ns = 0; ns < S; ++ns) {
          double m = 1.0;
          for (size_t a = 0; a < f.axes_k.size(); ++a)
            m *= (mixed ? mixed->row(a, s, x) : f.true_row(a, s, x))[f.states.coord(ns, a)];
          ev += m * V[ns];
          mom += m * f.states.center_of(ns, f.payoff_axis);
        }
        q[x] = f.expected_payoff(s, x, mom) + delta * ev;
        best = std::max(best, q[x]);
      }
      if (out_policy)
        for (size_t x = 0; x < X; ++x)
          if (q[x] >= best - gap) out_policy->optimal[s].push_back(x);
      change = std::max(change, std::abs(best - V[s]));
      ws.next[s] = best;
    }
    V.swap(ws.next);
    return change;
  }

  const size_t dyn = *dyn_opt;
  build_ev_keys(f, mixed, V, dyn, ws);
  build_moment_keys(f, mixed, dyn, ws);
  const DepKey& deps = mixed_deps(f, mixed, dyn);

  ws.next.resize(S);
  if (out_policy) out_policy->optimal.assign(S, {});
  double change = 0.0;
  std::vector<double> qrow(out_policy ? X : 0);
  for (size_t s = 0; s < S; ++s) {
    double best = -kInf;
    for (size_t x = 0; x < X; ++x) {
      const size_t key = deps.key(f.states, X, s, x);
      double q = f.payoff_base_at(s, x) + delta * ws.ev_key[key];
      if (f.payoff_has_coef) q += f.payoff_coef_at(s, x) * ws.mom_key[key];
      if (q > best) best = q;
      if (out_policy) qrow[x] = q;
    }
    if (out_policy)
      for (size_t x = 0; x < X; ++x)
        if (qrow[x] >= best - gap) out_policy->optimal[s].push_back(x);
    change = std::max(change, std::abs(best - V[s]));
    ws.next[s] = best;
  }
  V.swap(ws.next);
  return change;
}

}  // namespace detail

// Q-values E[pi + delta V | s, x] for all (s, x) under the mixed kernel.
// Dense output: intended for verification and test-scale problems.
inline std::vector<double> q_values(const FiniteSMDP& f, const MixedKernel& mixed,
                                    const std::vector<double>& V) {
  const size_t S = f.n_states(), X = f.n_actions();
  std::vector<double> q(S * X);
  detail::BellmanScratch ws;
  const auto dyn_opt = f.sole_dynamic_axis();
  if (dyn_opt) {
    const size_t dyn = *dyn_opt;
    detail::build_ev_keys(f, &mixed, V, dyn, ws);
    detail::build_moment_keys(f, &mixed, dyn, ws);
    const DepKey& deps = detail::mixed_deps(f, &mixed, dyn);
    for (size_t s = 0; s < S; ++s)
      for (size_t x = 0; x < X; ++x) {
        const size_t key = deps.key(f.states, X, s, x);
        double v = f.payoff_base_at(s, x) + f.discount * ws.ev_key[key];
        if (f.payoff_has_coef) v += f.payoff_coef_at(s, x) * ws.mom_key[key];
        q[s * X + x] = v;
      }
    return q;
  }
  for (size_t s = 0; s < S; ++s)
    for (size_t x = 0; x < X; ++x) {
      double ev = 0.0, mom = 0.0;
      for (size_t ns = 0; ns < S; ++ns) {
        double m = 1.0;
        for (size_t a = 0; a < f.axes_k.size(); ++a)
          m *= mixed.row(a, s, x)[f.states.coord(ns, a)];
        ev += m * V[ns];
        mom += m * f.states.center_of(ns, f.payoff_axis);
      }
      q[s * X + x] = f.expected_payoff(s, x, mom) + f.discount * ev;
    }
  return q;
}

// Value iteration until the contraction bound guarantees ||V - V*|| <= eps_V.
// A warm start (v_init) carries the previous outer iteration's solution.
// Sustained growth of the sup-change trips the divergence detector.
inline ValueFunction solve_bellman(const FiniteSMDP& f, const MixedKernel& mixed, double eps_V,
                                   const std::vector<double>* v_init = nullptr) {
  if (!(eps_V > 0.0)) throw DomainError("eps_V must be > 0");
  const double delta = f.discount;
  if (!(delta >= 0.0) || !(delta < 1.0)) throw DomainError("discount must lie in [0, 1)");

  const double stop = delta > 0.0 ? eps_V * (1.0 - delta) / (2.0 * delta) : kInf;

  ValueFunction vf;
  if (v_init && v_init->size() == f.n_states()) vf.values = *v_init;
  else vf.values.assign(f.n_states(), 0.0);

  detail::BellmanScratch ws;
  double prev_change = kInf;
  size_t growth_streak = 0;
  for (size_t it = 0;; ++it) {
    const double change = detail::bellman_sweep(f, &mixed, vf.values, ws);
    vf.iterations = it + 1;
    vf.sup_residual = change;
    if (change <= stop) break;
    if (change > prev_change * (1.0 + 1e-12)) {
      if (++growth_streak >= 10)
        throw ContractionError("value iteration sup-change grew for 10 consecutive sweeps");
    } else {
      growth_streak = 0;
    }
    prev_change = change;
  }
  return vf;
}

// All actions whose Q-value is within gap of the per-state maximum.
inline PolicyCorrespondence optimal_actions(const FiniteSMDP& f, const MixedKernel& mixed,
                                            const ValueFunction& V, double gap) {
  detail::BellmanScratch ws;
  PolicyCorrespondence pc;
  pc.gap = gap;
  std::vector<double> v = V.values;  // sweep mutates; keep the caller's V intact
  detail::bellman_sweep(f, &mixed, v, ws, &pc, gap);
  return pc;
}

}  // namespace berknash
