#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "berknash/errors.hpp"
#include "berknash/grid.hpp"
#include "berknash/model.hpp"

namespace berknash {

// Which of (state axes, action) a kernel coordinate's row depends on.
struct DepKey {
  std::vector<size_t> axes;  // sorted state-axis indices
  bool action = false;

  size_t keyspace(const StateSpace& ss, size_t n_actions) const {
    size_t k = 1;
    for (size_t a : axes) k *= ss.axes[a].size();
    if (action) k *= n_actions;
    return k;
  }

  // key with action innermost
  size_t key(const StateSpace& ss, size_t n_actions, size_t s_flat, size_t x_idx) const {
    size_t k = 0;
    for (size_t a : axes) k = k * ss.axes[a].size() + ss.coord(s_flat, a);
    if (action) k = k * n_actions + x_idx;
    return k;
  }

  static DepKey unite(const DepKey& a, const DepKey& b) {
    DepKey u;
    u.axes = a.axes;
    for (size_t ax : b.axes)
      if (std::find(u.axes.begin(), u.axes.end(), ax) == u.axes.end()) u.axes.push_back(ax);
    std::sort(u.axes.begin(), u.axes.end());
    u.action = a.action || b.action;
    return u;
  }
};

// Dependency signature of a 1-D coordinate kernel.
inline DepKey kernel_deps(const Kernel1D& k) {
  DepKey d;
  if (std::holds_alternative<GaussianLinear1D>(k)) {
    const auto& g = std::get<GaussianLinear1D>(k);
    if (g.a.bound() || g.a.literal != 0.0) d.axes.push_back(static_cast<size_t>(g.src_axis));
    if (g.other_axis >= 0 && (g.g.bound() || g.g.literal != 0.0))
      d.axes.push_back(static_cast<size_t>(g.other_axis));
    if (g.c.bound() || g.c.literal != 0.0) d.action = true;
  } else if (std::holds_alternative<TruncExp1D>(k)) {
    if (std::get<TruncExp1D>(k).act_power != 0.0) d.action = true;
  } else if (std::holds_alternative<Tabulated1D>(k)) {
    const auto& t = std::get<Tabulated1D>(k);
    if (t.dep_axis >= 0) d.axes.push_back(static_cast<size_t>(t.dep_axis));
    d.action = t.dep_action;
  }
  std::sort(d.axes.begin(), d.axes.end());
  d.axes.erase(std::unique(d.axes.begin(), d.axes.end()), d.axes.end());
  return d;
}

inline bool coef_equal(const Coef& a, const Coef& b) {
  return a.param_index == b.param_index && (a.bound() || a.literal == b.literal);
}

// Structural identity of coordinate kernels with no parameter bindings:
// such axes are "known" to the agent and shared between truth and model.
inline bool kernel_shared(const Kernel1D& t, const Kernel1D& m) {
  if (t.index() != m.index()) return false;
  if (std::holds_alternative<GaussianLinear1D>(m)) {
    const auto& a = std::get<GaussianLinear1D>(t);
    const auto& b = std::get<GaussianLinear1D>(m);
    if (b.m0.bound() || b.a.bound() || b.b.bound() || b.c.bound() || b.g.bound()) return false;
    return coef_equal(a.m0, b.m0) && coef_equal(a.a, b.a) && coef_equal(a.b, b.b) &&
           coef_equal(a.c, b.c) && coef_equal(a.g, b.g) && a.src_axis == b.src_axis &&
           a.other_axis == b.other_axis && a.act == b.act;
  }
  if (std::holds_alternative<TruncExp1D>(m)) {
    const auto& a = std::get<TruncExp1D>(t);
    const auto& b = std::get<TruncExp1D>(m);
    if (b.theta.bound()) return false;
    return coef_equal(a.theta, b.theta) && a.support == b.support && a.act_power == b.act_power;
  }
  if (std::holds_alternative<Uniform1D>(m)) {
    const auto& a = std::get<Uniform1D>(t);
    const auto& b = std::get<Uniform1D>(m);
    return a.lo == b.lo && a.hi == b.hi;
  }
  if (std::holds_alternative<PointMass1D>(m)) {
    const auto& a = std::get<PointMass1D>(t);
    const auto& b = std::get<PointMass1D>(m);
    return !b.at.bound() && coef_equal(a.at, b.at);
  }
  return false;  // tabulated pairs are never auto-shared
}

// Nested compact state boxes S_1 <= S_2 <= ... with the numerically
// witnessed minimum kernel mass per level.
struct TruncationLadder {
  std::vector<std::vector<std::pair<double, double>>> levels;  // [level][axis] = [lo,hi]
  double witnessed_r_true = 1.0;
  double witnessed_r_model = 1.0;
  size_t flagged_model_rows = 0;  // model rows with zero level mass at probe points
};

struct GridSpec {
  std::vector<size_t> state_cells;
  size_t action_points = 1;
  std::vector<size_t> theta_points;
  std::vector<std::optional<double>> theta_lo_override;  // per dim
  std::vector<std::optional<double>> theta_hi_override;
};

// Grid-indexed finite SMDP in factored per-axis form. Row tensors are kept
// on each kernel coordinate's dependency key space; the dense
// |Theta| x |S| x |X| x |S| object the truncation construction defines is
// recovered cell-by-cell through products and is materialized only on
// demand (dump/export), never held in memory whole.
class FiniteSMDP {
 public:
  StateSpace states;
  ActionGrid actions;
  ThetaGrid thetas;
  double discount = 0.0;
  std::vector<double> q0;

  struct AxisKernel {
    DepKey true_deps, model_deps, union_deps;
    bool model_shared = false;
    size_t n_cells = 0;
    std::vector<double> true_rows;    // [true_key][cell], renormalized
    std::vector<char> true_zero;      // raw level mass was zero
    bool model_materialized = false;
    std::vector<double> model_rows;   // [theta][model_key][cell]
    std::vector<char> model_zero;     // [theta*mkeys+key]
    std::vector<double> true_moment;  // [true_key]: E[center]
    std::vector<double> model_moment; // [theta][model_key]
  };
  std::vector<AxisKernel> axes_k;

  // Payoffs are evaluated on the fly from the declaration (dense |S| x |X|
  // tables would dominate memory at production grids); per-action transforms
  // are precomputed.
  size_t payoff_axis = 0;
  bool payoff_has_coef = false;
  std::vector<double> act_log, act_log1m, act_sq;

  // Per-axis relative entropy on the union key space; +inf marks
  // absolute-continuity failures. R(theta,s,x) = sum over axes.
  // Built once at construction (skipped for shared axes: identically zero).
  std::vector<std::vector<double>> rel_entropy;  // [axis][theta*ukeys+ukey]

  // Originating continuous declaration (kept for on-demand row evaluation).
  SMDPSpec spec;
  std::vector<std::pair<double, double>> level_box;

  size_t n_states() const { return states.size(); }
  size_t n_actions() const { return actions.size(); }
  size_t n_thetas() const { return thetas.size(); }

  const double* true_row(size_t axis, size_t s_flat, size_t x_idx) const {
    const auto& ak = axes_k[axis];
    const size_t key = ak.true_deps.key(states, actions.size(), s_flat, x_idx);
    return ak.true_rows.data() + key * ak.n_cells;
  }

  bool axis_iid(size_t axis) const {
    const auto& ak = axes_k[axis];
    return ak.model_shared && ak.true_deps.axes.empty() && !ak.true_deps.action;
  }

  // The single non-iid axis if the factored fast paths apply.
  std::optional<size_t> sole_dynamic_axis() const {
    std::optional<size_t> dyn;
    for (size_t a = 0; a < axes_k.size(); ++a) {
      if (axis_iid(a)) continue;
      if (dyn) return std::nullopt;
      dyn = a;
    }
    if (!dyn) dyn = 0;  // fully iid: treat axis 0 as the dynamic one
    return dyn;
  }

  // Model row for (axis, theta, model_key); uses the materialized tensor or
  // evaluates the declared family. Returns false if the raw level mass was
  // zero (out is zero-filled).
  bool model_row(size_t axis, size_t t, size_t mkey, std::vector<double>& out) const {
    const auto& ak = axes_k[axis];
    out.assign(ak.n_cells, 0.0);
    if (ak.model_shared) {
      const double* r = ak.true_rows.data() + mkey * ak.n_cells;
      std::copy(r, r + ak.n_cells, out.begin());
      return !ak.true_zero[mkey];
    }
    if (ak.model_materialized) {
      const double* r = ak.model_rows.data() + (t * ak.model_deps.keyspace(states, actions.size()) + mkey) * ak.n_cells;
      std::copy(r, r + ak.n_cells, out.begin());
      return !ak.model_zero[t * ak.model_deps.keyspace(states, actions.size()) + mkey];
    }
    return eval_model_row(axis, t, mkey, out.data());
  }

  // Likelihood of landing in state cell s_next from (s, x) under model theta.
  // Product over axes of single-cell masses with per-(theta,key) box-mass
  // normalizers cached by the caller when hot.
  double model_cell_mass(size_t t, size_t s_flat, size_t x_idx, size_t next_flat,
                         std::vector<double>* scratch = nullptr) const {
    double m = 1.0;
    std::vector<double> local;
    std::vector<double>& row = scratch ? *scratch : local;
    for (size_t a = 0; a < axes_k.size(); ++a) {
      const auto& ak = axes_k[a];
      const size_t cell = states.coord(next_flat, a);
      if (ak.model_shared) {
        const double* r = true_row(a, s_flat, x_idx);
        m *= r[cell];
      } else if (ak.model_materialized) {
        const size_t mk = ak.model_deps.key(states, actions.size(), s_flat, x_idx);
        const size_t ks = ak.model_deps.keyspace(states, actions.size());
        m *= ak.model_rows[(t * ks + mk) * ak.n_cells + cell];
      } else {
        const size_t mk = ak.model_deps.key(states, actions.size(), s_flat, x_idx);
        if (!model_row(a, t, mk, row)) return 0.0;
        m *= row[cell];
      }
      if (m == 0.0) return 0.0;
    }
    return m;
  }

  double true_cell_mass(size_t s_flat, size_t x_idx, size_t next_flat) const {
    double m = 1.0;
    for (size_t a = 0; a < axes_k.size(); ++a)
      m *= true_row(a, s_flat, x_idx)[states.coord(next_flat, a)];
    return m;
  }

  // Dense true transition row over flat next-states (test/export scale).
  std::vector<double> dense_true_row(size_t s_flat, size_t x_idx) const {
    std::vector<double> out(n_states());
    for (size_t ns = 0; ns < n_states(); ++ns) out[ns] = true_cell_mass(s_flat, x_idx, ns);
    return out;
  }

  std::vector<double> dense_model_row(size_t t, size_t s_flat, size_t x_idx) const {
    std::vector<double> out(n_states());
    std::vector<double> scratch;
    for (size_t ns = 0; ns < n_states(); ++ns)
      out[ns] = model_cell_mass(t, s_flat, x_idx, ns, &scratch);
    return out;
  }

  double payoff_base_at(size_t s_flat, size_t x_idx) const {
    const PayoffSpec& p = spec.payoff;
    switch (p.kind) {
      case PayoffKind::Constant: return p.constant;
      case PayoffKind::NextStateCoord: return 0.0;
      case PayoffKind::LogConsumption:
        return states.center_of(s_flat, p.z_axis) *
               (states.center_of(s_flat, p.u_axis) + act_log1m[x_idx]);
      case PayoffKind::ProductionCost:
        return states.center_of(s_flat, p.z_axis) * act_log[x_idx];
      case PayoffKind::RevenueCost: return -act_sq[x_idx];
      case PayoffKind::Tabulated: return p.base_table[s_flat * p.table_actions + x_idx];
    }
    return 0.0;
  }

  double payoff_coef_at(size_t s_flat, size_t x_idx) const {
    const PayoffSpec& p = spec.payoff;
    switch (p.kind) {
      case PayoffKind::Constant: return 0.0;
      case PayoffKind::NextStateCoord: return 1.0;
      case PayoffKind::LogConsumption: return 0.0;
      case PayoffKind::ProductionCost: return -1.0;
      case PayoffKind::RevenueCost: return states.center_of(s_flat, p.z_axis);
      case PayoffKind::Tabulated:
        return p.coef_table.empty() ? 0.0 : p.coef_table[s_flat * p.table_actions + x_idx];
    }
    return 0.0;
  }

  // Expected payoff at (s, x) under model mixture moments (moment = mixed
  // E[s'_axis] for the payoff axis; ignored when the payoff has no
  // next-state term).
  double expected_payoff(size_t s_flat, size_t x_idx, double moment) const {
    return payoff_base_at(s_flat, x_idx) +
           (payoff_has_coef ? payoff_coef_at(s_flat, x_idx) * moment : 0.0);
  }

  bool eval_model_row(size_t axis, size_t t, size_t mkey, double* out) const;

  friend FiniteSMDP discretize_smdp(const SMDPSpec&, const std::vector<std::pair<double, double>>&,
                                    const GridSpec&);
};

namespace detail {

// Decode a dep key into axis cell indices (action innermost when present).
inline void decode_key(const DepKey& d, const StateSpace& ss, size_t n_actions, size_t key,
                       std::vector<size_t>& cells, size_t& x_idx) {
  x_idx = 0;
  if (d.action) {
    x_idx = key % n_actions;
    key /= n_actions;
  }
  cells.assign(d.axes.size(), 0);
  for (size_t i = d.axes.size(); i-- > 0;) {
    cells[i] = key % ss.axes[d.axes[i]].size();
    key /= ss.axes[d.axes[i]].size();
  }
}

// Raw (unnormalized) axis row for a coordinate kernel at a representative
// state/action decoded from a dep key.
inline double fill_axis_row(const Kernel1D& k, const Axis& axis, const DepKey& deps,
                            const StateSpace& ss, const ActionGrid& ag, size_t key,
                            const std::vector<double>& theta, double* out) {
  std::vector<size_t> cells;
  size_t x_idx = 0;
  decode_key(deps, ss, ag.size(), key, cells, x_idx);
  std::vector<double> s(ss.dims(), 0.0);
  std::vector<size_t> s_cells(ss.dims(), 0);
  for (size_t i = 0; i < deps.axes.size(); ++i) {
    s[deps.axes[i]] = ss.axes[deps.axes[i]].centers[cells[i]];
    s_cells[deps.axes[i]] = cells[i];
  }
  const double x = ag.values[x_idx];
  double total = 0.0;
  const size_t n = axis.size();
  for (size_t c = 0; c < n; ++c) {
    const double lo = axis.edges[c];
    // top cell closes at the box edge so a point mass sitting exactly there
    // is not dropped by the half-open cell convention
    const double hi = (c + 1 == n) ? std::nextafter(axis.edges[c + 1], kInf) : axis.edges[c + 1];
    out[c] = coord_interval_mass(k, lo, hi, s, x, theta, s_cells, x_idx);
    total += out[c];
  }
  return total;
}

}  // namespace detail

inline bool FiniteSMDP::eval_model_row(size_t axis, size_t t, size_t mkey, double* out) const {
  const auto& ak = axes_k[axis];
  const auto theta = thetas.point(t);
  const double total = detail::fill_axis_row(spec.model_family.coords[axis], states.axes[axis],
                                             ak.model_deps, states, actions, mkey, theta, out);
  if (total <= 0.0) {
    std::fill(out, out + ak.n_cells, 0.0);
    return false;
  }
  for (size_t c = 0; c < ak.n_cells; ++c) out[c] /= total;
  return true;
}

// Relative entropy sum p_i ln(p_i/q_i) with the ln(0)*0 = 0 convention;
// +inf when p places mass where q has none.
inline double relative_entropy_terms(const double* p, const double* q, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  // Finite-sample rounding can leave a tiny negative; the divergence is
  // nonnegative by Jensen.
  return acc < 0.0 ? 0.0 : acc;
}

inline FiniteSMDP discretize_smdp(const SMDPSpec& spec,
                                  const std::vector<std::pair<double, double>>& level_box,
                                  const GridSpec& grids) {
  spec.validate();
  if (level_box.size() != spec.state_axes.size())
    throw ShapeError("level box must match state dimension");
  if (grids.state_cells.size() != spec.state_axes.size())
    throw ShapeError("grid sizes must match state dimension");
  for (size_t d = 0; d < spec.state_axes.size(); ++d) {
    // a single cell is permitted only on bounded (already finite) axes
    if (grids.state_cells[d] < 2 && !spec.state_axes[d].bounded())
      throw DomainError("need at least 2 cells per continuous state axis");
    if (grids.state_cells[d] < 1) throw DomainError("state axes need at least one cell");
  }

  FiniteSMDP f;
  f.spec = spec;
  f.level_box = level_box;
  f.discount = spec.discount;

  for (size_t d = 0; d < spec.state_axes.size(); ++d) {
    const auto& as = spec.state_axes[d];
    const auto [lo, hi] = level_box[d];
    if (as.spacing == AxisSpacing::LogZero)
      f.states.axes.push_back(Axis::log_zero(as.name, as.log_floor, hi, grids.state_cells[d]));
    else if (as.spacing == AxisSpacing::Quadratic)
      f.states.axes.push_back(Axis::quadratic(as.name, lo, hi, grids.state_cells[d]));
    else
      f.states.axes.push_back(Axis::uniform(as.name, lo, hi, grids.state_cells[d]));
  }

  if (!spec.action.explicit_values.empty())
    f.actions = ActionGrid::explicit_values(spec.action.explicit_values);
  else if (spec.action.log_spaced)
    f.actions = ActionGrid::log_zero(spec.action.log_floor, spec.action.hi, grids.action_points);
  else
    f.actions = ActionGrid::uniform(spec.action.lo, spec.action.hi, grids.action_points);

  if (grids.theta_points.size() != spec.theta_box.size())
    throw ShapeError("theta grid sizes must match parameter dimension");
  for (size_t d = 0; d < spec.theta_box.size(); ++d) {
    double lo = spec.theta_box[d].first, hi = spec.theta_box[d].second;
    if (d < grids.theta_lo_override.size() && grids.theta_lo_override[d]) lo = *grids.theta_lo_override[d];
    if (d < grids.theta_hi_override.size() && grids.theta_hi_override[d]) hi = *grids.theta_hi_override[d];
    // Dense-set restriction: a zero lower edge that binds a dispersion
    // coefficient is shifted to the first positive grid value.
    bool binds_sd = false;
    for (const auto& k : spec.model_family.coords)
      if (std::holds_alternative<GaussianLinear1D>(k) &&
          std::get<GaussianLinear1D>(k).b.param_index == static_cast<int>(d))
        binds_sd = true;
    size_t n = grids.theta_points[d];
    if (binds_sd && lo <= 0.0 && n > 1) lo = hi / static_cast<double>(n);
    f.thetas.dims.push_back(ThetaGrid::linspace(lo, hi, n));
  }

  const size_t S = f.states.size(), X = f.actions.size(), T = f.thetas.size();
  const size_t dims = spec.state_axes.size();

  // Per-axis kernels: true rows, model rows (materialize when modest), R.
  constexpr size_t kMaterializeBudget = size_t(8) << 20;  // doubles
  f.axes_k.resize(dims);
  std::vector<double> scratch;
  for (size_t a = 0; a < dims; ++a) {
    auto& ak = f.axes_k[a];
    ak.n_cells = f.states.axes[a].size();
    ak.true_deps = kernel_deps(spec.true_kernel.coords[a]);
    ak.model_deps = kernel_deps(spec.model_family.coords[a]);
    ak.model_shared = kernel_shared(spec.true_kernel.coords[a], spec.model_family.coords[a]);
    ak.union_deps = DepKey::unite(ak.true_deps, ak.model_deps);

    const size_t tks = ak.true_deps.keyspace(f.states, X);
    ak.true_rows.assign(tks * ak.n_cells, 0.0);
    ak.true_zero.assign(tks, 0);
    ak.true_moment.assign(tks, 0.0);
    for (size_t key = 0; key < tks; ++key) {
      double* row = ak.true_rows.data() + key * ak.n_cells;
      const double total = detail::fill_axis_row(spec.true_kernel.coords[a], f.states.axes[a],
                                                 ak.true_deps, f.states, f.actions, key, {}, row);
      if (total <= 0.0) {
        ak.true_zero[key] = 1;
        throw TruncationError("true kernel has zero mass on the level box (axis " +
                              f.states.axes[a].name + ", row key " + std::to_string(key) + ")");
      }
      double mom = 0.0;
      for (size_t c = 0; c < ak.n_cells; ++c) {
        row[c] /= total;
        mom += row[c] * f.states.axes[a].centers[c];
      }
      ak.true_moment[key] = mom;
    }

    if (!ak.model_shared) {
      const size_t mks = ak.model_deps.keyspace(f.states, X);
      ak.model_moment.assign(T * mks, 0.0);
      ak.model_zero.assign(T * mks, 0);
      ak.model_materialized = T * mks * ak.n_cells <= kMaterializeBudget;
      if (ak.model_materialized) ak.model_rows.assign(T * mks * ak.n_cells, 0.0);
      scratch.assign(ak.n_cells, 0.0);
      for (size_t t = 0; t < T; ++t) {
        const auto theta = f.thetas.point(t);
        for (size_t key = 0; key < mks; ++key) {
          double* row = ak.model_materialized
                            ? ak.model_rows.data() + (t * mks + key) * ak.n_cells
                            : scratch.data();
          const double total = detail::fill_axis_row(spec.model_family.coords[a], f.states.axes[a],
                                                     ak.model_deps, f.states, f.actions, key, theta, row);
          if (total <= 0.0) {
            ak.model_zero[t * mks + key] = 1;
            std::fill(row, row + ak.n_cells, 0.0);
            continue;
          }
          double mom = 0.0;
          for (size_t c = 0; c < ak.n_cells; ++c) {
            row[c] /= total;
            mom += row[c] * f.states.axes[a].centers[c];
          }
          ak.model_moment[t * mks + key] = mom;
        }
      }
    } else {
      ak.model_deps = ak.true_deps;
      ak.union_deps = ak.true_deps;
    }
  }

  // Relative-entropy tensors per non-shared axis on the union key space.
  f.rel_entropy.assign(dims, {});
  for (size_t a = 0; a < dims; ++a) {
    auto& ak = f.axes_k[a];
    if (ak.model_shared) continue;
    const size_t uks = ak.union_deps.keyspace(f.states, X);
    const size_t mks = ak.model_deps.keyspace(f.states, X);
    f.rel_entropy[a].assign(T * uks, 0.0);
    std::vector<char> udone(uks, 0);
    std::vector<double> mrow(ak.n_cells);
    std::vector<std::vector<double>> memo;
    std::vector<char> memo_ok;
    const bool memoize = !ak.model_materialized && mks < S * X;
    for (size_t t = 0; t < T; ++t) {
      std::fill(udone.begin(), udone.end(), 0);
      if (memoize) {
        memo.assign(mks, {});
        memo_ok.assign(mks, 0);
      }
      for (size_t s = 0; s < S; ++s) {
        for (size_t x = 0; x < X; ++x) {
          const size_t uk = ak.union_deps.key(f.states, X, s, x);
          if (udone[uk]) continue;
          udone[uk] = 1;
          const size_t tk = ak.true_deps.key(f.states, X, s, x);
          const size_t mk = ak.model_deps.key(f.states, X, s, x);
          const double* p = ak.true_rows.data() + tk * ak.n_cells;
          const double* q = nullptr;
          if (ak.model_materialized) {
            q = ak.model_rows.data() + (t * mks + mk) * ak.n_cells;
            if (ak.model_zero[t * mks + mk]) {
              f.rel_entropy[a][t * uks + uk] = kInf;
              continue;
            }
          } else if (memoize) {
            if (!memo_ok[mk]) {
              memo[mk].assign(ak.n_cells, 0.0);
              if (!f.eval_model_row(a, t, mk, memo[mk].data())) memo[mk].clear();
              memo_ok[mk] = 1;
            }
            if (memo[mk].empty()) {
              f.rel_entropy[a][t * uks + uk] = kInf;
              continue;
            }
            q = memo[mk].data();
          } else {
            if (!f.eval_model_row(a, t, mk, mrow.data())) {
              f.rel_entropy[a][t * uks + uk] = kInf;
              continue;
            }
            q = mrow.data();
          }
          f.rel_entropy[a][t * uks + uk] = relative_entropy_terms(p, q, ak.n_cells);
        }
      }
    }
  }

  // Payoff preparation: per-action transforms for the closed-form kinds.
  f.payoff_has_coef = spec.payoff.uses_next_state();
  f.payoff_axis = spec.payoff.kind == PayoffKind::NextStateCoord ||
                          spec.payoff.kind == PayoffKind::ProductionCost ||
                          spec.payoff.kind == PayoffKind::RevenueCost
                      ? spec.payoff.next_axis
                      : 0;
  f.act_log.resize(X);
  f.act_log1m.resize(X);
  f.act_sq.resize(X);
  for (size_t x = 0; x < X; ++x) {
    const double xv = f.actions.values[x];
    f.act_log[x] = xv > 0.0 ? std::log(xv) : -kInf;
    f.act_log1m[x] = xv < 1.0 ? std::log1p(-xv) : -kInf;
    f.act_sq[x] = xv * xv;
  }
  if (spec.payoff.kind == PayoffKind::ProductionCost) {
    for (size_t x = 0; x < X; ++x)
      if (!(f.actions.values[x] > 0.0))
        throw DomainError("production-cost payoff needs strictly positive actions");
  }
  if (spec.payoff.kind == PayoffKind::Tabulated &&
      (spec.payoff.table_states != S || spec.payoff.table_actions != X))
    throw ShapeError("tabulated payoff tables do not match the grid");

  // Initial distribution: product of per-axis masses renormalized on the box.
  f.q0.assign(S, 0.0);
  {
    std::vector<std::vector<double>> axm(dims);
    for (size_t a = 0; a < dims; ++a) {
      const auto& ax = f.states.axes[a];
      axm[a].resize(ax.size());
      double tot = 0.0;
      const InitAxis ia = a < spec.init.size() ? spec.init[a] : InitAxis{};
      for (size_t c = 0; c < ax.size(); ++c) {
        axm[a][c] = ia.interval_mass(ax.edges[c], ax.edges[c + 1], ax.lo(), ax.hi());
        tot += axm[a][c];
      }
      if (tot <= 0.0) throw DomainError("initial distribution has zero mass on the level box");
      for (double& v : axm[a]) v /= tot;
    }
    for (size_t s = 0; s < S; ++s) {
      double m = 1.0;
      for (size_t a = 0; a < dims; ++a) m *= axm[a][f.states.coord(s, a)];
      f.q0[s] = m;
    }
  }

  return f;
}

// Sublevel-set truncation ladder: level k is {||s||_inf <= k * base_radius}
// intersected with declared bounds; compact axes pass through. Verifies
// positive kernel mass per level on a probe grid and records the witnessed
// minimum for the true kernel and across a parameter probe grid.
inline TruncationLadder truncation_bounds(const SMDPSpec& spec, size_t n_levels,
                                          double base_radius, size_t probe_cells = 25,
                                          size_t theta_probe_per_dim = 3) {
  spec.validate();
  if (!(base_radius > 0.0)) throw DomainError("base_radius must be > 0");
  if (n_levels < 1) throw DomainError("need at least one level");

  bool any_unbounded = false;
  for (const auto& a : spec.state_axes)
    if (!a.bounded()) any_unbounded = true;
  if (!any_unbounded) n_levels = 1;  // compact state space: the single level is S itself

  TruncationLadder lad;
  for (size_t k = 1; k <= n_levels; ++k) {
    std::vector<std::pair<double, double>> box;
    for (const auto& a : spec.state_axes) {
      double lo = std::max(a.lo, -base_radius * static_cast<double>(k));
      double hi = std::min(a.hi, base_radius * static_cast<double>(k));
      if (a.bounded()) {
        lo = a.lo;
        hi = a.hi;
      }
      box.emplace_back(lo, hi);
    }
    lad.levels.push_back(std::move(box));
  }

  // Probe each level: grid points (s, x), theta on a coarse product grid.
  std::vector<std::vector<double>> theta_probe;
  {
    std::vector<std::vector<double>> per_dim;
    for (const auto& [lo, hi] : spec.theta_box) {
      auto v = ThetaGrid::linspace(lo, hi, theta_probe_per_dim);
      // stay inside the dominating dense set: nudge zero dispersion values
      for (double& t : v)
        if (t == 0.0) t = (hi - lo) * 1e-3 + lo + (hi - lo) * 1e-3;
      per_dim.push_back(v);
    }
    size_t total = 1;
    for (auto& v : per_dim) total *= v.size();
    for (size_t i = 0; i < total; ++i) {
      std::vector<double> p(per_dim.size());
      size_t r = i;
      for (size_t d = per_dim.size(); d-- > 0;) {
        p[d] = per_dim[d][r % per_dim[d].size()];
        r /= per_dim[d].size();
      }
      theta_probe.push_back(std::move(p));
    }
  }

  std::vector<double> xs;
  if (!spec.action.explicit_values.empty()) xs = spec.action.explicit_values;
  else xs = ThetaGrid::linspace(spec.action.lo, spec.action.hi, 5);
  for (double& x : xs)
    if (x == 0.0 && spec.action.log_spaced) x = spec.action.log_floor;

  for (size_t lev = 0; lev < lad.levels.size(); ++lev) {
    const auto& box = lad.levels[lev];
    // probe states: per-axis linspace of cell centers
    std::vector<std::vector<double>> pts;
    for (size_t d = 0; d < box.size(); ++d) {
      auto v = ThetaGrid::linspace(box[d].first, box[d].second, probe_cells);
      pts.push_back(std::move(v));
    }
    size_t total = 1;
    for (auto& v : pts) total *= v.size();
    for (size_t i = 0; i < total; ++i) {
      std::vector<double> s(box.size());
      size_t r = i;
      for (size_t d = box.size(); d-- > 0;) {
        s[d] = pts[d][r % pts[d].size()];
        r /= pts[d].size();
      }
      for (double x : xs) {
        std::vector<std::pair<double, double>> cellbox = box;
        const double mt = kernel_mass(spec, {}, s, x, cellbox);
        if (!(mt > 0.0))
          throw TruncationError("level " + std::to_string(lev + 1) +
                                " gets zero true-kernel mass at a probe point");
        lad.witnessed_r_true = std::min(lad.witnessed_r_true, mt);
        for (const auto& th : theta_probe) {
          const double mm = kernel_mass(spec, th, s, x, cellbox);
          if (!(mm > 0.0)) ++lad.flagged_model_rows;
          else lad.witnessed_r_model = std::min(lad.witnessed_r_model, mm);
        }
      }
    }
  }
  return lad;
}

}  // namespace berknash
