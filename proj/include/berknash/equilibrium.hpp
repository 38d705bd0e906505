#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "berknash/bellman.hpp"
#include "berknash/divergence.hpp"
#include "berknash/rng.hpp"
#include "berknash/stationary.hpp"

namespace berknash {

struct SolveOptions {
  double damping = 0.5;           // weight on the best-response measure
  double tol_optimality = 1e-6;   // converged iff all three gaps pass
  double tol_belief = 1e-8;
  double tol_stationarity = 1e-6;
  double tol_m_step = 1e-9;       // TV fixed-point stop for the outer loop
  double eps_value = 1e-7;        // Bellman accuracy
  double policy_gap = 1e-9;       // tie band when extracting optimal actions
  double kl_band_tol = -1.0;      // argmin band; <0 = relative default
  size_t max_outer = 400;
  size_t restarts = 3;
  uint64_t seed = 1;
  double support_trim = 1e-15;
  double stationary_eps_tv = 1e-11;
  size_t stationary_max_iter = 200000;
};

struct EquilibriumReport {
  JointMeasure m;
  std::vector<double> nu;
  double optimality_gap = kInf;
  double belief_gap = kInf;
  double stationarity_residual = kInf;
  bool converged = false;
  size_t iterations = 0;
  size_t restart_used = 0;

  struct TraceEntry {
    size_t kl_argmin;
    size_t band_size;
    uint64_t policy_hash;
    double tv_step;
  };
  std::vector<TraceEntry> trace;

  double max_gap() const {
    return std::max({optimality_gap, belief_gap, stationarity_residual});
  }
};

namespace detail {

inline uint64_t hash_policy(const PolicyCorrespondence& pc) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& acts : pc.optimal) {
    for (size_t a : acts) {
      h ^= a + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    h ^= 0xfeull;
    h *= 1099511628211ull;
  }
  return h;
}

inline Policy uniform_over(const PolicyCorrespondence& pc, size_t n_actions) {
  Policy p;
  p.probs.assign(pc.optimal.size() * n_actions, 0.0);
  for (size_t s = 0; s < pc.optimal.size(); ++s) {
    const double w = 1.0 / static_cast<double>(pc.optimal[s].size());
    for (size_t a : pc.optimal[s]) p.probs[s * n_actions + a] = w;
  }
  return p;
}

inline std::vector<double> uniform_belief_on(const std::vector<size_t>& band, size_t T) {
  std::vector<double> nu(T, 0.0);
  const double w = 1.0 / static_cast<double>(band.size());
  for (size_t t : band) nu[t] = w;
  return nu;
}

}  // namespace detail

// Recompute the three defining gaps for a candidate (m, nu); pure function
// of its inputs, independent of any search state.
inline EquilibriumReport verify_equilibrium(const FiniteSMDP& f, const JointMeasure& m,
                                            const std::vector<double>& nu,
                                            const SolveOptions& opts = {}) {
  const size_t S = f.n_states(), X = f.n_actions(), T = f.n_thetas();
  if (m.weights.size() != S * X) throw ShapeError("measure has wrong shape");
  if (nu.size() != T) throw ShapeError("belief has wrong length");

  EquilibriumReport rep;
  rep.m = m;
  rep.nu = nu;

  // Belief restriction: every supported theta must be KL-minimal.
  {
    double mn = kInf, worst = 0.0;
    std::vector<double> K(T);
    for (size_t t = 0; t < T; ++t) {
      const ExtReal k = weighted_kl(m.weights, t, f);
      K[t] = k.value();
      mn = std::min(mn, K[t]);
    }
    for (size_t t = 0; t < T; ++t)
      if (nu[t] > 0.0) worst = std::max(worst, K[t] - mn);
    rep.belief_gap = worst;
  }

  // Optimality: Q-value shortfall on the support of m under the mixed model.
  {
    const MixedKernel mixed = mix_kernel(nu, f);
    const ValueFunction V = solve_bellman(f, mixed, opts.eps_value);
    const auto q = q_values(f, mixed, V.values);
    double worst = 0.0;
    for (size_t s = 0; s < S; ++s) {
      double best = q[s * X];
      for (size_t x = 1; x < X; ++x) best = std::max(best, q[s * X + x]);
      for (size_t x = 0; x < X; ++x)
        if (m.weights[s * X + x] > 0.0) worst = std::max(worst, best - q[s * X + x]);
    }
    rep.optimality_gap = worst;
  }

  rep.stationarity_residual = stationarity_residual(m, f);
  rep.converged = rep.optimality_gap <= opts.tol_optimality &&
                  rep.belief_gap <= opts.tol_belief &&
                  rep.stationarity_residual <= opts.tol_stationarity;
  return rep;
}

// Damped best-response iteration for a Berk-Nash equilibrium. Restarts are
// seeded random initial beliefs; the primary start is the uniform belief.
// Non-convergence returns the best candidate with converged=false.
inline EquilibriumReport solve_berk_nash(const FiniteSMDP& f, const SolveOptions& opts = {}) {
  const size_t S = f.n_states(), X = f.n_actions(), T = f.n_thetas();
  std::optional<EquilibriumReport> best;

  for (size_t restart = 0; restart <= opts.restarts; ++restart) {
    Philox4x32 rng(opts.seed, /*stream=*/restart);

    std::vector<double> nu(T, 1.0 / static_cast<double>(T));
    if (restart > 0) {
      double tot = 0.0;
      for (size_t t = 0; t < T; ++t) {
        nu[t] = -std::log(1.0 - rng.uniform01());
        tot += nu[t];
      }
      for (double& v : nu) v /= tot;
    }

    EquilibriumReport rep;
    rep.restart_used = restart;

    // warm-start state reused across outer iterations
    std::vector<double> v_warm;
    std::vector<double> ms_warm;

    // initial measure: stationary under the greedy policy of the start belief
    JointMeasure m;
    {
      const MixedKernel mixed = mix_kernel(nu, f);
      const ValueFunction V = solve_bellman(f, mixed, opts.eps_value);
      v_warm = V.values;
      const auto pc = optimal_actions(f, mixed, V, opts.policy_gap);
      bool conv = false;
      m = stationary_distribution(f, detail::uniform_over(pc, X), opts.stationary_eps_tv,
                                  opts.stationary_max_iter, &conv);
      ms_warm = m.marginal_state(S, X);
    }

    bool aborted = false;
    for (size_t it = 0; it < opts.max_outer; ++it) {
      KLProfile prof;
      try {
        prof = closest_parameters(m.weights, f, opts.kl_band_tol);
      } catch (const NoDominatingParameterError&) {
        aborted = true;
        break;
      }
      nu = detail::uniform_belief_on(prof.argmin_set, T);

      const MixedKernel mixed = mix_kernel(nu, f);
      const ValueFunction V = solve_bellman(f, mixed, opts.eps_value, &v_warm);
      v_warm = V.values;
      const auto pc = optimal_actions(f, mixed, V, opts.policy_gap);
      const Policy pol = detail::uniform_over(pc, X);

      bool conv = false;
      const JointMeasure m_br =
          stationary_distribution(f, pol, opts.stationary_eps_tv, opts.stationary_max_iter,
                                  &conv, &ms_warm);
      ms_warm = m_br.marginal_state(S, X);

      std::vector<double> mixed_m(S * X);
      const double lam = opts.damping;
      double tot = 0.0;
      for (size_t i = 0; i < S * X; ++i) {
        double v = (1.0 - lam) * m.weights[i] + lam * m_br.weights[i];
        if (v < opts.support_trim) v = 0.0;
        mixed_m[i] = v;
        tot += v;
      }
      for (double& v : mixed_m) v /= tot;

      const double tv = tv_distance(mixed_m, m.weights);
      rep.trace.push_back({prof.argmin, prof.argmin_set.size(), detail::hash_policy(pc), tv});
      m.weights.swap(mixed_m);
      m.residual = m_br.residual;
      rep.iterations = it + 1;

      if (tv <= opts.tol_m_step) break;
    }

    if (!aborted) {
      EquilibriumReport ver = verify_equilibrium(f, m, nu, opts);
      ver.iterations = rep.iterations;
      ver.trace = std::move(rep.trace);
      ver.restart_used = restart;
      if (ver.converged) return ver;
      if (!best || ver.max_gap() < best->max_gap()) best = std::move(ver);
    }
  }

  if (!best) {
    // every restart aborted without a dominating parameter
    EquilibriumReport rep;
    rep.m.weights.assign(S * X, 1.0 / static_cast<double>(S * X));
    rep.nu.assign(T, 1.0 / static_cast<double>(T));
    return rep;
  }
  return *best;
}

// ---- Lyapunov drift certificate ------------------------------------------

enum class LyapunovV { AbsNorm };

struct LyapunovResult {
  double alpha = 0.0;
  double beta = 0.0;
  bool pass = false;
  std::vector<double> witness_state;
  double witness_action = 0.0;
  double max_drift_ratio = 0.0;
};

namespace detail {

// E[|s'_axis|] for one coordinate kernel at (s, x) via family closed forms.
inline double abs_first_moment(const Kernel1D& k, const std::vector<double>& s, double x,
                               const std::vector<double>& theta) {
  if (std::holds_alternative<GaussianLinear1D>(k)) {
    const auto& g = std::get<GaussianLinear1D>(k);
    const double mu = g.mean(s, x, theta);
    const double sd = g.sd(theta);
    if (sd <= 0.0) return std::abs(mu);
    // folded normal mean
    return sd * std::sqrt(2.0 / M_PI) * std::exp(-mu * mu / (2.0 * sd * sd)) +
           mu * (1.0 - 2.0 * normal_cdf(-mu / sd));
  }
  if (std::holds_alternative<TruncExp1D>(k)) {
    const auto& t = std::get<TruncExp1D>(k);
    const double th = t.theta(theta);
    const double mult = t.multiplier(x);
    if (th <= 0.0 || mult == 0.0) return 0.0;
    const double b = t.effective_support(th);
    double mean;
    if (std::isfinite(b)) {
      const double r = b / th;
      mean = th * (1.0 - (r + 1.0) * std::exp(-r)) / (1.0 - std::exp(-r));
    } else {
      mean = th;
    }
    return mult * mean;
  }
  if (std::holds_alternative<Uniform1D>(k)) {
    const auto& u = std::get<Uniform1D>(k);
    if (u.lo >= 0.0) return 0.5 * (u.lo + u.hi);
    if (u.hi <= 0.0) return -0.5 * (u.lo + u.hi);
    return (u.lo * u.lo + u.hi * u.hi) / (2.0 * (u.hi - u.lo));
  }
  if (std::holds_alternative<PointMass1D>(k)) {
    return std::abs(std::get<PointMass1D>(k).at(theta));
  }
  const auto& tab = std::get<Tabulated1D>(k);
  double acc = 0.0;
  const auto& row = tab.rows.at(0);
  for (size_t i = 0; i + 1 < tab.edges.size(); ++i)
    acc += row[i] * std::abs(0.5 * (tab.edges[i] + tab.edges[i + 1]));
  return acc;
}

}  // namespace detail

// Fit the least drift bound E[V(s')|s,x] <= (1-alpha) V(s) + beta over the
// sampled (s, x): the slope is the maximal chord slope of drift against V
// and beta the matching intercept. pass iff alpha stays strictly positive.
inline LyapunovResult lyapunov_check(const SMDPSpec& spec, LyapunovV /*choice*/,
                                     const std::vector<std::vector<double>>& sample_states,
                                     const std::vector<double>& sample_actions,
                                     double alpha_min = 1e-6) {
  if (sample_states.empty() || sample_actions.empty())
    throw DomainError("lyapunov_check: sample sets must be nonempty");

  struct Pt {
    double v, d;
    std::vector<double> s;
    double x;
  };
  std::vector<Pt> pts;
  for (const auto& s : sample_states) {
    double v = 0.0;
    for (double c : s) v += std::abs(c);
    for (double x : sample_actions) {
      double d = 0.0;
      for (const auto& k : spec.true_kernel.coords)
        d += detail::abs_first_moment(k, s, x, {});
      pts.push_back({v, d, s, x});
    }
  }

  LyapunovResult res;
  // worst drift ratio (for the failure witness)
  for (const auto& p : pts) {
    if (p.v > 0.0 && p.d / p.v > res.max_drift_ratio) {
      res.max_drift_ratio = p.d / p.v;
      res.witness_state = p.s;
      res.witness_action = p.x;
    }
  }

  // maximal chord slope over sample pairs
  double slope = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < pts.size(); ++j) {
      if (pts[i].v <= pts[j].v + 1e-12) continue;
      slope = std::max(slope, (pts[i].d - pts[j].d) / (pts[i].v - pts[j].v));
    }
  slope = std::max(slope, 0.0);

  res.alpha = 1.0 - slope;
  double beta = 0.0;
  for (const auto& p : pts) beta = std::max(beta, p.d - slope * p.v);
  res.beta = beta;
  res.pass = res.alpha > alpha_min;
  if (res.alpha > 1.0) res.alpha = 1.0;
  return res;
}

// ---- Truncation-ladder diagnosis ------------------------------------------

enum class LadderVerdict { EquilibriumFound, MassEscape };

struct LadderOptions {
  double cells_per_unit = 10.0;  // grid density on unbounded axes
  size_t action_points = 1;
  std::vector<size_t> theta_points;
  std::vector<std::optional<double>> theta_lo_override;
  std::vector<size_t> bounded_axis_cells;  // cells for compact axes
  double boundary_band = 0.2;    // outermost fraction of cells counted
  double escape_threshold = 0.1;
  double mono_slack = 0.01;
  SolveOptions solve;
};

struct LadderDiagnosis {
  std::vector<EquilibriumReport> reports;
  std::vector<double> boundary_mass;
  LadderVerdict verdict = LadderVerdict::EquilibriumFound;
};

// Boundar-band mass of the state marginal: cells whose index along some
// unbounded axis lies in the outermost band fraction.
inline double boundary_mass(const FiniteSMDP& f, const SMDPSpec& spec,
                            const std::vector<double>& ms, double band) {
  double b = 0.0;
  for (size_t s = 0; s < f.n_states(); ++s) {
    bool outer = false;
    for (size_t a = 0; a < f.states.axes.size() && !outer; ++a) {
      if (spec.state_axes[a].bounded()) continue;
      const size_t n = f.states.axes[a].size();
      const size_t k = static_cast<size_t>(std::ceil(0.5 * band * static_cast<double>(n)));
      const size_t c = f.states.coord(s, a);
      if (c < k || c >= n - k) outer = true;
    }
    if (outer) b += ms[s];
  }
  return b;
}

// Solve every ladder level and test for escaping mass: nondecreasing
// boundary mass that stays above the threshold at the top level signals that
// the truncated equilibria do not tighten (no equilibrium on the full space).
inline LadderDiagnosis ladder_diagnose(const SMDPSpec& spec, const TruncationLadder& ladder,
                                       const LadderOptions& opts) {
  if (ladder.levels.empty()) throw DomainError("ladder has no levels");

  LadderDiagnosis diag;
  for (const auto& box : ladder.levels) {
    GridSpec g;
    size_t bounded_i = 0;
    for (size_t a = 0; a < box.size(); ++a) {
      if (spec.state_axes[a].bounded()) {
        g.state_cells.push_back(bounded_i < opts.bounded_axis_cells.size()
                                    ? opts.bounded_axis_cells[bounded_i]
                                    : 32);
        ++bounded_i;
      } else {
        const double len = box[a].second - box[a].first;
        g.state_cells.push_back(static_cast<size_t>(std::lround(opts.cells_per_unit * len)));
      }
    }
    g.action_points = opts.action_points;
    g.theta_points = opts.theta_points;
    g.theta_lo_override = opts.theta_lo_override;

    const FiniteSMDP f = discretize_smdp(spec, box, g);
    EquilibriumReport rep = solve_berk_nash(f, opts.solve);
    const auto ms = rep.m.marginal_state(f.n_states(), f.n_actions());
    diag.boundary_mass.push_back(boundary_mass(f, spec, ms, opts.boundary_band));
    diag.reports.push_back(std::move(rep));
  }

  bool nondecreasing = true;
  for (size_t i = 0; i + 1 < diag.boundary_mass.size(); ++i)
    if (diag.boundary_mass[i + 1] < diag.boundary_mass[i] - opts.mono_slack) nondecreasing = false;
  const bool escapes = diag.boundary_mass.size() >= 2 && nondecreasing &&
                       diag.boundary_mass.back() > opts.escape_threshold;
  diag.verdict = escapes ? LadderVerdict::MassEscape : LadderVerdict::EquilibriumFound;
  return diag;
}

}  // namespace berknash
