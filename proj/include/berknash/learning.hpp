#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "berknash/bellman.hpp"
#include "berknash/divergence.hpp"
#include "berknash/errors.hpp"
#include "berknash/rng.hpp"
#include "berknash/stationary.hpp"

namespace berknash {

// Probability vector over the parameter grid.
struct Belief {
  std::vector<double> weights;

  void normalize() {
    double tot = 0.0;
    for (double w : weights) tot += w;
    if (tot <= 0.0) throw ImpossibleObservationError("belief normalizer vanished");
    for (double& w : weights) w /= tot;
  }

  static Belief uniform(size_t n) {
    Belief b;
    b.weights.assign(n, 1.0 / static_cast<double>(n));
    return b;
  }
};

// Posterior after observing the transition (s, x) -> s'; likelihood of theta
// is the model cell mass of the realized next-state cell.
inline Belief bayes_update(const Belief& mu, size_t s, size_t x, size_t s_next,
                           const FiniteSMDP& f) {
  if (mu.weights.size() != f.n_thetas()) throw ShapeError("belief has wrong length");
  Belief post;
  post.weights.resize(mu.weights.size());
  double denom = 0.0;
  std::vector<double> scratch;
  for (size_t t = 0; t < mu.weights.size(); ++t) {
    const double w = mu.weights[t];
    post.weights[t] = w == 0.0 ? 0.0 : w * f.model_cell_mass(t, s, x, s_next, &scratch);
    denom += post.weights[t];
  }
  if (denom <= 0.0)
    throw ImpossibleObservationError(
        "observed transition has zero mass under every model in the prior support");
  for (double& w : post.weights) w /= denom;
  return post;
}

enum class PolicyMode { AnticipatedUtility, FixedPolicy };

struct LearnOptions {
  PolicyMode mode = PolicyMode::AnticipatedUtility;
  size_t horizon = 100000;
  size_t resolve_every = 100;
  uint64_t seed = 1;
  double eps_value = 1e-7;
  double policy_gap = 1e-9;
  Policy fixed_policy;  // used by FixedPolicy mode
};

struct LearningTrace {
  std::vector<uint32_t> states, actions;            // full history
  std::vector<size_t> checkpoints;                  // time indices k
  std::vector<std::vector<double>> belief_at;       // per checkpoint
  std::vector<std::vector<double>> freq_at;         // m_k per checkpoint
  uint64_t seed = 0;

  // empirical state-action frequency over the first k steps
  static std::vector<double> frequency(const std::vector<uint32_t>& s,
                                       const std::vector<uint32_t>& x, size_t k, size_t S,
                                       size_t X) {
    std::vector<double> m(S * X, 0.0);
    const double w = 1.0 / static_cast<double>(k);
    for (size_t i = 0; i < k; ++i) m[s[i] * X + x[i]] += w;
    return m;
  }
};

namespace detail {

// half-decade checkpoints 10, 32, 100, 316, ... capped at the horizon
inline std::vector<size_t> log_checkpoints(size_t horizon) {
  std::vector<size_t> cps;
  for (int e = 2;; ++e) {
    const size_t k = static_cast<size_t>(std::llround(std::pow(10.0, 0.5 * e)));
    if (k >= horizon) break;
    if (cps.empty() || k > cps.back()) cps.push_back(k);
  }
  cps.push_back(horizon);
  return cps;
}

// cumulative rows of the true kernel per axis, built lazily per key
struct TrueSamplerCache {
  std::vector<std::vector<double>> cum;  // [axis-key storage]
  std::vector<char> ready;
};

inline size_t sample_next_state(const FiniteSMDP& f, size_t s, size_t x, Philox4x32& rng,
                                std::vector<TrueSamplerCache>& caches) {
  size_t flat = 0;
  for (size_t a = 0; a < f.axes_k.size(); ++a) {
    const auto& ak = f.axes_k[a];
    const size_t key = ak.true_deps.key(f.states, f.n_actions(), s, x);
    auto& cache = caches[a];
    if (!cache.ready[key]) {
      const double* row = ak.true_rows.data() + key * ak.n_cells;
      auto& c = cache.cum[key];
      c.resize(ak.n_cells);
      double acc = 0.0;
      for (size_t i = 0; i < ak.n_cells; ++i) {
        acc += row[i];
        c[i] = acc;
      }
      cache.ready[key] = 1;
    }
    const size_t cell = Philox4x32::draw_from_cumulative(cache.cum[key], rng.uniform01());
    flat = flat * f.states.axes[a].size() + cell;
  }
  return flat;
}

// log-likelihood of theta for one observed transition; -inf for zero mass
inline double log_likelihood(const FiniteSMDP& f, size_t t, size_t s, size_t x, size_t s_next,
                             std::vector<double>& scratch) {
  const double m = f.model_cell_mass(t, s, x, s_next, &scratch);
  return m > 0.0 ? std::log(m) : -kInf;
}

}  // namespace detail

// Simulate the Bayesian learner: draw from the true kernel, update the
// posterior over the parameter grid each period, and under anticipated
// utility re-solve the Bellman equation against the frozen posterior every
// resolve_every periods. Bit-reproducible from the seed.
inline LearningTrace simulate_learning(const FiniteSMDP& f, const Belief& prior,
                                       const LearnOptions& opts) {
  const size_t S = f.n_states(), X = f.n_actions(), T = f.n_thetas();
  if (opts.horizon < 1) throw DomainError("horizon must be >= 1");
  if (opts.resolve_every < 1) throw DomainError("resolve_every must be >= 1");
  if (prior.weights.size() != T) throw ShapeError("prior has wrong length");
  if (opts.mode == PolicyMode::FixedPolicy && opts.fixed_policy.probs.size() != S * X)
    throw ShapeError("fixed policy has wrong shape");

  Philox4x32 rng(opts.seed, /*stream=*/0x4c4541524eull);  // draws
  LearningTrace trace;
  trace.seed = opts.seed;
  trace.checkpoints = detail::log_checkpoints(opts.horizon);
  trace.states.reserve(opts.horizon);
  trace.actions.reserve(opts.horizon);

  // log-space posterior
  std::vector<double> logw(T);
  for (size_t t = 0; t < T; ++t)
    logw[t] = prior.weights[t] > 0.0 ? std::log(prior.weights[t]) : -kInf;

  auto posterior = [&]() {
    double mx = -kInf;
    for (double v : logw) mx = std::max(mx, v);
    std::vector<double> p(T, 0.0);
    if (mx == -kInf) throw ImpossibleObservationError("posterior support vanished");
    double tot = 0.0;
    for (size_t t = 0; t < T; ++t) {
      p[t] = logw[t] == -kInf ? 0.0 : std::exp(logw[t] - mx);
      tot += p[t];
    }
    for (double& v : p) v /= tot;
    return p;
  };

  // initial state from q0
  std::vector<double> q0cum(S);
  {
    double acc = 0.0;
    for (size_t s = 0; s < S; ++s) {
      acc += f.q0[s];
      q0cum[s] = acc;
    }
  }
  size_t s = Philox4x32::draw_from_cumulative(q0cum, rng.uniform01());

  std::vector<detail::TrueSamplerCache> caches(f.axes_k.size());
  for (size_t a = 0; a < f.axes_k.size(); ++a) {
    const size_t ks = f.axes_k[a].true_deps.keyspace(f.states, X);
    caches[a].cum.resize(ks);
    caches[a].ready.assign(ks, 0);
  }

  std::vector<size_t> greedy(S, 0);
  auto resolve = [&]() {
    if (X == 1) return;  // singleton action space: the policy is forced
    const auto nu = posterior();
    const MixedKernel mixed = mix_kernel(nu, f);
    const ValueFunction V = solve_bellman(f, mixed, opts.eps_value);
    const auto pc = optimal_actions(f, mixed, V, opts.policy_gap);
    for (size_t st = 0; st < S; ++st) greedy[st] = pc.optimal[st].front();
  };
  if (opts.mode == PolicyMode::AnticipatedUtility) resolve();

  std::vector<double> scratch;
  size_t next_cp = 0;
  for (size_t k = 0; k < opts.horizon; ++k) {
    size_t x;
    if (opts.mode == PolicyMode::FixedPolicy) {
      std::vector<double> row(opts.fixed_policy.probs.begin() + s * X,
                              opts.fixed_policy.probs.begin() + (s + 1) * X);
      x = rng.categorical(row);
    } else {
      if (k > 0 && k % opts.resolve_every == 0) resolve();
      x = greedy[s];
    }

    const size_t s_next = detail::sample_next_state(f, s, x, rng, caches);

    bool any = false;
    for (size_t t = 0; t < T; ++t) {
      if (logw[t] == -kInf) continue;
      const double ll = detail::log_likelihood(f, t, s, x, s_next, scratch);
      logw[t] += ll;
      if (logw[t] != -kInf) any = true;
    }
    if (!any)
      throw ImpossibleObservationError("transition at step " + std::to_string(k) +
                                       " has zero probability under every surviving model");

    trace.states.push_back(static_cast<uint32_t>(s));
    trace.actions.push_back(static_cast<uint32_t>(x));
    s = s_next;

    if (next_cp < trace.checkpoints.size() && k + 1 == trace.checkpoints[next_cp]) {
      trace.belief_at.push_back(posterior());
      trace.freq_at.push_back(
          LearningTrace::frequency(trace.states, trace.actions, k + 1, S, X));
      ++next_cp;
    }
  }
  return trace;
}

struct IdentificationResult {
  bool identified = true;
  size_t witness_a = 0, witness_b = 0;
  double tv_distance = 0.0;
};

// Identified given m: all KL-minimizing parameters induce the same kernel at
// every (s, x), measured by sup TV distance over the grid.
inline IdentificationResult identification_check(const FiniteSMDP& f,
                                                 const std::vector<double>& m, double tol) {
  const auto prof = closest_parameters(m, f, tol);
  IdentificationResult res;
  if (prof.argmin_set.size() < 2) return res;

  std::vector<double> row_a, row_b;
  for (size_t i = 0; i < prof.argmin_set.size(); ++i) {
    for (size_t j = i + 1; j < prof.argmin_set.size(); ++j) {
      const size_t ta = prof.argmin_set[i], tb = prof.argmin_set[j];
      double worst = 0.0;
      for (size_t a = 0; a < f.axes_k.size(); ++a) {
        const auto& ak = f.axes_k[a];
        if (ak.model_shared) continue;
        const size_t mks = ak.model_deps.keyspace(f.states, f.n_actions());
        for (size_t key = 0; key < mks; ++key) {
          f.model_row(a, ta, key, row_a);
          f.model_row(a, tb, key, row_b);
          worst = std::max(worst, tv_distance(row_a, row_b));
        }
      }
      if (worst > tol && worst > res.tv_distance) {
        res.identified = false;
        res.witness_a = ta;
        res.witness_b = tb;
        res.tv_distance = worst;
      }
    }
  }
  return res;
}

}  // namespace berknash
