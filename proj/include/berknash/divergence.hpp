#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "berknash/discretize.hpp"
#include "berknash/errors.hpp"
#include "berknash/extended.hpp"

namespace berknash {

// Weighted KL divergence values over the parameter grid with the argmin band.
struct KLProfile {
  std::vector<ExtReal> values;     // K_Q(m, theta) per grid index
  std::vector<size_t> argmin_set;  // indices within tol of the minimum
  double tolerance = 0.0;
  size_t argmin = 0;               // first minimizing index

  ExtReal min_value() const { return values[argmin]; }
};

// Relative entropy sum p_i ln(p_i/q_i), extended-real valued.
inline ExtReal relative_entropy_row(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ShapeError("relative_entropy_row: length mismatch");
  const double v = relative_entropy_terms(p.data(), q.data(), p.size());
  return std::isinf(v) ? ExtReal::infinity() : ExtReal(v);
}

namespace detail {

// Contract a joint measure onto an axis's union key space.
inline std::vector<double> contract_measure(const FiniteSMDP& f, const std::vector<double>& m,
                                            const DepKey& deps) {
  const size_t X = f.n_actions();
  std::vector<double> w(deps.keyspace(f.states, X), 0.0);
  for (size_t s = 0; s < f.n_states(); ++s)
    for (size_t x = 0; x < X; ++x) {
      const double v = m[s * X + x];
      if (v != 0.0) w[deps.key(f.states, X, s, x)] += v;
    }
  return w;
}

}  // namespace detail

// K_Q(m, theta): m-weighted relative entropy of the true rows against the
// model rows of one parameter point. Infinite contributions only count on
// the support of m.
inline ExtReal weighted_kl(const std::vector<double>& m, size_t theta_idx, const FiniteSMDP& f) {
  if (m.size() != f.n_states() * f.n_actions())
    throw ShapeError("weighted_kl: measure has wrong length");
  ExtReal acc(0.0);
  for (size_t a = 0; a < f.axes_k.size(); ++a) {
    if (f.axes_k[a].model_shared) continue;  // identical rows contribute zero
    const auto& deps = f.axes_k[a].union_deps;
    const size_t uks = deps.keyspace(f.states, f.n_actions());
    const auto w = detail::contract_measure(f, m, deps);
    const double* R = f.rel_entropy[a].data() + theta_idx * uks;
    for (size_t k = 0; k < uks; ++k) {
      if (w[k] == 0.0) continue;
      if (std::isinf(R[k])) return ExtReal::infinity();
      acc.add_weighted(w[k], ExtReal(R[k]));
    }
  }
  return acc;
}

// Evaluate the whole profile; argmin band is {theta : K <= min + tol} with
// the relative default tol = 1e-8 * (1 + min).
inline KLProfile closest_parameters(const std::vector<double>& m, const FiniteSMDP& f,
                                    double tol = -1.0) {
  KLProfile prof;
  const size_t T = f.n_thetas();
  prof.values.resize(T);

  // Contract m once per distinct axis key space, then sweep thetas.
  std::vector<std::vector<double>> w(f.axes_k.size());
  for (size_t a = 0; a < f.axes_k.size(); ++a)
    if (!f.axes_k[a].model_shared)
      w[a] = detail::contract_measure(f, m, f.axes_k[a].union_deps);

  for (size_t t = 0; t < T; ++t) {
    ExtReal acc(0.0);
    for (size_t a = 0; a < f.axes_k.size() && !acc.is_infinite(); ++a) {
      if (f.axes_k[a].model_shared) continue;
      const size_t uks = f.axes_k[a].union_deps.keyspace(f.states, f.n_actions());
      const double* R = f.rel_entropy[a].data() + t * uks;
      for (size_t k = 0; k < uks; ++k) {
        if (w[a][k] == 0.0) continue;
        if (std::isinf(R[k])) {
          acc = ExtReal::infinity();
          break;
        }
        acc.add_weighted(w[a][k], ExtReal(R[k]));
      }
    }
    prof.values[t] = acc;
  }

  size_t best = 0;
  for (size_t t = 1; t < T; ++t)
    if (prof.values[t] < prof.values[best]) best = t;
  if (prof.values[best].is_infinite())
    throw NoDominatingParameterError(
        "every parameter grid point has infinite weighted KL divergence for this measure");
  prof.argmin = best;
  const double mn = prof.values[best].value();
  prof.tolerance = tol >= 0.0 ? tol : 1e-8 * (1.0 + std::abs(mn));
  for (size_t t = 0; t < T; ++t)
    if (!prof.values[t].is_infinite() && prof.values[t].value() <= mn + prof.tolerance)
      prof.argmin_set.push_back(t);
  return prof;
}

}  // namespace berknash
