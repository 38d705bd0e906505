#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "berknash/errors.hpp"
#include "berknash/grid.hpp"

namespace berknash {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal CDF, tail-stable through erfc.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Mass of [lo, hi] under N(mu, sd^2), evaluated on the survival side of the
// mean so far-tail cells keep relative precision instead of cancelling to 0.
inline double normal_interval_mass(double lo, double hi, double mu, double sd) {
  if (!(hi > lo)) return 0.0;
  if (sd <= 0.0) return (mu >= lo && mu < hi) ? 1.0 : 0.0;
  const double rt2 = std::sqrt(2.0);
  const double zl = (lo - mu) / sd, zh = (hi - mu) / sd;
  if (zl >= 0.0) return 0.5 * (std::erfc(zl / rt2) - std::erfc(zh / rt2));
  if (zh <= 0.0) return 0.5 * (std::erfc(-zh / rt2) - std::erfc(-zl / rt2));
  return 1.0 - 0.5 * std::erfc(-zl / rt2) - 0.5 * std::erfc(zh / rt2);
}

// Mass of [lo, hi] under the truncated exponential with rate parameter
// theta on [0, support]; expm1 keeps tail differences from cancelling.
inline double trunc_exp_interval_mass(double lo, double hi, double theta, double support) {
  if (theta <= 0.0) return (lo <= 0.0 && hi > 0.0) ? 1.0 : 0.0;
  lo = std::max(lo, 0.0);
  if (std::isfinite(support)) hi = std::min(hi, support);
  if (!(hi > lo)) return 0.0;
  const double num = std::exp(-lo / theta) * (-std::expm1(-(hi - lo) / theta));
  const double den = std::isfinite(support) ? -std::expm1(-support / theta) : 1.0;
  return num / den;
}

// A kernel coefficient: a literal or a binding to one coordinate of theta.
struct Coef {
  double literal = 0.0;
  int param_index = -1;

  static Coef lit(double v) { return Coef{v, -1}; }
  static Coef param(int i) { return Coef{0.0, i}; }

  bool bound() const { return param_index >= 0; }

  double operator()(const std::vector<double>& theta) const {
    if (param_index < 0) return literal;
    if (static_cast<size_t>(param_index) >= theta.size())
      throw ConfigError("coefficient bound to param[" + std::to_string(param_index) +
                        "] but theta has " + std::to_string(theta.size()) + " coordinates");
    return theta[static_cast<size_t>(param_index)];
  }
};

enum class ActTransform { Identity, Log };

// s'_k ~ N(m0 + a*s_src + g*s_other + c*T(x), b^2).
struct GaussianLinear1D {
  Coef m0 = Coef::lit(0.0);
  Coef a = Coef::lit(0.0);
  Coef b = Coef::lit(1.0);
  Coef c = Coef::lit(0.0);
  Coef g = Coef::lit(0.0);
  int src_axis = 0;
  int other_axis = -1;
  ActTransform act = ActTransform::Identity;

  double mean(const std::vector<double>& s, double x, const std::vector<double>& th) const {
    double m = m0(th) + a(th) * s[static_cast<size_t>(src_axis)];
    if (other_axis >= 0) m += g(th) * s[static_cast<size_t>(other_axis)];
    const double cv = c(th);
    if (cv != 0.0) m += cv * (act == ActTransform::Log ? std::log(x) : x);
    return m;
  }
  double sd(const std::vector<double>& th) const { return b(th); }
};

// Observed coordinate = x^act_power * eps with eps ~ TruncExp(theta, support).
// act_power 0 makes the row action-free; x == 0 degenerates to a point mass
// at zero (an uninformative observation). A finite support_k ties the
// support bound to the rate as b = support_k * theta.
struct TruncExp1D {
  Coef theta = Coef::lit(1.0);
  double support = kInf;    // on eps; +inf = exponential (box renormalizes)
  double support_k = kInf;  // finite: support = support_k * theta
  double act_power = 0.0;

  double effective_support(double th) const {
    return std::isfinite(support_k) ? support_k * th : support;
  }

  // Effective scale multiplier for the observed value; 0 flags degeneracy.
  double multiplier(double x) const {
    if (act_power == 0.0) return 1.0;
    if (x <= 0.0) return 0.0;
    return std::pow(x, act_power);
  }
};

struct Uniform1D {
  double lo = 0.0, hi = 1.0;
};

struct PointMass1D {
  Coef at = Coef::lit(0.0);
};

// Explicit cell masses on fixed breakpoints; rows keyed by (theta index,
// source-axis cell, action index), each dependency optional. A theta-indexed
// table reads coordinate 0 of theta as the (integer) row block.
struct Tabulated1D {
  std::vector<double> edges;
  std::vector<std::vector<double>> rows;  // [key][cell]
  int dep_axis = -1;                      // state axis whose cell selects the row
  bool dep_action = false;
  bool dep_theta = false;
  size_t n_dep_state = 1;
  size_t n_actions = 1;

  size_t key(size_t s_cell, size_t x_idx, const std::vector<double>& theta) const {
    size_t k = 0;
    if (dep_theta) {
      if (theta.empty()) throw ConfigError("theta-indexed tabulated kernel queried without theta");
      k = static_cast<size_t>(std::llround(theta[0]));
    }
    if (dep_axis >= 0) k = k * n_dep_state + s_cell;
    if (dep_action) k = k * n_actions + x_idx;
    return k;
  }
};

using Kernel1D = std::variant<GaussianLinear1D, TruncExp1D, Uniform1D, PointMass1D, Tabulated1D>;

// A transition kernel over the product state space: one independent
// coordinate kernel per axis, each conditioned on the full (s, x).
struct KernelSpec {
  std::vector<Kernel1D> coords;
};

// Mass the 1-D coordinate kernel assigns to [lo, hi] at (s, x, theta).
// s carries continuous coordinate values; s_cells the grid cell indices
// (needed only by tabulated rows, pass empty otherwise).
inline double coord_interval_mass(const Kernel1D& k, double lo, double hi,
                                  const std::vector<double>& s, double x,
                                  const std::vector<double>& theta,
                                  const std::vector<size_t>& s_cells = {},
                                  size_t x_idx = 0) {
  if (std::holds_alternative<GaussianLinear1D>(k)) {
    const auto& g = std::get<GaussianLinear1D>(k);
    return normal_interval_mass(lo, hi, g.mean(s, x, theta), g.sd(theta));
  }
  if (std::holds_alternative<TruncExp1D>(k)) {
    const auto& t = std::get<TruncExp1D>(k);
    const double th = t.theta(theta);
    if (th < 0.0) throw DomainError("truncated-exponential rate must be >= 0");
    const double mult = t.multiplier(x);
    if (mult == 0.0 || th == 0.0) return (lo <= 0.0 && hi > 0.0) ? 1.0 : 0.0;
    return trunc_exp_interval_mass(lo / mult, hi / mult, th, t.effective_support(th));
  }
  if (std::holds_alternative<Uniform1D>(k)) {
    const auto& u = std::get<Uniform1D>(k);
    const double l = std::max(lo, u.lo), h = std::min(hi, u.hi);
    return h > l ? (h - l) / (u.hi - u.lo) : 0.0;
  }
  if (std::holds_alternative<PointMass1D>(k)) {
    const double at = std::get<PointMass1D>(k).at(theta);
    return (at >= lo && at < hi) ? 1.0 : 0.0;
  }
  const auto& tab = std::get<Tabulated1D>(k);
  // permit the half-open top-cell closure used by the grid builder
  if (lo < tab.edges.front() - 1e-12 || lo > tab.edges.back() + 1e-12)
    throw RangeError("tabulated kernel queried outside its grid");
  size_t s_cell = 0;
  if (tab.dep_axis >= 0) {
    if (s_cells.empty()) throw RangeError("tabulated kernel needs grid cell indices");
    s_cell = s_cells[static_cast<size_t>(tab.dep_axis)];
  }
  const size_t key = tab.key(s_cell, x_idx, theta);
  if (key >= tab.rows.size()) throw RangeError("tabulated kernel row out of range");
  const auto& row = tab.rows[key];
  double m = 0.0;
  for (size_t i = 0; i + 1 < tab.edges.size(); ++i) {
    const double a = std::max(lo, tab.edges[i]), b = std::min(hi, tab.edges[i + 1]);
    if (b > a) m += row[i] * (b - a) / (tab.edges[i + 1] - tab.edges[i]);
  }
  return m;
}

enum class PayoffKind { Constant, NextStateCoord, LogConsumption, ProductionCost, RevenueCost, Tabulated };

enum class GrowthClass { Bounded, StateBounded };

// Payoffs decompose as base(s, x) + coef(s, x) * s'_{axis}; every supported
// payoff kind fits this shape, which is what lets the finite solver avoid a
// dense |S| x |X| x |S| payoff tensor.
struct PayoffSpec {
  PayoffKind kind = PayoffKind::Constant;
  double constant = 0.0;
  size_t next_axis = 0;  // axis of the s' coordinate entering the payoff
  size_t u_axis = 0;     // LogConsumption: log-wealth axis
  size_t z_axis = 1;     // taste/productivity axis
  GrowthClass growth = GrowthClass::Bounded;
  double growth_A = 0.0, growth_B = 0.0;
  // Tabulated: dense tables indexed [s][x]
  std::vector<double> base_table, coef_table;
  size_t table_states = 0, table_actions = 0;

  double base(const std::vector<double>& s, double x, size_t s_flat = 0, size_t x_idx = 0) const {
    switch (kind) {
      case PayoffKind::Constant: return constant;
      case PayoffKind::NextStateCoord: return 0.0;
      case PayoffKind::LogConsumption: return s[z_axis] * (s[u_axis] + std::log1p(-x));
      case PayoffKind::ProductionCost: return s[z_axis] * std::log(x);
      case PayoffKind::RevenueCost: return -x * x;
      case PayoffKind::Tabulated: return base_table[s_flat * table_actions + x_idx];
    }
    return 0.0;
  }

  double coef(const std::vector<double>& s, double x, size_t s_flat = 0, size_t x_idx = 0) const {
    (void)x;
    switch (kind) {
      case PayoffKind::Constant: return 0.0;
      case PayoffKind::NextStateCoord: return 1.0;
      case PayoffKind::LogConsumption: return 0.0;
      case PayoffKind::ProductionCost: return -1.0;     // pi = z ln x - c'
      case PayoffKind::RevenueCost: return s[z_axis];   // pi = z r' - x^2
      case PayoffKind::Tabulated:
        return coef_table.empty() ? 0.0 : coef_table[s_flat * table_actions + x_idx];
    }
    return 0.0;
  }

  bool uses_next_state() const {
    switch (kind) {
      case PayoffKind::NextStateCoord:
      case PayoffKind::ProductionCost:
      case PayoffKind::RevenueCost: return true;
      case PayoffKind::Tabulated: return !coef_table.empty();
      default: return false;
    }
  }
};

enum class AxisSpacing { Uniform, LogZero, Quadratic };

// Declared (continuous) extent of one state coordinate.
struct StateAxisSpec {
  std::string name;
  double lo = -kInf, hi = kInf;  // +-inf marks an unbounded coordinate
  AxisSpacing spacing = AxisSpacing::Uniform;
  double log_floor = 1e-3;

  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

struct ActionDomainSpec {
  double lo = 0.0, hi = 0.0;
  bool log_spaced = false;
  double log_floor = 1e-4;
  std::vector<double> explicit_values;  // non-empty: finite label set
};

// Initial distribution, per axis.
struct InitAxis {
  enum class Kind { Uniform, Gaussian, Point } kind = Kind::Uniform;
  double mu = 0.0, sd = 1.0, at = 0.0;

  double interval_mass(double lo, double hi, double axis_lo, double axis_hi) const {
    switch (kind) {
      case Kind::Uniform: {
        const double l = std::max(lo, axis_lo), h = std::min(hi, axis_hi);
        return h > l ? (h - l) / (axis_hi - axis_lo) : 0.0;
      }
      case Kind::Gaussian: return normal_interval_mass(lo, hi, mu, sd);
      case Kind::Point: return (at >= lo && at < hi) ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

// Continuous SMDP declaration: every primitive of the decision problem plus
// the parameterized model family and the parameter box.
struct SMDPSpec {
  std::vector<StateAxisSpec> state_axes;
  ActionDomainSpec action;
  std::vector<std::pair<double, double>> theta_box;  // compact box in R^d
  KernelSpec true_kernel;
  KernelSpec model_family;
  PayoffSpec payoff;
  double discount = 0.0;
  std::vector<InitAxis> init;

  size_t state_dim() const { return state_axes.size(); }
  size_t theta_dim() const { return theta_box.size(); }

  void validate() const {
    if (!(discount >= 0.0) || !(discount < 1.0))
      throw DomainError("discount must lie in [0, 1)");
    if (state_axes.empty()) throw ConfigError("at least one state axis required");
    if (theta_box.empty()) throw ConfigError("parameter box must be non-empty");
    for (const auto& [lo, hi] : theta_box) {
      if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo))
        throw DomainError("parameter box must be a bounded closed box");
    }
    if (action.explicit_values.empty()) {
      if (!std::isfinite(action.lo) || !std::isfinite(action.hi) || action.hi < action.lo)
        throw DomainError("action domain must be bounded and closed");
    }
    if (true_kernel.coords.size() != state_axes.size() ||
        model_family.coords.size() != state_axes.size())
      throw ConfigError("kernel must declare one coordinate per state axis");
    for (const auto& k : true_kernel.coords) {
      if (std::holds_alternative<TruncExp1D>(k)) {
        const auto& t = std::get<TruncExp1D>(k);
        if (std::isfinite(t.support) && t.support <= 0.0)
          throw DomainError("truncated-exponential support bound must be > 0");
      }
    }
    if (!init.empty() && init.size() != state_axes.size())
      throw ConfigError("initial distribution must cover every state axis");
  }
};

// Mass of an axis-aligned box under the (true or model) kernel at (s, x).
// theta empty selects the true kernel.
inline double kernel_mass(const SMDPSpec& spec, const std::vector<double>& theta,
                          const std::vector<double>& s, double x,
                          const std::vector<std::pair<double, double>>& box) {
  const KernelSpec& k = theta.empty() ? spec.true_kernel : spec.model_family;
  if (box.size() != k.coords.size()) throw ShapeError("cell box dimension mismatch");
  double m = 1.0;
  for (size_t d = 0; d < k.coords.size(); ++d)
    m *= coord_interval_mass(k.coords[d], box[d].first, box[d].second, s, x, theta);
  return m;
}

}  // namespace berknash
