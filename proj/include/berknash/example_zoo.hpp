#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "berknash/discretize.hpp"
#include "berknash/errors.hpp"
#include "berknash/model.hpp"

namespace berknash {

// A ready-to-discretize instance of one of the five benchmark economies,
// with default grids that reproduce the closed-form quantities.
struct Example {
  std::string id;
  SMDPSpec spec;
  GridSpec grids;
  std::vector<std::pair<double, double>> level;  // default truncation box
  std::map<std::string, double> params;          // resolved constants
};

// Closed-form benchmark quantities for an example instance.
struct ExampleOracle {
  std::map<std::string, double> values;
  bool no_equilibrium = false;

  double at(const std::string& k) const {
    auto it = values.find(k);
    if (it == values.end()) throw ConfigError("oracle has no quantity '" + k + "'");
    return it->second;
  }
};

namespace detail {

inline double get_param(const std::map<std::string, double>& params, const std::string& key,
                        double def) {
  auto it = params.find(key);
  return it == params.end() ? def : it->second;
}

inline void reject_unknown(const std::map<std::string, double>& params,
                           const std::vector<std::string>& known) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const auto& kk : known)
      if (k == kk) ok = true;
    if (!ok) throw ConfigError("unknown example parameter '" + k + "'");
  }
}

// mean of the truncated exponential with rate theta on [0, b]
inline double trunc_exp_mean(double theta, double b) {
  if (!(theta > 0.0)) return 0.0;
  if (!std::isfinite(b)) return theta;
  const double r = b / theta;
  return theta * (1.0 - (r + 1.0) * std::exp(-r)) / (1.0 - std::exp(-r));
}

// normalizing constant K: 1 in the untruncated limit
inline double cost_K(double k) {
  if (!std::isfinite(k)) return 1.0;
  return (1.0 - std::exp(-k)) / (1.0 - k * (k + 1.0) * std::exp(-k));
}

}  // namespace detail

inline Example make_example(const std::string& id, std::map<std::string, double> params = {}) {
  Example ex;
  ex.id = id;

  if (id == "ar1") {
    detail::reject_unknown(params, {"a0", "b0", "delta", "radius", "states", "thetas_a", "thetas_b", "b_lo"});
    const double a0 = detail::get_param(params, "a0", 0.5);
    const double b0 = detail::get_param(params, "b0", 1.0);
    const double delta = detail::get_param(params, "delta", 0.95);
    const double radius = detail::get_param(params, "radius", 10.0);
    ex.params = {{"a0", a0}, {"b0", b0}, {"delta", delta}, {"radius", radius}};

    SMDPSpec s;
    s.state_axes = {{"s", -kInf, kInf, AxisSpacing::Uniform, 0.0}};
    s.action = {0.0, 0.0, false, 0.0, {0.0}};
    s.theta_box = {{0.0, 2.0}, {0.0, 1.0}};
    GaussianLinear1D tru;
    tru.m0 = Coef::lit(0.0);
    tru.a = Coef::lit(a0);
    tru.b = Coef::lit(b0);
    s.true_kernel.coords = {tru};
    GaussianLinear1D mod;
    mod.a = Coef::param(0);
    mod.b = Coef::param(1);
    s.model_family.coords = {mod};
    s.payoff.kind = PayoffKind::Constant;
    s.payoff.constant = 0.0;
    s.discount = delta;
    s.init = {{InitAxis::Kind::Gaussian, 0.0, 1.0, 0.0}};
    ex.spec = s;

    ex.grids.state_cells = {static_cast<size_t>(detail::get_param(params, "states", 401))};
    ex.grids.action_points = 1;
    ex.grids.theta_points = {static_cast<size_t>(detail::get_param(params, "thetas_a", 21)),
                             static_cast<size_t>(detail::get_param(params, "thetas_b", 10))};
    ex.grids.theta_lo_override = {std::nullopt, detail::get_param(params, "b_lo", 0.1)};
    ex.level = {{-radius, radius}};
    return ex;
  }

  if (id == "ar1-action") {
    detail::reject_unknown(params, {"a0", "b0", "c0", "delta", "radius", "states", "actions",
                                    "thetas_a", "thetas_b", "thetas_c", "b_lo"});
    const double a0 = detail::get_param(params, "a0", 0.5);
    const double b0 = detail::get_param(params, "b0", 1.0);
    const double c0 = detail::get_param(params, "c0", 1.0);
    const double delta = detail::get_param(params, "delta", 0.9);
    const double radius = detail::get_param(params, "radius", 8.0);
    ex.params = {{"a0", a0}, {"b0", b0}, {"c0", c0}, {"delta", delta}, {"radius", radius}};

    SMDPSpec s;
    s.state_axes = {{"s", -kInf, kInf, AxisSpacing::Uniform, 0.0}};
    s.action = {-1.0, 1.0, false, 0.0, {}};
    s.theta_box = {{0.0, 1.0}, {0.0, 1.0}, {-1.0, 1.0}};
    GaussianLinear1D tru;
    tru.a = Coef::lit(a0);
    tru.b = Coef::lit(b0);
    tru.c = Coef::lit(c0);
    s.true_kernel.coords = {tru};
    GaussianLinear1D mod;
    mod.a = Coef::param(0);
    mod.b = Coef::param(1);
    mod.c = Coef::param(2);
    s.model_family.coords = {mod};
    s.payoff.kind = PayoffKind::NextStateCoord;
    s.payoff.next_axis = 0;
    s.payoff.growth = GrowthClass::StateBounded;
    s.payoff.growth_A = 0.0;
    s.payoff.growth_B = 1.0;
    s.discount = delta;
    s.init = {{InitAxis::Kind::Gaussian, 0.0, 1.0, 0.0}};
    ex.spec = s;

    ex.grids.state_cells = {static_cast<size_t>(detail::get_param(params, "states", 161))};
    ex.grids.action_points = static_cast<size_t>(detail::get_param(params, "actions", 5));
    ex.grids.theta_points = {static_cast<size_t>(detail::get_param(params, "thetas_a", 11)),
                             static_cast<size_t>(detail::get_param(params, "thetas_b", 4)),
                             static_cast<size_t>(detail::get_param(params, "thetas_c", 5))};
    ex.grids.theta_lo_override = {std::nullopt, detail::get_param(params, "b_lo", 0.1), std::nullopt};
    ex.level = {{-radius, radius}};
    return ex;
  }

  if (id == "savings") {
    detail::reject_unknown(params, {"alpha", "beta", "gamma", "delta", "radius", "u_cells",
                                    "z_cells", "actions", "thetas", "beta_lo", "beta_hi", "x_eps"});
    // negative log-productivity keeps typical log-savings below zero, which
    // is the regime where the omitted taste correlation biases the fitted
    // persistence downward
    const double alpha = detail::get_param(params, "alpha", -1.0);
    const double beta = detail::get_param(params, "beta", 0.6);
    const double gamma = detail::get_param(params, "gamma", 0.5);
    const double delta = detail::get_param(params, "delta", 0.9);
    const double x_eps = detail::get_param(params, "x_eps", 1e-3);
    if (!(beta >= 0.0) || !(beta < 1.0))
      throw DomainError("savings requires 0 <= beta < 1 for stationarity");
    if (!(delta * beta < 1.0)) throw DomainError("savings requires delta*beta < 1");
    const double radius = detail::get_param(params, "radius", 10.0);
    ex.params = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"delta", delta},
                 {"radius", radius}, {"x_eps", x_eps}};

    // log-wealth u and the taste shock z; the wealth kernel is gaussian in u
    SMDPSpec s;
    s.state_axes = {{"u", -kInf, kInf, AxisSpacing::Uniform, 0.0},
                    {"z", 0.0, 1.0, AxisSpacing::Uniform, 0.0}};
    s.action = {0.01, 1.0 - x_eps, false, 0.0, {}};
    s.theta_box = {{detail::get_param(params, "beta_lo", 0.05),
                    detail::get_param(params, "beta_hi", 0.95)}};
    GaussianLinear1D tru;
    tru.m0 = Coef::lit(alpha);
    tru.a = Coef::lit(beta);
    tru.c = Coef::lit(beta);
    tru.act = ActTransform::Log;
    tru.other_axis = 1;
    tru.g = Coef::lit(gamma);
    tru.b = Coef::lit(1.0);
    GaussianLinear1D mod;
    mod.m0 = Coef::lit(alpha);
    mod.a = Coef::param(0);
    mod.c = Coef::param(0);
    mod.act = ActTransform::Log;
    mod.b = Coef::lit(1.0);
    Uniform1D zker{0.0, 1.0};
    s.true_kernel.coords = {tru, zker};
    s.model_family.coords = {mod, zker};
    s.payoff.kind = PayoffKind::LogConsumption;
    s.payoff.u_axis = 0;
    s.payoff.z_axis = 1;
    s.payoff.growth = GrowthClass::StateBounded;
    s.payoff.growth_A = std::abs(std::log(x_eps));
    s.payoff.growth_B = 1.0;
    s.discount = delta;
    // stationary log-wealth sits near alpha/(1-beta) + beta E[ln x]/(1-beta)
    const double u_center = (alpha + beta * std::log(0.5) + 0.5 * gamma) / (1.0 - beta);
    s.init = {{InitAxis::Kind::Gaussian, u_center, 1.0, 0.0}, {InitAxis::Kind::Uniform, 0, 0, 0}};
    ex.spec = s;

    ex.grids.state_cells = {static_cast<size_t>(detail::get_param(params, "u_cells", 73)),
                            static_cast<size_t>(detail::get_param(params, "z_cells", 11))};
    ex.grids.action_points = static_cast<size_t>(detail::get_param(params, "actions", 50));
    ex.grids.theta_points = {static_cast<size_t>(detail::get_param(params, "thetas", 19))};
    ex.level = {{u_center - radius, u_center + radius}, {0.0, 1.0}};
    return ex;
  }

  if (id == "cost" || id == "revenue") {
    detail::reject_unknown(params, {"theta_d", "b_star", "k", "delta", "c_max", "c_floor",
                                    "z_cells", "c_cells", "actions", "thetas", "x_lo"});
    const double theta_d = detail::get_param(params, "theta_d", 1.0);
    const double b_star = detail::get_param(params, "b_star", 6.0);
    const double k = detail::get_param(params, "k", kInf);
    const double delta = detail::get_param(params, "delta", 0.9);
    if (!(theta_d > 0.0) || !(b_star > 0.0))
      throw DomainError(id + " requires theta_d > 0 and b_star > 0");
    const double E = detail::trunc_exp_mean(theta_d, b_star);
    const double K = detail::cost_K(k);
    ex.params = {{"theta_d", theta_d}, {"b_star", b_star}, {"k", k}, {"delta", delta},
                 {"E_eps", E}, {"K", K}};

    const bool cost = id == "cost";
    const double x_hi =
        std::max(std::pow(E / 4.0, 2.0 / 3.0), std::pow(E / std::sqrt(K), 2.0 / 3.0)) + 1.0;
    const double c_max = detail::get_param(
        params, "c_max", cost ? std::ceil(x_hi * x_hi * b_star) : std::ceil(std::sqrt(x_hi) * b_star) + 3.0);

    SMDPSpec s;
    // the revenue block values small actions like 1/sqrt(x): a quadratic z
    // grid equidistributes that weight across cells, and the shock axis digs
    // its log floor deep enough to resolve the induced tiny scales
    s.state_axes = {{"z", 0.0, 1.0, cost ? AxisSpacing::Uniform : AxisSpacing::Quadratic, 0.0},
                    {"c", 0.0, c_max, AxisSpacing::LogZero,
                     detail::get_param(params, "c_floor", cost ? 1e-3 : 1e-6)}};
    const double x_lo = detail::get_param(params, "x_lo", cost ? 0.02 : 0.0);
    if (cost) {
      s.action = {x_lo, x_hi, false, 0.0, {}};
    } else {
      s.action = {0.0, x_hi, true, 1e-5, {}};  // log-spaced with a zero point
    }
    const double theta_hi = cost ? std::sqrt((K + 1.0) / 2.0) * E + 1.0 : 2.0 * K * E + 1.0;
    s.theta_box = {{0.0, theta_hi}};

    Uniform1D zker{0.0, 1.0};
    TruncExp1D tru;
    tru.theta = Coef::lit(theta_d);
    tru.support = b_star;
    tru.act_power = cost ? 2.0 : 0.5;  // c' = x^2 eps  /  r' = sqrt(x) eps
    TruncExp1D mod;
    mod.theta = Coef::param(0);
    mod.support = kInf;  // default: support spans the state box
    if (std::isfinite(k)) mod.support_k = k;
    mod.act_power = 1.0;  // believed c' = x eps / r' = x eps
    s.true_kernel.coords = {zker, tru};
    s.model_family.coords = {zker, mod};
    s.payoff.kind = cost ? PayoffKind::ProductionCost : PayoffKind::RevenueCost;
    s.payoff.next_axis = 1;
    s.payoff.z_axis = 0;
    s.discount = delta;
    s.init = {{InitAxis::Kind::Uniform, 0, 0, 0}, {InitAxis::Kind::Uniform, 0, 0, 0}};
    ex.spec = s;

    ex.grids.state_cells = {static_cast<size_t>(detail::get_param(params, "z_cells", cost ? 24 : 48)),
                            static_cast<size_t>(detail::get_param(params, "c_cells", 128))};
    ex.grids.action_points = static_cast<size_t>(detail::get_param(params, "actions", cost ? 40 : 80));
    ex.grids.theta_points = {static_cast<size_t>(detail::get_param(params, "thetas", 100))};
    ex.level = {{0.0, 1.0}, {0.0, c_max}};
    return ex;
  }

  throw ConfigError("unknown example id '" + id + "'");
}

// Closed-form quantities for the benchmark instance.
inline ExampleOracle oracle(const std::string& id, std::map<std::string, double> params = {}) {
  ExampleOracle o;
  if (id == "ar1" || id == "ar1-action") {
    const double a0 = detail::get_param(params, "a0", 0.5);
    const double b0 = detail::get_param(params, "b0", 1.0);
    if (a0 >= 1.0 && b0 > 0.0) {
      o.no_equilibrium = true;
      return o;
    }
    o.values["stationary_variance"] = b0 * b0 / (1.0 - a0 * a0);
    if (id == "ar1-action") {
      const double c0 = detail::get_param(params, "c0", 1.0);
      const double xs = c0 > 0.0 ? 1.0 : (c0 < 0.0 ? -1.0 : 0.0);
      o.values["x_star"] = xs;
      o.values["stationary_mean"] = c0 * xs / (1.0 - a0);
    }
    return o;
  }
  if (id == "savings") {
    const double delta = detail::get_param(params, "delta", 0.9);
    const double beta = detail::get_param(params, "beta", 0.6);
    o.values["beta_star"] = beta;
    if (params.count("z")) {
      const double z = params.at("z");
      const double db = delta * beta;
      o.values["A_z"] = 0.5 * db / ((1.0 - db) * z + 0.5 * db);
    }
    return o;
  }
  if (id == "cost" || id == "revenue") {
    const double theta_d = detail::get_param(params, "theta_d", 1.0);
    const double b_star = detail::get_param(params, "b_star", 6.0);
    const double k = detail::get_param(params, "k", kInf);
    const double E = detail::trunc_exp_mean(theta_d, b_star);
    const double K = detail::cost_K(k);
    o.values["E_eps"] = E;
    o.values["K"] = K;
    if (id == "cost") {
      const double ts = std::sqrt(0.5 * K * E);
      o.values["theta_star"] = ts;
      o.values["x_star_slope"] = K / ts;
    } else {
      const double ts = 2.0 * std::pow(K * E, 2.0 / 3.0);
      o.values["theta_star"] = ts;
      o.values["x_star_slope"] = ts / (2.0 * K);
    }
    return o;
  }
  throw ConfigError("unknown example id '" + id + "'");
}

}  // namespace berknash
