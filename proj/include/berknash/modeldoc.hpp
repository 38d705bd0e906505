#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "berknash/csv.hpp"
#include "berknash/discretize.hpp"
#include "berknash/equilibrium.hpp"
#include "berknash/errors.hpp"
#include "berknash/model.hpp"

namespace berknash {

// Parsed model document: the continuous declaration plus grids, level box
// and solver options. Grammar is line-oriented `section.key = value` with
// sections {state, action, theta, kernel.true, kernel.model, payoff, solve};
// values are numbers, intervals [a,b], grids grid(lo,hi,n), value sets
// {a, b, ...}, bindings param[i], and bare words.
struct ModelDocument {
  SMDPSpec spec;
  GridSpec grids;
  std::vector<std::pair<double, double>> level;
  SolveOptions solve;
  size_t ladder_levels = 4;
  double base_radius = 10.0;
};

namespace doc {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct KeyValues {
  std::map<std::string, std::string> kv;
  std::map<std::string, bool> used;

  const std::string* find(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used[key] = true;
    return &it->second;
  }
};

inline KeyValues tokenize(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("model document line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("model document line " + std::to_string(lineno) + ": empty key or value");
    if (out.kv.count(key))
      throw ConfigError("model document: duplicate key '" + key + "'");
    out.kv[key] = val;
  }
  return out;
}

inline double parse_number(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf" || v == "unbounded") return kInf;
  if (v == "-inf") return -kInf;
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline std::pair<double, double> parse_interval(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError(key + ": expected an interval [a,b]");
  const std::string body = v.substr(1, v.size() - 2);
  const size_t comma = body.find(',');
  if (comma == std::string::npos) throw ConfigError(key + ": expected [a,b]");
  return {parse_number(key, trim(body.substr(0, comma))),
          parse_number(key, trim(body.substr(comma + 1)))};
}

struct GridValue {
  double lo, hi;
  size_t n;
};

inline GridValue parse_grid(const std::string& key, const std::string& v) {
  if (v.rfind("grid(", 0) != 0 || v.back() != ')')
    throw ConfigError(key + ": expected grid(lo,hi,n)");
  const std::string body = v.substr(5, v.size() - 6);
  std::vector<std::string> parts;
  std::string cur;
  for (char c : body) {
    if (c == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else
      cur += c;
  }
  parts.push_back(trim(cur));
  if (parts.size() != 3) throw ConfigError(key + ": expected grid(lo,hi,n)");
  GridValue g;
  g.lo = parse_number(key, parts[0]);
  g.hi = parse_number(key, parts[1]);
  g.n = static_cast<size_t>(parse_number(key, parts[2]));
  return g;
}

inline std::vector<double> parse_set(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '{' || v.back() != '}')
    throw ConfigError(key + ": expected a value set {a, b, ...}");
  std::vector<double> out;
  std::string cur;
  for (char c : v.substr(1, v.size() - 2)) {
    if (c == ',') {
      out.push_back(parse_number(key, trim(cur)));
      cur.clear();
    } else
      cur += c;
  }
  if (!trim(cur).empty()) out.push_back(parse_number(key, trim(cur)));
  if (out.empty()) throw ConfigError(key + ": empty value set");
  return out;
}

inline Coef parse_coef(const std::string& key, const std::string& v) {
  if (v.rfind("param[", 0) == 0 && v.back() == ']') {
    const std::string idx = v.substr(6, v.size() - 7);
    return Coef::param(static_cast<int>(parse_number(key, idx)));
  }
  return Coef::lit(parse_number(key, v));
}

inline Kernel1D parse_kernel_coord(KeyValues& kvs, const std::string& prefix, size_t axis) {
  const std::string* fam = kvs.find(prefix + ".family");
  if (!fam) throw ConfigError(prefix + ".family: missing");
  auto coef = [&](const std::string& name, double def) {
    const std::string* v = kvs.find(prefix + "." + name);
    return v ? parse_coef(prefix + "." + name, *v) : Coef::lit(def);
  };
  auto num = [&](const std::string& name, double def) {
    const std::string* v = kvs.find(prefix + "." + name);
    return v ? parse_number(prefix + "." + name, *v) : def;
  };
  if (*fam == "gaussian-linear") {
    GaussianLinear1D g;
    g.m0 = coef("m0", 0.0);
    g.a = coef("a", 0.0);
    g.b = coef("b", 1.0);
    g.c = coef("c", 0.0);
    g.g = coef("g", 0.0);
    g.src_axis = static_cast<int>(num("src_axis", static_cast<double>(axis)));
    g.other_axis = static_cast<int>(num("other_axis", -1.0));
    const std::string* act = kvs.find(prefix + ".act");
    g.act = (act && *act == "log") ? ActTransform::Log : ActTransform::Identity;
    return g;
  }
  if (*fam == "lognormal-linear") {
    // the declared axis carries the log of the level variable
    GaussianLinear1D g;
    g.m0 = coef("alpha", 0.0);
    g.a = coef("beta", 0.0);
    g.c = g.a;
    g.act = ActTransform::Log;
    g.b = coef("sd", 1.0);
    g.src_axis = static_cast<int>(axis);
    g.other_axis = static_cast<int>(num("other_axis", -1.0));
    g.g = coef("gamma", 0.0);
    return g;
  }
  if (*fam == "truncated-exponential") {
    TruncExp1D t;
    t.theta = coef("theta", 1.0);
    t.support = num("support", kInf);
    t.support_k = num("support_k", kInf);
    t.act_power = num("act_power", 0.0);
    return t;
  }
  if (*fam == "uniform") {
    Uniform1D u;
    u.lo = num("lo", 0.0);
    u.hi = num("hi", 1.0);
    return u;
  }
  if (*fam == "point") {
    PointMass1D p;
    p.at = coef("at", 0.0);
    return p;
  }
  if (*fam == "tabulated") {
    Tabulated1D t;
    const std::string* e = kvs.find(prefix + ".edges");
    if (!e) throw ConfigError(prefix + ".edges: missing for tabulated kernel");
    t.edges = parse_set(prefix + ".edges", *e);
    t.dep_axis = static_cast<int>(num("dep_axis", -1.0));
    t.dep_action = num("dep_action", 0.0) != 0.0;
    t.dep_theta = num("dep_theta", 0.0) != 0.0;
    t.n_dep_state = static_cast<size_t>(num("n_dep_state", 1.0));
    t.n_actions = static_cast<size_t>(num("n_actions", 1.0));
    for (size_t r = 0;; ++r) {
      const std::string* row = kvs.find(prefix + ".row" + std::to_string(r));
      if (!row) break;
      t.rows.push_back(parse_set(prefix + ".row", *row));
    }
    if (t.rows.empty()) throw ConfigError(prefix + ": tabulated kernel needs row0, row1, ...");
    return t;
  }
  throw ConfigError(prefix + ".family: unknown family '" + *fam + "'");
}

}  // namespace doc

inline ModelDocument parse_model_document(const std::string& text) {
  auto kvs = doc::tokenize(text);
  ModelDocument md;

  const std::string* dim_s = kvs.find("state.dim");
  if (!dim_s) throw ConfigError("state.dim: missing");
  const size_t dim = static_cast<size_t>(doc::parse_number("state.dim", *dim_s));
  if (dim < 1 || dim > 4) throw ConfigError("state.dim: must be in 1..4");

  for (size_t a = 0; a < dim; ++a) {
    const std::string p = "state.axis" + std::to_string(a);
    StateAxisSpec ax;
    if (const std::string* n = kvs.find(p + ".name")) ax.name = *n;
    else ax.name = "s" + std::to_string(a);
    const std::string* b = kvs.find(p + ".bounds");
    if (!b) throw ConfigError(p + ".bounds: missing");
    if (*b == "unbounded") {
      ax.lo = -kInf;
      ax.hi = kInf;
    } else {
      auto iv = doc::parse_interval(p + ".bounds", *b);
      ax.lo = iv.first;
      ax.hi = iv.second;
    }
    if (const std::string* sp = kvs.find(p + ".spacing")) {
      if (*sp == "log") ax.spacing = AxisSpacing::LogZero;
      else if (*sp == "quadratic") ax.spacing = AxisSpacing::Quadratic;
      else if (*sp == "uniform") ax.spacing = AxisSpacing::Uniform;
      else throw ConfigError(p + ".spacing: expected uniform | log | quadratic");
    }
    if (const std::string* lf = kvs.find(p + ".log_floor"))
      ax.log_floor = doc::parse_number(p + ".log_floor", *lf);
    md.spec.state_axes.push_back(ax);

    const std::string* cells = kvs.find(p + ".cells");
    md.grids.state_cells.push_back(cells ? static_cast<size_t>(doc::parse_number(p + ".cells", *cells)) : 64);

    InitAxis init;
    if (const std::string* iv = kvs.find(p + ".init")) {
      if (*iv == "uniform") init.kind = InitAxis::Kind::Uniform;
      else if (iv->rfind("gaussian(", 0) == 0 && iv->back() == ')') {
        init.kind = InitAxis::Kind::Gaussian;
        const auto g = doc::parse_interval(p + ".init", "[" + iv->substr(9, iv->size() - 10) + "]");
        init.mu = g.first;
        init.sd = g.second;
      } else if (iv->rfind("point(", 0) == 0 && iv->back() == ')') {
        init.kind = InitAxis::Kind::Point;
        init.at = doc::parse_number(p + ".init", iv->substr(6, iv->size() - 7));
      } else
        throw ConfigError(p + ".init: expected uniform | gaussian(mu,sd) | point(v)");
    }
    md.spec.init.push_back(init);
  }

  // action domain
  {
    const std::string* dom = kvs.find("action.domain");
    if (!dom) throw ConfigError("action.domain: missing");
    if (dom->front() == '{') {
      md.spec.action.explicit_values = doc::parse_set("action.domain", *dom);
      md.grids.action_points = md.spec.action.explicit_values.size();
    } else {
      auto iv = doc::parse_interval("action.domain", *dom);
      md.spec.action.lo = iv.first;
      md.spec.action.hi = iv.second;
      const std::string* pts = kvs.find("action.points");
      md.grids.action_points = pts ? static_cast<size_t>(doc::parse_number("action.points", *pts)) : 21;
      if (const std::string* sp = kvs.find("action.spacing"))
        md.spec.action.log_spaced = *sp == "log";
      if (const std::string* lf = kvs.find("action.log_floor"))
        md.spec.action.log_floor = doc::parse_number("action.log_floor", *lf);
    }
  }

  // theta grid
  {
    const std::string* dim_t = kvs.find("theta.dim");
    if (!dim_t) throw ConfigError("theta.dim: missing");
    const size_t td = static_cast<size_t>(doc::parse_number("theta.dim", *dim_t));
    for (size_t d = 0; d < td; ++d) {
      const std::string p = "theta.axis" + std::to_string(d);
      const std::string* g = kvs.find(p + ".grid");
      if (!g) throw ConfigError(p + ".grid: missing");
      const auto gv = doc::parse_grid(p + ".grid", *g);
      md.spec.theta_box.emplace_back(gv.lo, gv.hi);
      md.grids.theta_points.push_back(gv.n);
      md.grids.theta_lo_override.push_back(std::nullopt);
      md.grids.theta_hi_override.push_back(std::nullopt);
    }
  }

  for (size_t a = 0; a < dim; ++a) {
    md.spec.true_kernel.coords.push_back(
        doc::parse_kernel_coord(kvs, "kernel.true.axis" + std::to_string(a), a));
    // a missing model coordinate inherits the true one (a known axis)
    const std::string mp = "kernel.model.axis" + std::to_string(a);
    if (kvs.kv.count(mp + ".family"))
      md.spec.model_family.coords.push_back(doc::parse_kernel_coord(kvs, mp, a));
    else
      md.spec.model_family.coords.push_back(md.spec.true_kernel.coords.back());
  }

  // payoff
  {
    const std::string* kind = kvs.find("payoff.kind");
    if (!kind) throw ConfigError("payoff.kind: missing");
    auto num = [&](const std::string& k, double def) {
      const std::string* v = kvs.find(k);
      return v ? doc::parse_number(k, *v) : def;
    };
    if (*kind == "constant") {
      md.spec.payoff.kind = PayoffKind::Constant;
      md.spec.payoff.constant = num("payoff.value", 0.0);
    } else if (*kind == "next-state") {
      md.spec.payoff.kind = PayoffKind::NextStateCoord;
      md.spec.payoff.next_axis = static_cast<size_t>(num("payoff.next_axis", 0.0));
    } else if (*kind == "log-consumption") {
      md.spec.payoff.kind = PayoffKind::LogConsumption;
      md.spec.payoff.u_axis = static_cast<size_t>(num("payoff.u_axis", 0.0));
      md.spec.payoff.z_axis = static_cast<size_t>(num("payoff.z_axis", 1.0));
    } else if (*kind == "production-cost") {
      md.spec.payoff.kind = PayoffKind::ProductionCost;
      md.spec.payoff.next_axis = static_cast<size_t>(num("payoff.next_axis", 1.0));
      md.spec.payoff.z_axis = static_cast<size_t>(num("payoff.z_axis", 0.0));
    } else if (*kind == "revenue-cost") {
      md.spec.payoff.kind = PayoffKind::RevenueCost;
      md.spec.payoff.next_axis = static_cast<size_t>(num("payoff.next_axis", 1.0));
      md.spec.payoff.z_axis = static_cast<size_t>(num("payoff.z_axis", 0.0));
    } else
      throw ConfigError("payoff.kind: unknown kind '" + *kind + "'");
  }

  // solve section
  {
    auto num = [&](const std::string& k, double def) {
      const std::string* v = kvs.find(k);
      return v ? doc::parse_number(k, *v) : def;
    };
    md.spec.discount = num("solve.discount", 0.95);
    md.solve.seed = static_cast<uint64_t>(num("solve.seed", 1.0));
    md.solve.damping = num("solve.damping", md.solve.damping);
    md.solve.max_outer = static_cast<size_t>(num("solve.max_outer", static_cast<double>(md.solve.max_outer)));
    md.solve.restarts = static_cast<size_t>(num("solve.restarts", static_cast<double>(md.solve.restarts)));
    md.solve.tol_optimality = num("solve.tol_optimality", md.solve.tol_optimality);
    md.solve.tol_belief = num("solve.tol_belief", md.solve.tol_belief);
    md.solve.tol_stationarity = num("solve.tol_stationarity", md.solve.tol_stationarity);
    md.solve.tol_m_step = num("solve.tol_m_step", md.solve.tol_m_step);
    md.base_radius = num("solve.radius", 10.0);
    md.ladder_levels = static_cast<size_t>(num("solve.levels", 4.0));
  }

  // level box: explicit per-axis level, else bounds, else the base radius
  for (size_t a = 0; a < md.spec.state_axes.size(); ++a) {
    const auto& ax = md.spec.state_axes[a];
    if (const std::string* lv = kvs.find("state.axis" + std::to_string(a) + ".level")) {
      md.level.push_back(doc::parse_interval("state.axis" + std::to_string(a) + ".level", *lv));
    } else if (ax.bounded()) {
      md.level.emplace_back(ax.lo, ax.hi);
    } else {
      md.level.emplace_back(std::max(ax.lo, -md.base_radius), std::min(ax.hi, md.base_radius));
    }
  }

  for (const auto& [k, v] : kvs.kv)
    if (!kvs.used.count(k)) throw ConfigError("model document: unknown key '" + k + "'");

  md.spec.validate();
  return md;
}

// Emit the document for a declared spec + grids (the `example` subcommand's
// round-trip artifact).
inline std::string serialize_model_document(const SMDPSpec& spec, const GridSpec& grids,
                                            const std::vector<std::pair<double, double>>& level,
                                            uint64_t seed) {
  std::ostringstream o;
  auto coef = [](const Coef& c) {
    return c.bound() ? "param[" + std::to_string(c.param_index) + "]" : fmt_double(c.literal);
  };
  o << "state.dim = " << spec.state_axes.size() << "\n";
  for (size_t a = 0; a < spec.state_axes.size(); ++a) {
    const auto& ax = spec.state_axes[a];
    const std::string p = "state.axis" + std::to_string(a);
    o << p << ".name = " << ax.name << "\n";
    if (ax.bounded()) {
      o << p << ".bounds = [" << fmt_double(ax.lo) << ", " << fmt_double(ax.hi) << "]\n";
    } else {
      o << p << ".bounds = unbounded\n";
      o << p << ".level = [" << fmt_double(level[a].first) << ", " << fmt_double(level[a].second)
        << "]\n";
    }
    if (ax.spacing == AxisSpacing::LogZero) {
      o << p << ".spacing = log\n";
      o << p << ".log_floor = " << fmt_double(ax.log_floor) << "\n";
    } else if (ax.spacing == AxisSpacing::Quadratic) {
      o << p << ".spacing = quadratic\n";
    }
    o << p << ".cells = " << grids.state_cells[a] << "\n";
    if (a < spec.init.size()) {
      const auto& in = spec.init[a];
      if (in.kind == InitAxis::Kind::Gaussian)
        o << p << ".init = gaussian(" << fmt_double(in.mu) << ", " << fmt_double(in.sd) << ")\n";
      else if (in.kind == InitAxis::Kind::Point)
        o << p << ".init = point(" << fmt_double(in.at) << ")\n";
    }
  }
  if (!spec.action.explicit_values.empty()) {
    o << "action.domain = {";
    for (size_t i = 0; i < spec.action.explicit_values.size(); ++i)
      o << (i ? ", " : "") << fmt_double(spec.action.explicit_values[i]);
    o << "}\n";
  } else {
    o << "action.domain = [" << fmt_double(spec.action.lo) << ", " << fmt_double(spec.action.hi)
      << "]\n";
    o << "action.points = " << grids.action_points << "\n";
    if (spec.action.log_spaced) {
      o << "action.spacing = log\n";
      o << "action.log_floor = " << fmt_double(spec.action.log_floor) << "\n";
    }
  }
  o << "theta.dim = " << spec.theta_box.size() << "\n";
  for (size_t d = 0; d < spec.theta_box.size(); ++d) {
    double lo = spec.theta_box[d].first, hi = spec.theta_box[d].second;
    if (d < grids.theta_lo_override.size() && grids.theta_lo_override[d]) lo = *grids.theta_lo_override[d];
    if (d < grids.theta_hi_override.size() && grids.theta_hi_override[d]) hi = *grids.theta_hi_override[d];
    o << "theta.axis" << d << ".grid = grid(" << fmt_double(lo) << ", " << fmt_double(hi) << ", "
      << grids.theta_points[d] << ")\n";
  }
  auto emit_kernel = [&](const std::string& which, const KernelSpec& ks) {
    for (size_t a = 0; a < ks.coords.size(); ++a) {
      const std::string p = "kernel." + which + ".axis" + std::to_string(a);
      const auto& k = ks.coords[a];
      if (std::holds_alternative<GaussianLinear1D>(k)) {
        const auto& g = std::get<GaussianLinear1D>(k);
        o << p << ".family = gaussian-linear\n";
        o << p << ".m0 = " << coef(g.m0) << "\n";
        o << p << ".a = " << coef(g.a) << "\n";
        o << p << ".b = " << coef(g.b) << "\n";
        o << p << ".c = " << coef(g.c) << "\n";
        if (g.other_axis >= 0) {
          o << p << ".g = " << coef(g.g) << "\n";
          o << p << ".other_axis = " << g.other_axis << "\n";
        }
        if (g.src_axis != static_cast<int>(a)) o << p << ".src_axis = " << g.src_axis << "\n";
        if (g.act == ActTransform::Log) o << p << ".act = log\n";
      } else if (std::holds_alternative<TruncExp1D>(k)) {
        const auto& t = std::get<TruncExp1D>(k);
        o << p << ".family = truncated-exponential\n";
        o << p << ".theta = " << coef(t.theta) << "\n";
        if (std::isfinite(t.support)) o << p << ".support = " << fmt_double(t.support) << "\n";
        if (std::isfinite(t.support_k)) o << p << ".support_k = " << fmt_double(t.support_k) << "\n";
        if (t.act_power != 0.0) o << p << ".act_power = " << fmt_double(t.act_power) << "\n";
      } else if (std::holds_alternative<Uniform1D>(k)) {
        const auto& u = std::get<Uniform1D>(k);
        o << p << ".family = uniform\n";
        o << p << ".lo = " << fmt_double(u.lo) << "\n";
        o << p << ".hi = " << fmt_double(u.hi) << "\n";
      } else if (std::holds_alternative<PointMass1D>(k)) {
        o << p << ".family = point\n";
        o << p << ".at = " << coef(std::get<PointMass1D>(k).at) << "\n";
      }
    }
  };
  emit_kernel("true", spec.true_kernel);
  emit_kernel("model", spec.model_family);

  switch (spec.payoff.kind) {
    case PayoffKind::Constant:
      o << "payoff.kind = constant\npayoff.value = " << fmt_double(spec.payoff.constant) << "\n";
      break;
    case PayoffKind::NextStateCoord:
      o << "payoff.kind = next-state\npayoff.next_axis = " << spec.payoff.next_axis << "\n";
      break;
    case PayoffKind::LogConsumption:
      o << "payoff.kind = log-consumption\npayoff.u_axis = " << spec.payoff.u_axis
        << "\npayoff.z_axis = " << spec.payoff.z_axis << "\n";
      break;
    case PayoffKind::ProductionCost:
      o << "payoff.kind = production-cost\npayoff.next_axis = " << spec.payoff.next_axis
        << "\npayoff.z_axis = " << spec.payoff.z_axis << "\n";
      break;
    case PayoffKind::RevenueCost:
      o << "payoff.kind = revenue-cost\npayoff.next_axis = " << spec.payoff.next_axis
        << "\npayoff.z_axis = " << spec.payoff.z_axis << "\n";
      break;
    case PayoffKind::Tabulated:
      throw ConfigError("tabulated payoffs have no document form");
  }
  o << "solve.discount = " << fmt_double(spec.discount) << "\n";
  o << "solve.seed = " << seed << "\n";
  // unbounded axes record the level box through the radius
  double radius = 0.0;
  for (size_t a = 0; a < spec.state_axes.size(); ++a)
    if (!spec.state_axes[a].bounded())
      radius = std::max(radius, std::max(std::abs(level[a].first), std::abs(level[a].second)));
  if (radius > 0.0) o << "solve.radius = " << fmt_double(radius) << "\n";
  return o.str();
}

}  // namespace berknash
