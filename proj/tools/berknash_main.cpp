// berknash: solve, verify and simulate misspecified Markov decision problems
// on finite grids. Subcommands: discretize, solve, verify, ladder, learn,
// example, lyapunov. Exit codes: 0 success, 1 error, 2 diagnostic
// (non-convergence, escaping mass, failed drift certificate).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "berknash/berknash.hpp"

namespace fs = std::filesystem;
using namespace berknash;

namespace {

struct CommonArgs {
  std::string model_path;
  std::string example_id;
  std::vector<std::string> params;
  std::string out_dir = ".";
  uint64_t seed = 1;
  std::string states;  // comma list of per-axis cell counts
  std::string thetas;  // comma list of per-dim point counts
  size_t actions = 0;
  double radius = 0.0;
  size_t levels = 0;
  double damping = -1.0;
  size_t max_outer = 0;
  size_t restarts = SIZE_MAX;
  std::string argv_line;
};

std::vector<size_t> parse_size_list(const std::string& s) {
  std::vector<size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<size_t>(std::stoul(tok)));
  return out;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return out;
}

// Resolve the problem declaration from --model or --example plus overrides.
struct Problem {
  SMDPSpec spec;
  GridSpec grids;
  std::vector<std::pair<double, double>> level;
  SolveOptions solve;
  double base_radius = 10.0;
  size_t ladder_levels = 4;
  std::map<std::string, double> example_params;
  std::string example_id;
};

Problem load_problem(const CommonArgs& a) {
  Problem p;
  if (!a.model_path.empty() && !a.example_id.empty())
    throw ConfigError("pass either --model or --example, not both");
  if (!a.model_path.empty()) {
    std::ifstream in(a.model_path);
    if (!in) throw ConfigError("cannot read model file '" + a.model_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    ModelDocument md = parse_model_document(buf.str());
    p.spec = md.spec;
    p.grids = md.grids;
    p.level = md.level;
    p.solve = md.solve;
    p.base_radius = md.base_radius;
    p.ladder_levels = md.ladder_levels;
  } else if (!a.example_id.empty()) {
    p.example_params = parse_params(a.params);
    Example ex = make_example(a.example_id, p.example_params);
    p.spec = ex.spec;
    p.grids = ex.grids;
    p.level = ex.level;
    p.example_id = a.example_id;
    if (ex.params.count("radius")) p.base_radius = ex.params.at("radius");
  } else {
    throw ConfigError("a problem is required: --model FILE or --example ID");
  }

  if (!a.states.empty()) {
    auto v = parse_size_list(a.states);
    if (v.size() != p.grids.state_cells.size())
      throw ConfigError("--states needs one count per state axis");
    p.grids.state_cells = v;
  }
  if (!a.thetas.empty()) {
    auto v = parse_size_list(a.thetas);
    if (v.size() != p.grids.theta_points.size())
      throw ConfigError("--thetas needs one count per parameter dimension");
    p.grids.theta_points = v;
  }
  if (a.actions > 0) p.grids.action_points = a.actions;
  if (a.radius > 0.0) {
    p.base_radius = a.radius;
    for (size_t ax = 0; ax < p.spec.state_axes.size(); ++ax)
      if (!p.spec.state_axes[ax].bounded())
        p.level[ax] = {std::max(p.spec.state_axes[ax].lo, -a.radius),
                       std::min(p.spec.state_axes[ax].hi, a.radius)};
  }
  if (a.levels > 0) p.ladder_levels = a.levels;
  if (a.damping > 0.0) p.solve.damping = a.damping;
  if (a.max_outer > 0) p.solve.max_outer = a.max_outer;
  if (a.restarts != SIZE_MAX) p.solve.restarts = a.restarts;
  p.solve.seed = a.seed;
  return p;
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_measure_csv(const fs::path& path, const CommonArgs& a, const FiniteSMDP& f,
                       const std::vector<double>& m) {
  ArtifactWriter w(path.string(), a.argv_line, a.seed);
  std::vector<std::string> cols;
  for (const auto& ax : f.states.axes) cols.push_back(ax.name);
  cols.push_back("action");
  cols.push_back("weight");
  w.columns(cols);
  for (size_t s = 0; s < f.n_states(); ++s) {
    const auto sc = f.states.center(s);
    for (size_t x = 0; x < f.n_actions(); ++x) {
      std::vector<double> row(sc);
      row.push_back(f.actions.values[x]);
      row.push_back(m[s * f.n_actions() + x]);
      w.row(row);
    }
  }
}

void write_belief_csv(const fs::path& path, const CommonArgs& a, const FiniteSMDP& f,
                      const std::vector<double>& nu) {
  ArtifactWriter w(path.string(), a.argv_line, a.seed);
  std::vector<std::string> cols;
  for (size_t d = 0; d < f.thetas.dims.size(); ++d) cols.push_back("theta" + std::to_string(d));
  cols.push_back("weight");
  w.columns(cols);
  for (size_t t = 0; t < f.n_thetas(); ++t) {
    auto row = f.thetas.point(t);
    row.push_back(nu[t]);
    w.row(row);
  }
}

void write_kl_csv(const fs::path& path, const CommonArgs& a, const FiniteSMDP& f,
                  const std::vector<double>& m) {
  ArtifactWriter w(path.string(), a.argv_line, a.seed);
  std::vector<std::string> cols;
  for (size_t d = 0; d < f.thetas.dims.size(); ++d) cols.push_back("theta" + std::to_string(d));
  cols.push_back("kl");
  w.columns(cols);
  for (size_t t = 0; t < f.n_thetas(); ++t) {
    auto row = f.thetas.point(t);
    row.push_back(weighted_kl(m, t, f).value());
    w.row(row);
  }
}

void write_solve_report(const fs::path& dir, const CommonArgs& a, const FiniteSMDP& f,
                        const EquilibriumReport& rep) {
  ArtifactWriter w((dir / "report.txt").string(), a.argv_line, a.seed);
  w.kv("converged", rep.converged ? "true" : "false");
  w.kv("optimality_gap", rep.optimality_gap);
  w.kv("belief_gap", rep.belief_gap);
  w.kv("stationarity_residual", rep.stationarity_residual);
  w.kv("iterations", static_cast<uint64_t>(rep.iterations));
  w.kv("restart_used", static_cast<uint64_t>(rep.restart_used));
  w.kv("states", static_cast<uint64_t>(f.n_states()));
  w.kv("actions", static_cast<uint64_t>(f.n_actions()));
  w.kv("thetas", static_cast<uint64_t>(f.n_thetas()));
  // belief summary: the heaviest parameter point
  size_t best = 0;
  for (size_t t = 1; t < rep.nu.size(); ++t)
    if (rep.nu[t] > rep.nu[best]) best = t;
  const auto tp = f.thetas.point(best);
  std::string ts;
  for (size_t d = 0; d < tp.size(); ++d) ts += (d ? "," : "") + fmt_double(tp[d]);
  w.kv("belief_mode", ts);
  w.kv("belief_mode_weight", rep.nu[best]);
  // state-marginal moments
  const auto ms = rep.m.marginal_state(f.n_states(), f.n_actions());
  if (f.states.axes.size() == 1) {
    double mean = 0.0, var = 0.0;
    for (size_t s = 0; s < f.n_states(); ++s) mean += ms[s] * f.states.axes[0].centers[s];
    for (size_t s = 0; s < f.n_states(); ++s) {
      const double d = f.states.axes[0].centers[s] - mean;
      var += ms[s] * d * d;
    }
    w.kv("state_mean", mean);
    w.kv("state_variance", var);
  }
}

int cmd_discretize(const CommonArgs& a) {
  Problem p = load_problem(a);
  const FiniteSMDP f = discretize_smdp(p.spec, p.level, p.grids);
  fs::create_directories(a.out_dir);

  {
    ArtifactWriter w((fs::path(a.out_dir) / "report.txt").string(), a.argv_line, a.seed);
    w.kv("states", static_cast<uint64_t>(f.n_states()));
    w.kv("actions", static_cast<uint64_t>(f.n_actions()));
    w.kv("thetas", static_cast<uint64_t>(f.n_thetas()));
    for (size_t ax = 0; ax < f.states.axes.size(); ++ax) {
      w.kv("axis" + std::to_string(ax) + "_name", f.states.axes[ax].name);
      w.kv("axis" + std::to_string(ax) + "_cells", static_cast<uint64_t>(f.states.axes[ax].size()));
      w.kv("axis" + std::to_string(ax) + "_lo", f.states.axes[ax].lo());
      w.kv("axis" + std::to_string(ax) + "_hi", f.states.axes[ax].hi());
    }
  }

  // per-axis true kernel slices
  for (size_t ax = 0; ax < f.axes_k.size(); ++ax) {
    const auto& ak = f.axes_k[ax];
    ArtifactWriter w((fs::path(a.out_dir) / ("true_axis" + std::to_string(ax) + ".csv")).string(),
                     a.argv_line, a.seed);
    std::vector<std::string> cols = {"key"};
    for (size_t c = 0; c < ak.n_cells; ++c) cols.push_back("c" + std::to_string(c));
    w.columns(cols);
    const size_t ks = ak.true_deps.keyspace(f.states, f.n_actions());
    for (size_t key = 0; key < ks; ++key) {
      std::vector<double> row = {static_cast<double>(key)};
      row.insert(row.end(), ak.true_rows.begin() + key * ak.n_cells,
                 ak.true_rows.begin() + (key + 1) * ak.n_cells);
      w.row(row);
    }
  }

  {
    ArtifactWriter w((fs::path(a.out_dir) / "q0.csv").string(), a.argv_line, a.seed);
    std::vector<std::string> cols;
    for (const auto& axx : f.states.axes) cols.push_back(axx.name);
    cols.push_back("mass");
    w.columns(cols);
    for (size_t s = 0; s < f.n_states(); ++s) {
      auto row = f.states.center(s);
      row.push_back(f.q0[s]);
      w.row(row);
    }
  }
  return 0;
}

int cmd_solve(const CommonArgs& a) {
  Problem p = load_problem(a);
  const FiniteSMDP f = discretize_smdp(p.spec, p.level, p.grids);
  const EquilibriumReport rep = solve_berk_nash(f, p.solve);
  fs::create_directories(a.out_dir);
  write_solve_report(a.out_dir, a, f, rep);
  write_measure_csv(fs::path(a.out_dir) / "m.csv", a, f, rep.m.weights);
  write_belief_csv(fs::path(a.out_dir) / "nu.csv", a, f, rep.nu);
  write_kl_csv(fs::path(a.out_dir) / "kl.csv", a, f, rep.m.weights);
  return rep.converged ? 0 : 2;
}

std::vector<double> read_weight_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::vector<double> out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto pos = line.find_last_of(',');
    out.push_back(std::stod(pos == std::string::npos ? line : line.substr(pos + 1)));
  }
  return out;
}

int cmd_verify(const CommonArgs& a, const std::string& m_path, const std::string& nu_path) {
  Problem p = load_problem(a);
  const FiniteSMDP f = discretize_smdp(p.spec, p.level, p.grids);
  JointMeasure m;
  m.weights = read_weight_column(m_path);
  std::vector<double> nu = read_weight_column(nu_path);
  if (m.weights.size() != f.n_states() * f.n_actions())
    throw ShapeError("m.csv rows do not match the grid (got " + std::to_string(m.weights.size()) +
                     ", expected " + std::to_string(f.n_states() * f.n_actions()) + ")");
  if (nu.size() != f.n_thetas())
    throw ShapeError("nu.csv rows do not match the parameter grid");
  const EquilibriumReport rep = verify_equilibrium(f, m, nu, p.solve);
  fs::create_directories(a.out_dir);
  write_solve_report(a.out_dir, a, f, rep);
  return rep.converged ? 0 : 2;
}

int cmd_ladder(const CommonArgs& a) {
  Problem p = load_problem(a);
  TruncationLadder lad = truncation_bounds(p.spec, p.ladder_levels, p.base_radius);

  LadderOptions lo;
  // per-unit density derived from the level-1 grid request
  double len = 0.0;
  size_t cells = 0;
  for (size_t ax = 0; ax < p.spec.state_axes.size(); ++ax) {
    if (p.spec.state_axes[ax].bounded()) {
      lo.bounded_axis_cells.push_back(p.grids.state_cells[ax]);
    } else {
      len = lad.levels[0][ax].second - lad.levels[0][ax].first;
      cells = p.grids.state_cells[ax];
    }
  }
  lo.cells_per_unit = len > 0.0 ? static_cast<double>(cells) / len : 10.0;
  lo.action_points = p.grids.action_points;
  lo.theta_points = p.grids.theta_points;
  lo.theta_lo_override = p.grids.theta_lo_override;
  lo.solve = p.solve;

  const LadderDiagnosis diag = ladder_diagnose(p.spec, lad, lo);
  fs::create_directories(a.out_dir);
  {
    ArtifactWriter w((fs::path(a.out_dir) / "report.txt").string(), a.argv_line, a.seed);
    w.kv("levels", static_cast<uint64_t>(diag.reports.size()));
    w.kv("witnessed_r_true", lad.witnessed_r_true);
    w.kv("witnessed_r_model", lad.witnessed_r_model);
    w.kv("flagged_model_rows", static_cast<uint64_t>(lad.flagged_model_rows));
    for (size_t i = 0; i < diag.reports.size(); ++i) {
      const std::string pfx = "level" + std::to_string(i + 1) + "_";
      w.kv(pfx + "boundary_mass", diag.boundary_mass[i]);
      w.kv(pfx + "converged", diag.reports[i].converged ? "true" : "false");
      w.kv(pfx + "optimality_gap", diag.reports[i].optimality_gap);
      w.kv(pfx + "stationarity_residual", diag.reports[i].stationarity_residual);
    }
    w.kv("verdict",
         diag.verdict == LadderVerdict::MassEscape ? "mass-escape" : "equilibrium-found");
  }
  return diag.verdict == LadderVerdict::MassEscape ? 2 : (diag.reports.back().converged ? 0 : 2);
}

int cmd_learn(const CommonArgs& a, size_t horizon, size_t resolve_every) {
  Problem p = load_problem(a);
  const FiniteSMDP f = discretize_smdp(p.spec, p.level, p.grids);
  LearnOptions lo;
  lo.horizon = horizon;
  lo.resolve_every = resolve_every;
  lo.seed = a.seed;
  const LearningTrace tr = simulate_learning(f, Belief::uniform(f.n_thetas()), lo);

  fs::create_directories(a.out_dir);
  {
    ArtifactWriter w((fs::path(a.out_dir) / "trace_history.csv").string(), a.argv_line, a.seed);
    w.columns({"k", "state", "action"});
    for (size_t k = 0; k < tr.states.size(); ++k)
      w.row({static_cast<double>(k), static_cast<double>(tr.states[k]),
             static_cast<double>(tr.actions[k])});
  }
  {
    ArtifactWriter w((fs::path(a.out_dir) / "trace_beliefs.csv").string(), a.argv_line, a.seed);
    std::vector<std::string> cols = {"k"};
    for (size_t t = 0; t < f.n_thetas(); ++t) cols.push_back("theta" + std::to_string(t));
    w.columns(cols);
    for (size_t i = 0; i < tr.checkpoints.size(); ++i) {
      std::vector<double> row = {static_cast<double>(tr.checkpoints[i])};
      row.insert(row.end(), tr.belief_at[i].begin(), tr.belief_at[i].end());
      w.row(row);
    }
  }
  {
    ArtifactWriter w((fs::path(a.out_dir) / "trace_freq.csv").string(), a.argv_line, a.seed);
    std::vector<std::string> cols = {"k", "cell", "weight"};
    w.columns(cols);
    for (size_t i = 0; i < tr.checkpoints.size(); ++i)
      for (size_t c = 0; c < tr.freq_at[i].size(); ++c)
        if (tr.freq_at[i][c] > 0.0)
          w.row({static_cast<double>(tr.checkpoints[i]), static_cast<double>(c), tr.freq_at[i][c]});
  }
  {
    ArtifactWriter w((fs::path(a.out_dir) / "report.txt").string(), a.argv_line, a.seed);
    w.kv("horizon", static_cast<uint64_t>(horizon));
    w.kv("checkpoints", static_cast<uint64_t>(tr.checkpoints.size()));
    const auto& last = tr.belief_at.back();
    size_t best = 0;
    for (size_t t = 1; t < last.size(); ++t)
      if (last[t] > last[best]) best = t;
    const auto tp = f.thetas.point(best);
    std::string ts;
    for (size_t d = 0; d < tp.size(); ++d) ts += (d ? "," : "") + fmt_double(tp[d]);
    w.kv("posterior_mode", ts);
    w.kv("posterior_mode_weight", last[best]);
  }
  return 0;
}

int cmd_example(const CommonArgs& a) {
  if (a.example_id.empty()) throw ConfigError("example subcommand requires --example ID");
  const auto params = parse_params(a.params);
  Example ex = make_example(a.example_id, params);
  const ExampleOracle orc = oracle(a.example_id, params);

  fs::create_directories(a.out_dir);
  {
    std::ofstream doc(fs::path(a.out_dir) / "model.txt");
    doc << "# berknash " << kVersion << "; argv: " << a.argv_line << "; seed: " << a.seed << "\n";
    doc << serialize_model_document(ex.spec, ex.grids, ex.level, a.seed);
  }
  {
    ArtifactWriter w((fs::path(a.out_dir) / "oracle.csv").string(), a.argv_line, a.seed);
    w.columns({"name", "value"});
    for (const auto& [k, v] : orc.values) w.raw(k + "," + fmt_double(v));
    if (orc.no_equilibrium) w.raw("no_equilibrium,1");
  }
  {
    ArtifactWriter w((fs::path(a.out_dir) / "report.txt").string(), a.argv_line, a.seed);
    w.kv("example", a.example_id);
    for (const auto& [k, v] : ex.params) w.kv(k, v);
  }
  return 0;
}

int cmd_lyapunov(const CommonArgs& a, double smax, size_t samples) {
  Problem p = load_problem(a);
  std::vector<std::vector<double>> states;
  const size_t n = samples % 2 == 0 ? samples + 1 : samples;  // include the origin
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> s(p.spec.state_axes.size(), 0.0);
    const double v = -smax + 2.0 * smax * static_cast<double>(i) / static_cast<double>(n - 1);
    for (size_t ax = 0; ax < s.size(); ++ax) {
      if (p.spec.state_axes[ax].bounded())
        s[ax] = 0.5 * (p.spec.state_axes[ax].lo + p.spec.state_axes[ax].hi);
      else
        s[ax] = v;
    }
    states.push_back(std::move(s));
  }
  std::vector<double> acts;
  if (!p.spec.action.explicit_values.empty()) acts = p.spec.action.explicit_values;
  else acts = ThetaGrid::linspace(p.spec.action.lo, p.spec.action.hi, 5);

  const LyapunovResult res = lyapunov_check(p.spec, LyapunovV::AbsNorm, states, acts);
  fs::create_directories(a.out_dir);
  {
    ArtifactWriter w((fs::path(a.out_dir) / "report.txt").string(), a.argv_line, a.seed);
    w.kv("alpha", res.alpha);
    w.kv("beta", res.beta);
    w.kv("pass", res.pass ? "true" : "false");
    w.kv("max_drift_ratio", res.max_drift_ratio);
    if (!res.pass && !res.witness_state.empty()) {
      std::string ws;
      for (size_t d = 0; d < res.witness_state.size(); ++d)
        ws += (d ? "," : "") + fmt_double(res.witness_state[d]);
      w.kv("witness_state", ws);
      w.kv("witness_action", res.witness_action);
    }
  }
  return res.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Berk-Nash equilibria of misspecified MDPs on finite grids"};
  app.require_subcommand(1);

  CommonArgs a;
  a.argv_line = join_argv(argc, argv);
  if (const char* env = std::getenv("BERKNASH_OUTDIR")) a.out_dir = env;

  auto add_common = [&](CLI::App* sub, bool needs_problem = true) {
    if (needs_problem) {
      sub->add_option("--model", a.model_path, "model document file");
      sub->add_option("--example", a.example_id, "built-in example id");
      sub->add_option("--param", a.params, "example parameter key=value");
      sub->add_option("--states", a.states, "per-axis state cell counts, comma separated");
      sub->add_option("--thetas", a.thetas, "per-dimension parameter grid counts");
      sub->add_option("--actions", a.actions, "action grid points");
      sub->add_option("--radius", a.radius, "truncation radius for unbounded axes");
      sub->add_option("--damping", a.damping, "best-response damping in (0,1]");
      sub->add_option("--max-outer", a.max_outer, "outer iteration cap");
      sub->add_option("--restarts", a.restarts, "extra randomized restarts");
    }
    sub->add_option("--out", a.out_dir, "output directory");
    sub->add_option("--seed", a.seed, "random seed recorded in artifacts");
  };

  auto* sc_disc = app.add_subcommand("discretize", "build and dump the finite problem");
  add_common(sc_disc);

  auto* sc_solve = app.add_subcommand("solve", "search for a Berk-Nash equilibrium");
  add_common(sc_solve);

  auto* sc_verify = app.add_subcommand("verify", "check a candidate (m, nu)");
  add_common(sc_verify);
  std::string m_path, nu_path;
  sc_verify->add_option("--m", m_path, "m.csv candidate measure")->required();
  sc_verify->add_option("--nu", nu_path, "nu.csv candidate belief")->required();

  auto* sc_ladder = app.add_subcommand("ladder", "diagnose existence across truncation levels");
  add_common(sc_ladder);
  sc_ladder->add_option("--levels", a.levels, "number of truncation levels");

  auto* sc_learn = app.add_subcommand("learn", "simulate the Bayesian learner");
  add_common(sc_learn);
  size_t horizon = 100000, resolve_every = 100;
  sc_learn->add_option("--horizon", horizon, "simulation length");
  sc_learn->add_option("--resolve-every", resolve_every, "Bellman refresh period");

  auto* sc_example = app.add_subcommand("example", "emit a built-in example and its oracle");
  add_common(sc_example);

  auto* sc_lyap = app.add_subcommand("lyapunov", "fit the drift certificate");
  add_common(sc_lyap);
  double smax = 20.0;
  size_t samples = 201;
  sc_lyap->add_option("--smax", smax, "largest |s| sampled");
  sc_lyap->add_option("--samples", samples, "number of sampled states");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_disc->parsed()) return cmd_discretize(a);
    if (sc_solve->parsed()) return cmd_solve(a);
    if (sc_verify->parsed()) return cmd_verify(a, m_path, nu_path);
    if (sc_ladder->parsed()) return cmd_ladder(a);
    if (sc_learn->parsed()) return cmd_learn(a, horizon, resolve_every);
    if (sc_example->parsed()) return cmd_example(a);
    if (sc_lyap->parsed()) return cmd_lyapunov(a, smax, samples);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
