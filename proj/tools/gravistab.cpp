/// gravistab command-line interface.
///
///   gravistab model build --law king --uc 1 --out model/
///   gravistab check antonov --model model/ --report antonov.json
///   gravistab evolve --model model/ --n 100000 --t 20 --solver radial --perturb scale:0.01 --out run/
///   gravistab stability --model model/ --kind scale --eta 0.01 --out stab/
///
/// Exit codes: 0 pass, 2 check failure, 3 numerical blow-up, 64 usage.
/// `--config file` reads key=value lines mirroring the long flag names of
/// the selected command; flags given on the command line win.

#include <omp.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "checks.hpp"
#include "gravistab/dynamics.hpp"
#include "gravistab/equilibria.hpp"
#include "gravistab/io.hpp"

#ifndef GRAVISTAB_VERSION
#define GRAVISTAB_VERSION "0.0.0"
#endif

namespace {

using namespace gravistab;
namespace fs = std::filesystem;

constexpr int kExitPass = 0;
constexpr int kExitFail = 2;
constexpr int kExitBlowup = 3;
constexpr int kExitUsage = 64;

/// Key=value config lines as `--key=value` arguments.
std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--config", "expected key=value: " + line);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

/// Inserts config arguments after the leading command words so that later
/// command-line flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& argv) {
  std::vector<std::string> out;
  std::string config;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) {
      config = argv[++i];
    } else if (argv[i].rfind("--config=", 0) == 0) {
      config = argv[i].substr(9);
    } else {
      rest.push_back(argv[i]);
    }
  }
  if (config.empty()) return rest;
  std::size_t words = 0;
  while (words < rest.size() && !rest[words].empty() && rest[words][0] != '-') ++words;
  out.assign(rest.begin(), rest.begin() + std::ptrdiff_t(words));
  for (auto& a : config_arguments(config)) out.push_back(a);
  out.insert(out.end(), rest.begin() + std::ptrdiff_t(words), rest.end());
  return out;
}

/// Effective options of a command as key=value text (round-trips via --config).
std::string config_text(const CLI::App* cmd) {
  std::string out;
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (name.empty() || name == "help" || name == "dump-config" || opt->get_type_size() == 0) continue;
    std::string value;
    if (opt->count() > 0) value = opt->as<std::string>();
    else value = opt->get_default_str();
    if (value.empty()) continue;
    out += name + "=" + value + "\n";
  }
  return out;
}

struct Common {
  int threads = 0;
  std::string dump_config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "OpenMP threads (0: runtime default)")->capture_default_str();
  cmd->add_option("--dump-config", c.dump_config, "write the effective key=value config to a file");
}

void apply_common(const CLI::App* cmd, const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
  if (!c.dump_config.empty()) {
    std::ofstream out(c.dump_config);
    out << config_text(cmd);
  }
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  std::string law;
  double n = 1.0, cf = 1.0, uc = 1.0;
  std::size_t nodes = 4096;
  double rmax = 200.0;
  std::string out = "model";
  double tol = 1e-6, edge_tol = 1e-4;
};

int cmd_model_build(const BuildArgs& a) {
  AnsatzLaw law;
  if (a.law == "polytrope") law = AnsatzLaw::polytrope(a.n, a.cf);
  else if (a.law == "king") law = AnsatzLaw::king();
  else throw CLI::ValidationError("--law", "expected polytrope or king");
  EquilibriumModel m;
  try {
    m = build_equilibrium(law, a.uc, RadialGrid::uniform(a.nodes, a.rmax));
  } catch (const NonCompactSupport& e) {
    std::cerr << "non-compact support: " << e.what() << '\n';
    return kExitFail;
  }
  io::save_model(a.out, m);
  const ResidualReport r = equilibrium_residuals(m);
  const bool pass = r.self_consistency <= a.tol && r.edge <= a.edge_tol && r.poisson <= a.tol &&
                    r.exterior_matching <= a.tol;
  io::json rep = io::to_json(r);
  rep["tolerance"] = a.tol;
  rep["edge_tolerance"] = a.edge_tol;
  rep["verdict"] = pass ? "pass" : "fail";
  io::write_json(fs::path(a.out) / "residuals.json", rep);
  std::cout << "model " << law.name() << " u_c=" << a.uc << " R=" << io::format_double(m.R)
            << " M=" << io::format_double(m.M) << " E0=" << io::format_double(m.E0) << " residual "
            << (pass ? "pass" : "fail") << '\n';
  return pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string model;
  std::uint64_t seed = 42;
  std::string report;
};

int cmd_check(const std::string& name, const CheckArgs& a) {
  const EquilibriumModel m = io::load_model(a.model);
  const checks::CheckResult r = checks::run(name, m, a.seed);
  const fs::path out = a.report.empty() ? fs::path(a.model) / (name + ".json") : fs::path(a.report);
  io::write_json(out, r.report);
  std::cout << "check " << name << ' ' << (r.pass ? "pass" : "fail") << '\n';
  return r.pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string model;
  std::size_t n = 100000;
  double t = 20.0;       // in dynamical times
  double dt = 0.005;     // in dynamical times
  std::string solver = "radial";
  double eps = 0.0;      // 0: default softening
  std::string perturb = "none";
  std::string kind = "none";
  double eta = 0.0;
  std::uint64_t seed = 42;
  std::size_t cadence = 20;
  double factor = 5.0;
  double blowup = 0.5;
  bool csv = false;
  std::string out = "run";
};

Solver make_solver(const RunArgs& a, const EquilibriumModel& m) {
  Solver s;
  if (a.solver == "radial") s.kind = SolverKind::radial;
  else if (a.solver == "direct") {
    s.kind = SolverKind::direct;
    s.eps = a.eps > 0.0 ? a.eps : default_softening(m, a.n);
  } else {
    throw CLI::ValidationError("--solver", "expected radial or direct");
  }
  return s;
}

int cmd_evolve(const RunArgs& a) {
  const EquilibriumModel m = io::load_model(a.model);
  const Solver s = make_solver(a, m);
  std::string kind = a.perturb;
  double eta = 0.0;
  if (const auto colon = a.perturb.find(':'); colon != std::string::npos) {
    kind = a.perturb.substr(0, colon);
    eta = std::stod(a.perturb.substr(colon + 1));
  }
  const PerturbationKind pk = parse_perturbation(kind);
  const double td = dynamical_time(m);
  ParticleEnsemble e = sample_particles(m, a.n, a.seed);
  if (s.kind == SolverKind::direct) recenter(e);
  apply_perturbation(e, m, pk, eta);
  const fs::path out(a.out);
  io::write_snapshot(out / "initial.bin", e);
  EvolveOptions opt;
  opt.cadence = a.cadence;
  opt.lp_grid = coarse_phase_grid(m);
  const GriddedF f0 = bin_model(m, opt.lp_grid);
  opt.reference = &f0;
  opt.track_shift = s.kind == SolverKind::direct;
  opt.blowup_drift = a.blowup;
  const EvolveResult r = evolve(e, s, a.dt * td, a.t * td, opt);
  io::write_diagnostics_csv(out / "diagnostics.csv", r.records);
  io::write_snapshot(out / "final.bin", r.final_state);
  if (a.csv) io::write_snapshot_csv(out / "final.csv", r.final_state);
  const double H0 = r.records.front().H, H1 = r.records.back().H;
  std::cout << "evolve steps=" << r.steps << " t=" << io::format_double(r.records.back().t)
            << " relative_H_drift=" << io::format_double(std::abs(H1 - H0) / std::abs(H0)) << '\n';
  if (r.blew_up) {
    std::cerr << "blow-up: " << r.reason << '\n';
    return kExitBlowup;
  }
  return kExitPass;
}

int cmd_stability(const RunArgs& a) {
  const EquilibriumModel m = io::load_model(a.model);
  StabilityConfig c;
  c.kind = parse_perturbation(a.kind);
  c.eta = a.eta;
  c.N = a.n;
  const double td = dynamical_time(m);
  c.T = a.t * td;
  c.dt = a.dt * td;
  c.seed = a.seed;
  c.solver = make_solver(a, m);
  c.cadence = a.cadence;
  c.factor = a.factor;
  const StabilityResult r = stability_experiment(m, c);
  const fs::path out(a.out);
  io::write_diagnostics_csv(out / "diagnostics.csv", r.records);
  {
    std::ofstream f(out / "distance.csv");
    f << "t,dist,zx,zy,zz\n";
    for (std::size_t k = 0; k < r.times.size(); ++k)
      f << io::format_double(r.times[k]) << ',' << io::format_double(r.distance[k]) << ','
        << io::format_double(r.shift[k][0]) << ',' << io::format_double(r.shift[k][1]) << ','
        << io::format_double(r.shift[k][2]) << '\n';
  }
  const std::string verdict = r.bounded ? "bounded" : "unbounded";
  {
    std::ofstream f(out / "verdict.txt");
    f << verdict << '\n';
  }
  io::write_json(out / "stability.json",
                 {{"kind", perturbation_name(c.kind)},
                  {"eta", c.eta},
                  {"N", c.N},
                  {"initial_distance", r.initial_distance},
                  {"max_distance", r.max_distance},
                  {"factor", c.factor},
                  {"verdict", verdict},
                  {"proxies", {{"l1", r.proxies.l1}, {"dH", r.proxies.dH}, {"linf", r.proxies.linf}, {"hold", r.proxies.hold}}},
                  {"warnings", r.warnings}});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << verdict << '\n';
  if (r.blew_up) return kExitBlowup;
  return r.bounded ? kExitPass : kExitFail;
}

void add_run_options(CLI::App* cmd, RunArgs& a, bool stability) {
  cmd->add_option("--model", a.model, "model directory")->required();
  cmd->add_option("--n", a.n, "particle count")->capture_default_str();
  cmd->add_option("--t", a.t, "duration in dynamical times")->capture_default_str();
  cmd->add_option("--dt", a.dt, "step in dynamical times")->capture_default_str();
  cmd->add_option("--solver", a.solver, "radial or direct")->capture_default_str();
  cmd->add_option("--eps", a.eps, "softening for direct (0: R N^-1/3 / 10)")->capture_default_str();
  cmd->add_option("--seed", a.seed, "sampling seed")->capture_default_str();
  cmd->add_option("--cadence", a.cadence, "steps between records")->capture_default_str();
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
  if (stability) {
    cmd->add_option("--kind", a.kind, "none, scale, boost, reversal or kick")->capture_default_str();
    cmd->add_option("--eta", a.eta, "perturbation amplitude")->capture_default_str();
    cmd->add_option("--factor", a.factor, "bounded if max distance <= factor x initial")->capture_default_str();
  } else {
    cmd->add_option("--perturb", a.perturb, "kind:eta, e.g. scale:0.01")->capture_default_str();
    cmd->add_option("--blowup", a.blowup, "relative H change treated as blow-up")->capture_default_str();
    cmd->add_flag("--csv", a.csv, "also write the final snapshot as CSV");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Steady states, stability functionals and particle dynamics of the "
               "gravitational Vlasov-Poisson system",
               "gravistab"};
  app.set_version_flag("--version", std::string("gravistab ") + GRAVISTAB_VERSION);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  Common common;

  CLI::App* model = app.add_subcommand("model", "equilibrium models");
  model->require_subcommand(1);
  CLI::App* build = model->add_subcommand("build", "build an equilibrium and write its directory");
  BuildArgs ba;
  build->add_option("--law", ba.law, "polytrope or king")->required();
  build->add_option("--n", ba.n, "polytropic index")->capture_default_str();
  build->add_option("--cf", ba.cf, "polytropic amplitude C_F")->capture_default_str();
  build->add_option("--uc", ba.uc, "central depth u_c")->capture_default_str();
  build->add_option("--nodes", ba.nodes, "nodes of the build grid")->capture_default_str();
  build->add_option("--rmax", ba.rmax, "radius of the build grid")->capture_default_str();
  build->add_option("--tol", ba.tol, "residual tolerance")->capture_default_str();
  build->add_option("--edge-tol", ba.edge_tol, "residual tolerance in the outer 1%")->capture_default_str();
  build->add_option("--out", ba.out, "output directory")->capture_default_str();
  add_common(build, common);

  CLI::App* check = app.add_subcommand("check", "run a check suite on a model");
  check->require_subcommand(1);
  CheckArgs ca;
  std::vector<std::pair<std::string, CLI::App*>> check_cmds;
  for (const char* name : {"inequalities", "antonov", "coercivity", "rearrangement", "kernel"}) {
    CLI::App* c = check->add_subcommand(name, std::string(name) + " suite");
    c->add_option("--model", ca.model, "model directory")->required();
    c->add_option("--seed", ca.seed, "seed for random test fields")->capture_default_str();
    c->add_option("--report", ca.report, "JSON report path (default: <model>/<check>.json)");
    add_common(c, common);
    check_cmds.emplace_back(name, c);
  }

  RunArgs ea, sa;
  sa.out = "stability";
  CLI::App* evolve_cmd = app.add_subcommand("evolve", "evolve a sampled model");
  add_run_options(evolve_cmd, ea, false);
  add_common(evolve_cmd, common);
  CLI::App* stab_cmd = app.add_subcommand("stability", "orbital stability experiment");
  add_run_options(stab_cmd, sa, true);
  add_common(stab_cmd, common);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitPass : kExitUsage;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (build->parsed()) {
      apply_common(build, common);
      return cmd_model_build(ba);
    }
    for (auto& [name, c] : check_cmds)
      if (c->parsed()) {
        apply_common(c, common);
        return cmd_check(name, ca);
      }
    if (evolve_cmd->parsed()) {
      apply_common(evolve_cmd, common);
      return cmd_evolve(ea);
    }
    if (stab_cmd->parsed()) {
      apply_common(stab_cmd, common);
      return cmd_stability(sa);
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
