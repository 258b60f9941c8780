#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gravistab/io.hpp"

using namespace gravistab;
namespace fs = std::filesystem;

namespace {
const EquilibriumModel& king1() {
  static const EquilibriumModel m = build_equilibrium(AnsatzLaw::king(), 1.0, RadialGrid::uniform(2048, 200.0));
  return m;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gravistab_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("format_double round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0, 0.0})
    CHECK(std::stod(io::format_double(x)) == x);
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("profile csv round trip") {
  const fs::path d = scratch_dir("profile");
  const RadialGrid g = RadialGrid::uniform(40, 2.0);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::exp(-g[i]) / 3.0;
  const RadialProfile p(g, v, Extrapolation::inverse_r2);
  io::write_profile_csv(d / "p.csv", p);
  const RadialProfile q = io::read_profile_csv(d / "p.csv");
  CHECK(q.values() == p.values());
  CHECK(q.grid().nodes() == p.grid().nodes());
  CHECK(q.extrapolation() == Extrapolation::inverse_r2);
  CHECK(slurp(d / "p.csv").rfind("r,value\n", 0) == 0);
}

TEST_CASE("laws and models round trip") {
  for (const AnsatzLaw& law : {AnsatzLaw::king(), AnsatzLaw::polytrope(1.5, 0.3)}) {
    const AnsatzLaw back = io::law_from_json(io::law_to_json(law));
    CHECK(back.kind == law.kind);
    CHECK(back.n == law.n);
    CHECK(back.C_F == law.C_F);
  }
  const AnsatzLaw tab = AnsatzLaw::tabulated(MonotoneMap({0.0, 0.5, 1.0}, {0.0, 0.2, 1.0}, Direction::increasing));
  const AnsatzLaw tb = io::law_from_json(io::law_to_json(tab));
  CHECK(tb.F_depth(0.7) == tab.F_depth(0.7));

  const fs::path d = scratch_dir("model");
  io::save_model(d, king1());
  const EquilibriumModel m = io::load_model(d);
  CHECK(m.M == doctest::Approx(king1().M).epsilon(1e-12));
  CHECK(m.R == doctest::Approx(king1().R).epsilon(1e-12));
  for (const char* f : {"model.json", "phi.csv", "rho.csv", "dphi.csv"}) CHECK(fs::exists(d / f));

  io::json j = io::read_json(d / "model.json");
  j["M"] = j["M"].get<double>() * 1.01;
  io::write_json(d / "model.json", j);
  CHECK_THROWS_AS(io::load_model(d), std::runtime_error);
}

TEST_CASE("snapshot binary layout and round trip") {
  const fs::path d = scratch_dir("snapshot");
  ParticleEnsemble e = sample_particles(king1(), 100, 1);
  e.t = 1.25;
  io::write_snapshot(d / "s.bin", e);
  CHECK(fs::file_size(d / "s.bin") == 8 * (3 + 7 * 100));
  const ParticleEnsemble f = io::read_snapshot(d / "s.bin");
  CHECK(f.x == e.x);
  CHECK(f.v == e.v);
  CHECK(f.w == e.w);
  CHECK(f.t == e.t);
  // header layout: u64 N then f64 t
  const std::string raw = slurp(d / "s.bin");
  std::uint64_t N = 0;
  double t = 0.0;
  std::memcpy(&N, raw.data(), 8);
  std::memcpy(&t, raw.data() + 8, 8);
  CHECK(N == 100);
  CHECK(t == 1.25);
  io::write_snapshot_csv(d / "s.csv", e);
  CHECK(slurp(d / "s.csv").rfind("x,y,z,vx,vy,vz,w\n", 0) == 0);
}

TEST_CASE("grid binary round trip") {
  const fs::path d = scratch_dir("grid");
  const GriddedF f = box_distribution(0.4, 1.0, 0.1, 0.7);
  io::write_grid(d / "g.bin", io::to_grid_data(f));
  const GriddedF h = io::gridded_from_data(io::read_grid(d / "g.bin"));
  CHECK(h.values == f.values);
  CHECK(h.grid.r_edges == f.grid.r_edges);
  CHECK(h.grid.w_edges == f.grid.w_edges);
  CHECK(h.grid.c_edges == f.grid.c_edges);
  const io::GridData g = io::read_grid(d / "g.bin");
  CHECK(g.dims.size() == 3);
  CHECK(g.values.size() == g.dims[0] * g.dims[1] * g.dims[2]);
}

TEST_CASE("diagnostics csv round trip") {
  const fs::path d = scratch_dir("diag");
  std::vector<DiagnosticsRecord> rs(3);
  for (int k = 0; k < 3; ++k) {
    rs[k].t = 0.1 * k;
    rs[k].H = -1.0 / 3.0 + k;
    rs[k].H_cin = 0.2;
    rs[k].H_pot = 0.7;
    rs[k].mass = 10.5;
    rs[k].l1 = 1.0 / 7.0;
    rs[k].l2 = 2.0;
    rs[k].linf = std::numeric_limits<double>::min();
    rs[k].dist = 0.01 * k;
  }
  io::write_diagnostics_csv(d / "d.csv", rs);
  const auto back = io::read_diagnostics_csv(d / "d.csv");
  REQUIRE(back.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(back[k].t == rs[k].t);
    CHECK(back[k].H == rs[k].H);
    CHECK(back[k].l1 == rs[k].l1);
    CHECK(back[k].linf == rs[k].linf);
    CHECK(back[k].dist == rs[k].dist);
  }
  CHECK(slurp(d / "d.csv").rfind("t,H,Hcin,Hpot,mass,l1,l2,linf,dist\n", 0) == 0);
}

TEST_CASE("report json") {
  const io::json c = io::coercivity_report("form", -1e-9, 1e-6);
  CHECK(c["verdict"] == "pass");
  CHECK(io::coercivity_report("form", -1e-3, 1e-6)["verdict"] == "fail");
  CHECK_THROWS(io::coercivity_report("form", 1.0, 0.0));
  EnergyReport r;
  r.mass = 2.0;
  r.lp_norms = {{1.0, 2.0}, {2.0, 1.5}, {std::numeric_limits<double>::infinity(), 0.9}};
  const io::json j = io::to_json(r);
  CHECK(j["lp_norms"]["inf"] == 0.9);
  CHECK(j["lp_norms"]["1"] == 2.0);
  const io::json res = io::to_json(equilibrium_residuals(king1()));
  CHECK(res.contains("self_consistency"));
}
