#include "gravistab/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gravistab::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated binary file");
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double))))
    throw std::runtime_error("truncated binary file");
  return v;
}

/// Reads a CSV with a header line into columns; checks the header text.
std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  const std::size_t cols = std::count(header.begin(), header.end(), ',') + 1;
  std::vector<std::vector<double>> out(cols);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols) throw std::runtime_error(path.string() + ": too many columns");
      out[c++].push_back(std::stod(cell));
    }
    if (c != cols) throw std::runtime_error(path.string() + ": too few columns");
  }
  return out;
}

void check_close(const char* name, double stored, double rebuilt) {
  if (std::abs(stored - rebuilt) > 1e-9 * std::max(1.0, std::abs(stored)))
    throw std::runtime_error(std::string("model reload: ") + name + " mismatch (" +
                             format_double(stored) + " vs " + format_double(rebuilt) + ")");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

void write_profile_csv(const fs::path& path, const RadialProfile& p) {
  std::ofstream out = open_out(path);
  out << "r,value\n";
  const auto& r = p.grid().nodes();
  for (std::size_t i = 0; i < r.size(); ++i)
    out << format_double(r[i]) << ',' << format_double(p.values()[i]) << '\n';
  write_json(fs::path(path.string() + ".json"), json{{"extrapolation", to_string(p.extrapolation())}});
}

RadialProfile read_profile_csv(const fs::path& path) {
  const auto cols = read_csv(path, "r,value");
  const json side = read_json(fs::path(path.string() + ".json"));
  return RadialProfile(RadialGrid(cols[0]), cols[1],
                       extrapolation_from_string(side.at("extrapolation").get<std::string>()));
}

json law_to_json(const AnsatzLaw& law) {
  switch (law.kind) {
    case LawKind::polytrope: return {{"kind", "polytrope"}, {"n", law.n}, {"C_F", law.C_F}};
    case LawKind::king: return {{"kind", "king"}};
    case LawKind::tabulated:
      return {{"kind", "tabulated"},
              {"depth", law.table->breakpoints()},
              {"F", law.table->values()}};
  }
  throw std::invalid_argument("unknown law");
}

AnsatzLaw law_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "polytrope") return AnsatzLaw::polytrope(j.at("n").get<double>(), j.at("C_F").get<double>());
  if (kind == "king") return AnsatzLaw::king();
  if (kind == "tabulated")
    return AnsatzLaw::tabulated(MonotoneMap(j.at("depth").get<std::vector<double>>(),
                                            j.at("F").get<std::vector<double>>(), Direction::increasing));
  throw std::invalid_argument("unknown law kind '" + kind + "'");
}

void save_model(const fs::path& dir, const EquilibriumModel& model) {
  fs::create_directories(dir);
  const json j = {{"law", law_to_json(model.law)},
                  {"u_c", model.u_c},
                  {"E0", model.E0},
                  {"M", model.M},
                  {"R", model.R},
                  {"phi_c", model.phi_c},
                  {"grid_ref", {{"kind", "uniform"}, {"nodes", model.search_nodes}, {"r_max", model.search_radius}}}};
  write_json(dir / "model.json", j);
  write_profile_csv(dir / "phi.csv", model.phi);
  write_profile_csv(dir / "rho.csv", model.rho);
  write_profile_csv(dir / "dphi.csv", model.dphi);
}

EquilibriumModel load_model(const fs::path& dir) {
  const json j = read_json(dir / "model.json");
  const json& g = j.at("grid_ref");
  EquilibriumModel m = build_equilibrium(
      law_from_json(j.at("law")), j.at("u_c").get<double>(),
      RadialGrid::uniform(g.at("nodes").get<std::size_t>(), g.at("r_max").get<double>()));
  check_close("E0", j.at("E0").get<double>(), m.E0);
  check_close("M", j.at("M").get<double>(), m.M);
  check_close("R", j.at("R").get<double>(), m.R);
  return m;
}

json to_json(const EnergyReport& r) {
  json norms = json::object();
  for (const auto& [p, v] : r.lp_norms) norms[std::isinf(p) ? std::string("inf") : format_double(p)] = v;
  return {{"H_cin", r.H_cin}, {"H_pot", r.H_pot}, {"H", r.H}, {"mass", r.mass}, {"lp_norms", norms}};
}

json to_json(const ResidualReport& r) {
  return {{"self_consistency", r.self_consistency},
          {"edge", r.edge},
          {"poisson", r.poisson},
          {"exterior_matching", r.exterior_matching}};
}

void write_diagnostics_csv(const fs::path& path, const std::vector<DiagnosticsRecord>& records) {
  std::ofstream out = open_out(path);
  out << "t,H,Hcin,Hpot,mass,l1,l2,linf,dist\n";
  for (const DiagnosticsRecord& d : records) {
    for (double v : {d.t, d.H, d.H_cin, d.H_pot, d.mass, d.l1, d.l2, d.linf}) out << format_double(v) << ',';
    out << format_double(d.dist) << '\n';
  }
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(const fs::path& path) {
  const auto c = read_csv(path, "t,H,Hcin,Hpot,mass,l1,l2,linf,dist");
  std::vector<DiagnosticsRecord> out(c[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    DiagnosticsRecord& d = out[i];
    d.t = c[0][i];
    d.H = c[1][i];
    d.H_cin = c[2][i];
    d.H_pot = c[3][i];
    d.mass = c[4][i];
    d.l1 = c[5][i];
    d.l2 = c[6][i];
    d.linf = c[7][i];
    d.dist = c[8][i];
  }
  return out;
}

void write_level_profile_csv(const fs::path& path, const LevelProfile& levels) {
  std::ofstream out = open_out(path);
  out << "s,volume\n";
  const auto& s = levels.volume.breakpoints();
  for (std::size_t i = 0; i < s.size(); ++i)
    out << format_double(s[i]) << ',' << format_double(levels.volume.values()[i]) << '\n';
}

void write_grid(const fs::path& path, const GridData& g) {
  std::size_t total = 1;
  for (auto d : g.dims) total *= d;
  if (g.extents.size() != 2 * g.dims.size() || g.coords.size() != g.dims.size() || g.values.size() != total)
    throw std::invalid_argument("write_grid: inconsistent grid data");
  std::ofstream out = open_out(path, true);
  put<std::uint64_t>(out, g.dims.size());
  for (auto d : g.dims) put<std::uint64_t>(out, d);
  put_doubles(out, g.extents);
  for (const auto& c : g.coords) {
    put<std::uint64_t>(out, c.size());
    put_doubles(out, c);
  }
  put_doubles(out, g.values);
}

GridData read_grid(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  GridData g;
  const auto rank = get<std::uint64_t>(in);
  if (rank == 0 || rank > 8) throw std::runtime_error("read_grid: bad rank");
  std::size_t total = 1;
  for (std::uint64_t k = 0; k < rank; ++k) {
    g.dims.push_back(get<std::uint64_t>(in));
    total *= g.dims.back();
  }
  g.extents = get_doubles(in, 2 * rank);
  for (std::uint64_t k = 0; k < rank; ++k) g.coords.push_back(get_doubles(in, get<std::uint64_t>(in)));
  g.values = get_doubles(in, total);
  return g;
}

GridData to_grid_data(const GriddedF& f) {
  const PhaseGrid& p = f.grid;
  GridData g;
  g.dims = {p.nr(), p.nw(), p.nc()};
  g.coords = {p.r_edges, p.w_edges, p.c_edges};
  for (const auto& c : g.coords) {
    g.extents.push_back(c.front());
    g.extents.push_back(c.back());
  }
  g.values = f.values;
  return g;
}

GriddedF gridded_from_data(const GridData& g) {
  if (g.dims.size() != 3) throw std::runtime_error("gridded_from_data: rank 3 expected");
  GriddedF f;
  f.grid.r_edges = g.coords[0];
  f.grid.w_edges = g.coords[1];
  f.grid.c_edges = g.coords[2];
  f.grid.validate();
  if (f.grid.nr() != g.dims[0] || f.grid.nw() != g.dims[1] || f.grid.nc() != g.dims[2])
    throw std::runtime_error("gridded_from_data: edges do not match dims");
  f.values = g.values;
  return f;
}

GridData to_grid_data(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  GridData g;
  g.dims = {m.ns(), m.nt(), m.nc()};
  g.extents = {0.0, 1.0, 0.0, std::numbers::pi / 2.0, -1.0, 1.0};
  g.coords = {m.s, m.theta, m.c};
  g.values = h.values;
  return g;
}

void write_snapshot(const fs::path& path, const ParticleEnsemble& e) {
  std::ofstream out = open_out(path, true);
  put<std::uint64_t>(out, e.size());
  put<double>(out, e.t);
  put<double>(out, e.mass());
  for (const auto& x : e.x) put_doubles(out, {x[0], x[1], x[2]});
  for (const auto& v : e.v) put_doubles(out, {v[0], v[1], v[2]});
  put_doubles(out, e.w);
}

ParticleEnsemble read_snapshot(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  ParticleEnsemble e;
  const auto N = get<std::uint64_t>(in);
  e.t = get<double>(in);
  const double M = get<double>(in);
  const std::vector<double> x = get_doubles(in, 3 * N), v = get_doubles(in, 3 * N);
  e.w = get_doubles(in, N);
  e.x.resize(N);
  e.v.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    e.x[i] = {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
    e.v[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
  }
  if (e.mass() != M) throw std::runtime_error("read_snapshot: mass header mismatch");
  return e;
}

void write_snapshot_csv(const fs::path& path, const ParticleEnsemble& e) {
  std::ofstream out = open_out(path);
  out << "x,y,z,vx,vy,vz,w\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int k = 0; k < 3; ++k) out << format_double(e.x[i][k]) << ',';
    for (int k = 0; k < 3; ++k) out << format_double(e.v[i][k]) << ',';
    out << format_double(e.w[i]) << '\n';
  }
}

json coercivity_report(const std::string& form, double value, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("coercivity_report: tolerance must be positive");
  return {{"form", form}, {"value", value}, {"tolerance", tolerance},
          {"verdict", value >= -tolerance ? "pass" : "fail"}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  return json::parse(in);
}

}  // namespace gravistab::io
