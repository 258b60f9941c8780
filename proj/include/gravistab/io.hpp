#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gravistab/dynamics.hpp"
#include "gravistab/equilibria.hpp"
#include "gravistab/functionals.hpp"
#include "gravistab/linearized.hpp"
#include "gravistab/radial_numerics.hpp"
#include "gravistab/rearrangement.hpp"

namespace gravistab::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Profile CSV with header `r,value` and a JSON sidecar `<path>.json`
/// holding {"extrapolation": tag}.
void write_profile_csv(const fs::path& path, const RadialProfile& p);
/// Reads a profile written by write_profile_csv (PCHIP slopes on reload).
RadialProfile read_profile_csv(const fs::path& path);

json law_to_json(const AnsatzLaw& law);
AnsatzLaw law_from_json(const json& j);

/// Writes model.json {law, u_c, E0, M, R, phi_c, grid_ref} and phi.csv,
/// rho.csv, dphi.csv into `dir`.
void save_model(const fs::path& dir, const EquilibriumModel& model);
/// Rebuilds the model from model.json and checks E0, M and R against the
/// stored values (relative 1e-9).  Throws std::runtime_error on mismatch.
EquilibriumModel load_model(const fs::path& dir);

json to_json(const EnergyReport& r);
json to_json(const ResidualReport& r);

/// Diagnostics CSV `t,H,Hcin,Hpot,mass,l1,l2,linf,dist`.
void write_diagnostics_csv(const fs::path& path, const std::vector<DiagnosticsRecord>& records);
std::vector<DiagnosticsRecord> read_diagnostics_csv(const fs::path& path);

/// LevelProfile CSV `s,volume` on its breakpoints.
void write_level_profile_csv(const fs::path& path, const LevelProfile& levels);

/// Common grid binary layout, little-endian:
///   u64 rank, u64 dims[rank], f64 extents[2 rank] (lo, hi per axis),
///   per axis u64 count and f64 coordinates[count] (cell edges or nodes),
///   f64 values[prod dims] in row-major order.
struct GridData {
  std::vector<std::uint64_t> dims;
  std::vector<double> extents;
  std::vector<std::vector<double>> coords;
  std::vector<double> values;
};
void write_grid(const fs::path& path, const GridData& g);
GridData read_grid(const fs::path& path);
GridData to_grid_data(const GriddedF& f);
GriddedF gridded_from_data(const GridData& g);
/// Nodal values of a perturbation on its (s, theta, c) mesh.
GridData to_grid_data(const PerturbationField& h);

/// Snapshot binary: u64 N, f64 t, f64 M, then x (3N), v (3N), w (N),
/// little-endian 8-byte floats.
void write_snapshot(const fs::path& path, const ParticleEnsemble& e);
ParticleEnsemble read_snapshot(const fs::path& path);
/// CSV `x,y,z,vx,vy,vz,w`.
void write_snapshot_csv(const fs::path& path, const ParticleEnsemble& e);

/// {form, value, tolerance, verdict} with verdict "pass" iff value >= -tolerance.
json coercivity_report(const std::string& form, double value, double tolerance);

/// Writes pretty-printed JSON followed by a newline.
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

}  // namespace gravistab::io
