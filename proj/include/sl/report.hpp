#pragma once

#include <map>
#include <string>
#include <vector>

#include "sl/conformal.hpp"
#include "sl/functional.hpp"
#include "sl/solver.hpp"

namespace sl {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiagnosticsOptions {
  std::vector<double> radii{0.5};
  int center_stride = 4;   // node decimation for the concentration map
  double tol = 1e-8;       // pass/fail tolerance for the identity checks
};

struct ConcentrationEntry {
  double radius = 0.0;
  double max_mass = 0.0;
  Vec3 argmax = Vec3::Zero();
};

struct DiagnosticsReport {
  double stokes_residual = 0.0;
  double nehari_residual = 0.0;
  double neg_constraint_max = 0.0;

  bool kazdan_warner_applicable = false;  // requires near-constant h2
  Vec3 kazdan_warner = Vec3::Zero();

  double psi_l2 = 0.0, psi_l4 = 0.0;
  double psi_h_half_hilbert = 0.0, psi_h_half_equivalent = 0.0;
  double psi_plus_l2 = 0.0, psi_minus_l2 = 0.0;

  double coupling = 0.0;
  bool coupling_in_window = false;

  std::vector<HolderCheck> holder_checks;

  struct MtEntry {
    MtResult result;
    bool applicable = false;
  };
  std::vector<MtEntry> mt_results;  // standard, centroid_sharp, even

  std::vector<ConcentrationEntry> concentration_map;

  double s_functional_value = 0.0;
  Vec3 centroid_value = Vec3::Zero();
  double energy_value = 0.0;
  double reduced_energy_value = 0.0;
  double pde_sup_u = 0.0, pde_norm_psi = 0.0;

  int band_l = 0, band_lambda = 0;

  bool all_passed(double tol) const;
  /// JSON with fixed key order; `timestamp` is the only unstable field.
  std::string to_json(const std::string& timestamp) const;
};

DiagnosticsReport run_diagnostics(const SolutionPair& state,
                                  const DiagnosticsOptions& options = {});

/// Versioned hexfloat text snapshot of a state (bit-exact round trips).
struct Checkpoint {
  int version = 1;
  int band_l = 0, band_lambda = 0;
  std::string phase_tag = "cs-halfint-v1";
  unsigned seed = 0;
  std::string config_hash;
  std::string tool_version;
  Eigen::VectorXd u_coeffs;
  VecXc psi_coeffs;
  Eigen::VectorXd h1_coeffs, h2_coeffs;

  static Checkpoint from_state(const SolutionPair& state, unsigned seed,
                               const std::string& config_hash);
  SolutionPair materialize(const Harmonics& ops,
                           const DiracBasis& basis) const;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Coupling-function specification from the config file.
struct FieldSpec {
  std::string kind = "constant";  // constant | legendre | ylm
  double value = 1.0;
  std::vector<double> coeffs;

  ScalarField build(const Harmonics& ops, int band) const;
};

struct AppConfig {
  int grid_l = 16;
  int dirac_band = 5;
  FieldSpec h1, h2;
  SolveConfig solve;

  std::string hash() const;  // stable hash of the canonical key=value form
};

/// Flat key=value configuration; unknown keys are hard errors.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::string& path);

}  // namespace sl
