#pragma once

#include <string>

#include "sl/grid.hpp"

namespace sl {

struct BandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Harmonics;

/// Real band-limited function on the sphere: grid values plus real
/// spherical-harmonic coefficients indexed (l,m), 0 <= l <= band.
struct ScalarField {
  const Harmonics* ops = nullptr;
  int band = 0;
  Eigen::VectorXd coeffs;  // size (band+1)^2, index l*l + l + m
  Eigen::VectorXd values;  // size grid.n_nodes()

  double coeff(int l, int m) const { return coeffs[l * l + l + m]; }
  double& coeff(int l, int m) { return coeffs[l * l + l + m]; }
  double mean() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField operator*(double s) const;
};

struct MtResult {
  std::string variant;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool satisfied = false;
};

enum class MtVariant { standard, centroid_sharp, even };

/// Scalar spherical-harmonic analysis/synthesis and the Laplace-Beltrami
/// toolbox on a fixed grid. Real orthonormal convention with the
/// Condon-Shortley phase; transforms are separable over rings.
class Harmonics {
 public:
  Harmonics(const SphereGrid& grid, int max_band);

  const SphereGrid& grid() const { return *grid_; }
  int max_band() const { return max_band_; }

  Eigen::VectorXd analyze(const Eigen::VectorXd& values, int band) const;
  Eigen::VectorXd synthesize(const Eigen::VectorXd& coeffs, int band) const;

  /// Evaluates a coefficient vector at one arbitrary point on the sphere.
  double synthesize_at(const Eigen::VectorXd& coeffs, int band,
                       const Vec3& x) const;

  ScalarField field_from_values(const Eigen::VectorXd& values, int band) const;
  ScalarField field_from_coeffs(const Eigen::VectorXd& coeffs, int band) const;
  ScalarField constant(double c, int band) const;
  /// Field from coefficients of P_l(x3), l = 0..len-1 (zonal Legendre).
  ScalarField zonal_legendre(const Eigen::VectorXd& legendre_coeffs,
                             int band) const;

  ScalarField laplacian(const ScalarField& u) const;
  /// Solves -Delta u = f with mean(u) = 0; f must be mean-zero.
  ScalarField green_solve(const ScalarField& f) const;
  double dirichlet_energy(const ScalarField& u) const;

  /// Cartesian components of the surface gradient on grid nodes,
  /// from the analytic theta/phi derivative recurrences.
  void gradient(const ScalarField& u, Eigen::VectorXd& gx, Eigen::VectorXd& gy,
                Eigen::VectorXd& gz) const;

  /// Pointwise exp(s*u) with the overflow guard (u <= 30).
  Eigen::VectorXd exp_values(const ScalarField& u, double s) const;

  MtResult mt_check(const ScalarField& f, MtVariant variant) const;

  /// Y_lm value tables per ring (normalized associated Legendre).
  double plm(int ring, int l, int m) const { return plm_[ring][pidx(l, m)]; }

  static int pidx(int l, int m) { return l * (l + 1) / 2 + m; }

 private:
  const SphereGrid* grid_;
  int max_band_;
  // plm_[ring][pidx(l,m)] and its theta-derivative, m >= 0.
  std::vector<std::vector<double>> plm_;
  std::vector<std::vector<double>> dplm_;
  // cos(m*phi_k), sin(m*phi_k) tables, [m][k].
  std::vector<std::vector<double>> cosm_;
  std::vector<std::vector<double>> sinm_;

  void check_band(int band) const;
};

/// Normalized associated Legendre values P̄_lm(cos theta) for all
/// 0 <= m <= l <= band (orthonormal over the sphere with the sqrt(2)
/// azimuth factors applied by the caller). Includes Condon-Shortley.
void legendre_table(int band, double theta, std::vector<double>& out);
void legendre_dtheta_table(int band, double theta,
                           const std::vector<double>& plm,
                           std::vector<double>& out);

}  // namespace sl
