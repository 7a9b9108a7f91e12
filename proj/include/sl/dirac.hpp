#pragma once

#include <complex>

#include "sl/grid.hpp"
#include "sl/harmonics.hpp"

namespace sl {

using Complex = std::complex<double>;
using VecXc = Eigen::VectorXcd;

struct DiracError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DiracBasis;

/// Spinor as a complex coefficient vector over the Dirac eigenbasis,
/// with cached pointwise two-component values and |psi|^2 on the grid.
class SpinorState {
 public:
  SpinorState() = default;
  SpinorState(const DiracBasis& basis, VecXc coeffs);

  const DiracBasis& basis() const { return *basis_; }
  const VecXc& coeffs() const { return coeffs_; }
  void set_coeffs(VecXc coeffs);

  const VecXc& comp0() const { return comp0_; }
  const VecXc& comp1() const { return comp1_; }
  const Eigen::VectorXd& density() const { return density_; }

  double l2_norm_sq() const { return coeffs_.squaredNorm(); }

 private:
  const DiracBasis* basis_ = nullptr;
  VecXc coeffs_;
  VecXc comp0_, comp1_;      // pointwise components per grid node
  Eigen::VectorXd density_;  // |psi|^2 per node
  void rebuild_cache();
};

struct HHalfNorms {
  double hilbert_sq = 0.0;     // sum (1+|lambda|)|a|^2
  double equivalent_sq = 0.0;  // sum |lambda||a|^2
};

/// Explicit Dirac eigenbasis on the round sphere up to |lambda| <= Lambda.
/// Eigenvalues +-(k+1) with complex multiplicity 2(k+1); eigenspinors are
/// pairs of spin-weight +-1/2 harmonics of half-integer degree j = k+1/2,
/// realized through Wigner d-functions d^j_{m,-s}(theta).
class DiracBasis {
 public:
  DiracBasis(const SphereGrid& grid, int band);

  const SphereGrid& grid() const { return *grid_; }
  int band() const { return band_; }
  int size() const { return static_cast<int>(lambda_.size()); }

  double lambda(int j) const { return lambda_[j]; }
  const std::vector<double>& lambdas() const { return lambda_; }
  /// half-integer degree (2j+1 stored as twice_j) and azimuthal index m
  /// (stored as twice_m) of basis spinor i.
  int twice_j(int i) const { return twice_j_[i]; }
  int twice_m(int i) const { return twice_m_[i]; }

  /// Pointwise component tables, size() x n_nodes.
  const Eigen::MatrixXcd& comp0() const { return comp0_; }
  const Eigen::MatrixXcd& comp1() const { return comp1_; }

  SpinorState zero_state() const;
  SpinorState apply_dirac(const SpinorState& psi) const;
  std::pair<SpinorState, SpinorState> split_pm(const SpinorState& psi) const;
  HHalfNorms h_half_norm(const SpinorState& psi) const;

  /// Eigenvalue-one eigenspinor scaled to pointwise unit length.
  SpinorState killing_spinor() const;

  /// integral of weight * <psi, chi> (Hermitian pointwise product).
  Complex evaluate_bilinear(const SpinorState& psi, const SpinorState& chi,
                            const Eigen::VectorXd& weight_values) const;

  /// L2 projections of the pointwise-weighted spinor onto every basis
  /// element: b_j = integral <w psi, phi_j>.
  VecXc project_weighted(const SpinorState& psi,
                         const Eigen::VectorXd& weight_values) const;
  VecXc project_components(const VecXc& comp0, const VecXc& comp1) const;

  /// sum over j of lambda_j |a_j|^2 (the Dirac pairing, exact on the band).
  double dirac_pairing(const SpinorState& psi) const;

  /// Spinor components at an arbitrary point (off-grid evaluation).
  void components_at(const SpinorState& psi, const Vec3& x, Complex& c0,
                     Complex& c1) const;

 private:
  const SphereGrid* grid_;
  int band_;
  std::vector<double> lambda_;
  std::vector<int> twice_j_, twice_m_;
  Eigen::MatrixXcd comp0_, comp1_;
};

/// Wigner d-function d^j_{m,n}(theta) for half-integer arguments passed
/// doubled (twice_j = 2j, ...); explicit Wigner sum, stable for j <= ~50.
double wigner_d(int twice_j, int twice_m, int twice_n, double theta);

}  // namespace sl
