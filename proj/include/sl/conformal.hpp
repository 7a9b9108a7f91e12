#pragma once

#include <functional>

#include "sl/dirac.hpp"
#include "sl/harmonics.hpp"

namespace sl {

/// Element of Aut(S^2) = PSL(2,C), stored as a determinant-one 2x2
/// complex matrix acting on homogeneous stereographic coordinates
/// (z1, z2) = (cos(theta/2) e^{i phi}, sin(theta/2)). The action is
/// pole-free: both the mapped point and the conformal factor come from
/// the normalized image (w1, w2) = M (z1, z2).
class MobiusMap {
 public:
  enum class Kind { rotation, dilation_like, general };

  MobiusMap();  // identity
  explicit MobiusMap(const Eigen::Matrix2cd& m);  // normalizes det to 1

  const Eigen::Matrix2cd& matrix() const { return m_; }
  Kind kind() const { return kind_; }

  MobiusMap inverse() const;
  MobiusMap operator*(const MobiusMap& other) const;  // composition of actions

  /// phi(x): image of a point under the map.
  Vec3 apply(const Vec3& x) const;
  /// v(x) = (1/2) log det(d phi) at x.
  double log_factor(const Vec3& x) const;

  static MobiusMap rotation_to_south_pole(const Vec3& q);
  /// phi_{Q,t} = pi_Q^{-1} o (t .) o pi_Q; concentrates at Q for t > 1.
  static MobiusMap dilation(const Vec3& q, double t);

  /// serialization: 8 reals, row-major (re, im) pairs.
  std::array<double, 8> serialize() const;
  static MobiusMap deserialize(const std::array<double, 8>& v);

 private:
  Eigen::Matrix2cd m_;
  Kind kind_;
  void classify();
};

double conformal_factor(const MobiusMap& m, const Vec3& x);

/// u_phi = u o phi + v, evaluated spectrally at mapped nodes and
/// re-analyzed at band min(2*band(u), transform capacity).
ScalarField pullback_scalar(const Harmonics& ops, const ScalarField& u,
                            const MobiusMap& m);

/// Density e^{u_phi} |psi_phi|^2 = e^{u_phi} e^{v} |psi o phi|^2 on grid
/// nodes; its integral is conformally invariant.
Eigen::VectorXd pullback_coupling_density(const Harmonics& ops,
                                          const ScalarField& u,
                                          const SpinorState& psi,
                                          const MobiusMap& m);

/// Kazdan-Warner obstruction vector: integral <grad h, grad x_i> e^{2u}.
Vec3 kazdan_warner(const Harmonics& ops, const ScalarField& u,
                   const ScalarField& h);

enum class BubbleNormalization { h1_eq_1, h1_eq_2 };

/// u_t = (1/2) log det(d phi_{Q,t}) (+ (1/2) log(1/2) for h1_eq_2).
ScalarField bubble_family(const Harmonics& ops, const Vec3& q, double t,
                          BubbleNormalization normalization);

/// Pointwise value of the bubble conformal density e^{2 u_t} (closed form,
/// no band limit).
double bubble_density_at(const Vec3& q, double t,
                         BubbleNormalization normalization, const Vec3& x);

/// Integral of f over the geodesic ball B_r(center) with a cap-adapted
/// Gauss-Legendre x uniform-azimuth rule (n_r x 2 n_r points).
double cap_integrate(const std::function<double(const Vec3&)>& f,
                     const Vec3& center, double r, int n_r);

/// Spinor coefficient rotation by Wigner D-matrices per (sign, j) block;
/// valid for rotations (SU(2) maps) only. The rotated state satisfies
/// |psi_rot(x)|^2 = |psi(phi(x))|^2.
SpinorState rotate_spinor(const SpinorState& psi, const MobiusMap& rot);

}  // namespace sl
