#pragma once

#include <random>

#include "sl/functional.hpp"

namespace sltest {

// one shared small discretization so the suite doesn't rebuild transform
// tables in every test case
struct World {
  sl::SphereGrid grid;
  sl::Harmonics ops;
  sl::DiracBasis basis;

  World(int L, int lambda)
      : grid(sl::build_grid(L)), ops(grid, L), basis(grid, lambda) {}
};

inline const World& world() {
  static World w(12, 4);
  return w;
}

inline sl::ScalarField random_field(const sl::Harmonics& ops, int band,
                                    std::mt19937& rng, double scale) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c((band + 1) * (band + 1));
  for (int l = 0; l <= band; ++l)
    for (int m = -l; m <= l; ++m)
      c[l * l + l + m] = scale * nd(rng) / (1.0 + l);
  return ops.field_from_coeffs(c, band);
}

inline sl::VecXc random_spinor_coeffs(const sl::DiracBasis& basis,
                                      std::mt19937& rng, double scale) {
  std::normal_distribution<double> nd;
  sl::VecXc a(basis.size());
  for (int j = 0; j < basis.size(); ++j)
    a[j] = scale * sl::Complex(nd(rng), nd(rng));
  return a;
}

}  // namespace sltest
