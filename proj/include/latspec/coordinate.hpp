#pragma once

#include "latspec/hopping.hpp"

namespace latspec {

/// Sequence on the box {x in Z^3 : ||x||_inf <= radius}, lexicographic layout.
class BoxField {
 public:
  explicit BoxField(int radius);

  int radius() const { return radius_; }
  int side() const { return 2 * radius_ + 1; }
  Eigen::Index size() const { return values_.size(); }

  bool inside(const Site& x) const;
  Eigen::Index index(const Site& x) const;
  Site site(Eigen::Index i) const;

  Complex& operator[](const Site& x) { return values_[index(x)]; }
  Complex operator[](const Site& x) const { return values_[index(x)]; }
  Eigen::VectorXcd& values() { return values_; }
  const Eigen::VectorXcd& values() const { return values_; }

 private:
  int radius_;
  Eigen::VectorXcd values_;
};

struct CoordinateApplication {
  BoxField result;
  /// State has weight within support_radius of the box boundary.
  bool truncation_warning = false;
};

/// (h psi)(x) = sum_s hopping(s) psi(x+s) + potential(x) psi(x), zero outside the box.
/// `potential` is read as the diagonal sequence x -> v(x).
CoordinateApplication apply_coordinate_hamiltonian(const HoppingCoefficients& hopping,
                                                   const HoppingCoefficients& potential,
                                                   const BoxField& state);

/// Dense matrix of the truncated operator on the box (zero padding).
Eigen::MatrixXcd box_hamiltonian(const HoppingCoefficients& hopping, const HoppingCoefficients& potential,
                                 int radius);

struct PositivityCheck {
  bool positive = false;
  double min_entry = 0.0;
  double max_imag = 0.0;
};

/// Entrywise sign check of exp(-t h) on the truncated box.
PositivityCheck semigroup_positivity_check(const HoppingCoefficients& hopping,
                                           const HoppingCoefficients& potential, int radius, double t,
                                           double tol = 1e-12);

/// exp(-t H) via scaling and squaring with Pade approximants.
Eigen::MatrixXcd heat_semigroup(const Eigen::MatrixXcd& h, double t);

}  // namespace latspec
