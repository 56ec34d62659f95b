#pragma once

#include <array>
#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace latspec {

using Complex = std::complex<double>;
using Point = Eigen::Vector3d;
using Site = std::array<int, 3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Finitely supported map Z^3 -> C.
///
/// Used both for the kinetic coefficients of a dispersion relation and for
/// interaction potentials. Entries are kept in lexicographic site order so
/// that every derived matrix has a reproducible layout.
class HoppingCoefficients {
 public:
  using Map = std::map<Site, Complex>;

  HoppingCoefficients() = default;
  explicit HoppingCoefficients(Map entries);

  void set(const Site& s, Complex amplitude);
  void add(const Site& s, Complex amplitude);
  Complex at(const Site& s) const;
  bool contains(const Site& s) const { return entries_.count(s) != 0; }

  const Map& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// max_s |entry(s) - conj(entry(-s))|
  double hermiticity_defect() const;
  /// max ||s||_inf over nonzero entries.
  int support_radius() const;
  double l1_norm() const;
  /// All entries real and entry(s) == entry(-s).
  bool is_real_even(double tol = 1e-14) const;

  /// Inserts conj(entry(s)) at -s wherever -s is missing. Present partners are
  /// left untouched; call hermiticity_defect() afterwards to cross-check.
  void fill_conjugates();
  /// Removes entries with |amplitude| <= tol.
  void prune(double tol = 0.0);

  HoppingCoefficients scaled(Complex factor) const;

  /// {0 -> 6c, |s|=1 -> -c}; c=1 is the standard discrete Laplacian.
  static HoppingCoefficients laplacian(double c = 1.0);
  static HoppingCoefficients on_site(Complex value);

 private:
  Map entries_;
};

HoppingCoefficients operator+(const HoppingCoefficients& a, const HoppingCoefficients& b);

Site negate(const Site& s);
Eigen::Vector3d to_vector(const Site& s);

/// Throws ModelValidationError when the hermiticity defect exceeds tol.
void require_hermitian(const HoppingCoefficients& h, const char* what, double tol = 1e-12);

/// Six nearest-neighbour displacements +-e_i.
std::vector<Site> unit_sites();

}  // namespace latspec
