#pragma once

#include <string>
#include <vector>

#include "latspec/hopping.hpp"

namespace latspec {

/// Compiled finite Fourier series f(p) = sum_s a_s e^{i(p,s)}.
class TrigSeries {
 public:
  TrigSeries() = default;
  explicit TrigSeries(const HoppingCoefficients& h);

  template <typename Derived>
  Complex operator()(const Eigen::MatrixBase<Derived>& p) const {
    Complex sum{};
    for (Eigen::Index m = 0; m < amplitudes_.size(); ++m) {
      const double phase = sites_.col(m).dot(p);
      sum += amplitudes_[m] * Complex(std::cos(phase), std::sin(phase));
    }
    return sum;
  }

  /// Real part of the series; the only part that survives for hermitian data.
  template <typename Derived>
  double real_value(const Eigen::MatrixBase<Derived>& p) const {
    double sum = 0.0;
    for (Eigen::Index m = 0; m < amplitudes_.size(); ++m) {
      const double phase = sites_.col(m).dot(p);
      sum += amplitudes_[m].real() * std::cos(phase) - amplitudes_[m].imag() * std::sin(phase);
    }
    return sum;
  }

  Eigen::Vector3d gradient(const Point& p) const;
  Eigen::Matrix3d hessian(const Point& p) const;

  const Eigen::Matrix3Xd& sites() const { return sites_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Eigen::Index size() const { return amplitudes_.size(); }
  double l1_norm() const { return amplitudes_.cwiseAbs().sum(); }

 private:
  Eigen::Matrix3Xd sites_;
  Eigen::VectorXcd amplitudes_;
};

enum class MinimumStatus { ok, degenerate };

struct MinimumInfo {
  Point minimizer = Point::Zero();
  double value = 0.0;
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
  double hessian_min_eigenvalue = 0.0;
  bool unique = false;
  MinimumStatus status = MinimumStatus::ok;
  int local_minima = 0;
};

/// Grid scan at `scan_resolution` points per axis plus damped Newton
/// refinement from every grid-scan local minimum. With `maximize` the same
/// search runs on -f and the reported value/hessian refer to f itself.
MinimumInfo extremize(const TrigSeries& f, int scan_resolution, bool maximize = false);

/// One-particle dispersion relation with its validated hopping data and the
/// location of its global minimum.
class DispersionRelation {
 public:
  explicit DispersionRelation(HoppingCoefficients hopping, int scan_resolution = 32);

  double operator()(const Point& p) const { return series_.real_value(p); }

  const HoppingCoefficients& hopping() const { return hopping_; }
  const TrigSeries& series() const { return series_; }
  double value_at_origin() const { return value_at_origin_; }
  const MinimumInfo& minimum() const { return minimum_; }

  /// Unique, non-degenerate minimum within 1e-9 of the origin.
  bool threshold_classifiable() const;
  std::string classifiability_note() const;

 private:
  HoppingCoefficients hopping_;
  TrigSeries series_;
  double value_at_origin_ = 0.0;
  MinimumInfo minimum_;
};

/// sum_s entry(s) e^{i(p,s)}; throws ModelValidationError for non-hermitian data.
double dispersion_eval(const HoppingCoefficients& hopping, const Point& p);

MinimumInfo find_global_minimum(const HoppingCoefficients& hopping, int scan_resolution = 32);

/// Real-valued case of the Levy-Khinchin criterion: every off-origin
/// coefficient is real and non-positive.
bool is_conditionally_negative_definite(const HoppingCoefficients& hopping, double tol = 1e-12);

/// F(p,q) = eps(p) + eps(q) - (eps(p+q) + eps(p-q))/2 - eps(0)
double cnd_combination(const TrigSeries& eps, const Point& p, const Point& q);

struct CndMargin {
  double margin = 0.0;
  Point argmin = Point::Zero();
  int samples = 0;
};

/// Minimum of F(., q) over a deterministic quasi-random sample. The origin
/// (where F vanishes identically) is skipped unless `include_origin`.
CndMargin cnd_inequality_margin(const HoppingCoefficients& hopping, const Point& q, int sample_count,
                                bool include_origin = false);

/// Low-discrepancy points in (-pi, pi]^3 (additive recurrence, generalized golden ratio).
std::vector<Point> quasi_random_points(int count);

double wrap_angle(double x);
Point wrap_to_torus(const Point& p);
/// Max-norm distance on the torus.
double torus_distance(const Point& a, const Point& b);

}  // namespace latspec
