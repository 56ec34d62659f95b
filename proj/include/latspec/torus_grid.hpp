#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/hopping.hpp"

namespace latspec {

/// Shifted-midpoint product grid on (-pi, pi]^3.
///
/// Nodes are p^(i) = -pi + (j_i + 1/2) 2pi/N with N even, so the origin is
/// never a node and the node set is closed under p -> -p. Node ordering is
/// lexicographic in (j1, j2, j3), the last index running fastest.
class TorusGrid {
 public:
  explicit TorusGrid(int n_per_axis);

  int n_per_axis() const { return n_; }
  Eigen::Index size() const { return Eigen::Index(n_) * n_ * n_; }
  double step() const { return kTwoPi / n_; }
  /// Uniform weight (2pi/N)^3.
  double weight() const { return step() * step() * step(); }
  double axis(int j) const { return -kPi + (j + 0.5) * step(); }

  Point node(Eigen::Index i) const {
    const Eigen::Index n = n_;
    return {axis(int(i / (n * n))), axis(int((i / n) % n)), axis(int(i % n))};
  }
  /// Index of the node -p_i.
  Eigen::Index negated(Eigen::Index i) const;
  /// size() x 3, one node per row.
  Eigen::MatrixX3d nodes() const;

 private:
  int n_;
};

/// Argument-checked constructor: N even and >= 4.
TorusGrid make_grid(int n_per_axis);

namespace detail {
inline double abs_value(double x) { return std::abs(x); }
template <typename Derived>
auto abs_value(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseAbs().eval();
}
template <typename T>
T filled_like(const T& x, double v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return v;
  } else {
    return T::Constant(x.rows(), x.cols(), v);
  }
}
inline bool all_finite(double x) { return std::isfinite(x); }
inline bool all_finite(const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); }
template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}
}  // namespace detail

template <typename T>
struct RefinedIntegral {
  T value;
  /// |I_last - I_previous|; infinite for a single-resolution schedule.
  T error_estimate;
  std::vector<int> schedule;
  std::vector<T> per_resolution;
};

/// Midpoint sum of f over the grid of size N (sum_j w f(p_j)).
template <typename F>
auto midpoint_sum(F&& f, int n_per_axis) {
  const TorusGrid grid = make_grid(n_per_axis);
  using T = std::decay_t<decltype(f(Point{}))>;
  const int n = grid.n_per_axis();
  std::vector<double> coord(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) coord[std::size_t(j)] = grid.axis(j);
  T sum = f(grid.node(0)) * 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      T partial = sum * 0.0;
      for (int c = 0; c < n; ++c) {
        const Point p(coord[std::size_t(a)], coord[std::size_t(b)], coord[std::size_t(c)]);
        const T value = f(p);
        if (!detail::all_finite(value)) {
          std::ostringstream msg;
          msg << "integrate_refined: non-finite integrand at node (" << p.transpose() << ") of the N="
              << n << " grid";
          throw NumericalError(msg.str());
        }
        partial += value;
      }
      sum += partial;
    }
  return T(sum * grid.weight());
}

/// Midpoint values over a resolution schedule with Richardson extrapolation
/// on the last two entries. `order` is the assumed leading error exponent in
/// 1/N (1 for the integrable |p|^-2 singularity in three dimensions).
template <typename F>
auto integrate_refined(F&& f, std::span<const int> schedule, double order = 1.0) {
  using T = std::decay_t<decltype(f(Point{}))>;
  if (schedule.empty()) throw std::invalid_argument("integrate_refined: empty schedule");
  RefinedIntegral<T> out{};
  for (int n : schedule) {
    out.schedule.push_back(n);
    out.per_resolution.push_back(midpoint_sum(f, n));
  }
  const std::size_t m = out.per_resolution.size();
  const T& last = out.per_resolution[m - 1];
  if (m == 1) {
    out.value = last;
    out.error_estimate = detail::filled_like(last, std::numeric_limits<double>::infinity());
    return out;
  }
  const T& previous = out.per_resolution[m - 2];
  const double ratio = double(schedule[m - 1]) / double(schedule[m - 2]);
  const double factor = std::pow(ratio, order) - 1.0;
  out.value = T(last + (last - previous) / factor);
  out.error_estimate = detail::abs_value(T(last - previous));
  return out;
}

/// Nystrom matrix of the convolution (v f)(p) = (2pi)^{-3/2} int v(p-q) f(q) dq,
/// v(p) = (2pi)^{-3/2} sum_s vhat(s) e^{i(p,s)}. The symmetrized form carries
/// sqrt(w) on both sides; with uniform weights both forms coincide.
Eigen::MatrixXcd convolution_matrix(const HoppingCoefficients& vhat, const TorusGrid& grid,
                                    bool symmetrized = false);

/// Row-major CSV: each complex entry written as two columns (re, im).
void write_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m);
/// Row-major little-endian binary: int64 rows, int64 cols, then interleaved
/// (re, im) binary64 pairs.
void write_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m);

}  // namespace latspec
