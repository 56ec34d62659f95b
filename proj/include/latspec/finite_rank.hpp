#pragma once

#include <vector>

#include "latspec/torus_grid.hpp"

namespace latspec {

/// Exact factorization of the Nystrom convolution matrix of a finitely
/// supported real potential:
///
///   V = basis * diag(coupling) * basis^H,
///   basis(j, m) = e^{i(p_j, s_m)},  coupling_m = vhat(s_m) w / (2pi)^3.
///
/// Every matrix built from V (Birman-Schwinger, fiber Hamiltonian) inherits
/// rank <= #sites, so their relevant spectra reduce to rank x rank problems.
struct FiniteRankKernel {
  std::vector<Site> sites;
  Eigen::MatrixXcd basis;
  Eigen::VectorXd coupling;

  Eigen::Index rank() const { return coupling.size(); }
  Eigen::Index dimension() const { return basis.rows(); }
};

/// Throws ModelValidationError for complex coefficients and std::invalid_argument
/// when the support does not fit on the grid (aliasing).
FiniteRankKernel factorize_convolution(const HoppingCoefficients& vhat, const TorusGrid& grid);

struct LowRankEigen {
  Eigen::VectorXd values;
  /// Plain-form eigenvectors; scaled so that diag(denominator)^{-1/2} x is a unit vector.
  Eigen::MatrixXcd vectors;
};

/// Nonzero eigenpairs of  V diag(1/denominator)  (all denominators > 0),
/// ascending.
LowRankEigen birman_schwinger_lowrank(const FiniteRankKernel& kernel, const Eigen::VectorXd& denominator);

/// Number of eigenvalues of diag(diagonal) + V strictly below z, for z below
/// min(diagonal) (Birman-Schwinger inertia count).
int count_below(const FiniteRankKernel& kernel, const Eigen::VectorXd& diagonal, double z);

struct LowRankBelow {
  Eigen::VectorXd values;
  /// Unit-norm eigenvectors (Euclidean), one column per eigenvalue.
  Eigen::MatrixXcd vectors;
};

/// Eigenpairs of diag(diagonal) + V strictly below min(z_max, min(diagonal)),
/// located by bisection on count_below.
LowRankBelow eigenpairs_below(const FiniteRankKernel& kernel, const Eigen::VectorXd& diagonal, double z_max);

/// Nonzero eigenvalues of V, ascending.
Eigen::VectorXd finite_rank_spectrum(const FiniteRankKernel& kernel);

}  // namespace latspec
