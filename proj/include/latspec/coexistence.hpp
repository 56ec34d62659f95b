#pragma once

#include <span>
#include <string>
#include <vector>

#include "latspec/birman_schwinger.hpp"

namespace latspec {

/// vhat(0) = mu, vhat(+-e_i) = lambda/2, i.e. v(p) = (2pi)^{-3/2}(mu + lambda sum cos p_i).
HoppingCoefficients zd_potential(double lambda, double mu);

/// Moments of 1/eps against eps(q) = 2 sum (1 - cos q_i), normalized by (2pi)^3:
///   a = <1>, c = <cos q1>, s = <sin^2 q1>, b = <cos^2 q1>, d = <cos q1 cos q2>.
struct LatticeConstants {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, s = 0.0;
  double err_a = 0.0, err_b = 0.0, err_c = 0.0, err_d = 0.0, err_s = 0.0;
  std::vector<int> schedule;
  /// a - c - 1/6, b + 2d - 3c, a - b - s, s - 1/6 + 2(b - d)/3
  Eigen::Vector4d residuals = Eigen::Vector4d::Zero();
  /// Same identities on the raw finest-grid values.
  Eigen::Vector4d residuals_finest = Eigen::Vector4d::Zero();
  /// a - err_a > 11/51
  bool a_lower_bound = false;
  /// Every error estimate <= accuracy_gate.
  bool accurate = false;
  double accuracy_gate = 5e-3;

  double max_error() const;
};

/// Richardson-refined midpoint quadrature over `schedule`. Throws
/// NumericalError when an identity residual exceeds max(10 x error, 1e-12).
LatticeConstants lattice_constants(std::span<const int> schedule);

struct LambdaCandidate {
  std::string label;
  double lambda = 0.0;
  double error = 0.0;
  bool accepted = false;
  double gamma = 0.0;
  double mu = 0.0;
  /// mu (3c + a gamma) + gamma
  double identity_residual = 0.0;
};

struct CoexistenceParams {
  std::vector<LambdaCandidate> candidates;
  double excluded_value = 0.0;
  double excluded_error = 0.0;
  /// "one" or "two" resolved points, with the separation and its error bar.
  std::string cardinality;
  double separation = 0.0;
  double separation_error = 0.0;

  std::vector<LambdaCandidate> accepted() const;
};

/// gamma(lambda) = -1/(lambda c) - 3
double coupling_gamma(const LatticeConstants& k, double lambda);
/// mu(lambda) = -(1 + 3 lambda c) / (a + lambda c / 2)
double coupling_mu(const LatticeConstants& k, double lambda);

/// Throws NumericalError when no candidate separates from -2a/c.
CoexistenceParams coexistence_parameters(const LatticeConstants& constants);

/// Action of G(0) on the invariant subspaces: sin p_i (odd) and
/// (cos p_1, cos p_2, cos p_3, 1) (even).
struct SubspaceMatrices {
  Eigen::Matrix3d odd;
  Eigen::Matrix4d even;
  Eigen::Vector3d odd_eigenvalues;
  Eigen::Vector4cd even_eigenvalues;
  Eigen::Matrix4cd even_eigenvectors;
};

SubspaceMatrices invariant_subspace_matrices(const LatticeConstants& constants, double lambda, double mu);

struct WitnessOverlap {
  double eigenvalue = 0.0;
  std::string family;
  double overlap = 0.0;
  double psi0_relative = 0.0;
  bool psi0_zero = false;
};

struct CoexistenceRun {
  LambdaCandidate candidate;
  ThresholdReport report;
  std::vector<WitnessOverlap> overlaps;
  bool cluster_ok = false;
  bool mixed_witnesses = false;
  /// max |sigma + 1| over the cluster, coarsest over finest grid.
  double tightening = 0.0;
  /// psi(0) divided by the cos p_i coefficient, per schedule grid.
  std::vector<double> psi0_per_grid;
  double psi0_extrapolated = 0.0;
  double psi0_expected = 0.0;
  double psi0_relative_error = 0.0;
  std::vector<std::string> diagnostics;
};

struct CoexistenceReport {
  LatticeConstants constants;
  CoexistenceParams params;
  std::vector<CoexistenceRun> runs;
  std::vector<std::string> notes;

  /// Identities pass, accuracy gate passes and some run is Case IV.
  bool success() const;
};

/// Full pipeline: constants on `scalar_schedule`, classification of every
/// accepted candidate on `operator_schedule`.
CoexistenceReport coexistence_report(std::span<const int> scalar_schedule, std::span<const int> operator_schedule);

/// Normalized overlap of psi with the span of `family` in the grid inner product.
double family_overlap(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& family);

nlohmann::json to_json(const LatticeConstants& constants);
nlohmann::json to_json(const CoexistenceReport& report);

}  // namespace latspec
