#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "latspec/dispersion.hpp"
#include "latspec/finite_rank.hpp"
#include "latspec/torus_grid.hpp"

namespace latspec {

/// One-particle operator eps(-i nabla) + v with a finitely supported real
/// potential sequence vhat, so that v(p) = conj(v(-p)).
struct OneParticleModel {
  DispersionRelation dispersion;
  HoppingCoefficients interaction;

  /// Throws ModelValidationError for complex vhat entries.
  OneParticleModel(DispersionRelation dispersion, HoppingCoefficients interaction);
};

enum class SolverKind { automatic, dense, low_rank };

/// Nystrom discretization of G(lambda) with kernel
/// (2pi)^{-3/2} v(p-q) / (eps(q) - lambda) on a midpoint grid.
///
///   matrix              M = V diag(1/d)
///   symmetrized_matrix  S = diag(d)^{-1/2} V diag(d)^{-1/2}
///
/// with d_j = eps(p_j) - lambda > 0. Dense matrices are formed on first use;
/// the low-rank route never touches them.
class BirmanSchwingerDiscretization {
 public:
  BirmanSchwingerDiscretization(const OneParticleModel& model, double lambda, TorusGrid grid,
                                SolverKind solver = SolverKind::automatic);

  double lambda() const { return lambda_; }
  const TorusGrid& grid() const { return grid_; }
  const Eigen::VectorXd& denominators() const { return denominators_; }
  const FiniteRankKernel& kernel() const { return kernel_; }
  const HoppingCoefficients& interaction() const { return interaction_; }
  const TrigSeries& dispersion() const { return dispersion_; }
  /// automatic resolved to dense or low_rank.
  SolverKind solver() const { return solver_; }

  const Eigen::MatrixXcd& matrix() const;
  const Eigen::MatrixXcd& symmetrized_matrix() const;

 private:
  double lambda_;
  TorusGrid grid_;
  HoppingCoefficients interaction_;
  TrigSeries dispersion_;
  Eigen::VectorXd denominators_;
  FiniteRankKernel kernel_;
  SolverKind solver_;
  mutable std::optional<Eigen::MatrixXcd> matrix_;
  mutable std::optional<Eigen::MatrixXcd> symmetrized_;
};

/// Throws SpectralParameterError when eps(p_j) <= lambda at some node.
BirmanSchwingerDiscretization build_bs(const OneParticleModel& model, double lambda, const TorusGrid& grid,
                                       SolverKind solver = SolverKind::automatic);

struct EigenPair {
  double value = 0.0;
  /// Plain-form samples psi(p_j), scaled so that d^{-1/2} psi is a unit vector.
  Eigen::VectorXcd vector;
};

/// All eigenpairs the chosen route resolves, ascending. The low-rank route
/// returns the nonzero part of the spectrum only.
std::vector<EigenPair> all_eigenpairs(const BirmanSchwingerDiscretization& bs);

/// The `count` eigenpairs nearest `target`, ascending, evenized; a degenerate
/// group cut by the count is kept whole.
std::vector<EigenPair> eigenpairs_near(const BirmanSchwingerDiscretization& bs, double target, int count);

/// Eigenvalues only (dense route: full spectrum; low-rank: nonzero part).
Eigen::VectorXd bs_eigenvalues(const BirmanSchwingerDiscretization& bs);

/// phi(p) = conj(psi(-p)); returns psi + phi or psi - phi, whichever is larger.
Eigen::VectorXcd evenize(const TorusGrid& grid, const Eigen::VectorXcd& psi);

/// Replaces a block of (numerically) degenerate eigenvectors by an
/// orthonormal basis, in the d-weighted inner product, of vectors fixed by
/// psi -> conj(psi(-p)). Every member then has an even modulus.
Eigen::MatrixXcd evenize_block(const TorusGrid& grid, const Eigen::VectorXd& denominators,
                               const Eigen::MatrixXcd& block);

/// First entry above 1e-8 of the max-modulus made to have positive real part
/// (positive imaginary part when the real part vanishes).
void normalize_sign(Eigen::VectorXcd& v);

/// psi(p) = (1/mu) (G psi)(p), a trigonometric series over the support of vhat.
class EigenfunctionSeries {
 public:
  EigenfunctionSeries() = default;
  EigenfunctionSeries(std::vector<Site> sites, Eigen::VectorXcd coefficients);

  Complex operator()(const Point& p) const;
  const std::vector<Site>& sites() const { return sites_; }
  const Eigen::VectorXcd& coefficients() const { return coefficients_; }
  /// Coefficient of e^{i(p,s)}; zero off the support.
  Complex coefficient(const Site& s) const;

 private:
  std::vector<Site> sites_;
  Eigen::VectorXcd coefficients_;
};

/// Throws NumericalError when |pair.value| < 1e-8.
EigenfunctionSeries eigenfunction_series(const BirmanSchwingerDiscretization& bs, const EigenPair& pair);

Complex extend_eigenfunction(const BirmanSchwingerDiscretization& bs, const EigenPair& pair, const Point& p);

enum class ProbeStatus { convergent, divergent, indeterminate };

std::string to_string(ProbeStatus s);

struct L2Probe {
  double slope = 0.0;
  ProbeStatus status = ProbeStatus::convergent;
  std::vector<int> resolutions;
  /// I_N = sum_j w |psi(p_j) / (eps(p_j) - eps(0))|^2
  std::vector<double> integrals;
};

/// Least-squares slope of log I_N against log N: > 0.5 divergent, < 0.1
/// convergent, otherwise indeterminate. samples[i] lives on resolutions[i].
L2Probe l2_membership_probe(const TrigSeries& dispersion, std::span<const Eigen::VectorXcd> samples,
                            std::span<const int> resolutions);

/// Same probe with psi evaluated directly on each grid.
template <typename F>
L2Probe l2_membership_probe(const TrigSeries& dispersion, F&& psi, std::span<const int> resolutions) {
  std::vector<Eigen::VectorXcd> samples;
  for (int n : resolutions) {
    const TorusGrid grid = make_grid(n);
    Eigen::VectorXcd values(grid.size());
    for (Eigen::Index j = 0; j < grid.size(); ++j) values[j] = psi(grid.node(j));
    samples.push_back(std::move(values));
  }
  return l2_membership_probe(dispersion, std::span<const Eigen::VectorXcd>(samples), resolutions);
}

/// One-to-one greedy assignment of `values` to `targets` by distance;
/// unmatched targets get NaN.
std::vector<double> match_values(const Eigen::VectorXd& values, const std::vector<double>& targets);

enum class ThresholdCase { I, II, III, IV, V };

std::string to_string(ThresholdCase c);

enum class ReportStatus { ok, indeterminate };

struct Witness {
  double eigenvalue = 0.0;
  Eigen::VectorXcd samples;
  EigenfunctionSeries series;
  Complex psi0;
  /// |psi(0)| / max_j |psi(p_j)|
  double psi0_relative = 0.0;
  bool psi0_zero = false;
  L2Probe probe;
};

struct ClassifyOptions {
  SolverKind solver = SolverKind::automatic;
  double tol_floor = 0.05;
  /// Eigenvalues this close to -1 feed the Richardson estimate.
  double window = 0.2;
  double tau_floor = 1e-10;
  std::vector<int> probe_multipliers{2, 3, 4};
};

struct ThresholdReport {
  ThresholdCase case_label = ThresholdCase::I;
  ReportStatus status = ReportStatus::ok;
  double lambda = 0.0;
  std::vector<int> schedule;
  std::vector<double> eigenvalues_near_minus_one;
  /// Per schedule grid, the eigenvalues matched to the finest-grid cluster.
  std::vector<std::vector<double>> cluster_history;
  std::vector<Witness> witnesses;
  double tol_ev = 0.0;
  double tau = 0.0;
  double richardson_estimate = 0.0;
  std::vector<std::string> notes;
};

/// Throws SpectralParameterError when the dispersion minimum is not a
/// unique non-degenerate minimum at the origin.
ThresholdReport classify_threshold(const OneParticleModel& model, std::span<const int> schedule,
                                   const ClassifyOptions& options = {});

nlohmann::json to_json(const ThresholdReport& report);

}  // namespace latspec
