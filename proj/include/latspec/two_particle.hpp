#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latspec/birman_schwinger.hpp"

namespace latspec {

/// Two particles with dispersions eps_1, eps_2 and a pair potential vhat.
struct TwoParticleModel {
  DispersionRelation dispersion1;
  DispersionRelation dispersion2;
  HoppingCoefficients interaction;

  /// Throws ModelValidationError for complex vhat entries.
  TwoParticleModel(DispersionRelation d1, DispersionRelation d2, HoppingCoefficients interaction);
};

/// E_k(p) = eps_1(p) + eps_2(k - p)
double two_particle_dispersion(const TwoParticleModel& model, const Point& k, const Point& p);

/// Coefficients of E_k as a trigonometric series in p:
/// eps1hat(s) + eps2hat(-s) e^{-i(k,s)}.
HoppingCoefficients fiber_dispersion_hopping(const TwoParticleModel& model, const Point& k);

struct BandEdges {
  double e_min = 0.0;
  double e_max = 0.0;
  Point p_k = Point::Zero();
  bool degenerate = false;
};

/// scan_resolution >= 16.
BandEdges band_edges(const TwoParticleModel& model, const Point& k, int scan_resolution = 32);

/// diag(E_k(p_j)) + symmetrized convolution matrix of v.
Eigen::MatrixXcd build_fiber(const TwoParticleModel& model, const Point& k, const TorusGrid& grid);

struct FiberOptions {
  /// Reporting margin; defaults to max(1e-8, eigenvalue drift between N-4 and N).
  std::optional<double> margin;
  SolverKind solver = SolverKind::automatic;
  int scan_resolution = 32;
};

struct FiberSpectrum {
  Point k = Point::Zero();
  double e_min = 0.0;
  double e_max = 0.0;
  Point p_k = Point::Zero();
  bool degenerate = false;
  std::vector<double> eigenvalues_below;
  /// Degenerate band only: eigenvalues above the single point.
  std::vector<double> eigenvalues_above;
  double m_k = 0.0;
  double gap = 0.0;
  double bandwidth = 0.0;
  double margin = 0.0;
  std::vector<std::string> notes;

  /// Below-band count; for a degenerate band every eigenvalue off the point.
  std::size_t discrete_count() const { return eigenvalues_below.size() + eigenvalues_above.size(); }
};

FiberSpectrum fiber_spectrum(const TwoParticleModel& model, const Point& k, const TorusGrid& grid,
                             const FiberOptions& options = {});

struct GapEntry {
  Point k = Point::Zero();
  double gap = 0.0;
  double margin = 0.0;
  /// Empty at k = 0.
  std::optional<bool> inequality_holds;
};

struct GapProfile {
  double gap0 = 0.0;
  std::vector<GapEntry> entries;
};

/// Refuses (ModelValidationError) unless both dispersions are conditionally
/// negative definite. inequality_holds = gap(k) > gap(0) + max(margins).
GapProfile gap_profile(const TwoParticleModel& model, std::span<const Point> k_list, const TorusGrid& grid,
                       const FiberOptions& options = {});

enum class GammaMode { eigenfunction, virtual_level };

std::string to_string(GammaMode m);

/// State of h(0) used as trial function: f(p) = g(p) / (E_0(p) - energy) with
/// g a trigonometric series over the support of v. The same interpolant
/// covers bound states, threshold eigenvalues and virtual levels.
struct ZeroFiberState {
  GammaMode mode = GammaMode::eigenfunction;
  std::string origin;
  double energy = 0.0;
  double e_min0 = 0.0;
  Point p0 = Point::Zero();
  EigenfunctionSeries g;
  TrigSeries e0;

  Complex operator()(const Point& p) const { return g(p) / (e0.real_value(p) - energy); }
};

/// Lowest bound state of h(0) if one exists below E_min(0) - margin, else a
/// threshold eigenfunction or a virtual level from the threshold classifier.
/// Throws SpectralParameterError when none exists.
ZeroFiberState zero_fiber_state(const TwoParticleModel& model, const TorusGrid& grid,
                                const FiberOptions& options = {});

enum class GammaStatus { ok, hypothesis_violation };

struct GammaWitness {
  Point k = Point::Zero();
  double gamma_sym = 0.0;
  double gamma_direct = 0.0;
  /// Both forms are evaluated on the 2N grid; the estimate is the sum of
  /// their changes from N to 2N plus a round-off floor.
  double error_estimate = 0.0;
  /// min_j F(k, p_j) over the N grid.
  double integrand_min = 0.0;
  GammaMode mode = GammaMode::eigenfunction;
  GammaStatus status = GammaStatus::ok;
};

/// F(k,p) = E_0(p) - E_min(0) + E_min(k) - (E_k(p + p(k)) + E_k(p(k) - p)) / 2
double gamma_integrand(const TrigSeries& e0, const TrigSeries& ek, double e_min0, double e_mink, const Point& pk,
                       const Point& p);

/// Throws NumericalError when the two forms disagree beyond error_estimate.
GammaWitness gamma_witness(const TwoParticleModel& model, const Point& k, const TorusGrid& grid,
                           const ZeroFiberState& state, int scan_resolution = 32);

struct BoundStateCount {
  Point k = Point::Zero();
  std::size_t count = 0;
  int d = 0;
  /// Empty when the statement does not apply (k = 0, or h(0) has neither a
  /// bound state, a threshold eigenvalue nor a virtual level).
  std::optional<bool> satisfied;
};

std::vector<BoundStateCount> bound_state_count_check(const TwoParticleModel& model, std::span<const Point> k_list,
                                                     const TorusGrid& grid, const FiberOptions& options = {});

/// Threshold classification of h(0) as a one-particle model with dispersion E_0.
ThresholdReport zero_fiber_threshold(const TwoParticleModel& model, const TorusGrid& grid,
                                     SolverKind solver = SolverKind::automatic);

bool is_zero_momentum(const Point& k);

}  // namespace latspec
