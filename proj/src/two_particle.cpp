#include "latspec/two_particle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace latspec {

TwoParticleModel::TwoParticleModel(DispersionRelation d1, DispersionRelation d2, HoppingCoefficients v)
    : dispersion1(std::move(d1)), dispersion2(std::move(d2)), interaction(std::move(v)) {
  for (const auto& [s, value] : interaction.entries())
    if (std::abs(value.imag()) > 1e-14 * std::max(1.0, std::abs(value)))
      throw ModelValidationError("pair interaction coefficients must be real");
}

double two_particle_dispersion(const TwoParticleModel& model, const Point& k, const Point& p) {
  return model.dispersion1(p) + model.dispersion2(Point(k - p));
}

HoppingCoefficients fiber_dispersion_hopping(const TwoParticleModel& model, const Point& k) {
  HoppingCoefficients out = model.dispersion1.hopping();
  for (const auto& [t, value] : model.dispersion2.hopping().entries()) {
    // eps2(k - p) = sum_t eps2hat(t) e^{i(k,t)} e^{-i(p,t)}
    const double phase = to_vector(t).dot(k);
    out.add(negate(t), value * Complex(std::cos(phase), std::sin(phase)));
  }
  out.prune(0.0);
  return out;
}

BandEdges band_edges(const TwoParticleModel& model, const Point& k, int scan_resolution) {
  if (scan_resolution < 16) throw std::invalid_argument("band_edges: scan resolution must be >= 16");
  const TrigSeries series(fiber_dispersion_hopping(model, k));
  const MinimumInfo low = extremize(series, scan_resolution);
  const MinimumInfo high = extremize(series, scan_resolution, true);
  BandEdges out;
  out.e_min = low.value;
  out.e_max = std::max(high.value, low.value);
  out.p_k = low.minimizer;
  out.degenerate = out.e_max - out.e_min < 1e-9;
  return out;
}

Eigen::MatrixXcd build_fiber(const TwoParticleModel& model, const Point& k, const TorusGrid& grid) {
  Eigen::MatrixXcd h = convolution_matrix(model.interaction, grid, true);
  const TrigSeries e_k(fiber_dispersion_hopping(model, k));
  for (Eigen::Index j = 0; j < grid.size(); ++j) h(j, j) += e_k.real_value(grid.node(j));
  return h;
}

namespace {

Eigen::VectorXd fiber_diagonal(const TrigSeries& e_k, const TorusGrid& grid) {
  Eigen::VectorXd d(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) d[j] = e_k.real_value(grid.node(j));
  return d;
}

SolverKind resolve(SolverKind solver, const FiniteRankKernel& kernel) {
  if (solver != SolverKind::automatic) return solver;
  return 16 * kernel.rank() <= kernel.dimension() ? SolverKind::low_rank : SolverKind::dense;
}

Eigen::VectorXd dense_spectrum(const TwoParticleModel& model, const Point& k, const TorusGrid& grid) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(build_fiber(model, k, grid), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("fiber eigensolve failed at N=" + std::to_string(grid.n_per_axis()));
  return es.eigenvalues();
}

// Eigenvalues below e_min; for a degenerate band every eigenvalue off the point.
std::vector<double> off_band(const TwoParticleModel& model, const Point& k, const TorusGrid& grid,
                             const BandEdges& edges, SolverKind solver) {
  const FiniteRankKernel kernel = factorize_convolution(model.interaction, grid);
  const TrigSeries e_k(fiber_dispersion_hopping(model, k));
  const Eigen::VectorXd diagonal = fiber_diagonal(e_k, grid);
  solver = resolve(solver, kernel);
  std::vector<double> out;
  if (edges.degenerate) {
    const double point = diagonal.mean();
    const Eigen::VectorXd spectrum = solver == SolverKind::low_rank
                                         ? Eigen::VectorXd(finite_rank_spectrum(kernel).array() + point)
                                         : dense_spectrum(model, k, grid);
    const double tol = 1e-10 * std::max(1.0, spectrum.cwiseAbs().maxCoeff());
    for (double x : spectrum)
      if (std::abs(x - point) > tol) out.push_back(x);
  } else if (solver == SolverKind::low_rank) {
    const LowRankBelow below = eigenpairs_below(kernel, diagonal, edges.e_min);
    out.assign(below.values.data(), below.values.data() + below.values.size());
  } else {
    for (double x : dense_spectrum(model, k, grid))
      if (x < edges.e_min) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

FiberSpectrum fiber_spectrum(const TwoParticleModel& model, const Point& k, const TorusGrid& grid,
                             const FiberOptions& options) {
  const BandEdges edges = band_edges(model, k, options.scan_resolution);
  FiberSpectrum out;
  out.k = k;
  out.e_min = edges.e_min;
  out.e_max = edges.e_max;
  out.p_k = edges.p_k;
  out.degenerate = edges.degenerate;
  out.bandwidth = edges.e_max - edges.e_min;

  const std::vector<double> candidates = off_band(model, k, grid, edges, options.solver);
  if (options.margin) {
    out.margin = *options.margin;
  } else {
    out.margin = 1e-8;
    const int coarse = grid.n_per_axis() - 4;
    if (coarse >= 4 && 2 * model.interaction.support_radius() < coarse && !candidates.empty()) {
      const std::vector<double> previous = off_band(model, k, make_grid(coarse), edges, options.solver);
      const Eigen::Map<const Eigen::VectorXd> prev(previous.data(), Eigen::Index(previous.size()));
      const std::vector<double> matched = match_values(prev, candidates);
      for (std::size_t i = 0; i < candidates.size(); ++i)
        if (!std::isnan(matched[i])) out.margin = std::max(out.margin, std::abs(candidates[i] - matched[i]));
    }
  }

  for (double x : candidates) {
    if (x < edges.e_min - out.margin) out.eigenvalues_below.push_back(x);
    else if (edges.degenerate && x > edges.e_max + out.margin) out.eigenvalues_above.push_back(x);
  }
  out.m_k = out.eigenvalues_below.empty() ? edges.e_min : std::min(edges.e_min, out.eigenvalues_below.front());
  out.gap = edges.e_min - out.m_k;
  if (edges.degenerate)
    out.notes.push_back(
        "degenerate band: the essential spectrum is the single point e_min; every eigenvalue off it is counted "
        "as discrete spectrum");
  return out;
}

bool is_zero_momentum(const Point& k) { return torus_distance(k, Point::Zero()) < 1e-12; }

GapProfile gap_profile(const TwoParticleModel& model, std::span<const Point> k_list, const TorusGrid& grid,
                       const FiberOptions& options) {
  if (!is_conditionally_negative_definite(model.dispersion1.hopping()) ||
      !is_conditionally_negative_definite(model.dispersion2.hopping()))
    throw ModelValidationError(
        "gap_profile refused: the gap inequality needs conditionally negative definite one-particle dispersions "
        "(real, non-positive off-site hopping)");
  const FiberSpectrum zero = fiber_spectrum(model, Point::Zero(), grid, options);
  GapProfile out;
  out.gap0 = zero.gap;
  for (const Point& k : k_list) {
    const FiberSpectrum fs = is_zero_momentum(k) ? zero : fiber_spectrum(model, k, grid, options);
    GapEntry e;
    e.k = k;
    e.gap = fs.gap;
    e.margin = std::max(fs.margin, zero.margin);
    if (!is_zero_momentum(k)) e.inequality_holds = fs.gap > zero.gap + e.margin;
    out.entries.push_back(e);
  }
  return out;
}

std::string to_string(GammaMode m) { return m == GammaMode::eigenfunction ? "eigenfunction" : "virtual_level"; }

ThresholdReport zero_fiber_threshold(const TwoParticleModel& model, const TorusGrid& grid, SolverKind solver) {
  const OneParticleModel one(DispersionRelation(fiber_dispersion_hopping(model, Point::Zero())), model.interaction);
  const int n = grid.n_per_axis();
  std::vector<int> schedule;
  if (n - 4 >= 4 && 2 * model.interaction.support_radius() < n - 4) schedule.push_back(n - 4);
  schedule.push_back(n);
  ClassifyOptions options;
  options.solver = solver;
  return classify_threshold(one, schedule, options);
}

ZeroFiberState zero_fiber_state(const TwoParticleModel& model, const TorusGrid& grid, const FiberOptions& options) {
  const FiberSpectrum zero = fiber_spectrum(model, Point::Zero(), grid, options);
  ZeroFiberState state;
  state.e0 = TrigSeries(fiber_dispersion_hopping(model, Point::Zero()));
  state.e_min0 = zero.e_min;
  state.p0 = zero.p_k;
  const double w = grid.weight();

  if (!zero.eigenvalues_below.empty()) {
    const FiniteRankKernel kernel = factorize_convolution(model.interaction, grid);
    const Eigen::VectorXd diagonal = fiber_diagonal(state.e0, grid);
    double energy = 0.0;
    Eigen::MatrixXcd block;
    if (resolve(options.solver, kernel) == SolverKind::low_rank) {
      const LowRankBelow below = eigenpairs_below(kernel, diagonal, zero.e_min - zero.margin);
      energy = below.values[0];
      Eigen::Index g = 1;
      while (g < below.values.size() && std::abs(below.values[g] - energy) < 1e-8 * std::max(1.0, std::abs(energy))) ++g;
      block = below.vectors.leftCols(g);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(build_fiber(model, Point::Zero(), grid));
      if (es.info() != Eigen::Success) throw NumericalError("fiber eigensolve failed at k=0");
      energy = es.eigenvalues()[0];
      Eigen::Index g = 1;
      while (g < es.eigenvalues().size() &&
             std::abs(es.eigenvalues()[g] - energy) < 1e-8 * std::max(1.0, std::abs(energy)))
        ++g;
      block = es.eigenvectors().leftCols(g);
    }
    Eigen::VectorXcd f = evenize_block(grid, Eigen::VectorXd::Ones(grid.size()), block).col(0);
    normalize_sign(f);
    f /= std::sqrt(w) * f.norm();
    // (E_0 - energy) f = -(v f), and v f is a trigonometric series on the support of v.
    Eigen::VectorXcd coefficients = -kernel.coupling.cast<Complex>().cwiseProduct(kernel.basis.adjoint() * f);
    state.mode = GammaMode::eigenfunction;
    state.origin = "bound state of h(0)";
    state.energy = energy;
    state.g = EigenfunctionSeries(kernel.sites, std::move(coefficients));
    return state;
  }

  const ThresholdReport report = zero_fiber_threshold(model, grid, options.solver);
  const Witness* chosen = nullptr;
  for (const Witness& wt : report.witnesses)
    if (wt.psi0_zero && wt.probe.status == ProbeStatus::convergent) {
      chosen = &wt;
      state.mode = GammaMode::eigenfunction;
      state.origin = "threshold eigenvalue of h(0)";
      break;
    }
  if (!chosen)
    for (const Witness& wt : report.witnesses)
      if (!wt.psi0_zero) {
        chosen = &wt;
        state.mode = GammaMode::virtual_level;
        state.origin = "virtual level of h(0)";
        break;
      }
  if (!chosen)
    throw SpectralParameterError(
        "h(0) has no bound state, threshold eigenvalue or virtual level; the gamma witness is undefined");
  state.energy = report.lambda;
  state.g = chosen->series;
  // Normalize on the grid: f for eigenfunctions, psi = (E_0 - E_0(0)) f for virtual levels.
  double norm = 0.0;
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const Point p = grid.node(j);
    norm += std::norm(state.mode == GammaMode::eigenfunction ? state(p) : state.g(p));
  }
  norm = std::sqrt(norm * w);
  state.g = EigenfunctionSeries(state.g.sites(), state.g.coefficients() / norm);
  return state;
}

double gamma_integrand(const TrigSeries& e0, const TrigSeries& ek, double e_min0, double e_mink, const Point& pk,
                       const Point& p) {
  return e0.real_value(p) - e_min0 + e_mink - 0.5 * (ek.real_value(Point(p + pk)) + ek.real_value(Point(pk - p)));
}

namespace {

struct GammaSums {
  double sym = 0.0;
  double direct = 0.0;
  double magnitude = 0.0;
  double integrand_min = 0.0;
};

GammaSums gamma_sums(const ZeroFiberState& f, const TrigSeries& ek, double e_mink, const Point& pk, int n) {
  const TorusGrid grid = make_grid(n);
  GammaSums out;
  out.integrand_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const Point p = grid.node(j);
    const double big_f = gamma_integrand(f.e0, ek, f.e_min0, e_mink, pk, p);
    const double weight = std::norm(f(p));
    out.sym -= big_f * weight;
    out.magnitude += std::abs(big_f) * weight;
    out.integrand_min = std::min(out.integrand_min, big_f);
    const Point q = p - pk;
    out.direct -= (f.e0.real_value(q) - f.e_min0 - ek.real_value(p) + e_mink) * std::norm(f(q));
  }
  out.sym *= grid.weight();
  out.direct *= grid.weight();
  out.magnitude *= grid.weight();
  return out;
}

}  // namespace

GammaWitness gamma_witness(const TwoParticleModel& model, const Point& k, const TorusGrid& grid,
                           const ZeroFiberState& state, int scan_resolution) {
  const BandEdges edges = band_edges(model, k, scan_resolution);
  const TrigSeries ek(fiber_dispersion_hopping(model, k));
  const int n = grid.n_per_axis();
  const GammaSums coarse = gamma_sums(state, ek, edges.e_min, edges.p_k, n);
  const GammaSums fine = gamma_sums(state, ek, edges.e_min, edges.p_k, 2 * n);

  GammaWitness out;
  out.k = k;
  out.mode = state.mode;
  out.gamma_sym = fine.sym;
  out.gamma_direct = fine.direct;
  out.integrand_min = coarse.integrand_min;
  out.error_estimate = std::abs(fine.sym - coarse.sym) + std::abs(fine.direct - coarse.direct) +
                       1e-12 * std::max(1.0, fine.magnitude);
  if (std::abs(out.gamma_sym - out.gamma_direct) > out.error_estimate) {
    std::ostringstream msg;
    msg << "gamma_witness: symmetric form " << out.gamma_sym << " and direct form " << out.gamma_direct
        << " differ beyond the quadrature estimate " << out.error_estimate << " at k=(" << k.transpose() << ")";
    throw NumericalError(msg.str());
  }
  if (!is_zero_momentum(k) && out.gamma_sym >= 0.0) out.status = GammaStatus::hypothesis_violation;
  return out;
}

std::vector<BoundStateCount> bound_state_count_check(const TwoParticleModel& model, std::span<const Point> k_list,
                                                     const TorusGrid& grid, const FiberOptions& options) {
  const ThresholdReport report = zero_fiber_threshold(model, grid, options.solver);
  int d = 0;
  bool virtual_level = false;
  for (const Witness& w : report.witnesses) {
    if (w.psi0_zero && w.probe.status == ProbeStatus::convergent) ++d;
    if (!w.psi0_zero) virtual_level = true;
  }
  const bool bound = !fiber_spectrum(model, Point::Zero(), grid, options).eigenvalues_below.empty();
  const bool applicable = bound || d > 0 || virtual_level;

  std::vector<BoundStateCount> out;
  for (const Point& k : k_list) {
    BoundStateCount c;
    c.k = k;
    c.d = d;
    c.count = fiber_spectrum(model, k, grid, options).discrete_count();
    if (applicable && !is_zero_momentum(k)) c.satisfied = c.count >= std::size_t(std::max(1, d));
    out.push_back(c);
  }
  return out;
}

}  // namespace latspec
