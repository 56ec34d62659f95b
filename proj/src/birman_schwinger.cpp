#include "latspec/birman_schwinger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace latspec {

OneParticleModel::OneParticleModel(DispersionRelation dispersion_, HoppingCoefficients interaction_)
    : dispersion(std::move(dispersion_)), interaction(std::move(interaction_)) {
  for (const auto& [s, value] : interaction.entries()) {
    if (std::abs(value.imag()) > 1e-14 * std::max(1.0, std::abs(value))) {
      std::ostringstream msg;
      msg << "interaction coefficient at (" << s[0] << "," << s[1] << "," << s[2] << ") is not real";
      throw ModelValidationError(msg.str());
    }
  }
}

BirmanSchwingerDiscretization::BirmanSchwingerDiscretization(const OneParticleModel& model, double lambda,
                                                             TorusGrid grid, SolverKind solver)
    : lambda_(lambda),
      grid_(grid),
      interaction_(model.interaction),
      dispersion_(model.dispersion.series()),
      denominators_(grid.size()) {
  for (Eigen::Index j = 0; j < grid_.size(); ++j) {
    const Point p = grid_.node(j);
    denominators_[j] = dispersion_.real_value(p) - lambda_;
    if (!(denominators_[j] > 0.0)) {
      std::ostringstream msg;
      msg << "spectral parameter " << lambda_ << " is not below eps at node (" << p.transpose()
          << "): eps - lambda = " << denominators_[j];
      throw SpectralParameterError(msg.str());
    }
  }
  kernel_ = factorize_convolution(interaction_, grid_);
  solver_ = solver;
  if (solver_ == SolverKind::automatic)
    solver_ = 16 * kernel_.rank() <= grid_.size() ? SolverKind::low_rank : SolverKind::dense;
}

const Eigen::MatrixXcd& BirmanSchwingerDiscretization::matrix() const {
  if (!matrix_) matrix_ = convolution_matrix(interaction_, grid_) * denominators_.cwiseInverse().asDiagonal();
  return *matrix_;
}

const Eigen::MatrixXcd& BirmanSchwingerDiscretization::symmetrized_matrix() const {
  if (!symmetrized_) {
    const Eigen::VectorXd root = denominators_.cwiseSqrt().cwiseInverse();
    symmetrized_ = root.asDiagonal() * convolution_matrix(interaction_, grid_, true) * root.asDiagonal();
  }
  return *symmetrized_;
}

BirmanSchwingerDiscretization build_bs(const OneParticleModel& model, double lambda, const TorusGrid& grid,
                                       SolverKind solver) {
  return BirmanSchwingerDiscretization(model, lambda, grid, solver);
}

namespace {

[[noreturn]] void eigensolver_failure(const BirmanSchwingerDiscretization& bs) {
  std::ostringstream msg;
  msg << "Birman-Schwinger eigensolve failed at N=" << bs.grid().n_per_axis() << " (eps - lambda in ["
      << bs.denominators().minCoeff() << ", " << bs.denominators().maxCoeff() << "], condition ~ "
      << bs.denominators().maxCoeff() / bs.denominators().minCoeff() << ")";
  throw NumericalError(msg.str());
}

bool same_eigenvalue(double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)); }

}  // namespace

std::vector<EigenPair> all_eigenpairs(const BirmanSchwingerDiscretization& bs) {
  std::vector<EigenPair> out;
  if (bs.solver() == SolverKind::low_rank) {
    const LowRankEigen lr = birman_schwinger_lowrank(bs.kernel(), bs.denominators());
    for (Eigen::Index m = 0; m < lr.values.size(); ++m) out.push_back({lr.values[m], lr.vectors.col(m)});
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bs.symmetrized_matrix());
  if (es.info() != Eigen::Success) eigensolver_failure(bs);
  const Eigen::VectorXd root = bs.denominators().cwiseSqrt();
  for (Eigen::Index m = 0; m < es.eigenvalues().size(); ++m)
    out.push_back({es.eigenvalues()[m], root.asDiagonal() * es.eigenvectors().col(m)});
  return out;
}

Eigen::VectorXd bs_eigenvalues(const BirmanSchwingerDiscretization& bs) {
  if (bs.solver() == SolverKind::low_rank) return birman_schwinger_lowrank(bs.kernel(), bs.denominators()).values;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bs.symmetrized_matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) eigensolver_failure(bs);
  return es.eigenvalues();
}

Eigen::VectorXcd evenize(const TorusGrid& grid, const Eigen::VectorXcd& psi) {
  Eigen::VectorXcd phi(psi.size());
  for (Eigen::Index j = 0; j < psi.size(); ++j) phi[j] = std::conj(psi[grid.negated(j)]);
  Eigen::VectorXcd plus = psi + phi;
  Eigen::VectorXcd minus = psi - phi;
  return plus.norm() >= minus.norm() ? plus : minus;
}

Eigen::MatrixXcd evenize_block(const TorusGrid& grid, const Eigen::VectorXd& d, const Eigen::MatrixXcd& block) {
  const Eigen::Index n = block.rows();
  const Eigen::Index g = block.cols();
  const Eigen::VectorXd root = d.cwiseSqrt().cwiseInverse();
  // Real form of the 2g fixed points psi + J psi, i(psi - J psi) in the d-weighted space.
  Eigen::MatrixXd real_form(2 * n, 2 * g);
  for (Eigen::Index k = 0; k < g; ++k) {
    Eigen::VectorXcd j_psi(n);
    for (Eigen::Index j = 0; j < n; ++j) j_psi[j] = std::conj(block(grid.negated(j), k));
    const Eigen::VectorXcd plus = root.asDiagonal() * (block.col(k) + j_psi);
    const Eigen::VectorXcd minus = root.asDiagonal() * (Complex(0.0, 1.0) * (block.col(k) - j_psi));
    real_form.col(2 * k) << plus.real(), plus.imag();
    real_form.col(2 * k + 1) << minus.real(), minus.imag();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(real_form, Eigen::ComputeThinU);
  Eigen::MatrixXcd out(n, g);
  for (Eigen::Index k = 0; k < g; ++k) {
    const auto u = svd.matrixU().col(k);
    Eigen::VectorXcd s(n);
    for (Eigen::Index j = 0; j < n; ++j) s[j] = Complex(u[j], u[n + j]);
    out.col(k) = s.cwiseQuotient(root.cast<Complex>());
  }
  return out;
}

void normalize_sign(Eigen::VectorXcd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const Complex x = v[j];
    if (std::abs(x) <= 1e-8 * scale) continue;
    const bool flip = std::abs(x.real()) > 1e-12 * std::abs(x) ? x.real() < 0.0 : x.imag() < 0.0;
    if (flip) v = -v;
    return;
  }
}

std::vector<EigenPair> eigenpairs_near(const BirmanSchwingerDiscretization& bs, double target, int count) {
  std::vector<EigenPair> all = all_eigenpairs(bs);
  std::stable_sort(all.begin(), all.end(), [target](const EigenPair& x, const EigenPair& y) {
    return std::abs(x.value - target) < std::abs(y.value - target);
  });
  std::size_t keep = std::min<std::size_t>(all.size(), std::size_t(std::max(count, 0)));
  // never split a degenerate group
  while (keep > 0 && keep < all.size() && same_eigenvalue(all[keep - 1].value, all[keep].value)) ++keep;
  all.resize(keep);
  std::stable_sort(all.begin(), all.end(), [](const EigenPair& x, const EigenPair& y) { return x.value < y.value; });

  for (std::size_t first = 0; first < all.size();) {
    std::size_t last = first + 1;
    while (last < all.size() && same_eigenvalue(all[first].value, all[last].value)) ++last;
    Eigen::MatrixXcd block(bs.grid().size(), Eigen::Index(last - first));
    for (std::size_t k = first; k < last; ++k) block.col(Eigen::Index(k - first)) = all[k].vector;
    block = evenize_block(bs.grid(), bs.denominators(), block);
    for (std::size_t k = first; k < last; ++k) {
      all[k].vector = block.col(Eigen::Index(k - first));
      normalize_sign(all[k].vector);
    }
    first = last;
  }
  return all;
}

EigenfunctionSeries::EigenfunctionSeries(std::vector<Site> sites, Eigen::VectorXcd coefficients)
    : sites_(std::move(sites)), coefficients_(std::move(coefficients)) {}

Complex EigenfunctionSeries::operator()(const Point& p) const {
  Complex sum{};
  for (std::size_t m = 0; m < sites_.size(); ++m) {
    const double phase = to_vector(sites_[m]).dot(p);
    sum += coefficients_[Eigen::Index(m)] * Complex(std::cos(phase), std::sin(phase));
  }
  return sum;
}

Complex EigenfunctionSeries::coefficient(const Site& s) const {
  for (std::size_t m = 0; m < sites_.size(); ++m)
    if (sites_[m] == s) return coefficients_[Eigen::Index(m)];
  return {};
}

EigenfunctionSeries eigenfunction_series(const BirmanSchwingerDiscretization& bs, const EigenPair& pair) {
  if (std::abs(pair.value) < 1e-8)
    throw NumericalError("extend_eigenfunction: eigenvalue too close to zero to divide by");
  const FiniteRankKernel& k = bs.kernel();
  const Eigen::VectorXcd weighted = pair.vector.cwiseQuotient(bs.denominators().cast<Complex>());
  Eigen::VectorXcd coefficients = k.coupling.cast<Complex>().cwiseProduct(k.basis.adjoint() * weighted) / pair.value;
  return EigenfunctionSeries(k.sites, std::move(coefficients));
}

Complex extend_eigenfunction(const BirmanSchwingerDiscretization& bs, const EigenPair& pair, const Point& p) {
  return eigenfunction_series(bs, pair)(p);
}

std::string to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::convergent: return "convergent";
    case ProbeStatus::divergent: return "divergent";
    case ProbeStatus::indeterminate: return "indeterminate";
  }
  return "?";
}

L2Probe l2_membership_probe(const TrigSeries& dispersion, std::span<const Eigen::VectorXcd> samples,
                            std::span<const int> resolutions) {
  if (samples.size() != resolutions.size() || resolutions.size() < 2)
    throw std::invalid_argument("l2_membership_probe: need matching samples for at least two resolutions");
  L2Probe out;
  const double e0 = dispersion.real_value(Point::Zero());
  for (std::size_t r = 0; r < resolutions.size(); ++r) {
    const TorusGrid grid = make_grid(resolutions[r]);
    if (samples[r].size() != grid.size()) throw std::invalid_argument("l2_membership_probe: sample size mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      const double gap = dispersion.real_value(grid.node(j)) - e0;
      sum += std::norm(samples[r][j] / gap);
    }
    if (!std::isfinite(sum)) throw NumericalError("l2_membership_probe: dispersion vanishes at a grid node");
    out.resolutions.push_back(resolutions[r]);
    out.integrals.push_back(sum * grid.weight());
  }
  const bool all_zero = std::all_of(out.integrals.begin(), out.integrals.end(), [](double x) { return x == 0.0; });
  if (all_zero) return out;
  if (std::any_of(out.integrals.begin(), out.integrals.end(), [](double x) { return x <= 0.0; })) {
    out.status = ProbeStatus::indeterminate;
    return out;
  }
  const std::size_t m = out.integrals.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    mx += std::log(double(out.resolutions[r])) / double(m);
    my += std::log(out.integrals[r]) / double(m);
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double dx = std::log(double(out.resolutions[r])) - mx;
    sxy += dx * (std::log(out.integrals[r]) - my);
    sxx += dx * dx;
  }
  out.slope = sxy / sxx;
  out.status = out.slope > 0.5   ? ProbeStatus::divergent
               : out.slope < 0.1 ? ProbeStatus::convergent
                                 : ProbeStatus::indeterminate;
  return out;
}

std::vector<double> match_values(const Eigen::VectorXd& values, const std::vector<double>& targets) {
  struct Candidate {
    double distance;
    std::size_t target;
    Eigen::Index value;
  };
  std::vector<Candidate> candidates;
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (Eigen::Index i = 0; i < values.size(); ++i) candidates.push_back({std::abs(values[i] - targets[t]), t, i});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.distance < y.distance; });
  std::vector<double> out(targets.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> used(std::size_t(values.size()), false);
  for (const Candidate& c : candidates) {
    if (!std::isnan(out[c.target]) || used[std::size_t(c.value)]) continue;
    out[c.target] = values[c.value];
    used[std::size_t(c.value)] = true;
  }
  return out;
}

std::string to_string(ThresholdCase c) {
  switch (c) {
    case ThresholdCase::I: return "I";
    case ThresholdCase::II: return "II";
    case ThresholdCase::III: return "III";
    case ThresholdCase::IV: return "IV";
    case ThresholdCase::V: return "V";
  }
  return "?";
}

namespace {

void validate_schedule(std::span<const int> schedule) {
  if (schedule.empty()) throw std::invalid_argument("classify_threshold: empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    make_grid(schedule[i]);
    if (i > 0 && schedule[i] <= schedule[i - 1])
      throw std::invalid_argument("classify_threshold: schedule must be strictly increasing");
  }
}

}  // namespace

ThresholdReport classify_threshold(const OneParticleModel& model, std::span<const int> schedule,
                                   const ClassifyOptions& options) {
  if (!model.dispersion.threshold_classifiable())
    throw SpectralParameterError("classify_threshold refused: " + model.dispersion.classifiability_note());
  validate_schedule(schedule);

  ThresholdReport report;
  report.lambda = model.dispersion.value_at_origin();
  report.schedule.assign(schedule.begin(), schedule.end());

  std::vector<Eigen::VectorXd> spectra;
  for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
    spectra.push_back(bs_eigenvalues(build_bs(model, report.lambda, make_grid(schedule[i]), options.solver)));
  const BirmanSchwingerDiscretization finest =
      build_bs(model, report.lambda, make_grid(schedule.back()), options.solver);
  std::vector<EigenPair> pairs = all_eigenpairs(finest);
  Eigen::VectorXd finest_values(Eigen::Index(pairs.size()));
  for (std::size_t m = 0; m < pairs.size(); ++m) finest_values[Eigen::Index(m)] = pairs[m].value;
  spectra.push_back(finest_values);

  if (schedule.size() >= 2) {
    std::vector<double> window;
    for (const EigenPair& p : pairs)
      if (std::abs(p.value + 1.0) <= options.window) window.push_back(p.value);
    const std::vector<double> previous = match_values(spectra[spectra.size() - 2], window);
    for (std::size_t i = 0; i < window.size(); ++i)
      if (!std::isnan(previous[i]))
        report.richardson_estimate = std::max(report.richardson_estimate, std::abs(window[i] - previous[i]));
  } else {
    report.notes.push_back("single-resolution schedule: no Richardson estimate, tolerance floors used");
  }
  report.tol_ev = std::max(options.tol_floor, 5.0 * report.richardson_estimate);
  report.tau = std::max(options.tau_floor, 10.0 * report.richardson_estimate);

  std::vector<EigenPair> cluster;
  for (const EigenPair& p : pairs)
    if (std::abs(p.value + 1.0) <= report.tol_ev) cluster.push_back(p);
  for (const EigenPair& p : cluster) report.eigenvalues_near_minus_one.push_back(p.value);
  for (const Eigen::VectorXd& values : spectra)
    report.cluster_history.push_back(match_values(values, report.eigenvalues_near_minus_one));

  std::vector<int> probe_resolutions;
  for (int m : options.probe_multipliers) probe_resolutions.push_back(m * schedule.back());

  for (std::size_t first = 0; first < cluster.size();) {
    std::size_t last = first + 1;
    while (last < cluster.size() && same_eigenvalue(cluster[first].value, cluster[last].value)) ++last;
    const Eigen::Index g = Eigen::Index(last - first);
    Eigen::MatrixXcd block(finest.grid().size(), g);
    for (std::size_t k = first; k < last; ++k) block.col(Eigen::Index(k - first)) = cluster[k].vector;
    block = evenize_block(finest.grid(), finest.denominators(), block);

    // psi(0) is a linear functional on the block: rotate it onto the first member.
    if (g > 1) {
      Eigen::VectorXd at_origin(g);
      for (Eigen::Index k = 0; k < g; ++k)
        at_origin[k] = eigenfunction_series(finest, {cluster[first].value, block.col(k)})(Point::Zero()).real();
      if (at_origin.norm() > 0.0) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(at_origin);
        const Eigen::MatrixXd q = qr.householderQ();
        block = (block * q.cast<Complex>()).eval();
      }
    }

    for (Eigen::Index k = 0; k < g; ++k) {
      Witness w;
      w.eigenvalue = cluster[first + std::size_t(k)].value;
      w.samples = block.col(k);
      normalize_sign(w.samples);
      w.series = eigenfunction_series(finest, {w.eigenvalue, w.samples});
      w.psi0 = w.series(Point::Zero());
      w.psi0_relative = std::abs(w.psi0) / w.samples.cwiseAbs().maxCoeff();
      w.psi0_zero = w.psi0_relative < report.tau;
      w.probe = l2_membership_probe(finest.dispersion(), [&](const Point& p) { return w.series(p); },
                                    std::span<const int>(probe_resolutions));
      report.witnesses.push_back(std::move(w));
    }
    first = last;
  }

  int nonzero = 0;
  for (const Witness& w : report.witnesses) {
    if (!w.psi0_zero) {
      ++nonzero;
    } else if (w.probe.status != ProbeStatus::convergent) {
      report.status = ReportStatus::indeterminate;
      report.notes.push_back("witness at eigenvalue " + std::to_string(w.eigenvalue) + " has psi(0)=0 but a " +
                             to_string(w.probe.status) + " L2 probe");
    }
  }
  const std::size_t count = report.witnesses.size();
  if (count == 0) report.case_label = ThresholdCase::I;
  else if (count == 1) report.case_label = nonzero ? ThresholdCase::II : ThresholdCase::III;
  else if (nonzero == 0) report.case_label = ThresholdCase::III;
  else if (nonzero == 1) report.case_label = ThresholdCase::IV;
  else report.case_label = ThresholdCase::V;

  if (count > 0)
    report.notes.push_back(
        "the psi(0)=0 criterion for threshold eigenvalues assumes Hoelder regularity kappa > 1/2 of the potential; "
        "kappa is not computed");
  if (report.case_label == ThresholdCase::V)
    report.notes.push_back(
        "Case V cannot occur for Hoelder-regular potentials with kappa > 1/2; this verdict signals a "
        "discretization artifact");
  return report;
}

nlohmann::json to_json(const ThresholdReport& r) {
  nlohmann::json witnesses = nlohmann::json::array();
  for (const Witness& w : r.witnesses) {
    witnesses.push_back({{"eigenvalue", w.eigenvalue},
                         {"psi0", w.psi0.real()},
                         {"psi0_imag", w.psi0.imag()},
                         {"psi0_relative", w.psi0_relative},
                         {"psi0_zero", w.psi0_zero},
                         {"slope", w.probe.slope},
                         {"probe_status", to_string(w.probe.status)},
                         {"probe_resolutions", w.probe.resolutions},
                         {"probe_integrals", w.probe.integrals}});
  }
  return {{"case", to_string(r.case_label)},
          {"status", r.status == ReportStatus::ok ? "ok" : "indeterminate"},
          {"lambda", r.lambda},
          {"schedule", r.schedule},
          {"eigenvalues", r.eigenvalues_near_minus_one},
          {"cluster_history", r.cluster_history},
          {"witnesses", witnesses},
          {"tolerances", {{"tol_ev", r.tol_ev}, {"tau", r.tau}, {"richardson_estimate", r.richardson_estimate}}},
          {"provenance_notes", r.notes}};
}

}  // namespace latspec
