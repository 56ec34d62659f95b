#include "latspec/coexistence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace latspec {

HoppingCoefficients zd_potential(double lambda, double mu) {
  HoppingCoefficients v;
  v.set({0, 0, 0}, mu);
  for (const Site& s : unit_sites()) v.set(s, 0.5 * lambda);
  v.prune(0.0);
  return v;
}

double LatticeConstants::max_error() const { return std::max({err_a, err_b, err_c, err_d, err_s}); }

namespace {

using Moments = Eigen::Matrix<double, 5, 1>;  // a, c, s, b, d

Moments moment_integrand(const Point& q) {
  const double c1 = std::cos(q[0]), c2 = std::cos(q[1]), c3 = std::cos(q[2]);
  const double s1 = std::sin(q[0]);
  const double inv = 1.0 / (2.0 * (3.0 - c1 - c2 - c3) * kTwoPi * kTwoPi * kTwoPi);
  Moments m;
  m << inv, c1 * inv, s1 * s1 * inv, c1 * c1 * inv, c1 * c2 * inv;
  return m;
}

Eigen::Vector4d identity_residuals(const Moments& m) {
  const double a = m[0], c = m[1], s = m[2], b = m[3], d = m[4];
  return {a - c - 1.0 / 6.0, b + 2.0 * d - 3.0 * c, a - b - s, s - 1.0 / 6.0 + 2.0 * (b - d) / 3.0};
}

}  // namespace

LatticeConstants lattice_constants(std::span<const int> schedule) {
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1])
      throw std::invalid_argument("lattice_constants: schedule must be strictly increasing");
  const RefinedIntegral<Moments> r = integrate_refined(moment_integrand, schedule);
  LatticeConstants k;
  k.schedule.assign(schedule.begin(), schedule.end());
  k.a = r.value[0], k.c = r.value[1], k.s = r.value[2], k.b = r.value[3], k.d = r.value[4];
  k.err_a = r.error_estimate[0], k.err_c = r.error_estimate[1], k.err_s = r.error_estimate[2];
  k.err_b = r.error_estimate[3], k.err_d = r.error_estimate[4];
  k.residuals = identity_residuals(r.value);
  k.residuals_finest = identity_residuals(r.per_resolution.back());

  const Eigen::Vector4d bars{k.err_a + k.err_c, k.err_b + 2 * k.err_d + 3 * k.err_c, k.err_a + k.err_b + k.err_s,
                             k.err_s + 2 * (k.err_b + k.err_d) / 3};
  const char* names[] = {"a - c = 1/6", "b + 2d = 3c", "a = b + s", "s = 1/6 - 2(b - d)/3"};
  for (int i = 0; i < 4; ++i) {
    const double gate = std::max(10.0 * bars[i], 1e-12);
    if (std::abs(k.residuals[i]) > gate) {
      std::ostringstream msg;
      msg << "lattice_constants: identity " << names[i] << " violated, residual " << k.residuals[i] << " > " << gate;
      throw NumericalError(msg.str());
    }
  }
  k.a_lower_bound = k.a - k.err_a > 11.0 / 51.0;
  k.accurate = k.max_error() <= k.accuracy_gate;
  return k;
}

double coupling_gamma(const LatticeConstants& k, double lambda) { return -1.0 / (lambda * k.c) - 3.0; }

double coupling_mu(const LatticeConstants& k, double lambda) {
  return -(1.0 + 3.0 * lambda * k.c) / (k.a + 0.5 * lambda * k.c);
}

std::vector<LambdaCandidate> CoexistenceParams::accepted() const {
  std::vector<LambdaCandidate> out;
  for (const LambdaCandidate& c : candidates)
    if (c.accepted) out.push_back(c);
  return out;
}

CoexistenceParams coexistence_parameters(const LatticeConstants& k) {
  CoexistenceParams p;
  p.excluded_value = -2.0 * k.a / k.c;
  p.excluded_error = 2.0 * (k.err_a / k.c + k.a * k.err_c / (k.c * k.c));

  const double bd = k.b - k.d;
  const LambdaCandidate raw[] = {
      {"-1/s", -1.0 / k.s, k.err_s / (k.s * k.s)},
      {"-1/(b-d)", -1.0 / bd, (k.err_b + k.err_d) / (bd * bd)},
  };
  for (LambdaCandidate c : raw) {
    c.accepted = std::abs(c.lambda - p.excluded_value) > c.error + p.excluded_error;
    c.gamma = coupling_gamma(k, c.lambda);
    c.mu = coupling_mu(k, c.lambda);
    c.identity_residual = c.mu * (3.0 * k.c + k.a * c.gamma) + c.gamma;
    p.candidates.push_back(c);
  }
  const std::vector<LambdaCandidate> ok = p.accepted();
  if (ok.empty())
    throw NumericalError("coexistence_parameters: every candidate is indistinguishable from -2a/c");
  p.separation = std::abs(p.candidates[0].lambda - p.candidates[1].lambda);
  p.separation_error = p.candidates[0].error + p.candidates[1].error;
  p.cardinality = ok.size() == 2 && p.separation > p.separation_error ? "two" : "one";
  return p;
}

SubspaceMatrices invariant_subspace_matrices(const LatticeConstants& k, double lambda, double mu) {
  SubspaceMatrices m;
  m.odd = lambda * k.s * Eigen::Matrix3d::Identity();
  m.even << lambda * k.b, lambda * k.d, lambda * k.d, lambda * k.c,  //
      lambda * k.d, lambda * k.b, lambda * k.d, lambda * k.c,        //
      lambda * k.d, lambda * k.d, lambda * k.b, lambda * k.c,        //
      mu * k.c, mu * k.c, mu * k.c, mu * k.a;
  m.odd_eigenvalues = m.odd.diagonal();
  Eigen::EigenSolver<Eigen::Matrix4d> es(m.even);
  m.even_eigenvalues = es.eigenvalues();
  m.even_eigenvectors = es.eigenvectors();
  return m;
}

double family_overlap(const Eigen::VectorXcd& psi, const Eigen::MatrixXcd& family) {
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(family);
  const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(family.rows(), family.cols());
  return (q.adjoint() * psi).norm() / psi.norm();
}

namespace {

// psi(0) over the coefficient of cos p_i; equals gamma + 3 for psi = gamma + sum cos p_i.
double normalized_origin_value(const EigenfunctionSeries& series) {
  Complex beta{};
  for (const Site& e : unit_sites()) beta += series.coefficient(e);
  beta /= 3.0;
  return (series(Point::Zero()) / beta).real();
}

struct Family {
  std::string name;
  Eigen::MatrixXcd columns;
};

std::vector<Family> analytic_families(const TorusGrid& grid, double gamma) {
  const Eigen::Index n = grid.size();
  Family odd{"sin p_i", Eigen::MatrixXcd(n, 3)};
  Family diff{"cos p_i - cos p_j", Eigen::MatrixXcd(n, 2)};
  Family virt{"gamma + sum cos p_i", Eigen::MatrixXcd(n, 1)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point p = grid.node(j);
    for (int i = 0; i < 3; ++i) odd.columns(j, i) = std::sin(p[i]);
    diff.columns(j, 0) = std::cos(p[0]) - std::cos(p[1]);
    diff.columns(j, 1) = std::cos(p[0]) - std::cos(p[2]);
    virt.columns(j, 0) = gamma + std::cos(p[0]) + std::cos(p[1]) + std::cos(p[2]);
  }
  return {odd, diff, virt};
}

CoexistenceRun run_candidate(const LatticeConstants& k, const LambdaCandidate& candidate,
                             std::span<const int> schedule) {
  CoexistenceRun run;
  run.candidate = candidate;
  const OneParticleModel model(DispersionRelation(HoppingCoefficients::laplacian()),
                               zd_potential(candidate.lambda, candidate.mu));
  run.report = classify_threshold(model, schedule);
  const ThresholdReport& r = run.report;
  run.cluster_ok = r.eigenvalues_near_minus_one.size() >= 2;

  bool any_zero = false, any_nonzero = false;
  for (const Witness& w : r.witnesses) (w.psi0_zero ? any_zero : any_nonzero) = true;
  run.mixed_witnesses = any_zero && any_nonzero;

  auto spread = [](const std::vector<double>& values) {
    double m = 0.0;
    for (double x : values)
      if (!std::isnan(x)) m = std::max(m, std::abs(x + 1.0));
    return m;
  };
  if (!r.cluster_history.empty() && spread(r.cluster_history.back()) > 0.0)
    run.tightening = spread(r.cluster_history.front()) / spread(r.cluster_history.back());

  const TorusGrid finest = make_grid(schedule.back());
  const std::vector<Family> families = analytic_families(finest, candidate.gamma);
  for (const Witness& w : r.witnesses) {
    WitnessOverlap o;
    o.eigenvalue = w.eigenvalue;
    o.psi0_relative = w.psi0_relative;
    o.psi0_zero = w.psi0_zero;
    for (const Family& f : families) {
      const double value = family_overlap(w.samples, f.columns);
      if (value > o.overlap) o.overlap = value, o.family = f.name;
    }
    if (o.overlap < 0.95) {
      std::ostringstream msg;
      msg << "discretization failure: witness at eigenvalue " << w.eigenvalue
          << " overlaps at most " << o.overlap << " with the analytic eigenfunctions";
      run.diagnostics.push_back(msg.str());
    }
    run.overlaps.push_back(o);
  }

  run.psi0_expected = -1.0 / (candidate.lambda * k.c);
  const auto virtual_witness = std::find_if(r.witnesses.begin(), r.witnesses.end(),
                                            [](const Witness& w) { return !w.psi0_zero; });
  if (virtual_witness == r.witnesses.end()) {
    run.diagnostics.push_back("no witness with psi(0) != 0: no virtual level resolved");
    return run;
  }
  const std::size_t slot = std::size_t(virtual_witness - r.witnesses.begin());
  for (std::size_t g = 0; g + 1 < schedule.size(); ++g) {
    const double target = r.cluster_history[g][slot];
    const BirmanSchwingerDiscretization bs = build_bs(model, r.lambda, make_grid(schedule[g]));
    const std::vector<EigenPair> pairs = all_eigenpairs(bs);
    const auto best = std::min_element(pairs.begin(), pairs.end(), [target](const EigenPair& x, const EigenPair& y) {
      return std::abs(x.value - target) < std::abs(y.value - target);
    });
    run.psi0_per_grid.push_back(normalized_origin_value(eigenfunction_series(bs, *best)));
  }
  run.psi0_per_grid.push_back(normalized_origin_value(virtual_witness->series));

  const std::size_t m = run.psi0_per_grid.size();
  run.psi0_extrapolated = run.psi0_per_grid.back();
  if (m >= 2) {
    const double ratio = double(schedule[m - 1]) / double(schedule[m - 2]);
    run.psi0_extrapolated += (run.psi0_per_grid[m - 1] - run.psi0_per_grid[m - 2]) / (ratio - 1.0);
  }
  run.psi0_relative_error = std::abs(run.psi0_extrapolated - run.psi0_expected) / std::abs(run.psi0_expected);
  return run;
}

}  // namespace

bool CoexistenceReport::success() const {
  if (!constants.accurate) return false;
  return std::any_of(runs.begin(), runs.end(),
                     [](const CoexistenceRun& r) { return r.report.case_label == ThresholdCase::IV; });
}

CoexistenceReport coexistence_report(std::span<const int> scalar_schedule, std::span<const int> operator_schedule) {
  CoexistenceReport out;
  out.constants = lattice_constants(scalar_schedule);
  out.params = coexistence_parameters(out.constants);
  for (const LambdaCandidate& c : out.params.accepted())
    out.runs.push_back(run_candidate(out.constants, c, operator_schedule));
  out.notes.push_back(
      "eigenvalue convention G(0)psi = -psi: the even block maps (1,1,1,gamma) to -(1,1,1,gamma); a +1 reading of "
      "this identity is a sign typo");
  out.notes.push_back("the number of admissible lambda values is reported with error bars, not asserted");
  if (!out.constants.accurate)
    out.notes.push_back("quadrature error estimate exceeds the accuracy gate; schedule too coarse");
  return out;
}

nlohmann::json to_json(const LatticeConstants& k) {
  return {{"a", k.a},
          {"b", k.b},
          {"c", k.c},
          {"d", k.d},
          {"s", k.s},
          {"errors", {{"a", k.err_a}, {"b", k.err_b}, {"c", k.err_c}, {"d", k.err_d}, {"s", k.err_s}}},
          {"schedule", k.schedule},
          {"a_gt_11_51", k.a_lower_bound},
          {"accuracy_gate", {{"limit", k.accuracy_gate}, {"max_error", k.max_error()}, {"pass", k.accurate}}}};
}

nlohmann::json to_json(const CoexistenceReport& r) {
  auto residuals = [](const Eigen::Vector4d& v) {
    return nlohmann::json{{"a-c-1/6", v[0]}, {"b+2d-3c", v[1]}, {"a-b-s", v[2]}, {"s-1/6+2(b-d)/3", v[3]}};
  };
  nlohmann::json candidates = nlohmann::json::array();
  for (const LambdaCandidate& c : r.params.candidates)
    candidates.push_back({{"label", c.label},
                          {"lambda", c.lambda},
                          {"error", c.error},
                          {"accepted", c.accepted},
                          {"gamma", c.gamma},
                          {"mu", c.mu},
                          {"identity_residual", c.identity_residual}});
  nlohmann::json runs = nlohmann::json::array();
  for (const CoexistenceRun& run : r.runs) {
    nlohmann::json overlaps = nlohmann::json::array();
    for (const WitnessOverlap& o : run.overlaps)
      overlaps.push_back({{"eigenvalue", o.eigenvalue},
                          {"family", o.family},
                          {"overlap", o.overlap},
                          {"psi0_relative", o.psi0_relative},
                          {"psi0_zero", o.psi0_zero}});
    runs.push_back({{"lambda", run.candidate.lambda},
                    {"mu", run.candidate.mu},
                    {"gamma", run.candidate.gamma},
                    {"case", to_string(run.report.case_label)},
                    {"eigen_cluster", run.report.eigenvalues_near_minus_one},
                    {"cluster_ok", run.cluster_ok},
                    {"mixed_witnesses", run.mixed_witnesses},
                    {"tightening", run.tightening},
                    {"overlaps", overlaps},
                    {"psi0",
                     {{"per_grid", run.psi0_per_grid},
                      {"extrapolated", run.psi0_extrapolated},
                      {"expected", run.psi0_expected},
                      {"relative_error", run.psi0_relative_error}}},
                    {"diagnostics", run.diagnostics},
                    {"classification", to_json(run.report)}});
  }
  return {{"constants", to_json(r.constants)},
          {"identities", {{"residuals", residuals(r.constants.residuals)},
                          {"residuals_finest", residuals(r.constants.residuals_finest)}}},
          {"lambda_candidates", candidates},
          {"excluded_value", {{"value", r.params.excluded_value}, {"error", r.params.excluded_error}}},
          {"cardinality",
           {{"resolved", r.params.cardinality},
            {"separation", r.params.separation},
            {"separation_error", r.params.separation_error}}},
          {"runs", runs},
          {"success", r.success()},
          {"provenance_notes", r.notes}};
}

}  // namespace latspec
