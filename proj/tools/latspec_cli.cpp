// Batch front end: threshold classification, fiber k-scans and the
// coexistence reproduction report.
//
// Exit status
//   classify    0 determinate, 2 indeterminate, 1 invalid input or refused model
//   fiber-scan  0 all rows computed, 3 some rows FAILED, 1 invalid input
//   appendix-b  0 identities and accuracy gate pass and some run is Case IV, 1 otherwise

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "latspec/coexistence.hpp"
#include "latspec/model_io.hpp"

using namespace latspec;

namespace {

struct RunConfig {
  std::string model_path;
  int grid_n = 16;
  std::vector<int> schedule;
  std::string out;
  std::optional<double> margin;
  std::string k_grid;
  std::vector<std::string> k_list;
  int jobs = 1;
  int max_n = 0;
  std::string solver = "auto";
  std::optional<double> tol_floor;
  std::optional<double> tau_floor;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

SolverKind parse_solver(const std::string& s) {
  if (s == "auto") return SolverKind::automatic;
  if (s == "dense") return SolverKind::dense;
  if (s == "low-rank") return SolverKind::low_rank;
  throw UsageError("--solver must be auto, dense or low-rank");
}

void check_schedule(const std::vector<int>& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 4 || schedule[i] % 2 != 0) throw UsageError("schedule entries must be even and >= 4");
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw UsageError("schedule must be strictly increasing");
  }
}

// Accepts plain numbers and multiples of pi: "0.5", "pi", "-pi/4", "3pi/4".
double parse_angle(std::string token) {
  const auto pos = token.find("pi");
  if (pos == std::string::npos) {
    std::size_t used = 0;
    const double x = std::stod(token, &used);
    if (used != token.size()) throw UsageError("cannot parse momentum component '" + token + "'");
    return x;
  }
  std::string factor = token.substr(0, pos);
  std::string rest = token.substr(pos + 2);
  double value = kPi;
  if (factor == "-") value = -kPi;
  else if (!factor.empty() && factor != "+") value *= std::stod(factor);
  if (!rest.empty()) {
    if (rest[0] != '/') throw UsageError("cannot parse momentum component '" + token + "'");
    value /= std::stod(rest.substr(1));
  }
  return value;
}

Point parse_k(const std::string& spec) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = spec.find(',', start);
    try {
      parts.push_back(parse_angle(spec.substr(start, comma - start)));
    } catch (const std::logic_error&) {
      throw UsageError("cannot parse --k '" + spec + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) throw UsageError("--k needs three components: " + spec);
  const Point k(parts[0], parts[1], parts[2]);
  for (int i = 0; i < 3; ++i)
    if (!(k[i] > -kPi && k[i] <= kPi)) throw UsageError("--k components must lie in (-pi, pi]: " + spec);
  return k;
}

// AxBxC -> 2 pi m / A, m = -floor((A-1)/2) .. floor(A/2), last axis fastest.
std::vector<Point> parse_k_grid(const std::string& spec) {
  int dims[3];
  char x1 = 0, x2 = 0;
  std::istringstream in(spec);
  if (!(in >> dims[0] >> x1 >> dims[1] >> x2 >> dims[2]) || x1 != 'x' || x2 != 'x' || !in.eof())
    throw UsageError("--k-grid must look like AxBxC");
  std::vector<double> axis[3];
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw UsageError("--k-grid sizes must be positive");
    for (int m = -(dims[a] - 1) / 2; m <= dims[a] / 2; ++m) axis[a].push_back(kTwoPi * m / dims[a]);
  }
  std::vector<Point> out;
  for (double k1 : axis[0])
    for (double k2 : axis[1])
      for (double k3 : axis[2]) out.emplace_back(k1, k2, k3);
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::string format(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

int cmd_classify(const RunConfig& cfg) {
  std::vector<int> schedule = cfg.schedule.empty() ? std::vector<int>{8, 12, 16} : cfg.schedule;
  check_schedule(schedule);
  const OneParticleModel model = to_one_particle(load_model(cfg.model_path));
  ClassifyOptions options;
  options.solver = parse_solver(cfg.solver);
  if (cfg.tol_floor) options.tol_floor = *cfg.tol_floor;
  if (cfg.tau_floor) options.tau_floor = *cfg.tau_floor;
  const ThresholdReport report = classify_threshold(model, schedule, options);
  write_output(cfg.out, to_json(report).dump(2) + "\n");
  std::cerr << "classify: case " << to_string(report.case_label) << ", "
            << (report.status == ReportStatus::ok ? "determinate" : "indeterminate") << "\n";
  return report.status == ReportStatus::ok ? 0 : 2;
}

int cmd_fiber_scan(const RunConfig& cfg) {
  std::vector<Point> ks;
  if (!cfg.k_grid.empty() && !cfg.k_list.empty()) throw UsageError("use either --k-grid or --k, not both");
  if (!cfg.k_grid.empty()) ks = parse_k_grid(cfg.k_grid);
  for (const std::string& spec : cfg.k_list) ks.push_back(parse_k(spec));
  if (ks.empty()) throw UsageError("fiber-scan needs --k-grid or at least one --k");
  if (cfg.jobs < 1) throw UsageError("--jobs must be positive");

  const TwoParticleModel model = to_two_particle(load_model(cfg.model_path));
  const TorusGrid grid = make_grid(cfg.grid_n);
  FiberOptions options;
  options.margin = cfg.margin;
  options.solver = parse_solver(cfg.solver);

  std::optional<ZeroFiberState> state;
  try {
    state = zero_fiber_state(model, grid, options);
  } catch (const SpectralParameterError& e) {
    std::cerr << "fiber-scan: gamma column is nan: " << e.what() << "\n";
  }

  std::vector<std::string> rows(ks.size());
  std::vector<char> failed(ks.size(), 0), nonempty(ks.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ks.size(); i = next++) {
      const Point& k = ks[i];
      std::string row = format(k[0]) + "," + format(k[1]) + "," + format(k[2]);
      try {
        const FiberSpectrum fs = fiber_spectrum(model, k, grid, options);
        const double gamma = state ? gamma_witness(model, k, grid, *state).gamma_sym : std::nan("");
        for (double x : {fs.e_min, fs.e_max, fs.p_k[0], fs.p_k[1], fs.p_k[2], fs.m_k, fs.gap}) row += "," + format(x);
        row += "," + std::to_string(fs.discrete_count()) + "," + format(gamma);
        nonempty[i] = fs.discrete_count() > 0;
      } catch (const std::exception& e) {
        row = format(k[0]) + "," + format(k[1]) + "," + format(k[2]);
        for (int c = 0; c < 9; ++c) row += ",FAILED";
        failed[i] = 1;
        std::cerr << "fiber-scan: k=(" << k.transpose() << ") failed: " << e.what() << "\n";
      }
      rows[i] = std::move(row);
    }
  };
  std::vector<std::thread> threads;
  const int workers = std::min<int>(cfg.jobs, int(ks.size()));
  for (int t = 1; t < workers; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  std::string csv = "k1,k2,k3,e_min,e_max,p_k1,p_k2,p_k3,m_k,gap,n_below,gamma\n";
  for (const std::string& row : rows) csv += row + "\n";
  write_output(cfg.out, csv);

  const auto n_failed = std::count(failed.begin(), failed.end(), 1);
  std::cerr << "fiber-scan: " << ks.size() << " k-points, " << std::count(nonempty.begin(), nonempty.end(), 1)
            << " with non-empty discrete spectrum below the band, " << n_failed << " failed\n";
  return n_failed ? 3 : 0;
}

int cmd_appendix_b(const RunConfig& cfg) {
  std::vector<int> scalar = cfg.schedule.empty() ? std::vector<int>{64, 128, 256} : cfg.schedule;
  check_schedule(scalar);
  if (cfg.grid_n < 12) throw UsageError("appendix-b needs --grid-n >= 12");
  std::vector<int> op{cfg.grid_n - 8, cfg.grid_n - 4, cfg.grid_n};
  if (cfg.max_n > 0) {
    if (cfg.max_n < 4 || cfg.max_n % 2) throw UsageError("--max-n must be even and >= 4");
    std::erase_if(scalar, [&](int n) { return n > cfg.max_n; });
    if (scalar.size() < 2) scalar = {cfg.max_n / 2 + (cfg.max_n / 2) % 2, cfg.max_n};
    if (scalar.front() == scalar.back()) scalar = {cfg.max_n};
    std::erase_if(op, [&](int n) { return n > cfg.max_n; });
    if (op.empty()) op = {cfg.max_n};
  }
  CoexistenceReport report;
  try {
    report = coexistence_report(scalar, op);
  } catch (const NumericalError& e) {
    std::cerr << "appendix-b: " << e.what() << "\n";
    return 1;
  }
  write_output(cfg.out, to_json(report).dump(2) + "\n");
  std::cerr << "appendix-b: a = " << report.constants.a << " +- " << report.constants.err_a << ", accuracy gate "
            << (report.constants.accurate ? "pass" : "FAIL");
  for (const CoexistenceRun& run : report.runs)
    std::cerr << ", lambda " << run.candidate.lambda << " -> case " << to_string(run.report.case_label);
  std::cerr << "\n";
  return report.success() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold spectra of lattice Schroedinger operators"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* classify = app.add_subcommand("classify", "classify the threshold of a one-particle model");
  auto* scan = app.add_subcommand("fiber-scan", "discrete spectrum of two-particle fibers over quasi-momenta");
  auto* appendix = app.add_subcommand("appendix-b", "lattice constants and virtual-level/threshold-eigenvalue coexistence");

  for (auto* sub : {classify, scan}) {
    sub->add_option("--model", cfg.model_path, "model file (JSON)")->required();
    sub->add_option("--solver", cfg.solver, "auto, dense or low-rank");
  }
  for (auto* sub : {classify, appendix})
    sub->add_option("--schedule", cfg.schedule, "comma-separated grid sizes")->delimiter(',');
  for (auto* sub : {classify, scan, appendix}) sub->add_option("--out", cfg.out, "output file (default stdout)");
  for (auto* sub : {scan, appendix}) sub->add_option("--grid-n", cfg.grid_n, "finest operator grid size");

  classify->add_option("--tol-floor", cfg.tol_floor, "floor of the eigenvalue tolerance around -1");
  classify->add_option("--tau-floor", cfg.tau_floor, "floor of the psi(0) zero threshold");
  scan->add_option("--margin", cfg.margin, "reporting margin below the band");
  scan->add_option("--k-grid", cfg.k_grid, "AxBxC quasi-momentum grid");
  scan->add_option("--k", cfg.k_list, "quasi-momentum k1,k2,k3 (repeatable; use --k=-pi/4,0,0 for negatives)");
  scan->add_option("--jobs", cfg.jobs, "worker threads");
  appendix->add_option("--max-n", cfg.max_n, "cap every schedule at this grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*classify) return cmd_classify(cfg);
    if (*scan) return cmd_fiber_scan(cfg);
    return cmd_appendix_b(cfg);
  } catch (const std::exception& e) {
    std::cerr << "latspec: " << e.what() << "\n";
    return 1;
  }
}
