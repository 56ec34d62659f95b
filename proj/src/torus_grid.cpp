#include "latspec/torus_grid.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>

namespace latspec {

TorusGrid::TorusGrid(int n_per_axis) : n_(n_per_axis) {
  if (n_per_axis < 4 || n_per_axis % 2 != 0)
    throw std::invalid_argument("TorusGrid: N must be even and >= 4 (got " + std::to_string(n_per_axis) + ")");
}

Eigen::Index TorusGrid::negated(Eigen::Index i) const {
  const Eigen::Index n = n_;
  const Eigen::Index a = i / (n * n), b = (i / n) % n, c = i % n;
  return ((n - 1 - a) * n + (n - 1 - b)) * n + (n - 1 - c);
}

Eigen::MatrixX3d TorusGrid::nodes() const {
  Eigen::MatrixX3d out(size(), 3);
  for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = node(i).transpose();
  return out;
}

TorusGrid make_grid(int n_per_axis) { return TorusGrid(n_per_axis); }

Eigen::MatrixXcd convolution_matrix(const HoppingCoefficients& vhat, const TorusGrid& grid, bool symmetrized) {
  const Eigen::Index n = grid.size();
  const double w = grid.weight();
  const double norm = 1.0 / (kTwoPi * kTwoPi * kTwoPi);
  const double left = symmetrized ? std::sqrt(w) : 1.0;
  const double right = symmetrized ? std::sqrt(w) : w;
  const Eigen::MatrixX3d nodes = grid.nodes();
  std::vector<std::pair<Eigen::Vector3d, Complex>> terms;
  for (const auto& [s, value] : vhat.entries()) terms.emplace_back(to_vector(s), value);

  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d diff = (nodes.row(i) - nodes.row(j)).transpose();
      Complex v{};
      for (const auto& [s, amplitude] : terms) {
        const double phase = s.dot(diff);
        v += amplitude * Complex(std::cos(phase), std::sin(phase));
      }
      m(i, j) = left * norm * v * right;
    }
  }
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXcd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j).real() << ',' << m(i, j).imag();
    }
    out << '\n';
  }
}

void write_matrix_binary(const std::string& path, const Eigen::MatrixXcd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const std::int64_t shape[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(shape), sizeof(shape));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double pair[2] = {m(i, j).real(), m(i, j).imag()};
      out.write(reinterpret_cast<const char*>(pair), sizeof(pair));
    }
}

}  // namespace latspec
