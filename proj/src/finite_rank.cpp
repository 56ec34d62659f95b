#include "latspec/finite_rank.hpp"

#include <algorithm>
#include <cmath>

namespace latspec {

FiniteRankKernel factorize_convolution(const HoppingCoefficients& vhat, const TorusGrid& grid) {
  if (2 * vhat.support_radius() >= grid.n_per_axis())
    throw std::invalid_argument("factorize_convolution: potential support aliases on the N=" +
                                std::to_string(grid.n_per_axis()) + " grid");
  FiniteRankKernel k;
  const double scale = grid.weight() / (kTwoPi * kTwoPi * kTwoPi);
  for (const auto& [s, value] : vhat.entries()) {
    if (std::abs(value.imag()) > 1e-14 * std::max(1.0, std::abs(value)))
      throw ModelValidationError("interaction coefficients must be real");
    if (value.real() == 0.0) continue;
    k.sites.push_back(s);
  }
  const Eigen::Index n = grid.size();
  const Eigen::Index r = Eigen::Index(k.sites.size());
  k.basis.resize(n, r);
  k.coupling.resize(r);
  for (Eigen::Index m = 0; m < r; ++m) {
    const Eigen::Vector3d s = to_vector(k.sites[std::size_t(m)]);
    k.coupling[m] = vhat.at(k.sites[std::size_t(m)]).real() * scale;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phase = s.dot(grid.node(j));
      k.basis(j, m) = Complex(std::cos(phase), std::sin(phase));
    }
  }
  return k;
}

namespace {

// K = U^H diag(inv) U and its Cholesky factor.
Eigen::MatrixXcd cholesky_factor(const FiniteRankKernel& k, const Eigen::VectorXd& inv) {
  const Eigen::MatrixXcd gram = k.basis.adjoint() * inv.asDiagonal() * k.basis;
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("finite-rank Gram matrix is not positive definite");
  return llt.matrixL();
}

Eigen::MatrixXcd reduced(const Eigen::MatrixXcd& l, const Eigen::VectorXd& coupling) {
  Eigen::MatrixXcd t = l.adjoint() * coupling.asDiagonal() * l;
  return (0.5 * (t + t.adjoint())).eval();
}

}  // namespace

LowRankEigen birman_schwinger_lowrank(const FiniteRankKernel& k, const Eigen::VectorXd& denominator) {
  LowRankEigen out;
  if (k.rank() == 0) return out;
  const Eigen::VectorXd inv = denominator.cwiseInverse();
  const Eigen::MatrixXcd l = cholesky_factor(k, inv);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(reduced(l, k.coupling));
  if (es.info() != Eigen::Success) throw NumericalError("reduced Birman-Schwinger eigensolve failed");
  out.values = es.eigenvalues();
  out.vectors = k.basis * (k.coupling.asDiagonal() * l * es.eigenvectors());
  for (Eigen::Index m = 0; m < out.values.size(); ++m) out.vectors.col(m) /= std::abs(out.values[m]);
  return out;
}

int count_below(const FiniteRankKernel& k, const Eigen::VectorXd& diagonal, double z) {
  if (k.rank() == 0) return 0;
  const Eigen::VectorXd inv = (diagonal.array() - z).inverse().matrix();
  const Eigen::MatrixXcd l = cholesky_factor(k, inv);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(reduced(l, k.coupling), Eigen::EigenvaluesOnly);
  return int((es.eigenvalues().array() < -1.0).count());
}

LowRankBelow eigenpairs_below(const FiniteRankKernel& k, const Eigen::VectorXd& diagonal, double z_max) {
  LowRankBelow out;
  out.values.resize(0);
  out.vectors.resize(diagonal.size(), 0);
  if (k.rank() == 0 || diagonal.size() == 0) return out;
  const double dmin = diagonal.minCoeff();
  const double scale = std::max({1.0, std::abs(dmin), k.coupling.cwiseAbs().sum() * double(diagonal.size())});
  const double hi = std::min(z_max, dmin - 1e-12 * scale);
  const int total = count_below(k, diagonal, hi);
  if (total == 0) return out;
  const double lo = dmin - k.coupling.cwiseAbs().sum() * double(diagonal.size()) - 1.0;

  std::vector<double> values;
  for (int m = 0; m < total; ++m) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * scale; ++it) {
      const double mid = 0.5 * (a + b);
      if (count_below(k, diagonal, mid) > m) b = mid;
      else a = mid;
    }
    values.push_back(0.5 * (a + b));
  }

  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
  out.vectors.resize(diagonal.size(), total);
  // Eigenvectors per cluster of coincident eigenvalues: x = (D - z)^{-1} U L^{-H} u
  // with (L^H C L) u = -u.
  for (int first = 0; first < total;) {
    int last = first + 1;
    while (last < total && values[std::size_t(last)] - values[std::size_t(first)] < 1e-9 * scale) ++last;
    const int multiplicity = last - first;
    const double z = values[std::size_t(first)];
    const Eigen::VectorXd inv = (diagonal.array() - z).inverse().matrix();
    const Eigen::MatrixXcd l = cholesky_factor(k, inv);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(reduced(l, k.coupling));
    std::vector<Eigen::Index> order(std::size_t(k.rank()));
    for (Eigen::Index i = 0; i < k.rank(); ++i) order[std::size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      return std::abs(es.eigenvalues()[x] + 1.0) < std::abs(es.eigenvalues()[y] + 1.0);
    });
    const Eigen::MatrixXcd lh = l.adjoint();
    for (int g = 0; g < multiplicity; ++g) {
      const Eigen::VectorXcd y = lh.triangularView<Eigen::Upper>().solve(es.eigenvectors().col(order[std::size_t(g)]));
      Eigen::VectorXcd x = inv.asDiagonal() * (k.basis * y);
      out.vectors.col(first + g) = x / x.norm();
    }
    first = last;
  }
  return out;
}

Eigen::VectorXd finite_rank_spectrum(const FiniteRankKernel& k) {
  if (k.rank() == 0) return {};
  const Eigen::MatrixXcd l = cholesky_factor(k, Eigen::VectorXd::Ones(k.dimension()));
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(reduced(l, k.coupling), Eigen::EigenvaluesOnly)
      .eigenvalues();
}

}  // namespace latspec
