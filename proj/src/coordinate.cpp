#include "latspec/coordinate.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace latspec {

BoxField::BoxField(int radius) : radius_(radius) {
  if (radius < 0) throw std::invalid_argument("BoxField: negative radius");
  const Eigen::Index n = side();
  values_ = Eigen::VectorXcd::Zero(n * n * n);
}

bool BoxField::inside(const Site& x) const {
  return std::abs(x[0]) <= radius_ && std::abs(x[1]) <= radius_ && std::abs(x[2]) <= radius_;
}

Eigen::Index BoxField::index(const Site& x) const {
  if (!inside(x)) throw std::out_of_range("BoxField: site outside the box");
  const Eigen::Index n = side();
  return ((x[0] + radius_) * n + (x[1] + radius_)) * n + (x[2] + radius_);
}

Site BoxField::site(Eigen::Index i) const {
  const int n = side();
  const int c = int(i % n);
  const int b = int((i / n) % n);
  const int a = int(i / (Eigen::Index(n) * n));
  return {a - radius_, b - radius_, c - radius_};
}

CoordinateApplication apply_coordinate_hamiltonian(const HoppingCoefficients& hopping,
                                                   const HoppingCoefficients& potential,
                                                   const BoxField& state) {
  CoordinateApplication out{BoxField(state.radius()), false};
  const int margin = hopping.support_radius();
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (state.values()[i] == Complex{}) continue;
    const Site x = state.site(i);
    const int r = std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])});
    if (r > state.radius() - margin) out.truncation_warning = true;
  }
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const Site x = state.site(i);
    Complex acc = potential.at(x) * state.values()[i];
    for (const auto& [s, amplitude] : hopping.entries()) {
      const Site y{x[0] + s[0], x[1] + s[1], x[2] + s[2]};
      if (state.inside(y)) acc += amplitude * state[y];
    }
    out.result.values()[i] = acc;
  }
  return out;
}

Eigen::MatrixXcd box_hamiltonian(const HoppingCoefficients& hopping, const HoppingCoefficients& potential,
                                 int radius) {
  const BoxField box(radius);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(box.size(), box.size());
  for (Eigen::Index i = 0; i < box.size(); ++i) {
    const Site x = box.site(i);
    h(i, i) += potential.at(x);
    for (const auto& [s, amplitude] : hopping.entries()) {
      const Site y{x[0] + s[0], x[1] + s[1], x[2] + s[2]};
      if (box.inside(y)) h(i, box.index(y)) += amplitude;
    }
  }
  return h;
}

Eigen::MatrixXcd heat_semigroup(const Eigen::MatrixXcd& h, double t) {
  const Eigen::MatrixXcd scaled = -t * h;
  return scaled.exp();
}

PositivityCheck semigroup_positivity_check(const HoppingCoefficients& hopping,
                                           const HoppingCoefficients& potential, int radius, double t,
                                           double tol) {
  if (t < 0.0) throw std::invalid_argument("semigroup_positivity_check: t must be positive");
  if (radius < 2 * hopping.support_radius())
    throw std::invalid_argument("semigroup_positivity_check: box radius below twice the hopping support");
  const Eigen::MatrixXcd semigroup = heat_semigroup(box_hamiltonian(hopping, potential, radius), t);
  PositivityCheck check;
  check.min_entry = semigroup.real().minCoeff();
  check.max_imag = semigroup.imag().cwiseAbs().maxCoeff();
  check.positive = check.min_entry >= -tol && check.max_imag <= tol;
  return check;
}

}  // namespace latspec
