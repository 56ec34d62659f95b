#include "latspec/hopping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latspec/errors.hpp"

namespace latspec {

HoppingCoefficients::HoppingCoefficients(Map entries) : entries_(std::move(entries)) {}

void HoppingCoefficients::set(const Site& s, Complex amplitude) { entries_[s] = amplitude; }

void HoppingCoefficients::add(const Site& s, Complex amplitude) { entries_[s] += amplitude; }

Complex HoppingCoefficients::at(const Site& s) const {
  auto it = entries_.find(s);
  return it == entries_.end() ? Complex{} : it->second;
}

double HoppingCoefficients::hermiticity_defect() const {
  double defect = 0.0;
  for (const auto& [s, value] : entries_) {
    defect = std::max(defect, std::abs(value - std::conj(at(negate(s)))));
  }
  return defect;
}

int HoppingCoefficients::support_radius() const {
  int radius = 0;
  for (const auto& [s, value] : entries_) {
    if (value == Complex{}) continue;
    for (int c : s) radius = std::max(radius, std::abs(c));
  }
  return radius;
}

double HoppingCoefficients::l1_norm() const {
  double sum = 0.0;
  for (const auto& [s, value] : entries_) sum += std::abs(value);
  return sum;
}

bool HoppingCoefficients::is_real_even(double tol) const {
  for (const auto& [s, value] : entries_) {
    if (std::abs(value.imag()) > tol) return false;
    if (std::abs(value - at(negate(s))) > tol) return false;
  }
  return true;
}

void HoppingCoefficients::fill_conjugates() {
  std::vector<std::pair<Site, Complex>> missing;
  for (const auto& [s, value] : entries_) {
    if (!contains(negate(s))) missing.emplace_back(negate(s), std::conj(value));
  }
  for (const auto& [s, value] : missing) entries_[s] = value;
}

void HoppingCoefficients::prune(double tol) {
  std::erase_if(entries_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

HoppingCoefficients HoppingCoefficients::scaled(Complex factor) const {
  HoppingCoefficients out = *this;
  for (auto& [s, value] : out.entries_) value *= factor;
  return out;
}

HoppingCoefficients HoppingCoefficients::laplacian(double c) {
  HoppingCoefficients h;
  h.set({0, 0, 0}, 6.0 * c);
  for (const Site& s : unit_sites()) h.set(s, -c);
  return h;
}

HoppingCoefficients HoppingCoefficients::on_site(Complex value) {
  HoppingCoefficients h;
  h.set({0, 0, 0}, value);
  return h;
}

HoppingCoefficients operator+(const HoppingCoefficients& a, const HoppingCoefficients& b) {
  HoppingCoefficients out = a;
  for (const auto& [s, value] : b.entries()) out.add(s, value);
  return out;
}

Site negate(const Site& s) { return {-s[0], -s[1], -s[2]}; }

Eigen::Vector3d to_vector(const Site& s) { return {double(s[0]), double(s[1]), double(s[2])}; }

void require_hermitian(const HoppingCoefficients& h, const char* what, double tol) {
  const double defect = h.hermiticity_defect();
  if (defect > tol * std::max(1.0, h.l1_norm())) {
    std::ostringstream msg;
    msg << what << ": coefficients are not hermitian (defect " << defect << ")";
    throw ModelValidationError(msg.str());
  }
}

std::vector<Site> unit_sites() {
  return {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
}

}  // namespace latspec
