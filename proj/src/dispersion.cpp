#include "latspec/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "latspec/errors.hpp"

namespace latspec {

TrigSeries::TrigSeries(const HoppingCoefficients& h)
    : sites_(3, Eigen::Index(h.size())), amplitudes_(Eigen::Index(h.size())) {
  Eigen::Index m = 0;
  for (const auto& [s, value] : h.entries()) {
    sites_.col(m) = to_vector(s);
    amplitudes_[m] = value;
    ++m;
  }
}

Eigen::Vector3d TrigSeries::gradient(const Point& p) const {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (Eigen::Index m = 0; m < amplitudes_.size(); ++m) {
    const double phase = sites_.col(m).dot(p);
    // d/dp Re(a e^{i phase}) = -(Re a sin + Im a cos) s
    g -= (amplitudes_[m].real() * std::sin(phase) + amplitudes_[m].imag() * std::cos(phase)) *
         sites_.col(m);
  }
  return g;
}

Eigen::Matrix3d TrigSeries::hessian(const Point& p) const {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (Eigen::Index m = 0; m < amplitudes_.size(); ++m) {
    const double phase = sites_.col(m).dot(p);
    const double re = amplitudes_[m].real() * std::cos(phase) - amplitudes_[m].imag() * std::sin(phase);
    h -= re * sites_.col(m) * sites_.col(m).transpose();
  }
  return h;
}

double wrap_angle(double x) {
  double y = std::fmod(x + kPi, kTwoPi);
  if (y <= 0.0) y += kTwoPi;
  return y - kPi;
}

Point wrap_to_torus(const Point& p) { return p.unaryExpr([](double x) { return wrap_angle(x); }); }

double torus_distance(const Point& a, const Point& b) {
  return wrap_to_torus(a - b).cwiseAbs().maxCoeff();
}

namespace {

struct Seeded {
  Point point;
  double value;  // of the signed objective
  Eigen::Index seed;
};

// Damped Newton on sign*f. Directions with a vanishing curvature are left alone
// so that flat valleys keep the seed coordinate.
Point newton_refine(const TrigSeries& f, double sign, Point p) {
  const double scale = std::max(1.0, f.l1_norm());
  auto objective = [&](const Point& x) { return sign * f.real_value(x); };
  double current = objective(p);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::Vector3d g = sign * f.gradient(p);
    if (g.norm() < 1e-14 * scale) break;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(sign * f.hessian(p));
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
      const double curvature = std::abs(es.eigenvalues()[i]);
      if (curvature > 1e-10 * scale) {
        step -= (es.eigenvectors().col(i).dot(g) / curvature) * es.eigenvectors().col(i);
      }
    }
    if (step.squaredNorm() == 0.0) step = -g / scale;
    double t = 1.0;
    const double slope = g.dot(step);
    Point trial = p + step;
    double trial_value = objective(trial);
    while (trial_value > current + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      trial = p + t * step;
      trial_value = objective(trial);
    }
    if (trial_value > current) break;
    const double moved = (trial - p).norm();
    p = trial;
    current = trial_value;
    if (moved < 1e-15) break;
  }
  return wrap_to_torus(p);
}

}  // namespace

MinimumInfo extremize(const TrigSeries& f, int scan_resolution, bool maximize) {
  if (scan_resolution < 2) throw std::invalid_argument("extremize: scan_resolution must be >= 2");
  const double sign = maximize ? -1.0 : 1.0;
  const int r = scan_resolution;
  const Eigen::Index total = Eigen::Index(r) * r * r;
  auto coord = [r](int j) { return -kPi + kTwoPi * j / r; };
  auto index = [r](int a, int b, int c) {
    return (Eigen::Index((a + r) % r) * r + (b + r) % r) * r + (c + r) % r;
  };

  Eigen::VectorXd values(total);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c)
        values[index(a, b, c)] = sign * f.real_value(Point(coord(a), coord(b), coord(c)));

  std::vector<Seeded> seeds;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c) {
        const double v = values[index(a, b, c)];
        bool local = true;
        for (int da = -1; da <= 1 && local; ++da)
          for (int db = -1; db <= 1 && local; ++db)
            for (int dc = -1; dc <= 1 && local; ++dc)
              if ((da || db || dc) && values[index(a + da, b + db, c + dc)] < v) local = false;
        if (local) seeds.push_back({Point(coord(a), coord(b), coord(c)), v, index(a, b, c)});
      }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Seeded& x, const Seeded& y) { return x.value < y.value; });
  constexpr std::size_t kMaxRefined = 256;
  if (seeds.size() > kMaxRefined) seeds.resize(kMaxRefined);

  std::vector<Seeded> refined;
  refined.reserve(seeds.size());
  for (const Seeded& s : seeds) {
    const Point p = newton_refine(f, sign, s.point);
    refined.push_back({p, sign * f.real_value(p), s.seed});
  }
  const double best = std::min_element(refined.begin(), refined.end(), [](auto& x, auto& y) {
                        return x.value < y.value;
                      })->value;
  const double value_tol = 1e-9 * std::max(1.0, f.l1_norm());

  std::vector<const Seeded*> near;
  for (const Seeded& s : refined)
    if (s.value <= best + value_tol) near.push_back(&s);
  const Seeded* chosen = *std::min_element(near.begin(), near.end(),
                                           [](auto* x, auto* y) { return x->seed < y->seed; });
  std::vector<Point> distinct;
  for (const Seeded* s : near) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [&](const Point& q) { return torus_distance(q, s->point) < 1e-6; });
    if (!seen) distinct.push_back(s->point);
  }

  MinimumInfo info;
  info.minimizer = chosen->point;
  info.value = f.real_value(chosen->point);
  info.hessian = f.hessian(chosen->point);
  const Eigen::Matrix3d signed_hessian = sign * info.hessian;
  info.hessian_min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(signed_hessian, Eigen::EigenvaluesOnly)
          .eigenvalues()[0];
  info.unique = distinct.size() == 1;
  info.local_minima = int(seeds.size());
  info.status = info.hessian_min_eigenvalue < 1e-8 * std::max(1.0, f.l1_norm())
                    ? MinimumStatus::degenerate
                    : MinimumStatus::ok;
  return info;
}

DispersionRelation::DispersionRelation(HoppingCoefficients hopping, int scan_resolution)
    : hopping_(std::move(hopping)) {
  require_hermitian(hopping_, "dispersion hopping");
  series_ = TrigSeries(hopping_);
  value_at_origin_ = series_.real_value(Point::Zero());
  minimum_ = extremize(series_, scan_resolution);
}

bool DispersionRelation::threshold_classifiable() const {
  return minimum_.unique && minimum_.status == MinimumStatus::ok &&
         torus_distance(minimum_.minimizer, Point::Zero()) < 1e-9;
}

std::string DispersionRelation::classifiability_note() const {
  std::ostringstream out;
  if (!minimum_.unique) out << "minimum is not unique; ";
  if (minimum_.status == MinimumStatus::degenerate)
    out << "degenerate minimum (smallest Hessian eigenvalue " << minimum_.hessian_min_eigenvalue << "); ";
  if (torus_distance(minimum_.minimizer, Point::Zero()) >= 1e-9)
    out << "minimum at (" << minimum_.minimizer.transpose() << "), not at the origin; ";
  std::string note = out.str();
  return note.empty() ? "threshold-classifiable" : "not threshold-classifiable: " + note;
}

double dispersion_eval(const HoppingCoefficients& hopping, const Point& p) {
  require_hermitian(hopping, "dispersion_eval");
  const TrigSeries series(hopping);
  const Complex value = series(p);
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, series.l1_norm()))
    throw ModelValidationError("dispersion_eval: non-real dispersion value");
  return value.real();
}

MinimumInfo find_global_minimum(const HoppingCoefficients& hopping, int scan_resolution) {
  require_hermitian(hopping, "find_global_minimum");
  if (scan_resolution < 8) throw std::invalid_argument("find_global_minimum: scan_resolution must be >= 8");
  return extremize(TrigSeries(hopping), scan_resolution);
}

bool is_conditionally_negative_definite(const HoppingCoefficients& hopping, double tol) {
  for (const auto& [s, value] : hopping.entries()) {
    if (s == Site{0, 0, 0}) continue;
    if (std::abs(value.imag()) > tol || value.real() > tol) return false;
  }
  return true;
}

double cnd_combination(const TrigSeries& eps, const Point& p, const Point& q) {
  return eps.real_value(p) + eps.real_value(q) -
         0.5 * (eps.real_value(p + q) + eps.real_value(p - q)) - eps.real_value(Point::Zero());
}

std::vector<Point> quasi_random_points(int count) {
  constexpr double phi = 1.2207440846057596;  // real root of x^4 = x + 1
  const Eigen::Vector3d alpha(1.0 / phi, 1.0 / (phi * phi), 1.0 / (phi * phi * phi));
  std::vector<Point> points;
  points.reserve(std::size_t(std::max(count, 0)));
  for (int n = 1; n <= count; ++n) {
    Point x;
    for (int i = 0; i < 3; ++i) {
      const double u = 0.5 + n * alpha[i];
      x[i] = wrap_angle(-kPi + kTwoPi * (u - std::floor(u)));
    }
    points.push_back(x);
  }
  return points;
}

CndMargin cnd_inequality_margin(const HoppingCoefficients& hopping, const Point& q, int sample_count,
                                bool include_origin) {
  require_hermitian(hopping, "cnd_inequality_margin");
  const TrigSeries eps(hopping);
  std::vector<Point> sample = quasi_random_points(sample_count);
  if (include_origin) sample.insert(sample.begin(), Point::Zero());
  CndMargin result;
  result.margin = std::numeric_limits<double>::infinity();
  for (const Point& p : sample) {
    if (!include_origin && p.cwiseAbs().maxCoeff() < 1e-9) continue;
    const double value = cnd_combination(eps, p, q);
    ++result.samples;
    if (value < result.margin) {
      result.margin = value;
      result.argmin = p;
    }
  }
  return result;
}

}  // namespace latspec
