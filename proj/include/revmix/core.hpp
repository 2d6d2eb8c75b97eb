#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revmix {

/// Thrown when an algorithm fails numerically (non-convergence, empty domain, ...).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// Max-norm on coordinates; every residual and tolerance below uses it.
inline double max_norm(Point2 p) { return std::max(std::abs(p.x), std::abs(p.y)); }
inline double distance(Point2 a, Point2 b) { return max_norm(a - b); }

struct Jacobian2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  double det() const { return a11 * a22 - a12 * a21; }
  double trace() const { return a11 + a22; }
  Point2 apply(Point2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  double max_abs() const {
    return std::max(std::max(std::abs(a11), std::abs(a12)), std::max(std::abs(a21), std::abs(a22)));
  }
  static Jacobian2 identity() { return {1, 0, 0, 1}; }

  friend Jacobian2 operator*(const Jacobian2& A, const Jacobian2& B) {
    return {A.a11 * B.a11 + A.a12 * B.a21, A.a11 * B.a12 + A.a12 * B.a22,
            A.a21 * B.a11 + A.a22 * B.a21, A.a21 * B.a12 + A.a22 * B.a22};
  }

  Jacobian2 inverse() const {
    const double d = det();
    if (d == 0.0) throw NumericalError("Jacobian2::inverse: singular matrix");
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }
};

using MultiplierPair = std::pair<std::complex<double>, std::complex<double>>;

/// Eigenvalues of a 2x2 matrix, returned as a complex pair.
inline MultiplierPair eigenvalues(const Jacobian2& J) {
  const double h = 0.5 * J.trace();
  const std::complex<double> disc = std::sqrt(std::complex<double>(h * h - J.det(), 0.0));
  return {h + disc, h - disc};
}

/// Axis-aligned rectangle, lo <= hi componentwise.
struct Box {
  Point2 lo, hi;

  Point2 center() const { return {0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)}; }
  Point2 halfwidth() const { return {0.5 * (hi.x - lo.x), 0.5 * (hi.y - lo.y)}; }
  /// Membership with the box inflated about its center by `slack`.
  bool contains(Point2 p, double slack = 1.0) const {
    const Point2 c = center(), w = halfwidth();
    return std::abs(p.x - c.x) <= slack * w.x + 1e-15 &&
           std::abs(p.y - c.y) <= slack * w.y + 1e-15;
  }
  static Box centered(Point2 c, double radius) {
    return {{c.x - radius, c.y - radius}, {c.x + radius, c.y + radius}};
  }
};

/// Inclusive n x n lattice over a box (n >= 2); n == 1 gives the center.
inline std::vector<Point2> grid_points(const Box& b, int n) {
  std::vector<Point2> pts;
  if (n <= 1) {
    pts.push_back(b.center());
    return pts;
  }
  pts.reserve(static_cast<std::size_t>(n) * n);
  const double dx = (b.hi.x - b.lo.x) / (n - 1);
  const double dy = (b.hi.y - b.lo.y) / (n - 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      pts.push_back({b.lo.x + i * dx, b.lo.y + j * dy});
  return pts;
}

/// Polynomial in one variable, coefficient c[i] on s^i.
struct Poly1 {
  std::vector<double> c;

  double eval(double s) const {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
  }
  double deriv(double s) const {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * s + static_cast<double>(i) * c[i];
    return v;
  }
};

inline double ipow(double base, int n) {
  if (n < 0) return 1.0 / ipow(base, -n);
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

}  // namespace revmix
