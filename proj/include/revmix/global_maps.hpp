#pragma once

#include <optional>
#include <string>

#include "revmix/core.hpp"
#include "revmix/map_core.hpp"

namespace revmix {

enum class Configuration { figure8, figure_fish };
enum class Orientation { orientable, nonorientable };

inline const char* to_string(Configuration c) {
  return c == Configuration::figure8 ? "figure8" : "figureFish";
}
inline const char* to_string(Orientation o) {
  return o == Orientation::orientable ? "orientable" : "nonorientable";
}

/// Coefficients of the quadratic global map
///
///   T1: (x, y) near M1- = (0, y1-)  ->  near M1+ = (x1+, 0)
///       x' = x1+ + a*x + b*(y - y1-) + phi1
///       y' = mu  + c*x + d*(y - y1-)^2 + phi2
///
/// and of its reversibility partner T2 = R T1^{-1} R^{-1} (R the swap).
/// phi1, phi2 are optional higher-order hooks (zero by default; the truncated
/// model then has an exact closed-form inverse).
///
/// Homoclinic point coordinates. The swap pairing R(M1+) = M2-, R(M1-) = M2+
/// fixes y2- = x1+ and x2+ = y1-. Figure-8: x1+ = y2- = -alpha1 < 0 and
/// y1- = x2+ = alpha2 > 0. Figure-fish: all four positive.
class GlobalMapParams {
 public:
  GlobalMapParams(double a, double b, double c, double d, double mu, double alpha1, double alpha2,
                  Configuration config, Orientation orient, double pi_radius = 0.1)
      : a_(a), b_(b), c_(c), d_(d), mu_(mu), alpha1_(alpha1), alpha2_(alpha2),
        config_(config), orient_(orient), pi_radius_(pi_radius) {
    if (d_ == 0.0) throw std::invalid_argument("GlobalMapParams: d must be nonzero");
    if (b_ * c_ == 0.0) throw std::invalid_argument("GlobalMapParams: b*c must be nonzero");
    const double j1 = -b_ * c_;
    if (orient_ == Orientation::orientable) {
      if (!(j1 > 0.0 && j1 < 1.0))
        throw std::invalid_argument("GlobalMapParams: orientable case needs J1 = -bc in (0,1)");
    } else {
      if (!(j1 < 0.0) || j1 == -1.0)
        throw std::invalid_argument(
            "GlobalMapParams: nonorientable case needs J1 = -bc negative and != -1");
    }
    if (!(alpha1_ > 0.0 && alpha2_ > 0.0))
      throw std::invalid_argument("GlobalMapParams: alpha1, alpha2 must be positive");
    if (!(pi_radius_ > 0.0))
      throw std::invalid_argument("GlobalMapParams: pi_radius must be positive");
  }

  static GlobalMapParams reference() {
    return GlobalMapParams(0.2, 1.0, -0.5, 1.0, 0.0, 1.0, 1.0, Configuration::figure8,
                           Orientation::orientable);
  }

  GlobalMapParams with_mu(double mu) const {
    GlobalMapParams g = *this;
    g.mu_ = mu;
    return g;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }
  double mu() const { return mu_; }
  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  Configuration configuration() const { return config_; }
  Orientation orientation() const { return orient_; }
  double pi_radius() const { return pi_radius_; }
  double j1() const { return -b_ * c_; }

  double x1p() const { return config_ == Configuration::figure8 ? -alpha1_ : alpha1_; }
  double y1m() const { return alpha2_; }
  double x2p() const { return y1m(); }
  double y2m() const { return x1p(); }

  Box pi1_plus() const { return Box::centered({x1p(), 0.0}, pi_radius_); }
  Box pi1_minus() const { return Box::centered({0.0, y1m()}, pi_radius_); }
  Box pi2_plus() const { return Box::centered({x2p(), 0.0}, pi_radius_); }
  Box pi2_minus() const { return Box::centered({0.0, y2m()}, pi_radius_); }

  // Optional higher-order terms: phi1 = p20 x^2 + p02 eta^2,
  // phi2 = q20 x^2 + q11 x eta + q03 eta^3 with eta = y - y1-.
  GlobalMapParams with_cubic_hooks(double p20, double p02, double q20, double q11,
                                   double q03) const {
    GlobalMapParams g = *this;
    g.p20_ = p20;
    g.p02_ = p02;
    g.q20_ = q20;
    g.q11_ = q11;
    g.q03_ = q03;
    return g;
  }
  bool has_hooks() const { return p20_ != 0 || p02_ != 0 || q20_ != 0 || q11_ != 0 || q03_ != 0; }

  double p20_ = 0, p02_ = 0, q20_ = 0, q11_ = 0, q03_ = 0;

 private:
  double a_, b_, c_, d_, mu_, alpha1_, alpha2_;
  Configuration config_;
  Orientation orient_;
  double pi_radius_;
};

inline Point2 t1_apply(const GlobalMapParams& g, Point2 p) {
  const double eta = p.y - g.y1m();
  double x = g.x1p() + g.a() * p.x + g.b() * eta;
  double y = g.mu() + g.c() * p.x + g.d() * eta * eta;
  if (g.has_hooks()) {
    x += g.p20_ * p.x * p.x + g.p02_ * eta * eta;
    y += g.q20_ * p.x * p.x + g.q11_ * p.x * eta + g.q03_ * eta * eta * eta;
  }
  return {x, y};
}

inline Jacobian2 t1_jacobian(const GlobalMapParams& g, Point2 p) {
  const double eta = p.y - g.y1m();
  Jacobian2 J{g.a(), g.b(), g.c(), 2.0 * g.d() * eta};
  if (g.has_hooks()) {
    J.a11 += 2.0 * g.p20_ * p.x;
    J.a12 += 2.0 * g.p02_ * eta;
    J.a21 += 2.0 * g.q20_ * p.x + g.q11_ * eta;
    J.a22 += g.q11_ * p.x + 3.0 * g.q03_ * eta * eta;
  }
  return J;
}

/// Closed-form inverse of the truncated T1. Substituting
/// x = (y' - mu - d*eta^2)/c into the first component gives
///   (a d / c) eta^2 - b eta + (x' - x1+) - (a/c)(y' - mu) = 0,
/// solved for eta = y - y1- by the root closest to zero; |a| < 1e-14 uses the
/// exactly linear branch. With cubic hooks the closed form seeds a Newton
/// polish on the full map. nullopt when the discriminant is negative (point
/// not in the image).
inline std::optional<Point2> t1_inverse(const GlobalMapParams& g, Point2 p) {
  const double beta = (p.x - g.x1p()) - (g.a() / g.c()) * (p.y - g.mu());
  double eta;
  if (std::abs(g.a()) < 1e-14) {
    eta = beta / g.b();
  } else {
    const double q = g.a() * g.d() / g.c();
    const double disc = g.b() * g.b() - 4.0 * q * beta;
    if (disc < 0.0) return std::nullopt;
    // Root of smaller |eta| (stable quadratic formula).
    const double denom = g.b() + (g.b() >= 0 ? 1.0 : -1.0) * std::sqrt(disc);
    if (denom == 0.0) return std::nullopt;
    eta = 2.0 * beta / denom;
  }
  const double x = (p.y - g.mu() - g.d() * eta * eta) / g.c();
  Point2 q{x, g.y1m() + eta};
  if (!g.has_hooks()) return q;
  // Newton polish against the full map.
  for (int it = 0; it < 30; ++it) {
    const Point2 r = t1_apply(g, q) - p;
    if (max_norm(r) < 1e-13) return q;
    const Jacobian2 J = t1_jacobian(g, q);
    const double det = J.det();
    if (det == 0.0) return std::nullopt;
    q = q - Jacobian2{J.a22 / det, -J.a12 / det, -J.a21 / det, J.a11 / det}.apply(r);
  }
  if (max_norm(t1_apply(g, q) - p) < 1e-10) return q;
  return std::nullopt;
}

/// T2 through the reversibility identity T2 = R T1^{-1} R^{-1}.
inline std::optional<Point2> t2_apply(const GlobalMapParams& g, Point2 p) {
  const auto q = t1_inverse(g, {p.y, p.x});
  if (!q) return std::nullopt;
  return Point2{q->y, q->x};
}

inline Point2 t2_inverse(const GlobalMapParams& g, Point2 p) {
  const Point2 q = t1_apply(g, {p.y, p.x});
  return {q.y, q.x};
}

inline std::optional<Jacobian2> t2_jacobian(const GlobalMapParams& g, Point2 p) {
  const auto q = t1_inverse(g, {p.y, p.x});
  if (!q) return std::nullopt;
  const Jacobian2 Jinv = t1_jacobian(g, *q).inverse();
  // Conjugation by the swap exchanges rows and columns.
  return Jacobian2{Jinv.a22, Jinv.a21, Jinv.a12, Jinv.a11};
}

/// Quadratic-tangency residuals of the y-component G(y) = t1_apply(.,(0,y)).y
/// at mu = 0: (|dG/dy(y1-)|, |d2G/dy2(y1-) - 2d|), by central differences.
/// The first derivative needs a small step (its h^2 error carries the cubic
/// hook); the second difference is exact through cubic terms, so a large step
/// keeps it at rounding level.
inline std::pair<double, double> tangency_residual(const GlobalMapParams& g_in) {
  const GlobalMapParams g = g_in.with_mu(0.0);
  const double y0 = g.y1m(), h1 = 1e-4, h2 = 1e-2;
  auto G = [&](double y) { return t1_apply(g, {0.0, y}).y; };
  const double d1 = (G(y0 + h1) - G(y0 - h1)) / (2 * h1);
  const double d2 = (G(y0 + h2) - 2.0 * G(y0) + G(y0 - h2)) / (h2 * h2);
  return {std::abs(d1), std::abs(d2 - 2.0 * g.d())};
}

inline PlanarMapHandle make_t1_handle(const GlobalMapParams& g, double slack = 1.0) {
  PlanarMapHandle h;
  h.name = "T1";
  h.eval = [g, slack](Point2 p) -> std::optional<Point2> {
    if (!g.pi1_minus().contains(p, slack)) return std::nullopt;
    return t1_apply(g, p);
  };
  h.jacobian = [g, slack](Point2 p) -> std::optional<Jacobian2> {
    if (!g.pi1_minus().contains(p, slack)) return std::nullopt;
    return t1_jacobian(g, p);
  };
  h.inverse = [g](Point2 p) { return t1_inverse(g, p); };
  return h;
}

inline PlanarMapHandle make_t2_handle(const GlobalMapParams& g, double slack = 1.0) {
  PlanarMapHandle h;
  h.name = "T2";
  h.eval = [g, slack](Point2 p) -> std::optional<Point2> {
    if (!g.pi2_minus().contains(p, slack)) return std::nullopt;
    return t2_apply(g, p);
  };
  h.jacobian = [g, slack](Point2 p) -> std::optional<Jacobian2> {
    if (!g.pi2_minus().contains(p, slack)) return std::nullopt;
    return t2_jacobian(g, p);
  };
  h.inverse = [g](Point2 p) -> std::optional<Point2> { return t2_inverse(g, p); };
  return h;
}

}  // namespace revmix
