#pragma once

#include <optional>
#include <random>
#include <vector>

#include "revmix/core.hpp"
#include "revmix/map_core.hpp"

namespace revmix {

/// Local saddle map in main normal form,
///
///   x' = lambda * x * (1 + h1(x,y) * x * y)
///   y' = (1/lambda) * y * (1 + h2(x,y) * x * y),     h1(0) = -h2(0),
///
/// parametrized through a single polynomial phi of the product s = x*y with
/// phi(0) = 1, via x' = lambda*x*phi(s), y' = y/(lambda*phi(s)). This realizes
/// h1(s) = (phi(s)-1)/s (a polynomial) and h2(s) = -h1(s)/phi(s), makes the
/// product x*y an exact invariant, and is reversible with respect to the swap
/// (x,y) -> (y,x) to machine precision: f composed with the swap is an exact
/// involution. An independently chosen polynomial pair (h1, h2) with only
/// h1(0) = -h2(0) does not achieve the reversibility gate below (see tests).
class SaddleNormalForm {
 public:
  SaddleNormalForm(double lambda, Poly1 phi, double neighborhood_radius)
      : lambda_(lambda), phi_(std::move(phi)), radius_(neighborhood_radius) {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw std::invalid_argument("SaddleNormalForm: lambda must be in (0,1)");
    if (!(radius_ > 0.0))
      throw std::invalid_argument("SaddleNormalForm: neighborhood radius must be positive");
    if (phi_.c.empty() || phi_.c.front() != 1.0)
      throw std::invalid_argument("SaddleNormalForm: phi(0) must equal 1");
    // phi must stay well away from zero on the products reachable with slack 2.
    const double smax = 4.0 * radius_ * radius_;
    for (double s = -smax; s <= smax; s += smax / 64.0)
      if (phi_.eval(s) < 0.25)
        throw std::invalid_argument("SaddleNormalForm: phi too close to zero on the domain");
    assert_reversible();
  }

  /// Saddle with constant h1 = h0 (phi(s) = 1 + h0*s).
  static SaddleNormalForm with_h0(double lambda, double h0, double radius) {
    return SaddleNormalForm(lambda, Poly1{{1.0, h0}}, radius);
  }

  static SaddleNormalForm linear(double lambda, double radius) {
    return SaddleNormalForm(lambda, Poly1{{1.0}}, radius);
  }

  /// Reference instance: lambda = 1/2, h0 = 0.1, radius covering the
  /// homoclinic boxes of the reference global map.
  static SaddleNormalForm reference() { return with_h0(0.5, 0.1, 1.25); }

  double lambda() const { return lambda_; }
  double radius() const { return radius_; }
  Box domain() const { return Box::centered({0, 0}, radius_); }
  bool is_linear() const { return phi_.c.size() <= 1; }

  double phi(double s) const { return phi_.eval(s); }
  double dphi(double s) const { return phi_.deriv(s); }

  /// h1 as a function of the product s = x*y (exact polynomial division).
  double h1(double s) const {
    double v = 0.0;
    for (std::size_t i = phi_.c.size(); i-- > 1;) v = v * s + phi_.c[i];
    return v;
  }
  double h2(double s) const { return -h1(s) / phi(s); }

  /// Coefficients of h1 in s (tail of phi).
  std::vector<double> h1_coeffs() const {
    if (phi_.c.size() <= 1) return {0.0};
    return std::vector<double>(phi_.c.begin() + 1, phi_.c.end());
  }

 private:
  void assert_reversible() {
    // Numerical gate: instances failing 1e-9 on the domain are rejected.
    std::mt19937_64 rng(0x5add1eULL);
    std::uniform_real_distribution<double> u(-radius_, radius_);
    const InvolutionHandle R = swap_involution();
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Point2 p{u(rng), u(rng)};
      const Point2 fp = apply_raw(p);
      const Point2 frfp = apply_raw(R.eval(fp));
      worst = std::max(worst, distance(frfp, R.eval(p)));
    }
    if (worst > 1e-9)
      throw std::invalid_argument("SaddleNormalForm: instance is not swap-reversible");
  }

  Point2 apply_raw(Point2 p) const {
    const double f = phi(p.x * p.y);
    return {lambda_ * p.x * f, p.y / (lambda_ * f)};
  }

  friend Point2 t0_apply(const SaddleNormalForm&, Point2);
  friend Point2 t0_inverse(const SaddleNormalForm&, Point2);

  double lambda_;
  Poly1 phi_;
  double radius_;
};

inline bool t0_in_domain(const SaddleNormalForm& nf, Point2 p, double slack = 1.0) {
  return nf.domain().contains(p, slack);
}

/// One application of the local map. Total formula; domain flags are the
/// caller's business (t0_in_domain / the iterators).
inline Point2 t0_apply(const SaddleNormalForm& nf, Point2 p) {
  const double f = nf.phi(p.x * p.y);
  return {nf.lambda() * p.x * f, p.y / (nf.lambda() * f)};
}

/// Closed-form inverse; uses that x*y is preserved by the map.
inline Point2 t0_inverse(const SaddleNormalForm& nf, Point2 p) {
  const double f = nf.phi(p.x * p.y);
  return {p.x / (nf.lambda() * f), p.y * nf.lambda() * f};
}

inline Jacobian2 t0_jacobian(const SaddleNormalForm& nf, Point2 p) {
  const double s = p.x * p.y;
  const double f = nf.phi(s), df = nf.dphi(s), lam = nf.lambda();
  return {lam * (f + s * df), lam * p.x * p.x * df,
          -(p.y * p.y * df) / (lam * f * f), (f - s * df) / (lam * f * f)};
}

struct IterateResult {
  Point2 point;
  bool ok = false;
  int escaped_at = -1;  // first step whose input left the (slack-inflated) domain
};

/// j-fold composition of t0_apply with domain tracking.
inline IterateResult t0_iterate_direct(const SaddleNormalForm& nf, Point2 p, int j,
                                       double slack = 1.0) {
  IterateResult r;
  r.point = p;
  for (int l = 0; l < j; ++l) {
    if (!t0_in_domain(nf, r.point, slack)) {
      r.escaped_at = l;
      return r;
    }
    r.point = t0_apply(nf, r.point);
  }
  if (!r.point.finite()) {
    r.escaped_at = j;
    return r;
  }
  r.ok = true;
  return r;
}

/// Chain-rule Jacobian of the j-fold iterate.
inline std::optional<Jacobian2> t0_iterate_jacobian(const SaddleNormalForm& nf, Point2 p, int j,
                                                    double slack = 1.0) {
  Jacobian2 J = Jacobian2::identity();
  Point2 q = p;
  for (int l = 0; l < j; ++l) {
    if (!t0_in_domain(nf, q, slack)) return std::nullopt;
    J = t0_jacobian(nf, q) * J;
    q = t0_apply(nf, q);
  }
  return J;
}

struct CrossResult {
  double xj = 0.0;
  double y0 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Cross-form iterate: given the entry abscissa x0 and the exit ordinate yj,
/// find the matching orbit data (xj, y0). Damped Newton on the scalar unknown
/// y0 (shooting on the j-th ordinate), initialized from the linear predictor
/// y0 = lambda^j * yj. Residual target 1e-12.
inline CrossResult t0_cross_iterate(const SaddleNormalForm& nf, double x0, double yj, int j,
                                    double slack = 2.0) {
  if (j < 1) throw std::invalid_argument("t0_cross_iterate: j must be >= 1");
  CrossResult res;
  const double lamj = ipow(nf.lambda(), j);

  struct Shot {
    double yj_val, dyj_dy0, xj;
  };
  auto shoot = [&](double y) -> std::optional<Shot> {
    Point2 q{x0, y};
    double tangent_x = 0.0, tangent_y = 1.0;  // d(orbit)/dy0
    for (int l = 0; l < j; ++l) {
      if (!t0_in_domain(nf, q, slack)) return std::nullopt;
      const Jacobian2 J = t0_jacobian(nf, q);
      const double tx = J.a11 * tangent_x + J.a12 * tangent_y;
      const double ty = J.a21 * tangent_x + J.a22 * tangent_y;
      tangent_x = tx;
      tangent_y = ty;
      q = t0_apply(nf, q);
    }
    if (!q.finite()) return std::nullopt;
    return Shot{q.y, tangent_y, q.x};
  };

  double y0 = lamj * yj;  // linear predictor
  auto cur = shoot(y0);
  if (!cur) return res;
  // Iterate to the floor (downstream rescaled quantities amplify by
  // lambda^{-j}); accept anything below the 1e-12 contract on a stall.
  const double tol = 1e-14 * std::max(1.0, std::abs(yj));
  const double contract_tol = 1e-12 * std::max(1.0, std::abs(yj));
  auto accept = [&](double fy) {
    res.y0 = y0;
    res.xj = cur->xj;
    res.converged = std::abs(fy) < contract_tol;
    return res;
  };
  for (res.iterations = 0; res.iterations < 50; ++res.iterations) {
    const double fy = cur->yj_val - yj;
    if (std::abs(fy) < tol) return accept(fy);
    if (cur->dyj_dy0 == 0.0) return accept(fy);
    const double step = -fy / cur->dyj_dy0;
    // Damping factor 0.5, keeping the shooting residual decreasing.
    double factor = 1.0;
    bool advanced = false;
    for (int d = 0; d < 20; ++d) {
      const double y_try = y0 + factor * step;
      const auto st = shoot(y_try);
      if (st && std::abs(st->yj_val - yj) < std::abs(fy)) {
        y0 = y_try;
        cur = st;
        advanced = true;
        break;
      }
      factor *= 0.5;
    }
    if (!advanced) return accept(fy);
  }
  return accept(cur->yj_val - yj);
}

struct HkProbeResult {
  double overall_max = 0.0;
  std::vector<double> per_j_max;  // index 0 <-> j = 1
};

/// Empirical h_j values (x_j/(lambda^j x_0) - 1)/(j lambda^j) over a grid of
/// cross data (x0, yj) in `box`; boundedness of the per-j maxima across j is
/// the testable content of the cross-form iterate structure.
inline HkProbeResult hk_bound_probe(const SaddleNormalForm& nf, int j_max, const Box& box,
                                    int grid = 9) {
  HkProbeResult out;
  const auto pts = grid_points(box, grid);
  for (int j = 1; j <= j_max; ++j) {
    const double lamj = ipow(nf.lambda(), j);
    double worst = 0.0;
    for (const Point2& q : pts) {
      const double x0 = q.x, yj = q.y;
      if (std::abs(x0) < 1e-8) continue;  // division guard
      const CrossResult cr = t0_cross_iterate(nf, x0, yj, j);
      if (!cr.converged) continue;
      const double hj = (cr.xj / (lamj * x0) - 1.0) / (j * lamj);
      worst = std::max(worst, std::abs(hj));
    }
    out.per_j_max.push_back(worst);
    out.overall_max = std::max(out.overall_max, worst);
  }
  return out;
}

/// Handle over the local map restricted to its neighborhood box.
inline PlanarMapHandle make_t0_handle(const SaddleNormalForm& nf, double slack = 1.0) {
  PlanarMapHandle h;
  h.name = "T0";
  h.eval = [nf, slack](Point2 p) -> std::optional<Point2> {
    if (!t0_in_domain(nf, p, slack)) return std::nullopt;
    return t0_apply(nf, p);
  };
  h.jacobian = [nf, slack](Point2 p) -> std::optional<Jacobian2> {
    if (!t0_in_domain(nf, p, slack)) return std::nullopt;
    return t0_jacobian(nf, p);
  };
  h.inverse = [nf, slack](Point2 p) -> std::optional<Point2> {
    if (!t0_in_domain(nf, p, slack)) return std::nullopt;
    return t0_inverse(nf, p);
  };
  return h;
}

}  // namespace revmix
