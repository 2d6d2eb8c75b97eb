#pragma once

#include <optional>
#include <string>
#include <vector>

#include "revmix/core.hpp"
#include "revmix/global_maps.hpp"
#include "revmix/map_core.hpp"

namespace revmix {

/// Standard Henon map  x' = y,  y' = M1 + M2 x - y^2.  Constant Jacobian -M2.
struct HenonParams {
  double M1 = 0.0;
  double M2 = 0.0;
};

inline Point2 henon_apply(const HenonParams& hp, Point2 p) {
  return {p.y, hp.M1 + hp.M2 * p.x - p.y * p.y};
}

inline Jacobian2 henon_jacobian(const HenonParams& hp, Point2 p) {
  return {0.0, 1.0, hp.M2, -2.0 * p.y};
}

inline std::optional<Point2> henon_inverse(const HenonParams& hp, Point2 p) {
  if (hp.M2 == 0.0) return std::nullopt;
  return Point2{(p.y - hp.M1 + p.x * p.x) / hp.M2, p.x};
}

/// Fixed points x = y = s of the Henon map: roots of s^2 + (1 - M2) s - M1.
inline std::vector<Point2> henon_fixed_points(const HenonParams& hp) {
  const double B = 1.0 - hp.M2;
  const double D = B * B + 4.0 * hp.M1;
  std::vector<Point2> out;
  if (D < 0.0) return out;
  if (D == 0.0) {
    out.push_back({-B / 2, -B / 2});
    return out;
  }
  const double r = std::sqrt(D);
  out.push_back({(-B + r) / 2, (-B + r) / 2});
  out.push_back({(-B - r) / 2, (-B - r) / 2});
  return out;
}

/// Product map
///
///   H:  x' = Mt + ct x - y^2,     ct y' = -Mt + y + x'^2,
///
/// evaluated sequentially (x' first). Exactly symplectic (det J = 1) and
/// swap-reversible (H R H = R); the inverse is closed-form.
struct ProductHenonParams {
  double c_tilde;
  double M_tilde;
  ProductHenonParams(double ct, double Mt) : c_tilde(ct), M_tilde(Mt) {
    if (ct == 0.0) throw std::invalid_argument("ProductHenonParams: c_tilde must be nonzero");
  }
};

inline Point2 h_apply(const ProductHenonParams& hp, Point2 p) {
  const double xn = hp.M_tilde + hp.c_tilde * p.x - p.y * p.y;
  const double yn = (-hp.M_tilde + p.y + xn * xn) / hp.c_tilde;
  return {xn, yn};
}

inline Jacobian2 h_jacobian(const ProductHenonParams& hp, Point2 p) {
  const double xn = hp.M_tilde + hp.c_tilde * p.x - p.y * p.y;
  return {hp.c_tilde, -2.0 * p.y, 2.0 * xn, (1.0 - 4.0 * xn * p.y) / hp.c_tilde};
}

inline Point2 h_inverse(const ProductHenonParams& hp, Point2 p) {
  const double y = hp.c_tilde * p.y + hp.M_tilde - p.x * p.x;
  const double x = (p.x - hp.M_tilde + y * y) / hp.c_tilde;
  return {x, y};
}

/// Symmetric fixed points (x, x): roots of x^2 + (1 - ct) x - Mt = 0.
/// Empty exactly when Mt < -(ct - 1)^2 / 4 (below the fold curve F0).
inline std::vector<Point2> h_symmetric_fixed_points(const ProductHenonParams& hp) {
  const double B = 1.0 - hp.c_tilde;
  const double D = B * B + 4.0 * hp.M_tilde;
  std::vector<Point2> out;
  if (D < 0.0) return out;
  if (D == 0.0) {
    out.push_back({-B / 2, -B / 2});
    return out;
  }
  const double r = std::sqrt(D);
  out.push_back({(-B + r) / 2, (-B + r) / 2});
  out.push_back({(-B - r) / 2, (-B - r) / 2});
  return out;
}

/// Asymmetric fixed points lie on the line x + y = 1 - ct:
/// x^2 - (1 - ct) x + ((1 - ct)^2 - Mt) = 0; real iff Mt >= 3 (1-ct)^2 / 4
/// (the pitchfork curve), and the two roots are a swap couple.
inline std::vector<Point2> h_asymmetric_fixed_points(const ProductHenonParams& hp) {
  const double B = 1.0 - hp.c_tilde;
  const double D = 4.0 * hp.M_tilde - 3.0 * B * B;
  std::vector<Point2> out;
  if (D <= 0.0) return out;  // at D == 0 they coincide with the symmetric point
  const double r = std::sqrt(D);
  const double x1 = (B + r) / 2, x2 = (B - r) / 2;
  out.push_back({x1, B - x1});
  out.push_back({x2, B - x2});
  return out;
}

/// Trace of the Jacobian of H at a symmetric fixed point (x, x).
inline double h_symmetric_trace(const ProductHenonParams& hp, double x) {
  return hp.c_tilde + (1.0 - 4.0 * x * x) / hp.c_tilde;
}

/// Symmetric 2-cycles of H in closed form. Diagonal pairs {(a,a),(b,b)} solve
/// t^2 - (ct+1) t + (ct+1-Mt) = 0 (they branch off the fixed point exactly on
/// the PD1 curve); swapped pairs {(x,y),(y,x)} have y solving
/// y^2 + (1+ct) y + ct(1+ct) - Mt = 0 with x = -(1+ct) - y (branching on PD2).
inline std::vector<Point2> h_period2_points(const ProductHenonParams& hp) {
  std::vector<Point2> out;
  const double ct = hp.c_tilde;
  {
    const double B = ct + 1.0;
    const double D = B * B - 4.0 * (B - hp.M_tilde);
    if (D > 0.0) {
      const double r = std::sqrt(D);
      out.push_back({(B + r) / 2, (B + r) / 2});
      out.push_back({(B - r) / 2, (B - r) / 2});
    }
  }
  {
    const double B = 1.0 + ct;
    const double D = B * B - 4.0 * (ct * B - hp.M_tilde);
    if (D > 0.0) {
      const double r = std::sqrt(D);
      for (double y : {(-B + r) / 2, (-B - r) / 2}) out.push_back({-B - y, y});
    }
  }
  return out;
}

/// 2-cycles of the Henon map: the two orbit abscissas solve
/// t^2 - (1-M2) t + ((1-M2)^2 - M1) = 0; real beyond the flip curve.
inline std::vector<Point2> henon_period2_points(const HenonParams& hp) {
  std::vector<Point2> out;
  const double s = 1.0 - hp.M2;
  const double D = s * s - 4.0 * (s * s - hp.M1);
  if (D <= 0.0) return out;
  const double r = std::sqrt(D);
  const double a = (s + r) / 2, b = (s - r) / 2;
  out.push_back({a, b});
  out.push_back({b, a});
  return out;
}

enum class LimitFamily { henon, productH };

/// Bifurcation-curve identifiers. L_plus1 / L_minus1 belong to the Henon
/// family (abscissa M2); the others to the product family (abscissa ct).
enum class CurveId { L_plus1, L_minus1, F0, PD1, PD2, PF, PD_asym };

inline const char* to_string(CurveId id) {
  switch (id) {
    case CurveId::L_plus1: return "L+1";
    case CurveId::L_minus1: return "L-1";
    case CurveId::F0: return "F0";
    case CurveId::PD1: return "PD1";
    case CurveId::PD2: return "PD2";
    case CurveId::PF: return "PF";
    case CurveId::PD_asym: return "PDasym";
  }
  return "?";
}

/// Ordinate (M1 or Mt) of the named curve at the given abscissa (M2 or ct),
/// exactly as printed. The product-family curves require the abscissa sign to
/// match the orientation (ct < 0 orientable, ct > 0 nonorientable); PD_asym
/// exists only for ct < 0.
inline double curve_value(CurveId id, LimitFamily family, double abscissa,
                          Orientation orient = Orientation::orientable) {
  if (family == LimitFamily::henon) {
    const double M2 = abscissa;
    switch (id) {
      case CurveId::L_plus1: return -(1.0 + M2) * (1.0 + M2) / 4.0;
      case CurveId::L_minus1: return 3.0 * (1.0 + M2) * (1.0 + M2) / 4.0;
      default:
        throw std::invalid_argument("curve_value: curve not defined for the Henon family");
    }
  }
  const double ct = abscissa;
  const bool sign_ok = (orient == Orientation::orientable) ? (ct < 0.0) : (ct > 0.0);
  if (!sign_ok)
    throw std::invalid_argument("curve_value: abscissa sign inconsistent with orientation");
  switch (id) {
    case CurveId::F0: return -(ct - 1.0) * (ct - 1.0) / 4.0;
    case CurveId::PD1: return 1.0 - (ct - 1.0) * (ct - 1.0) / 4.0;
    case CurveId::PD2: return (ct + 1.0) * (3.0 * ct - 1.0) / 4.0;
    case CurveId::PF: return 3.0 * (ct - 1.0) * (ct - 1.0) / 4.0;
    case CurveId::PD_asym:
      if (ct > 0.0)
        throw std::invalid_argument("curve_value: PD_asym is absent for c_tilde > 0");
      return (1.0 - 3.0 * ct) * (3.0 - ct) / 4.0;
    default:
      throw std::invalid_argument("curve_value: curve not defined for the product family");
  }
}

/// Fold / flip loci recomputed from the implemented maps' fixed-point algebra.
/// For the Henon form as implemented the fold is 4 M1 = -(1 - M2)^2 and the
/// flip 4 M1 = 3 (1 - M2)^2, i.e. the printed L curves with M2 -> -M2. The
/// product-family loci agree with the printed F0/PD1/PD2 exactly.
inline double derived_fold(LimitFamily family, double abscissa) {
  if (family == LimitFamily::henon) {
    const double M2 = abscissa;
    return -(1.0 - M2) * (1.0 - M2) / 4.0;
  }
  const double ct = abscissa;
  return -(ct - 1.0) * (ct - 1.0) / 4.0;
}

inline double derived_flip(LimitFamily family, double abscissa) {
  if (family == LimitFamily::henon) {
    const double M2 = abscissa;
    return 3.0 * (1.0 - M2) * (1.0 - M2) / 4.0;
  }
  // First -1 crossing of the upper symmetric fixed point, at x = -|ct+1|/2.
  const double ct = abscissa;
  const double x = -std::abs(ct + 1.0) / 2.0;
  return x * x + (1.0 - ct) * x;
}

/// Both -1 crossings of the symmetric branch, x = -(ct+1)/2 and x = +(ct+1)/2;
/// they reproduce the printed PD2 and PD1 values.
inline std::pair<double, double> derived_symmetric_flips(double ct) {
  auto m = [&](double x) { return x * x + (1.0 - ct) * x; };
  return {m(-(ct + 1.0) / 2.0), m((ct + 1.0) / 2.0)};
}

inline PlanarMapHandle make_henon_handle(const HenonParams& hp) {
  PlanarMapHandle h;
  h.name = "henon";
  h.eval = [hp](Point2 p) -> std::optional<Point2> { return henon_apply(hp, p); };
  h.jacobian = [hp](Point2 p) -> std::optional<Jacobian2> { return henon_jacobian(hp, p); };
  if (hp.M2 != 0.0) h.inverse = [hp](Point2 p) { return henon_inverse(hp, p); };
  return h;
}

inline PlanarMapHandle make_h_handle(const ProductHenonParams& hp) {
  PlanarMapHandle h;
  h.name = "productH";
  h.eval = [hp](Point2 p) -> std::optional<Point2> { return h_apply(hp, p); };
  h.jacobian = [hp](Point2 p) -> std::optional<Jacobian2> { return h_jacobian(hp, p); };
  h.inverse = [hp](Point2 p) -> std::optional<Point2> { return h_inverse(hp, p); };
  return h;
}

}  // namespace revmix
