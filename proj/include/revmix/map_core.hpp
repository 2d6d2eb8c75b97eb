#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "revmix/core.hpp"

namespace revmix {

/// Uniform interface for a planar map: evaluation, analytic Jacobian, optional
/// inverse. A nullopt result means the point left the map's domain. Handles are
/// immutable after construction; copying is cheap and thread-safe.
struct PlanarMapHandle {
  std::string name;
  std::function<std::optional<Point2>(Point2)> eval;
  std::function<std::optional<Jacobian2>(Point2)> jacobian;
  std::function<std::optional<Point2>(Point2)> inverse;  // may be empty

  bool has_inverse() const { return static_cast<bool>(inverse); }
};

/// An involution of the plane with a one-dimensional fixed line.
struct InvolutionHandle {
  std::string name;
  std::string fixed_line;  // human-readable description
  std::function<Point2(Point2)> eval;
};

/// The standard linear involution (x, y) -> (y, x).
inline InvolutionHandle swap_involution() {
  return {"swap", "y = x", [](Point2 p) { return Point2{p.y, p.x}; }};
}

inline Point2 apply_involution(const InvolutionHandle& inv, Point2 p) { return inv.eval(p); }

struct ReversibilityReport {
  double max_residual = 0.0;
  int excluded = 0;  // points where f or its composition left the domain
  int total = 0;
};

/// Max over the sample of ||f(R(f(p))) - R(p)||; zero iff f is R-reversible
/// on the sample. Out-of-domain points are skipped and counted.
inline ReversibilityReport reversibility_residual(const PlanarMapHandle& f,
                                                  const InvolutionHandle& inv,
                                                  const std::vector<Point2>& pts) {
  ReversibilityReport rep;
  rep.total = static_cast<int>(pts.size());
  for (const Point2& p : pts) {
    const auto fp = f.eval(p);
    if (!fp) {
      ++rep.excluded;
      continue;
    }
    const auto frfp = f.eval(inv.eval(*fp));
    if (!frfp || !frfp->finite()) {
      ++rep.excluded;
      continue;
    }
    rep.max_residual = std::max(rep.max_residual, distance(*frfp, inv.eval(p)));
  }
  return rep;
}

/// Max entrywise deviation between the analytic Jacobian and central finite
/// differences with step h. Returns nullopt if the stencil leaves the domain.
inline std::optional<double> jacobian_check(const PlanarMapHandle& f, Point2 p, double h) {
  if (h <= 0.0) throw std::invalid_argument("jacobian_check: h must be positive");
  const auto J = f.jacobian(p);
  const auto xp = f.eval({p.x + h, p.y});
  const auto xm = f.eval({p.x - h, p.y});
  const auto yp = f.eval({p.x, p.y + h});
  const auto ym = f.eval({p.x, p.y - h});
  if (!J || !xp || !xm || !yp || !ym) return std::nullopt;
  const Jacobian2 fd{(xp->x - xm->x) / (2 * h), (yp->x - ym->x) / (2 * h),
                     (xp->y - xm->y) / (2 * h), (yp->y - ym->y) / (2 * h)};
  double dev = 0.0;
  dev = std::max(dev, std::abs(fd.a11 - J->a11));
  dev = std::max(dev, std::abs(fd.a12 - J->a12));
  dev = std::max(dev, std::abs(fd.a21 - J->a21));
  dev = std::max(dev, std::abs(fd.a22 - J->a22));
  return dev;
}

/// Handle for a map defined by total (everywhere-valid) closed-form rules.
inline PlanarMapHandle make_total_handle(std::string name,
                                         std::function<Point2(Point2)> eval,
                                         std::function<Jacobian2(Point2)> jac,
                                         std::function<Point2(Point2)> inv = nullptr) {
  PlanarMapHandle h;
  h.name = std::move(name);
  h.eval = [e = std::move(eval)](Point2 p) -> std::optional<Point2> { return e(p); };
  h.jacobian = [j = std::move(jac)](Point2 p) -> std::optional<Jacobian2> { return j(p); };
  if (inv) h.inverse = [i = std::move(inv)](Point2 p) -> std::optional<Point2> { return i(p); };
  return h;
}

}  // namespace revmix
