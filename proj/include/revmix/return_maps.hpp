#pragma once

#include <optional>
#include <string>
#include <vector>

#include "revmix/core.hpp"
#include "revmix/global_maps.hpp"
#include "revmix/limit_maps.hpp"
#include "revmix/map_core.hpp"
#include "revmix/saddle_local.hpp"

namespace revmix {

/// Local saddle form plus global-map coefficients: everything a first-return
/// map needs. Immutable; mu updates create a new model.
struct HomoclinicModel {
  SaddleNormalForm saddle;
  GlobalMapParams global;

  HomoclinicModel with_mu(double mu) const { return {saddle, global.with_mu(mu)}; }
  static HomoclinicModel reference() {
    return {SaddleNormalForm::reference(), GlobalMapParams::reference()};
  }
};

enum class ReturnKind { T1k, T2k, T12km };

inline const char* to_string(ReturnKind k) {
  switch (k) {
    case ReturnKind::T1k: return "T1k";
    case ReturnKind::T2k: return "T2k";
    case ReturnKind::T12km: return "T12km";
  }
  return "?";
}

/// Which first-return map, with its local pass lengths and the splitting
/// parameter. m is ignored unless kind == T12km.
struct ReturnMapSpec {
  ReturnKind kind = ReturnKind::T1k;
  int k = 0;
  int m = 0;
  double mu = 0.0;
};

inline void validate_spec(const HomoclinicModel& model, const ReturnMapSpec& spec) {
  if (spec.k < 0 || (spec.kind == ReturnKind::T12km && spec.m < 0))
    throw std::invalid_argument("ReturnMapSpec: k, m must be nonnegative");
  // Double precision bounds the usable pass length: the parameter rescale
  // amplifies by lambda^{-2k}, so lambda^{2k} must stay well above epsilon.
  const int kmax = spec.kind == ReturnKind::T12km ? std::max(spec.k, spec.m) : spec.k;
  if (ipow(model.saddle.lambda(), 2 * kmax) < 1e-14)
    throw std::invalid_argument("ReturnMapSpec: k too large for double precision");
}

struct ChainOptions {
  double slack_v = 2.0;   // inflation of the saddle neighborhood during local passes
  double slack_pi = 2.0;  // inflation of the homoclinic boxes
  bool check_pi = true;
};

enum class ChainFail { none, escape_local, outside_pi, global_undefined };

struct ChainResult {
  std::optional<Point2> point;
  ChainFail fail = ChainFail::none;
  int step = -1;  // local-pass step at which the orbit escaped, when applicable
};

namespace detail {

inline bool chain_iterate(const HomoclinicModel& mdl, Point2& p, int j, const ChainOptions& opt,
                          ChainResult& out) {
  const IterateResult it = t0_iterate_direct(mdl.saddle, p, j, opt.slack_v);
  if (!it.ok) {
    out.fail = ChainFail::escape_local;
    out.step = it.escaped_at;
    return false;
  }
  p = it.point;
  return true;
}

inline bool chain_box(const Box& box, Point2 p, const ChainOptions& opt, ChainResult& out) {
  if (opt.check_pi && !box.contains(p, opt.slack_pi)) {
    out.fail = ChainFail::outside_pi;
    return false;
  }
  return true;
}

}  // namespace detail

/// First-return map, composed exactly as the chain of its pieces:
///   T1k  = T1 o T0^k   on Pi1+,
///   T2k  = T2 o T0^k   on Pi2+,
///   T12km = T2 o T0^m o T1 o T0^k   on Pi2+.
inline ChainResult first_return_apply_ex(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                                         Point2 p, const ChainOptions& opt = {}) {
  ChainResult out;
  // spec.mu is authoritative for the whole chain.
  const GlobalMapParams g = mdl.global.with_mu(spec.mu);
  switch (spec.kind) {
    case ReturnKind::T1k: {
      if (!detail::chain_iterate(mdl, p, spec.k, opt, out)) return out;
      if (!detail::chain_box(g.pi1_minus(), p, opt, out)) return out;
      out.point = t1_apply(g, p);
      return out;
    }
    case ReturnKind::T2k: {
      if (!detail::chain_iterate(mdl, p, spec.k, opt, out)) return out;
      if (!detail::chain_box(g.pi2_minus(), p, opt, out)) return out;
      const auto q = t2_apply(g, p);
      if (!q) {
        out.fail = ChainFail::global_undefined;
        return out;
      }
      out.point = *q;
      return out;
    }
    case ReturnKind::T12km: {
      if (!detail::chain_iterate(mdl, p, spec.k, opt, out)) return out;
      if (!detail::chain_box(g.pi1_minus(), p, opt, out)) return out;
      p = t1_apply(g, p);
      if (!detail::chain_box(g.pi1_plus(), p, opt, out)) return out;
      if (!detail::chain_iterate(mdl, p, spec.m, opt, out)) return out;
      if (!detail::chain_box(g.pi2_minus(), p, opt, out)) return out;
      const auto q = t2_apply(g, p);
      if (!q) {
        out.fail = ChainFail::global_undefined;
        return out;
      }
      out.point = *q;
      return out;
    }
  }
  return out;
}

inline std::optional<Point2> first_return_apply(const HomoclinicModel& mdl,
                                                const ReturnMapSpec& spec, Point2 p,
                                                const ChainOptions& opt = {}) {
  return first_return_apply_ex(mdl, spec, p, opt).point;
}

/// Chain-rule Jacobian through the full composition (analytic pieces only).
inline std::optional<Jacobian2> return_map_jacobian(const HomoclinicModel& mdl,
                                                    const ReturnMapSpec& spec, Point2 p,
                                                    const ChainOptions& opt = {}) {
  const GlobalMapParams g = mdl.global.with_mu(spec.mu);
  Jacobian2 J = Jacobian2::identity();
  auto local = [&](Point2& q, int j) -> bool {
    const auto Jl = t0_iterate_jacobian(mdl.saddle, q, j, opt.slack_v);
    if (!Jl) return false;
    const IterateResult it = t0_iterate_direct(mdl.saddle, q, j, opt.slack_v);
    if (!it.ok) return false;
    J = *Jl * J;
    q = it.point;
    return true;
  };
  switch (spec.kind) {
    case ReturnKind::T1k: {
      if (!local(p, spec.k)) return std::nullopt;
      return t1_jacobian(g, p) * J;
    }
    case ReturnKind::T2k: {
      if (!local(p, spec.k)) return std::nullopt;
      const auto J2 = t2_jacobian(g, p);
      if (!J2) return std::nullopt;
      return *J2 * J;
    }
    case ReturnKind::T12km: {
      if (!local(p, spec.k)) return std::nullopt;
      J = t1_jacobian(g, p) * J;
      p = t1_apply(g, p);
      if (!local(p, spec.m)) return std::nullopt;
      const auto J2 = t2_jacobian(g, p);
      if (!J2) return std::nullopt;
      return *J2 * J;
    }
  }
  return std::nullopt;
}

inline PlanarMapHandle make_return_map(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                                       const ChainOptions& opt = {}) {
  PlanarMapHandle h;
  h.name = std::string(to_string(spec.kind)) + "(k=" + std::to_string(spec.k) +
           (spec.kind == ReturnKind::T12km ? ",m=" + std::to_string(spec.m) : "") + ")";
  HomoclinicModel m = mdl;
  ReturnMapSpec s = spec;
  h.eval = [m, s, opt](Point2 p) { return first_return_apply(m, s, p, opt); };
  h.jacobian = [m, s, opt](Point2 p) { return return_map_jacobian(m, s, p, opt); };
  return h;
}

/// The involution R o T0^k (an exact involution because T0 is swap-reversible).
/// Single-round orbits of T12kk are self-symmetric exactly when their base
/// point on Pi2+ is fixed by it.
inline InvolutionHandle make_transported_swap(const SaddleNormalForm& nf, int k) {
  InvolutionHandle inv;
  inv.name = "swap*T0^" + std::to_string(k);
  inv.fixed_line = "swap(T0^k(p)) = p";
  inv.eval = [nf, k](Point2 p) {
    for (int i = 0; i < k; ++i) p = t0_apply(nf, p);
    return Point2{p.y, p.x};
  };
  return inv;
}

// ---------------------------------------------------------------------------
// Strips
// ---------------------------------------------------------------------------

/// Entry strip (subset of the source box mapped by T0^k into the target box)
/// and its image, both as bounding boxes, computed by solving the cross form
/// along the source abscissa.
struct StripPair {
  Box entry;
  Box exit;
  int k = 0;
};

inline std::optional<StripPair> compute_strip(const SaddleNormalForm& nf, const Box& source,
                                              const Box& target, int k, int samples = 17) {
  if (k < 1) throw std::invalid_argument("compute_strip: k must be >= 1");
  // Inner bounds: across the source abscissas, take the largest lower and the
  // smallest upper entry ordinate, so every box point lands inside the target.
  double y0_lo = -1e300, y0_hi = 1e300, xj_lo = 1e300, xj_hi = -1e300;
  for (int i = 0; i < samples; ++i) {
    const double x0 =
        source.lo.x + (source.hi.x - source.lo.x) * (samples == 1 ? 0.5 : double(i) / (samples - 1));
    const CrossResult lo = t0_cross_iterate(nf, x0, target.lo.y, k);
    const CrossResult hi = t0_cross_iterate(nf, x0, target.hi.y, k);
    if (!lo.converged || !hi.converged) return std::nullopt;
    y0_lo = std::max(y0_lo, std::min(lo.y0, hi.y0));
    y0_hi = std::min(y0_hi, std::max(lo.y0, hi.y0));
    xj_lo = std::min(xj_lo, std::min(lo.xj, hi.xj));
    xj_hi = std::max(xj_hi, std::max(lo.xj, hi.xj));
  }
  y0_lo = std::max(y0_lo, source.lo.y);
  y0_hi = std::min(y0_hi, source.hi.y);
  if (!(y0_lo < y0_hi)) return std::nullopt;
  StripPair sp;
  sp.k = k;
  sp.entry = Box{{source.lo.x, y0_lo}, {source.hi.x, y0_hi}};
  sp.exit = Box{{std::max(xj_lo, target.lo.x), target.lo.y}, {std::min(xj_hi, target.hi.x), target.hi.y}};
  return sp;
}

/// Entry strip of the spec's chain (sigma_k^{011}, sigma_k^{022} or sigma_k^{021}).
inline std::optional<StripPair> strip_for_spec(const HomoclinicModel& mdl,
                                               const ReturnMapSpec& spec) {
  const GlobalMapParams& g = mdl.global;
  switch (spec.kind) {
    case ReturnKind::T1k: return compute_strip(mdl.saddle, g.pi1_plus(), g.pi1_minus(), spec.k);
    case ReturnKind::T2k: return compute_strip(mdl.saddle, g.pi2_plus(), g.pi2_minus(), spec.k);
    case ReturnKind::T12km: return compute_strip(mdl.saddle, g.pi2_plus(), g.pi1_minus(), spec.k);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cross-chart return maps
// ---------------------------------------------------------------------------
//
// On a strip the natural ("cross") coordinates pair the entry abscissa with
// the exit ordinate: (x0, yk) for T1k/T2k, and the pair (x02, y11) for T12km.
// These charts are where the rescaled limits live; the T12kk chart has the
// extra property that the transported swap acts on it as the plain swap.

inline std::optional<Point2> cross_phase_point(const SaddleNormalForm& nf, Point2 cross, int k,
                                               double slack = 2.0) {
  const CrossResult cr = t0_cross_iterate(nf, cross.x, cross.y, k, slack);
  if (!cr.converged) return std::nullopt;
  return Point2{cross.x, cr.y0};
}

namespace detail {

// d(exit point)/d(cross chart) for one local pass: exit = (x_k, y_k) as a
// function of (x_0, y_k), obtained from the pass Jacobian Phi at the phase
// point by eliminating y_0.
inline std::optional<Jacobian2> cross_entry_jacobian(const SaddleNormalForm& nf, Point2 phase,
                                                     int k, double slack) {
  const auto Phi = t0_iterate_jacobian(nf, phase, k, slack);
  if (!Phi || Phi->a22 == 0.0) return std::nullopt;
  return Jacobian2{Phi->det() / Phi->a22, Phi->a12 / Phi->a22, 0.0, 1.0};
}

// Exit-ordinate extraction after the chain: w -> (w.x, (T0^k w).y).
inline std::optional<Jacobian2> cross_exit_jacobian(const SaddleNormalForm& nf, Point2 w, int k,
                                                    double slack) {
  const auto Psi = t0_iterate_jacobian(nf, w, k, slack);
  if (!Psi) return std::nullopt;
  return Jacobian2{1.0, 0.0, Psi->a21, Psi->a22};
}

}  // namespace detail

struct CrossEval {
  Point2 image;
  Jacobian2 jacobian;
};

/// Cross-chart evaluation (and chain-rule Jacobian) of T1k, T2k or T12km.
/// No homoclinic-box checks; only the local passes guard the neighborhood.
inline std::optional<CrossEval> cross_return_eval(const HomoclinicModel& mdl,
                                                  const ReturnMapSpec& spec, Point2 cross,
                                                  double slack = 2.0) {
  const SaddleNormalForm& nf = mdl.saddle;
  const GlobalMapParams g = mdl.global.with_mu(spec.mu);
  if (spec.k < 1) return std::nullopt;

  const CrossResult cr = t0_cross_iterate(nf, cross.x, cross.y, spec.k, slack);
  if (!cr.converged) return std::nullopt;
  const Point2 phase{cross.x, cr.y0};
  const auto A = detail::cross_entry_jacobian(nf, phase, spec.k, slack);
  if (!A) return std::nullopt;
  const Point2 exit_pt{cr.xj, cross.y};

  Point2 w;
  Jacobian2 J;
  if (spec.kind == ReturnKind::T1k || spec.kind == ReturnKind::T12km) {
    w = t1_apply(g, exit_pt);
    J = t1_jacobian(g, exit_pt) * (*A);
  } else {
    const auto t2 = t2_apply(g, exit_pt);
    const auto J2 = t2_jacobian(g, exit_pt);
    if (!t2 || !J2) return std::nullopt;
    w = *t2;
    J = (*J2) * (*A);
  }

  if (spec.kind == ReturnKind::T12km) {
    const auto Jm = t0_iterate_jacobian(nf, w, spec.m, slack);
    const IterateResult mid = t0_iterate_direct(nf, w, spec.m, slack);
    if (!Jm || !mid.ok) return std::nullopt;
    J = (*Jm) * J;
    w = mid.point;
    const auto t2 = t2_apply(g, w);
    const auto J2 = t2_jacobian(g, w);
    if (!t2 || !J2) return std::nullopt;
    J = (*J2) * J;
    w = *t2;
  }

  const auto E = detail::cross_exit_jacobian(nf, w, spec.k, slack);
  const IterateResult fin = t0_iterate_direct(nf, w, spec.k, slack);
  if (!E || !fin.ok) return std::nullopt;
  CrossEval out;
  out.image = {w.x, fin.point.y};
  out.jacobian = (*E) * J;
  return out;
}

// ---------------------------------------------------------------------------
// Rescaling
// ---------------------------------------------------------------------------

/// Affine chart (shift plus diagonal scaling) from rescaled coordinates to the
/// cross chart, together with the induced limit-map parameter values.
///
/// Two parameter sets are carried. The leading-order values follow the
/// closed formulas
///   M1 = -d lambda^{-2k} (mu + lambda^k (c x1+ - y1-)),   M2 = bc,
///   ct = (c/b) lambda^{k-m},
///   Mt = -(d/b^2) lambda^{-2m} (mu + c lambda^k x2+ - lambda^m y2-),
/// and are exact up to O(lambda^{2k}) corrections inside the brackets. The
/// effective values come from normalizing the actual composition (constant and
/// linear terms matched to the limit form at the chart origin); those are the
/// ones that realize the O(lambda^k) closeness and are used for residuals and
/// seeding. T2k shares T1k's parameter values through the reversible pairing.
struct RescaleTransform {
  ReturnKind kind = ReturnKind::T1k;
  int k = 0, m = 0;
  double mu = 0.0;
  Point2 center;
  double scale_x = 1.0, scale_y = 1.0;

  std::optional<HenonParams> henon_printed, henon_effective;
  std::optional<ProductHenonParams> product_printed, product_effective;

  Point2 to_cross(Point2 rescaled) const {
    return {center.x + scale_x * rescaled.x, center.y + scale_y * rescaled.y};
  }
  Point2 from_cross(Point2 cross) const {
    return {(cross.x - center.x) / scale_x, (cross.y - center.y) / scale_y};
  }
};

namespace detail {

inline void normalize_t1k(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                          RescaleTransform& tf) {
  const double lamk = ipow(mdl.saddle.lambda(), spec.k);
  const GlobalMapParams& g = mdl.global;
  double cx = g.x1p() / (1.0 - g.a() * lamk), cy = g.y1m();

  ReturnMapSpec s1 = spec;
  s1.kind = ReturnKind::T1k;
  // Both conditions are scale-free: fix the origin of the first equation and
  // kill the linear-in-Y term of the second. The Jacobian entry is already a
  // rescaled-unit coefficient, so its tolerance must not carry lambda^k.
  auto F = [&](double x, double y) -> std::optional<Point2> {
    const auto ev = cross_return_eval(mdl, s1, {x, y});
    if (!ev) return std::nullopt;
    return Point2{ev->image.x - x, ev->jacobian.a22};
  };

  const double h = 1e-7;
  bool ok = false;
  for (int it = 0; it < 25; ++it) {
    const auto f0 = F(cx, cy);
    if (!f0) break;
    if (std::abs(f0->x) < 1e-13 && std::abs(f0->y) < 1e-9) {
      ok = true;
      break;
    }
    const auto fx = F(cx + h, cy);
    const auto fy = F(cx, cy + h);
    if (!fx || !fy) break;
    const Jacobian2 JF{(fx->x - f0->x) / h, (fy->x - f0->x) / h,
                       (fx->y - f0->y) / h, (fy->y - f0->y) / h};
    if (JF.det() == 0.0) break;
    const Point2 step = JF.inverse().apply(*f0);
    cx -= step.x;
    cy -= step.y;
    if (max_norm(step) < 1e-15) {
      ok = true;
      break;
    }
  }
  tf.center = {cx, cy};
  if (!ok) return;

  // Scale calibration: the quadratic coefficient of the second equation must
  // be exactly -2 in rescaled units; it is proportional to the common scale
  // factor, which may be adjusted by 1 + O(k lambda^k) within the O-terms of
  // the transform.
  auto second_diff = [&](double hr) -> std::optional<double> {
    const auto ep = cross_return_eval(mdl, s1, {cx, cy + hr * tf.scale_y});
    const auto e0 = cross_return_eval(mdl, s1, {cx, cy});
    const auto em = cross_return_eval(mdl, s1, {cx, cy - hr * tf.scale_y});
    if (!ep || !e0 || !em) return std::nullopt;
    return (ep->image.y - 2.0 * e0->image.y + em->image.y) / (tf.scale_y * hr * hr);
  };
  for (int it = 0; it < 4; ++it) {
    const auto d2 = second_diff(2.0);
    if (!d2 || *d2 == 0.0) break;
    const double t = -2.0 / *d2;
    tf.scale_x *= t;
    tf.scale_y *= t;
    if (std::abs(t - 1.0) < 1e-9) break;
  }

  const auto ev = cross_return_eval(mdl, s1, tf.center);
  if (!ev) return;
  tf.henon_effective = HenonParams{(ev->image.y - cy) / tf.scale_y, g.b() * g.c()};
}

inline void normalize_t12(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                          RescaleTransform& tf) {
  const double lamm = ipow(mdl.saddle.lambda(), spec.m);
  const GlobalMapParams& g = mdl.global;
  double delta = 0.0;

  // Kill the linear-in-Y coefficient of the first equation; equal shifts on
  // both coordinates keep the chart swap symmetry for k = m.
  auto G = [&](double dd) -> std::optional<double> {
    const auto ev = cross_return_eval(mdl, spec, {g.x2p() + dd, g.y1m() + dd});
    if (!ev) return std::nullopt;
    return ev->jacobian.a12;
  };

  const double h = 1e-7 * lamm;
  bool ok = false;
  for (int it = 0; it < 25; ++it) {
    const auto g0 = G(delta);
    if (!g0) break;
    if (std::abs(*g0) < 1e-9) {
      ok = true;
      break;
    }
    const auto g1 = G(delta + h);
    if (!g1) break;
    const double slope = (*g1 - *g0) / h;
    if (slope == 0.0) break;
    delta -= *g0 / slope;
  }
  tf.center = {g.x2p() + delta, g.y1m() + delta};
  if (!ok) return;

  // Equal-scale calibration against the -Y^2 coefficient of the first
  // equation (the transported swap symmetry of the k = m chart is preserved
  // because both coordinates share one scale).
  auto second_diff = [&](double hr) -> std::optional<double> {
    const auto ep = cross_return_eval(mdl, spec, {tf.center.x, tf.center.y + hr * tf.scale_y});
    const auto e0 = cross_return_eval(mdl, spec, tf.center);
    const auto em = cross_return_eval(mdl, spec, {tf.center.x, tf.center.y - hr * tf.scale_y});
    if (!ep || !e0 || !em) return std::nullopt;
    return (ep->image.x - 2.0 * e0->image.x + em->image.x) / (tf.scale_x * hr * hr);
  };
  for (int it = 0; it < 4; ++it) {
    const auto d2 = second_diff(2.0);
    if (!d2 || *d2 == 0.0) break;
    const double t = -2.0 / *d2;
    tf.scale_x *= t;
    tf.scale_y *= t;
    if (std::abs(t - 1.0) < 1e-9) break;
  }

  const auto ev = cross_return_eval(mdl, spec, tf.center);
  if (!ev) return;
  const double ct = (g.c() / g.b()) * ipow(mdl.saddle.lambda(), spec.k - spec.m);
  tf.product_effective = ProductHenonParams{ct, (ev->image.x - tf.center.x) / tf.scale_x};
}

}  // namespace detail

inline RescaleTransform rescale_params(const HomoclinicModel& mdl, const ReturnMapSpec& spec) {
  validate_spec(mdl, spec);
  if (spec.k < 1 || (spec.kind == ReturnKind::T12km && spec.m < 1))
    throw std::invalid_argument("rescale_params: pass lengths must be >= 1");
  const GlobalMapParams& g = mdl.global;
  const double lam = mdl.saddle.lambda();
  RescaleTransform tf;
  tf.kind = spec.kind;
  tf.k = spec.k;
  tf.m = spec.m;
  tf.mu = spec.mu;

  if (spec.kind == ReturnKind::T1k || spec.kind == ReturnKind::T2k) {
    const double lamk = ipow(lam, spec.k);
    tf.scale_x = -(g.b() / g.d()) * lamk;
    tf.scale_y = -(1.0 / g.d()) * lamk;
    const double M3 = spec.mu + lamk * (g.c() * g.x1p() - g.y1m());
    tf.henon_printed = HenonParams{-g.d() * M3 / (lamk * lamk), g.b() * g.c()};
    detail::normalize_t1k(mdl, spec, tf);
  } else {
    const double lamk = ipow(lam, spec.k), lamm = ipow(lam, spec.m);
    tf.scale_x = tf.scale_y = -(g.b() / g.d()) * lamm;
    const double M = spec.mu + g.c() * lamk * g.x2p() - lamm * g.y2m();
    const double ct = (g.c() / g.b()) * ipow(lam, spec.k - spec.m);
    tf.product_printed = ProductHenonParams{ct, -(g.d() / (g.b() * g.b())) * M / (lamm * lamm)};
    detail::normalize_t12(mdl, spec, tf);
  }
  return tf;
}

struct RescaleResidual {
  double residual = 0.0;
  double excluded_fraction = 0.0;
  int evaluated = 0;
};

/// Sup-norm difference on a rescaled grid between the conjugated return map
/// (transform^-1 o return o transform, in the cross chart) and its limit map.
/// Grid points whose preimage leaves the chain's domain are excluded and
/// counted; more than 20% exclusions is an error.
inline RescaleResidual rescale_residual(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                                        const Box& box = {{-2, -2}, {2, 2}}, int grid = 9) {
  if (grid < 5) throw std::invalid_argument("rescale_residual: grid must be >= 5");
  if (spec.kind == ReturnKind::T2k)
    throw std::invalid_argument(
        "rescale_residual: T2k is covered through the reversible pairing with T1k");
  const RescaleTransform tf = rescale_params(mdl, spec);

  std::function<Point2(Point2)> limit;
  if (spec.kind == ReturnKind::T1k) {
    if (!tf.henon_effective) throw NumericalError("rescale_residual: normalization failed");
    const HenonParams hp = *tf.henon_effective;
    limit = [hp](Point2 p) { return henon_apply(hp, p); };
  } else {
    if (!tf.product_effective) throw NumericalError("rescale_residual: normalization failed");
    const ProductHenonParams hp = *tf.product_effective;
    limit = [hp](Point2 p) { return h_apply(hp, p); };
  }

  RescaleResidual out;
  int excluded = 0, total = 0;
  const auto pts = grid_points(box, grid);
  for (const Point2& q : pts) {
    ++total;
    const auto ev = cross_return_eval(mdl, spec, tf.to_cross(q));
    if (!ev) {
      ++excluded;
      continue;
    }
    ++out.evaluated;
    out.residual = std::max(out.residual, distance(tf.from_cross(ev->image), limit(q)));
  }
  out.excluded_fraction = total > 0 ? double(excluded) / total : 1.0;
  if (out.excluded_fraction > 0.2)
    throw NumericalError("rescale_residual: more than 20% of the grid left the domain");
  return out;
}

}  // namespace revmix
