#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "revmix/core.hpp"
#include "revmix/limit_maps.hpp"
#include "revmix/map_core.hpp"
#include "revmix/return_maps.hpp"

namespace revmix {

enum class OrbitClass { sink, source, saddle, elliptic, marginal };

inline const char* to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::sink: return "sink";
    case OrbitClass::source: return "source";
    case OrbitClass::saddle: return "saddle";
    case OrbitClass::elliptic: return "elliptic";
    case OrbitClass::marginal: return "marginal";
  }
  return "?";
}

struct ClassifyOptions {
  /// Gate on | |multiplier| - 1 | for the elliptic class. Return maps are
  /// conservative only in the limit, so callers scale this with lambda^k.
  double unit_circle_tol = 1e-6;
  double marginal_tol = 1e-9;
};

inline OrbitClass classify_multipliers(const MultiplierPair& m, const ClassifyOptions& opt = {}) {
  const auto& m1 = m.first;
  const bool complex_pair = std::abs(m1.imag()) > 1e-12 * (1.0 + std::abs(m1));
  if (complex_pair) {
    const double r = std::abs(m1);
    const double tr = 2.0 * m1.real();
    if (std::abs(r - 1.0) <= opt.unit_circle_tol) {
      if (std::abs(tr) < 2.0 - opt.marginal_tol) return OrbitClass::elliptic;
      return OrbitClass::marginal;
    }
    return r < 1.0 ? OrbitClass::sink : OrbitClass::source;
  }
  const double a1 = std::abs(m.first.real()), a2 = std::abs(m.second.real());
  const double lo = std::min(a1, a2), hi = std::max(a1, a2);
  if (std::abs(lo - 1.0) <= opt.marginal_tol || std::abs(hi - 1.0) <= opt.marginal_tol)
    return OrbitClass::marginal;
  if (hi < 1.0) return OrbitClass::sink;
  if (lo > 1.0) return OrbitClass::source;
  return OrbitClass::saddle;
}

struct FixedPointRecord {
  Point2 point;
  int period = 1;
  MultiplierPair multipliers;
  OrbitClass classification = OrbitClass::marginal;
  bool is_symmetric = false;
  double residual = 0.0;
};

namespace detail {

inline std::optional<Point2> eval_n(const PlanarMapHandle& f, Point2 p, int n) {
  for (int i = 0; i < n; ++i) {
    const auto q = f.eval(p);
    if (!q || !q->finite()) return std::nullopt;
    p = *q;
  }
  return p;
}

inline std::optional<Jacobian2> jacobian_n(const PlanarMapHandle& f, Point2 p, int n) {
  Jacobian2 J = Jacobian2::identity();
  for (int i = 0; i < n; ++i) {
    const auto Ji = f.jacobian(p);
    if (!Ji) return std::nullopt;
    J = (*Ji) * J;
    const auto q = f.eval(p);
    if (!q) return std::nullopt;
    p = *q;
  }
  return J;
}

inline std::optional<std::vector<Point2>> orbit_points(const PlanarMapHandle& f, Point2 p, int n) {
  std::vector<Point2> o{p};
  for (int i = 1; i < n; ++i) {
    const auto q = f.eval(o.back());
    if (!q) return std::nullopt;
    o.push_back(*q);
  }
  return o;
}

}  // namespace detail

/// Max over the orbit of the distance to the swapped orbit (as a point set).
/// Small exactly when the orbit is invariant under the involution.
inline std::optional<double> orbit_symmetry_residual(const PlanarMapHandle& f, Point2 p,
                                                     int period, const InvolutionHandle& inv) {
  const auto orbit = detail::orbit_points(f, p, period);
  if (!orbit) return std::nullopt;
  double worst = 0.0;
  for (const Point2& a : *orbit) {
    double best = 1e300;
    for (const Point2& b : *orbit) best = std::min(best, distance(a, inv.eval(b)));
    worst = std::max(worst, best);
  }
  return worst;
}

struct NewtonOptions {
  int max_iter = 50;
  double step_tol = 1e-12;
  double residual_tol = 1e-10;
};

struct NewtonResult {
  Point2 root;
  double residual = 0.0;
  int iterations = 0;
};

/// Damped Newton on F(p) = f^period(p) - p with the chain-rule Jacobian.
inline std::optional<NewtonResult> newton_fixed_point(const PlanarMapHandle& f, Point2 seed,
                                                      int period, const NewtonOptions& opt = {}) {
  Point2 p = seed;
  auto residual_at = [&](Point2 q) -> std::optional<Point2> {
    const auto img = detail::eval_n(f, q, period);
    if (!img) return std::nullopt;
    return *img - q;
  };
  auto F = residual_at(p);
  if (!F) return std::nullopt;
  for (int it = 0; it < opt.max_iter; ++it) {
    const double fn = max_norm(*F);
    if (fn < opt.residual_tol) return NewtonResult{p, fn, it};
    const auto Jn = detail::jacobian_n(f, p, period);
    if (!Jn) return std::nullopt;
    const Jacobian2 JF{Jn->a11 - 1.0, Jn->a12, Jn->a21, Jn->a22 - 1.0};
    const double det = JF.det();
    if (!std::isfinite(det)) return std::nullopt;
    const double frob2 = JF.a11 * JF.a11 + JF.a12 * JF.a12 + JF.a21 * JF.a21 + JF.a22 * JF.a22;
    Point2 step;
    if (std::abs(det) > 1e-9 * frob2) {
      step = {(JF.a22 * F->x - JF.a12 * F->y) / det, (-JF.a21 * F->x + JF.a11 * F->y) / det};
    } else {
      // At a critical orbit the Jacobian of F is singular; take a Tikhonov
      // least-squares step so the well-conditioned direction still contracts.
      const double lm = 1e-8 * frob2 + 1e-300;
      const double a11 = JF.a11 * JF.a11 + JF.a21 * JF.a21 + lm;
      const double a12 = JF.a11 * JF.a12 + JF.a21 * JF.a22;
      const double a22 = JF.a12 * JF.a12 + JF.a22 * JF.a22 + lm;
      const double b1 = JF.a11 * F->x + JF.a21 * F->y;
      const double b2 = JF.a12 * F->x + JF.a22 * F->y;
      const double d2 = a11 * a22 - a12 * a12;
      if (d2 == 0.0) return std::nullopt;
      step = {(a22 * b1 - a12 * b2) / d2, (-a12 * b1 + a11 * b2) / d2};
    }
    double factor = 1.0;
    bool advanced = false;
    for (int d = 0; d < 10; ++d) {
      const Point2 trial = p - factor * step;
      const auto Ft = residual_at(trial);
      if (Ft && (max_norm(*Ft) < fn || max_norm(factor * step) < opt.step_tol)) {
        p = trial;
        F = Ft;
        advanced = true;
        break;
      }
      factor *= 0.5;
    }
    if (!advanced) return std::nullopt;
    if (max_norm(factor * step) < opt.step_tol * std::max(1.0, max_norm(p))) {
      const double fn2 = max_norm(*F);
      if (fn2 < opt.residual_tol) return NewtonResult{p, fn2, it + 1};
      return std::nullopt;
    }
  }
  const double fn = max_norm(*F);
  if (fn < opt.residual_tol) return NewtonResult{p, fn, opt.max_iter};
  return std::nullopt;
}

struct FindOptions {
  NewtonOptions newton;
  ClassifyOptions classify;
  double dedup_tol = 1e-8;
  double symmetry_tol = 1e-8;
  double keep_inflation = 1.5;  // roots outside the inflated seed box are dropped
};

/// All fixed points of f^period reachable by Newton from the given seeds,
/// deduplicated by point distance and orbit rotation, restricted to orbits of
/// least period equal to `period`, classified through their multipliers.
inline std::vector<FixedPointRecord> find_fixed_points(
    const PlanarMapHandle& f, const std::vector<Point2>& seeds, int period,
    const FindOptions& opt = {}, const InvolutionHandle& inv = swap_involution(),
    const std::optional<Box>& keep_box = std::nullopt) {
  if (period < 1) throw std::invalid_argument("find_fixed_points: period must be >= 1");
  std::vector<FixedPointRecord> records;
  std::vector<std::vector<Point2>> orbits;

  for (const Point2& seed : seeds) {
    const auto nr = newton_fixed_point(f, seed, period, opt.newton);
    if (!nr) continue;
    const Point2 root = nr->root;
    if (keep_box && !keep_box->contains(root, opt.keep_inflation)) continue;

    // Least-period filter: reject roots already fixed by a proper divisor power.
    bool lower_period = false;
    for (int d = 1; d < period; ++d) {
      if (period % d != 0) continue;
      const auto img = detail::eval_n(f, root, d);
      if (img && distance(*img, root) < opt.dedup_tol) {
        lower_period = true;
        break;
      }
    }
    if (lower_period) continue;

    const auto orbit = detail::orbit_points(f, root, period);
    if (!orbit) continue;

    bool duplicate = false;
    for (const auto& existing : orbits) {
      for (const Point2& q : existing) {
        if (distance(q, root) < opt.dedup_tol) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) break;
    }
    if (duplicate) continue;

    const auto Jn = detail::jacobian_n(f, root, period);
    if (!Jn) continue;

    FixedPointRecord rec;
    rec.point = root;
    rec.period = period;
    rec.residual = nr->residual;
    rec.multipliers = eigenvalues(*Jn);
    rec.classification = classify_multipliers(rec.multipliers, opt.classify);
    const auto sym = orbit_symmetry_residual(f, root, period, inv);
    rec.is_symmetric = sym && *sym < opt.symmetry_tol;
    records.push_back(rec);
    orbits.push_back(*orbit);
  }
  return records;
}

inline std::vector<FixedPointRecord> find_fixed_points(
    const PlanarMapHandle& f, const Box& seed_box, int grid, int period,
    const FindOptions& opt = {}, const InvolutionHandle& inv = swap_involution()) {
  if (grid < 3) throw std::invalid_argument("find_fixed_points: grid must be >= 3");
  return find_fixed_points(f, grid_points(seed_box, grid), period, opt, inv, seed_box);
}

// ---------------------------------------------------------------------------
// Bifurcation detection
// ---------------------------------------------------------------------------

enum class CriticalTarget { plus_one, minus_one };
enum class BifurcationKind { fold, flip, pitchfork };

inline const char* to_string(BifurcationKind k) {
  switch (k) {
    case BifurcationKind::fold: return "fold";
    case BifurcationKind::flip: return "flip";
    case BifurcationKind::pitchfork: return "pitchfork";
  }
  return "?";
}

struct BifurcationHit {
  double parameter_value = 0.0;
  BifurcationKind kind = BifurcationKind::fold;
  int period = 1;
  FixedPointRecord orbit;
};

using MapFamily = std::function<PlanarMapHandle(double)>;

/// Characteristic polynomial of the period-Jacobian evaluated at the target
/// multiplier: zero exactly when +1 / -1 is a multiplier. Sign-robust through
/// complex-multiplier regions, unlike tracking a single eigenvalue.
inline std::optional<double> critical_monitor(const PlanarMapHandle& f, Point2 root, int period,
                                              CriticalTarget target) {
  const auto J = detail::jacobian_n(f, root, period);
  if (!J) return std::nullopt;
  const double t = target == CriticalTarget::plus_one ? 1.0 : -1.0;
  return t * t - J->trace() * t + J->det();
}

struct CriticalSolveOptions {
  double param_fd_step = 1e-7;
  int max_iter = 40;
  double residual_tol = 1e-11;
  double monitor_tol = 1e-9;
};

/// Extended Newton on (fixed-point equations, multiplier condition) in the
/// unknowns (x, y, parameter). This is how folds are pinned down: past the
/// fold the orbit does not exist, so bracketing on a continued orbit cannot
/// converge from both sides.
inline std::optional<std::pair<double, Point2>> solve_critical(const MapFamily& fam, double s0,
                                                               Point2 p0, CriticalTarget target,
                                                               int period,
                                                               const CriticalSolveOptions& opt) {
  std::array<double, 3> u{p0.x, p0.y, s0};

  auto eval_all = [&](const std::array<double, 3>& v)
      -> std::optional<std::array<double, 3>> {
    const PlanarMapHandle f = fam(v[2]);
    const Point2 p{v[0], v[1]};
    const auto img = detail::eval_n(f, p, period);
    const auto P = critical_monitor(f, p, period, target);
    if (!img || !P) return std::nullopt;
    return std::array<double, 3>{img->x - p.x, img->y - p.y, *P};
  };

  auto err_of = [](const std::array<double, 3>& F) {
    return std::max(std::abs(F[0]), std::max(std::abs(F[1]), std::abs(F[2])));
  };

  auto F0 = eval_all(u);
  if (!F0) return std::nullopt;
  for (int it = 0; it < opt.max_iter; ++it) {
    const bool fixed_ok = std::max(std::abs((*F0)[0]), std::abs((*F0)[1])) < opt.residual_tol;
    if (fixed_ok && std::abs((*F0)[2]) < opt.monitor_tol)
      return std::make_pair(u[2], Point2{u[0], u[1]});

    // Jacobian: analytic in the state for the fixed-point rows, finite
    // differences elsewhere.
    const PlanarMapHandle f = fam(u[2]);
    const auto Jn = detail::jacobian_n(f, {u[0], u[1]}, period);
    if (!Jn) return std::nullopt;
    double A[3][3];
    A[0][0] = Jn->a11 - 1.0;
    A[0][1] = Jn->a12;
    A[1][0] = Jn->a21;
    A[1][1] = Jn->a22 - 1.0;

    const double hx = 1e-7 * std::max(std::abs(u[0]), 1e-5);
    const double hy = 1e-7 * std::max(std::abs(u[1]), 1e-5);
    const double hs = opt.param_fd_step;
    auto Fx = eval_all({u[0] + hx, u[1], u[2]});
    auto Fy = eval_all({u[0], u[1] + hy, u[2]});
    auto Fs = eval_all({u[0], u[1], u[2] + hs});
    if (!Fx || !Fy || !Fs) return std::nullopt;
    A[2][0] = ((*Fx)[2] - (*F0)[2]) / hx;
    A[2][1] = ((*Fy)[2] - (*F0)[2]) / hy;
    A[0][2] = ((*Fs)[0] - (*F0)[0]) / hs;
    A[1][2] = ((*Fs)[1] - (*F0)[1]) / hs;
    A[2][2] = ((*Fs)[2] - (*F0)[2]) / hs;

    // 3x3 Gaussian elimination with partial pivoting.
    double M[3][4];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = A[r][c];
      M[r][3] = (*F0)[static_cast<std::size_t>(r)];
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
      if (M[piv][col] == 0.0) return std::nullopt;
      if (piv != col)
        for (int c = col; c < 4; ++c) std::swap(M[piv][c], M[col][c]);
      for (int r = col + 1; r < 3; ++r) {
        const double fct = M[r][col] / M[col][col];
        for (int c = col; c < 4; ++c) M[r][c] -= fct * M[col][c];
      }
    }
    std::array<double, 3> step;
    for (int r = 2; r >= 0; --r) {
      double acc = M[r][3];
      for (int c = r + 1; c < 3; ++c) acc -= M[r][c] * step[static_cast<std::size_t>(c)];
      step[static_cast<std::size_t>(r)] = acc / M[r][r];
    }

    double factor = 1.0;
    bool advanced = false;
    const double step_size =
        std::max(std::abs(step[0]), std::max(std::abs(step[1]), std::abs(step[2])));
    for (int d = 0; d < 10; ++d) {
      const std::array<double, 3> trial{u[0] - factor * step[0], u[1] - factor * step[1],
                                        u[2] - factor * step[2]};
      const auto Ft = eval_all(trial);
      if (Ft && (err_of(*Ft) < err_of(*F0) || factor * step_size < 1e-16)) {
        u = trial;
        F0 = Ft;
        advanced = true;
        break;
      }
      factor *= 0.5;
    }
    if (!advanced) return std::nullopt;
  }
  if (F0 && std::max(std::abs((*F0)[0]), std::abs((*F0)[1])) < opt.residual_tol &&
      std::abs((*F0)[2]) < opt.monitor_tol)
    return std::make_pair(u[2], Point2{u[0], u[1]});
  return std::nullopt;
}

struct DetectOptions {
  int scan_steps = 33;
  NewtonOptions newton;
  double monitor_tol = 1e-10;
  double sym_tol = 1e-6;
  Point2 asym_probe_offset{0.01, -0.01};  // seed offset for pitchfork probing
  double probe_param_frac = 0.02;         // parameter offset, as a bracket fraction
};

namespace detail {

inline std::optional<FixedPointRecord> make_record(const PlanarMapHandle& f, Point2 root,
                                                   int period, const InvolutionHandle& inv,
                                                   const ClassifyOptions& copt,
                                                   double sym_tol) {
  const auto nr = newton_fixed_point(f, root, period);
  if (!nr) return std::nullopt;
  const auto Jn = jacobian_n(f, nr->root, period);
  if (!Jn) return std::nullopt;
  FixedPointRecord rec;
  rec.point = nr->root;
  rec.period = period;
  rec.residual = nr->residual;
  rec.multipliers = eigenvalues(*Jn);
  rec.classification = classify_multipliers(rec.multipliers, copt);
  const auto sym = orbit_symmetry_residual(f, nr->root, period, inv);
  rec.is_symmetric = sym && *sym < sym_tol;
  return rec;
}

/// Fold-vs-pitchfork: probe both parameter sides with off-symmetry seeds and
/// count newborn asymmetric orbits (2 means pitchfork).
inline bool pitchfork_probe(const MapFamily& fam, double s_crit, Point2 root, int period,
                            const InvolutionHandle& inv, const DetectOptions& opt,
                            double bracket_width) {
  const double off_param = opt.probe_param_frac * bracket_width;
  for (double s : {s_crit + off_param, s_crit - off_param}) {
    const PlanarMapHandle f = fam(s);
    const auto sym_root = newton_fixed_point(f, root, period, opt.newton);
    std::vector<Point2> found;
    for (double scale : {1.0, 5.0, 15.0, 30.0}) {
      for (double sgn : {+1.0, -1.0}) {
        const Point2 off{scale * sgn * opt.asym_probe_offset.x,
                         scale * sgn * opt.asym_probe_offset.y};
        const auto nr = newton_fixed_point(f, root + off, period, opt.newton);
        if (!nr) continue;
        // Must be a genuinely new, non-symmetric orbit.
        if (sym_root && distance(nr->root, sym_root->root) < 1e-6) continue;
        const auto symres = orbit_symmetry_residual(f, nr->root, period, inv);
        if (!symres || *symres < opt.sym_tol) continue;
        bool dup = false;
        for (const Point2& q : found)
          if (distance(q, nr->root) < 1e-7) dup = true;
        if (!dup) found.push_back(nr->root);
      }
    }
    if (found.size() >= 2) return true;
  }
  return false;
}

}  // namespace detail

/// Locate a parameter value where the tracked orbit has a multiplier at +1 or
/// -1. Continuation plus sign-bracketing of the characteristic-polynomial
/// monitor; falls back to the extended solver when the orbit is lost en route
/// (fold collision) and to derivative bisection when the monitor only touches
/// zero (coinciding flip curves).
inline std::optional<BifurcationHit> detect_bifurcation(
    const MapFamily& fam, std::pair<double, double> bracket, CriticalTarget target, int period,
    Point2 seed, const InvolutionHandle& inv = swap_involution(), const DetectOptions& opt = {},
    const ClassifyOptions& copt = {}) {
  const double width = bracket.second - bracket.first;
  if (width <= 0.0) throw std::invalid_argument("detect_bifurcation: empty bracket");

  struct Sample {
    double s;
    double P;
    Point2 root;
  };

  // Continuation keeps the symmetry class of the orbit it started on: where a
  // pitchfork makes Newton drift onto an asymmetric branch, retry from the
  // symmetrized point.
  bool track_symmetric = false, track_sym_known = false;
  auto newton_track = [&](const PlanarMapHandle& f, Point2 from)
      -> std::optional<NewtonResult> {
    auto nr = newton_fixed_point(f, from, period, opt.newton);
    if (!nr || !(track_sym_known && track_symmetric)) return nr;
    const auto sym = orbit_symmetry_residual(f, nr->root, period, inv);
    if (sym && *sym <= opt.sym_tol) return nr;
    const Point2 mid = 0.5 * (nr->root + inv.eval(nr->root));
    const auto nr2 = newton_fixed_point(f, mid, period, opt.newton);
    if (nr2) {
      const auto sym2 = orbit_symmetry_residual(f, nr2->root, period, inv);
      if (sym2 && *sym2 <= opt.sym_tol &&
          distance(nr2->root, nr->root) <= 4.0 * distance(nr->root, mid) + 1e-9)
        return nr2;
    }
    return nr;
  };

  std::vector<Sample> samples;
  Point2 track = seed;
  double last_good_s = bracket.first;
  Point2 last_good_root = seed;
  bool any_lost = false;
  for (int i = 0; i < opt.scan_steps; ++i) {
    const double s = bracket.first + width * double(i) / (opt.scan_steps - 1);
    const PlanarMapHandle f = fam(s);
    const auto nr = newton_track(f, track);
    if (!nr) {
      any_lost = true;
      continue;
    }
    if (!track_sym_known) {
      const auto sym = orbit_symmetry_residual(f, nr->root, period, inv);
      if (sym) {
        track_symmetric = *sym <= opt.sym_tol;
        track_sym_known = true;
      }
    }
    track = nr->root;
    last_good_s = s;
    last_good_root = nr->root;
    const auto P = critical_monitor(f, nr->root, period, target);
    if (!P) {
      any_lost = true;
      continue;
    }
    samples.push_back({s, *P, nr->root});
  }
  if (samples.empty()) return std::nullopt;

  auto finish = [&](double s_star, Point2 root) -> std::optional<BifurcationHit> {
    const PlanarMapHandle f = fam(s_star);
    auto rec = detail::make_record(f, root, period, inv, copt, opt.sym_tol);
    if (!rec) {
      // The orbit is critical at s_star, so Newton can be delicate exactly at
      // the root; retry from nearby seeds.
      const Point2 mid = 0.5 * (root + inv.eval(root));
      for (const Point2& alt :
           {mid, root + Point2{1e-5, 1e-5}, root - Point2{1e-5, 1e-5}, root + Point2{1e-4, -1e-4}}) {
        rec = detail::make_record(f, alt, period, inv, copt, opt.sym_tol);
        if (rec && distance(rec->point, root) < 0.05) break;
        rec.reset();
      }
    }
    if (rec && !rec->is_symmetric && target == CriticalTarget::plus_one) {
      // Near a pitchfork the almost-singular Newton can settle on one of the
      // asymmetric branches; retry from the symmetrized point.
      const Point2 mid = 0.5 * (root + inv.eval(root));
      const auto rec2 = detail::make_record(f, mid, period, inv, copt, opt.sym_tol);
      if (rec2 && rec2->is_symmetric && distance(rec2->point, root) < 0.05) rec = rec2;
    }
    if (!rec) return std::nullopt;
    BifurcationHit hit;
    hit.parameter_value = s_star;
    hit.period = period;
    hit.orbit = *rec;
    if (target == CriticalTarget::minus_one) {
      hit.kind = BifurcationKind::flip;
    } else {
      const bool symmetric = rec->is_symmetric;
      hit.kind = symmetric && detail::pitchfork_probe(fam, s_star, rec->point, period, inv, opt,
                                                      width)
                     ? BifurcationKind::pitchfork
                     : BifurcationKind::fold;
    }
    return hit;
  };

  // Transversal crossing: bisect the monitor. Pairs where both samples sit at
  // noise level are tangential touches and go to the derivative fallback.
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (!(samples[i].P * samples[i + 1].P <= 0.0)) continue;
    if (std::max(std::abs(samples[i].P), std::abs(samples[i + 1].P)) < 1e-9) continue;
    double a = samples[i].s, b = samples[i + 1].s;
    double Pa = samples[i].P;
    Point2 root = samples[i].root;
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
      const double mid = 0.5 * (a + b);
      const PlanarMapHandle f = fam(mid);
      const auto nr = newton_track(f, root);
      if (!nr) break;
      root = nr->root;
      const auto P = critical_monitor(f, nr->root, period, target);
      if (!P) break;
      if (std::abs(*P) < 1e-15) {
        a = b = mid;
        break;
      }
      if (Pa * (*P) <= 0.0) {
        b = mid;
      } else {
        a = mid;
        Pa = *P;
      }
    }
    return finish(0.5 * (a + b), root);
  }

  // Orbit lost on the way: a fold between the last good parameter and the
  // failure; pin it with the extended solver, seeded from the sample closest
  // to criticality.
  if (any_lost && target == CriticalTarget::plus_one) {
    std::size_t iseed = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (std::abs(samples[i].P) < std::abs(samples[iseed].P)) iseed = i;
    CriticalSolveOptions csopt;
    csopt.param_fd_step = 1e-6 * width;
    const auto sol =
        solve_critical(fam, samples[iseed].s, samples[iseed].root, target, period, csopt);
    if (sol) return finish(sol->first, sol->second);
    const auto sol2 = solve_critical(fam, last_good_s, last_good_root, target, period, csopt);
    if (sol2) return finish(sol2->first, sol2->second);
  }

  // Tangential touch: bisect the parameter derivative of the monitor. The
  // finite-difference derivative root is displaced O(h^2) by the monitor's
  // cubic term, so the bisection is repeated with shrinking stencils.
  {
    std::size_t imin = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (std::abs(samples[i].P) < std::abs(samples[imin].P)) imin = i;
    auto monitor_at = [&](double s, Point2 near_root) -> std::optional<Sample> {
      const PlanarMapHandle f = fam(s);
      const auto nr = newton_track(f, near_root);
      if (!nr) return std::nullopt;
      const auto P = critical_monitor(f, nr->root, period, target);
      if (!P) return std::nullopt;
      return Sample{s, *P, nr->root};
    };
    double h = width / (8.0 * opt.scan_steps);
    double a = std::max(bracket.first + h, samples[imin].s - width / 4.0);
    double b = std::min(bracket.second - h, samples[imin].s + width / 4.0);
    Point2 root = samples[imin].root;
    bool located = false;
    for (int stage = 0; stage < 3; ++stage) {
      auto deriv_at = [&](double s, Point2 near_root) -> std::optional<double> {
        const auto lo = monitor_at(s - h, near_root);
        const auto hi = monitor_at(s + h, near_root);
        if (!lo || !hi) return std::nullopt;
        return (hi->P - lo->P) / (2.0 * h);
      };
      const auto da = deriv_at(a, root), db = deriv_at(b, root);
      if (!da || !db || (*da) * (*db) > 0.0) break;
      double da_v = *da;
      for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const auto dm = deriv_at(mid, root);
        if (!dm) break;
        const auto sm = monitor_at(mid, root);
        if (sm) root = sm->root;
        if (da_v * (*dm) <= 0.0) {
          b = mid;
        } else {
          a = mid;
          da_v = *dm;
        }
      }
      located = true;
      const double s_star = 0.5 * (a + b);
      h /= 64.0;
      a = s_star - 8.0 * h;
      b = s_star + 8.0 * h;
    }
    if (located) {
      const double s_star = 0.5 * (a + b);
      const auto sm = monitor_at(s_star, root);
      if (sm && std::abs(sm->P) < opt.monitor_tol) return finish(s_star, sm->root);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cascades and the mixed-dynamics inventory
// ---------------------------------------------------------------------------

struct CascadeReport {
  int k = 0;
  int m = 0;
  std::optional<double> mu_sn, mu_pd;    // 1-orbit fold / flip
  std::optional<double> mu_f, mu_pdC;    // symmetric 12-orbit fold / flip
  bool coexistence_verified = false;
  std::string diagnostics;
  std::optional<FixedPointRecord> sink, source, elliptic, companion_saddle;

  bool complete() const { return mu_sn && mu_pd && mu_f && mu_pdC; }
};

namespace detail {

/// Affine parameter map mu -> effective limit parameter (M1 or Mt), measured
/// from the normalized transform at two nearby mu values; falls back to the
/// closed formulas when normalization is unavailable.
struct MuToParam {
  double mu0 = 0.0, p0 = 0.0, slope = 1.0;
  double param_at(double mu) const { return p0 + slope * (mu - mu0); }
  double mu_at(double param) const { return mu0 + (param - p0) / slope; }
};

inline double effective_or_printed(const RescaleTransform& tf) {
  if (tf.kind == ReturnKind::T12km)
    return tf.product_effective ? tf.product_effective->M_tilde : tf.product_printed->M_tilde;
  return tf.henon_effective ? tf.henon_effective->M1 : tf.henon_printed->M1;
}

inline MuToParam calibrate_mu_map(const HomoclinicModel& mdl, ReturnMapSpec spec, double mu0,
                                  double dmu) {
  MuToParam m;
  spec.mu = mu0;
  const RescaleTransform t0 = rescale_params(mdl, spec);
  spec.mu = mu0 + dmu;
  const RescaleTransform t1 = rescale_params(mdl, spec);
  m.mu0 = mu0;
  m.p0 = effective_or_printed(t0);
  m.slope = (effective_or_printed(t1) - m.p0) / dmu;
  return m;
}

inline Point2 phase_seed_from_rescaled(const HomoclinicModel& mdl, const ReturnMapSpec& spec,
                                       Point2 rescaled) {
  const RescaleTransform tf = rescale_params(mdl, spec);
  const Point2 cross = tf.to_cross(rescaled);
  const auto phase = cross_phase_point(mdl.saddle, cross, spec.k);
  if (!phase) throw NumericalError("phase_seed_from_rescaled: cross solve failed");
  return *phase;
}

}  // namespace detail

struct CascadeOptions {
  ChainOptions chain{2.0, 5.0, true};
  double pairing_tol = 1e-8;
  double reciprocal_tol = 1e-6;
};

/// mu at which the spec's effective limit parameter (M1 or Mt) equals target.
inline double mu_at_limit_param(const HomoclinicModel& mdl, ReturnMapSpec spec, double target) {
  const double lam = mdl.saddle.lambda();
  const GlobalMapParams& g = mdl.global;
  double mu0;
  int amp;
  if (spec.kind == ReturnKind::T12km) {
    mu0 = -(g.c() * ipow(lam, spec.k) * g.x2p() - ipow(lam, spec.m) * g.y2m());
    amp = spec.m;
  } else {
    mu0 = -ipow(lam, spec.k) * (g.c() * g.x1p() - g.y1m());
    amp = spec.k;
  }
  const auto mp = detail::calibrate_mu_map(mdl, spec, mu0, ipow(lam, 2 * amp));
  return mp.mu_at(target);
}

/// One k of the cascade: bifurcation values of T1k (fold, flip) and of T12kk
/// (symmetric fold, flip), plus the coexistence checks at the window
/// midpoints.
inline CascadeReport cascade_scan_one(const HomoclinicModel& mdl, int k,
                                      const CascadeOptions& copt = {}) {
  CascadeReport rep;
  rep.k = rep.m = k;
  const GlobalMapParams& g = mdl.global;
  const double lam = mdl.saddle.lambda();
  const double lamk = ipow(lam, k);
  const double lam2k = lamk * lamk;

  auto family_of = [&](ReturnKind kind) {
    return [&mdl, kind, k, copt](double mu) {
      return make_return_map(mdl, ReturnMapSpec{kind, k, k, mu}, copt.chain);
    };
  };

  CriticalSolveOptions cs;
  cs.param_fd_step = 1e-4 * lam2k;

  try {
    // --- 1-orbits: T1k against the Henon limit ---
    const double M2 = g.b() * g.c();
    const double mu_center = -lamk * (g.c() * g.x1p() - g.y1m());
    const auto mu_map =
        detail::calibrate_mu_map(mdl, {ReturnKind::T1k, k, k, 0.0}, mu_center, lam2k);

    auto locate_t1k = [&](double M1_target, Point2 rescaled_seed,
                          CriticalTarget target) -> std::optional<double> {
      const double mu_seed = mu_map.mu_at(M1_target);
      const Point2 seed = detail::phase_seed_from_rescaled(
          mdl, {ReturnKind::T1k, k, k, mu_seed}, rescaled_seed);
      const auto sol = solve_critical(family_of(ReturnKind::T1k), mu_seed, seed, target, 1, cs);
      if (!sol) return std::nullopt;
      return sol->first;
    };

    const double s_fold = (M2 - 1.0) / 2.0;
    const double s_flip = (1.0 - M2) / 2.0;
    rep.mu_sn = locate_t1k(derived_fold(LimitFamily::henon, M2), {s_fold, s_fold},
                           CriticalTarget::plus_one);
    rep.mu_pd = locate_t1k(derived_flip(LimitFamily::henon, M2), {s_flip, s_flip},
                           CriticalTarget::minus_one);

    // --- symmetric 12-orbits: T12kk against the product limit ---
    const double ct = g.c() / g.b();
    const double mu_center12 = -(g.c() * lamk * g.x2p() - lamk * g.y2m());
    const auto mu_map12 =
        detail::calibrate_mu_map(mdl, {ReturnKind::T12km, k, k, 0.0}, mu_center12, lam2k);

    auto locate_t12 = [&](double Mt_target, double x_diag,
                          CriticalTarget target) -> std::optional<double> {
      const double mu_seed = mu_map12.mu_at(Mt_target);
      const Point2 seed = detail::phase_seed_from_rescaled(
          mdl, {ReturnKind::T12km, k, k, mu_seed}, {x_diag, x_diag});
      const auto sol = solve_critical(family_of(ReturnKind::T12km), mu_seed, seed, target, 1, cs);
      if (!sol) return std::nullopt;
      return sol->first;
    };

    const double x_fold = (ct - 1.0) / 2.0;
    const double x_flip = -std::abs(ct + 1.0) / 2.0;
    rep.mu_f = locate_t12(derived_fold(LimitFamily::productH, ct), x_fold,
                          CriticalTarget::plus_one);
    rep.mu_pdC =
        locate_t12(derived_flip(LimitFamily::productH, ct), x_flip, CriticalTarget::minus_one);

    // --- coexistence at the window midpoints ---
    if (rep.complete()) {
      ClassifyOptions cls;
      cls.unit_circle_tol = 10.0 * lamk;
      const InvolutionHandle rk = make_transported_swap(mdl.saddle, k);

      const double mu_mid = 0.5 * (*rep.mu_sn + *rep.mu_pd);
      const HenonParams hp{mu_map.param_at(mu_mid), M2};
      const auto hfix = henon_fixed_points(hp);
      const PlanarMapHandle f1 = make_return_map(mdl, {ReturnKind::T1k, k, k, mu_mid}, copt.chain);
      const PlanarMapHandle f2 = make_return_map(mdl, {ReturnKind::T2k, k, k, mu_mid}, copt.chain);
      bool ok = !hfix.empty();
      std::optional<Point2> sink_pt;
      for (const Point2& q : hfix) {
        const Point2 seed = detail::phase_seed_from_rescaled(
            mdl, {ReturnKind::T1k, k, k, mu_mid}, q);
        const auto rec = detail::make_record(f1, seed, 1, swap_involution(), cls, 1e-8);
        if (!rec) continue;
        if (rec->classification == OrbitClass::sink) {
          rep.sink = rec;
          sink_pt = rec->point;
        }
      }
      ok = ok && rep.sink.has_value();

      if (ok) {
        // Reversible pairing: the 2-orbit source sits at the swapped image of
        // the sink's exit point, with reciprocal multipliers.
        Point2 img = *sink_pt;
        for (int i = 0; i < k; ++i) img = t0_apply(mdl.saddle, img);
        const Point2 source_seed{img.y, img.x};
        const auto rec = detail::make_record(f2, source_seed, 1, swap_involution(), cls, 1e-8);
        ok = rec && rec->classification == OrbitClass::source &&
             distance(rec->point, source_seed) < copt.pairing_tol;
        if (rec) rep.source = rec;
        if (ok) {
          const auto ms = rep.sink->multipliers;
          const auto mr = rep.source->multipliers;
          const double e1 = std::abs(ms.first * mr.first - 1.0);
          const double e2 = std::abs(ms.first * mr.second - 1.0);
          ok = std::min(e1, e2) < copt.reciprocal_tol &&
               std::abs(ms.second * (e1 < e2 ? mr.second : mr.first) - 1.0) <
                   copt.reciprocal_tol;
        }
      }

      const double mu_cmid = 0.5 * (*rep.mu_f + *rep.mu_pdC);
      const ProductHenonParams php{ct, mu_map12.param_at(mu_cmid)};
      const auto sfix = h_symmetric_fixed_points(php);
      const PlanarMapHandle f12 =
          make_return_map(mdl, {ReturnKind::T12km, k, k, mu_cmid}, copt.chain);
      bool saw_elliptic = false, saw_saddle = false;
      for (const Point2& q : sfix) {
        const Point2 seed = detail::phase_seed_from_rescaled(
            mdl, {ReturnKind::T12km, k, k, mu_cmid}, q);
        const auto rec = detail::make_record(f12, seed, 1, rk, cls, 1e-8);
        if (!rec || !rec->is_symmetric) continue;
        if (rec->classification == OrbitClass::elliptic) {
          rep.elliptic = rec;
          saw_elliptic = true;
        } else if (rec->classification == OrbitClass::saddle) {
          rep.companion_saddle = rec;
          saw_saddle = true;
        }
      }
      ok = ok && saw_elliptic && saw_saddle;
      rep.coexistence_verified = ok;
    }
  } catch (const std::exception& e) {
    rep.diagnostics = e.what();
  }
  return rep;
}

inline std::vector<CascadeReport> cascade_scan(const HomoclinicModel& mdl, int k_lo, int k_hi,
                                               const CascadeOptions& copt = {}) {
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("cascade_scan: bad k range");
  std::vector<CascadeReport> out;
  for (int k = k_lo; k <= k_hi; ++k) out.push_back(cascade_scan_one(mdl, k, copt));
  return out;
}

// ---------------------------------------------------------------------------

struct InventoryEntry {
  ReturnMapSpec spec;
  FixedPointRecord record;
};

struct Inventory {
  std::vector<InventoryEntry> entries;
  int sinks = 0, sources = 0, saddles = 0, elliptics = 0, marginals = 0;

  void add(const ReturnMapSpec& spec, const FixedPointRecord& rec) {
    entries.push_back({spec, rec});
    switch (rec.classification) {
      case OrbitClass::sink: ++sinks; break;
      case OrbitClass::source: ++sources; break;
      case OrbitClass::saddle: ++saddles; break;
      case OrbitClass::elliptic: ++elliptics; break;
      case OrbitClass::marginal: ++marginals; break;
    }
  }
};

/// Classified single-round orbit inventory at one mu: T1k and T2k for each k
/// in range, T12km over all (k, m) pairs in range. Seeds come from the
/// rescaled limit maps; every record is re-verified on the unrescaled map.
inline Inventory mixed_dynamics_probe(const HomoclinicModel& mdl, double mu, int k_lo, int k_hi,
                                      const CascadeOptions& copt = {}) {
  if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("mixed_dynamics_probe: bad k range");
  Inventory inv;
  const GlobalMapParams& g = mdl.global;
  const double lam = mdl.saddle.lambda();

  for (int k = k_lo; k <= k_hi; ++k) {
    const double lamk = ipow(lam, k);
    ClassifyOptions cls;
    cls.unit_circle_tol = 10.0 * lamk;

    // 1- and 2-orbits.
    try {
      const ReturnMapSpec s1{ReturnKind::T1k, k, k, mu};
      const RescaleTransform tf = rescale_params(mdl, s1);
      const HenonParams hp{detail::effective_or_printed(tf), g.b() * g.c()};
      if (hp.M1 > derived_fold(LimitFamily::henon, hp.M2) - 1.0 && hp.M1 < 1e4) {
        const PlanarMapHandle f1 = make_return_map(mdl, s1, copt.chain);
        const PlanarMapHandle f2 =
            make_return_map(mdl, {ReturnKind::T2k, k, k, mu}, copt.chain);
        for (const Point2& q : henon_fixed_points(hp)) {
          Point2 seed;
          try {
            seed = detail::phase_seed_from_rescaled(mdl, s1, q);
          } catch (const NumericalError&) {
            continue;
          }
          const auto rec = detail::make_record(f1, seed, 1, swap_involution(), cls, 1e-8);
          if (!rec) continue;
          bool dup = false;
          for (const auto& e : inv.entries)
            if (e.spec.kind == ReturnKind::T1k && e.spec.k == k &&
                distance(e.record.point, rec->point) < 1e-8)
              dup = true;
          if (dup) continue;
          inv.add(s1, *rec);
          // Paired 2-orbit through the involution.
          Point2 img = rec->point;
          for (int i = 0; i < k; ++i) img = t0_apply(mdl.saddle, img);
          const auto rec2 = detail::make_record(f2, {img.y, img.x}, 1, swap_involution(), cls,
                                                1e-8);
          if (rec2) inv.add({ReturnKind::T2k, k, k, mu}, *rec2);
        }
      }
    } catch (const std::exception&) {
      // chains unavailable at this (k, mu): nothing to record
    }

    // Symmetric 12-orbits over all m in range.
    for (int m = k_lo; m <= k_hi; ++m) {
      try {
        const ReturnMapSpec s12{ReturnKind::T12km, k, m, mu};
        const RescaleTransform tf = rescale_params(mdl, s12);
        const double ct = tf.product_printed->c_tilde;
        const double Mt = detail::effective_or_printed(tf);
        if (Mt < derived_fold(LimitFamily::productH, ct) - 2.0 || Mt > 1e4) continue;
        const PlanarMapHandle f12 = make_return_map(mdl, s12, copt.chain);
        const InvolutionHandle rk = make_transported_swap(mdl.saddle, k);
        ClassifyOptions cls12;
        cls12.unit_circle_tol = 10.0 * ipow(lam, std::min(k, m));
        const ProductHenonParams php{ct, Mt};
        std::vector<Point2> seeds = h_symmetric_fixed_points(php);
        for (const Point2& q : h_asymmetric_fixed_points(php)) seeds.push_back(q);
        for (const Point2& q : seeds) {
          Point2 seed;
          try {
            seed = detail::phase_seed_from_rescaled(mdl, s12, q);
          } catch (const NumericalError&) {
            continue;
          }
          const auto rec = detail::make_record(f12, seed, 1, rk, cls12, 1e-8);
          if (!rec) continue;
          bool dup = false;
          for (const auto& e : inv.entries)
            if (e.spec.kind == ReturnKind::T12km && e.spec.k == k && e.spec.m == m &&
                distance(e.record.point, rec->point) < 1e-8)
              dup = true;
          if (!dup) inv.add(s12, *rec);
        }
      } catch (const std::exception&) {
        continue;
      }
    }
  }
  return inv;
}

}  // namespace revmix
