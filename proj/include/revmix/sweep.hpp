#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "revmix/core.hpp"
#include "revmix/limit_maps.hpp"
#include "revmix/orbit_analysis.hpp"

namespace revmix {

/// Thread count resolution: explicit request wins, then the REVMIX_THREADS
/// environment variable, then hardware concurrency. 0 means "auto".
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("REVMIX_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Index-parallel loop; results must be written to disjoint slots so the
/// outcome is independent of the schedule.
template <typename Fn>
inline void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([t, n, threads, &fn] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// One cell of the regime map. The code packs the period-1 census by class
/// (3 bits each, saturating), a period-2 presence bit, and a divergence flag:
///   code = n_sink | n_source<<3 | n_saddle<<6 | n_elliptic<<9
///        | has_period2<<12 | divergence<<15,     code = -1: solver failure.
/// Period-2 presence is saturated to one bit: the secondary bifurcations of
/// the 2-cycles (their own pitchforks and folds) have no closed form, so a
/// raw count would move cell boundaries off the printed curves.
struct RegimeCell {
  int ix = 0, iy = 0;
  double abscissa = 0.0, ordinate = 0.0;
  int regime_code = 0;
};

struct SweepWindow {
  double ab_lo = 0, ab_hi = 1;    // abscissa: c_tilde or M2
  double or_lo = 0, or_hi = 1;    // ordinate: M_tilde or M1
  int nx = 16, ny = 16;
};

namespace detail {

inline int saturate3(int n) { return std::min(n, 7); }

inline int encode_regime(int n_sink, int n_source, int n_saddle, int n_elliptic, int n_p2,
                         bool divergence) {
  return saturate3(n_sink) | (saturate3(n_source) << 3) | (saturate3(n_saddle) << 6) |
         (saturate3(n_elliptic) << 9) | (saturate3(n_p2) << 12) | ((divergence ? 1 : 0) << 15);
}

inline int regime_code_for(LimitFamily family, double abscissa, double ordinate) {
  PlanarMapHandle f;
  std::vector<Point2> seeds1, seeds2;
  if (family == LimitFamily::productH) {
    if (abscissa == 0.0) return -1;
    const ProductHenonParams hp{abscissa, ordinate};
    f = make_h_handle(hp);
    seeds1 = h_symmetric_fixed_points(hp);
    for (const Point2& q : h_asymmetric_fixed_points(hp)) seeds1.push_back(q);
    seeds2 = h_period2_points(hp);
  } else {
    const HenonParams hp{ordinate, abscissa};
    f = make_henon_handle(hp);
    seeds1 = henon_fixed_points(hp);
    seeds2 = henon_period2_points(hp);
  }
  const Box phase_box{{-6, -6}, {6, 6}};
  for (const Point2& q : grid_points(phase_box, 5)) seeds1.push_back(q);

  FindOptions opt;
  opt.newton.max_iter = 50;
  const auto p1 = find_fixed_points(f, seeds1, 1, opt, swap_involution(), phase_box);

  // Period-2 seeds: the closed-form symmetric families, pushes along the
  // reflection eigenvector of every period-1 point (flip children live
  // there), and a coarse grid.
  for (const auto& r : p1) {
    const auto J = f.jacobian(r.point);
    if (!J) continue;
    const auto m = eigenvalues(*J);
    const auto mneg = m.first.real() < m.second.real() ? m.first : m.second;
    if (std::abs(mneg.imag()) > 1e-9 || mneg.real() >= 0.0) continue;
    // eigenvector of the negative eigenvalue
    Point2 v{J->a12, mneg.real() - J->a11};
    if (max_norm(v) < 1e-12) v = {mneg.real() - J->a22, J->a21};
    const double n = std::hypot(v.x, v.y);
    if (n < 1e-12) continue;
    v = {v.x / n, v.y / n};
    for (double t : {0.05, 0.15, 0.4, 0.8}) {
      seeds2.push_back(r.point + t * v);
      seeds2.push_back(r.point - t * v);
    }
  }
  for (const Point2& q : grid_points(phase_box, 5)) seeds2.push_back(q);
  const auto p2 = find_fixed_points(f, seeds2, 2, opt, swap_involution(), phase_box);

  int n_sink = 0, n_source = 0, n_saddle = 0, n_elliptic = 0;
  for (const auto& r : p1) {
    switch (r.classification) {
      case OrbitClass::sink: ++n_sink; break;
      case OrbitClass::source: ++n_source; break;
      case OrbitClass::saddle: ++n_saddle; break;
      case OrbitClass::elliptic: ++n_elliptic; break;
      case OrbitClass::marginal: break;
    }
  }

  bool divergence = false;
  if (p1.empty() && p2.empty()) {
    Point2 p = phase_box.center();
    for (int i = 0; i < 200; ++i) {
      const auto q = f.eval(p);
      if (!q || max_norm(*q) > 1e6) {
        divergence = true;
        break;
      }
      p = *q;
    }
  }
  return encode_regime(n_sink, n_source, n_saddle, n_elliptic, p2.empty() ? 0 : 1,
                       divergence);
}

}  // namespace detail

/// Map of dynamical regimes over a parameter window, row-major with the
/// ordinate index outermost. Cell tasks are independent; output is
/// deterministic for any thread count.
inline std::vector<RegimeCell> regime_map(LimitFamily family, const SweepWindow& w,
                                          int threads = 0) {
  if (w.nx < 16 || w.ny < 16) throw std::invalid_argument("regime_map: grid must be >= 16x16");
  std::vector<RegimeCell> cells(static_cast<std::size_t>(w.nx) * w.ny);
  const double dx = (w.ab_hi - w.ab_lo) / w.nx;
  const double dy = (w.or_hi - w.or_lo) / w.ny;
  parallel_for(w.nx * w.ny, resolve_threads(threads), [&](int idx) {
    RegimeCell& cell = cells[static_cast<std::size_t>(idx)];
    cell.ix = idx % w.nx;
    cell.iy = idx / w.nx;
    cell.abscissa = w.ab_lo + (cell.ix + 0.5) * dx;
    cell.ordinate = w.or_lo + (cell.iy + 0.5) * dy;
    try {
      cell.regime_code = detail::regime_code_for(family, cell.abscissa, cell.ordinate);
    } catch (const std::exception&) {
      cell.regime_code = -1;
    }
  });
  return cells;
}

}  // namespace revmix
