// Command-line driver: bifurcation curve tables, fixed-point inventories,
// regime maps, cascade scans, rescaling residuals and the mixed-dynamics
// probe, all emitted as CSV (schemas in the README).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revmix/revmix.hpp"

namespace {

using namespace revmix;

struct Range {
  double lo = 0, hi = 0;
  int n = 0;
};

Range parse_range(const std::string& s) {
  Range r;
  const auto c1 = s.find(':');
  const auto c2 = s.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw std::invalid_argument("expected lo:hi:count, got '" + s + "'");
  r.lo = std::stod(s.substr(0, c1));
  r.hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
  r.n = std::stoi(s.substr(c2 + 1));
  if (r.n < 1) throw std::invalid_argument("range count must be >= 1");
  return r;
}

std::pair<int, int> parse_int_pair(const std::string& s, char sep = ':') {
  const auto c = s.find(sep);
  if (c == std::string::npos)
    throw std::invalid_argument("expected lo:hi, got '" + s + "'");
  return {std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
}

std::vector<double> parse_doubles(const std::string& s, std::size_t count) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto c = s.find(':', pos);
    const std::string tok = s.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
    out.push_back(std::stod(tok));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  if (out.size() != count)
    throw std::invalid_argument("expected " + std::to_string(count) + " colon-separated values");
  return out;
}

LimitFamily parse_family(const std::string& s) {
  if (s == "henon") return LimitFamily::henon;
  if (s == "productH") return LimitFamily::productH;
  throw std::invalid_argument("family must be henon or productH");
}

void write_plot_script(const std::string& path, const std::string& csv, const std::string& what) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot open plot script path " + path);
  out << "# gnuplot script generated by revmix\n";
  out << "set datafile separator ','\n";
  out << "set key outside\n";
  if (what == "curves") {
    out << "plot for [id in system(\"tail -n +2 " << csv
        << " | cut -d, -f1 | sort -u\")] '" << csv
        << "' using 2:($1 eq id ? $3 : NaN) with lines title id\n";
  } else if (what == "regime") {
    out << "set view map\n";
    out << "plot '" << csv << "' using 3:4:5 with points pt 5 ps 0.5 palette notitle\n";
  } else {
    out << "plot '" << csv << "' using 1:2 with points notitle\n";
  }
}

RunConfig config_from(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

int cmd_curves(const std::string& family_s, const std::string& orientation_s,
               const std::string& range_s, bool include_derived, const std::string& out,
               const std::string& plot) {
  const LimitFamily family = parse_family(family_s);
  const Orientation orient =
      orientation_s == "nonorientable" ? Orientation::nonorientable : Orientation::orientable;
  const Range r = parse_range(range_s);

  std::vector<CurveId> ids;
  if (family == LimitFamily::henon) {
    ids = {CurveId::L_plus1, CurveId::L_minus1};
  } else {
    ids = {CurveId::F0, CurveId::PD1, CurveId::PD2, CurveId::PF};
    if (orient == Orientation::orientable) ids.push_back(CurveId::PD_asym);
  }

  CsvWriter csv({"curve_id", "abscissa", "ordinate"});
  for (int i = 0; i < r.n; ++i) {
    const double ab = r.n == 1 ? r.lo : r.lo + (r.hi - r.lo) * double(i) / (r.n - 1);
    for (CurveId id : ids)
      csv.add_row({to_string(id), format_double(ab),
                   format_double(curve_value(id, family, ab, orient))});
    if (include_derived) {
      csv.add_row({"fold_derived", format_double(ab),
                   format_double(derived_fold(family, ab))});
      csv.add_row({"flip_derived", format_double(ab),
                   format_double(derived_flip(family, ab))});
    }
  }
  csv.save(out);
  if (!plot.empty()) write_plot_script(plot, out, "curves");
  std::printf("curves: %zu rows (%zu curves x %d abscissae) -> %s\n", csv.rows(),
              ids.size() + (include_derived ? 2 : 0), r.n, out.c_str());
  return 0;
}

int cmd_fixed_points(const std::string& family_s, double p1, double p2, double box_radius,
                     int grid, int period, const std::string& out) {
  const LimitFamily family = parse_family(family_s);
  PlanarMapHandle f = family == LimitFamily::henon
                          ? make_henon_handle({p1, p2})
                          : make_h_handle(ProductHenonParams{p1, p2});
  const Box box = Box::centered({0, 0}, box_radius);
  const auto recs = find_fixed_points(f, box, grid, period);
  CsvWriter csv({"x", "y", "period", "mult1_re", "mult1_im", "mult2_re", "mult2_im",
                 "classification", "is_symmetric", "residual"});
  for (const auto& rec : recs)
    csv.add_row({format_double(rec.point.x), format_double(rec.point.y),
                 std::to_string(rec.period), format_double(rec.multipliers.first.real()),
                 format_double(rec.multipliers.first.imag()),
                 format_double(rec.multipliers.second.real()),
                 format_double(rec.multipliers.second.imag()), to_string(rec.classification),
                 rec.is_symmetric ? "1" : "0", format_double(rec.residual)});
  csv.save(out);
  std::printf("fixed-points: %zu orbits of period %d -> %s\n", recs.size(), period, out.c_str());
  return 0;
}

int cmd_regime_map(const std::string& family_s, const std::string& window_s,
                   const std::string& grid_s, int threads, const std::string& out,
                   const std::string& plot) {
  const LimitFamily family = parse_family(family_s);
  const auto w4 = parse_doubles(window_s, 4);
  const auto [nx, ny] = parse_int_pair(grid_s);
  SweepWindow w;
  w.ab_lo = w4[0];
  w.ab_hi = w4[1];
  w.or_lo = w4[2];
  w.or_hi = w4[3];
  w.nx = nx;
  w.ny = ny;
  const auto cells = regime_map(family, w, threads);
  CsvWriter csv({"ix", "iy", "abscissa", "ordinate", "regime_code"});
  for (const auto& cell : cells)
    csv.add_row({std::to_string(cell.ix), std::to_string(cell.iy),
                 format_double(cell.abscissa), format_double(cell.ordinate),
                 std::to_string(cell.regime_code)});
  csv.save(out);
  if (!plot.empty()) write_plot_script(plot, out, "regime");
  std::printf("regime-map: %dx%d cells -> %s\n", w.nx, w.ny, out.c_str());
  return 0;
}

int cmd_cascade(const std::string& config, const std::string& k_s, const std::string& out) {
  const RunConfig cfg = config_from(config);
  const HomoclinicModel model = cfg.model();
  const auto [k_lo, k_hi] = parse_int_pair(k_s);
  const auto reports = cascade_scan(model, k_lo, k_hi);
  CsvWriter csv({"k", "m", "mu_sn", "mu_pd", "mu_f", "mu_pdC", "coexistence_verified"});
  int verified = 0;
  auto opt_str = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("nan");
  };
  for (const auto& r : reports) {
    if (r.coexistence_verified) ++verified;
    csv.add_row({std::to_string(r.k), std::to_string(r.m), opt_str(r.mu_sn), opt_str(r.mu_pd),
                 opt_str(r.mu_f), opt_str(r.mu_pdC), r.coexistence_verified ? "1" : "0"});
  }
  csv.save(out);
  std::printf("cascade: %d/%zu k-values verified -> %s\n", verified, reports.size(), out.c_str());
  return verified == static_cast<int>(reports.size()) ? 0 : 2;
}

int cmd_rescale_check(const std::string& config, const std::string& kind_s,
                      const std::string& k_s, int m_off, double mu_flag, bool mu_auto,
                      double box_radius, int grid, const std::string& out) {
  const RunConfig cfg = config_from(config);
  const HomoclinicModel model = cfg.model();
  ReturnKind kind;
  if (kind_s == "T1k") kind = ReturnKind::T1k;
  else if (kind_s == "T12km") kind = ReturnKind::T12km;
  else throw std::invalid_argument("rescale-check supports kinds T1k and T12km");
  const auto [k_lo, k_hi] = parse_int_pair(k_s);

  CsvWriter csv({"kind", "k", "m", "mu", "residual", "excluded_fraction"});
  double prev = 0.0;
  std::string ratios;
  for (int k = k_lo; k <= k_hi; ++k) {
    ReturnMapSpec spec{kind, k, k + m_off, 0.0};
    spec.mu = mu_auto ? mu_at_limit_param(model, spec, 0.0) : mu_flag;
    const auto res = rescale_residual(model, spec, Box::centered({0, 0}, box_radius), grid);
    csv.add_row({to_string(kind), std::to_string(spec.k), std::to_string(spec.m),
                 format_double(spec.mu), format_double(res.residual),
                 format_double(res.excluded_fraction)});
    if (k > k_lo) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %.3f", res.residual / prev);
      ratios += buf;
    }
    prev = res.residual;
  }
  csv.save(out);
  std::printf("rescale-check: %s k=%d..%d, successive ratios:%s -> %s\n", kind_s.c_str(), k_lo,
              k_hi, ratios.c_str(), out.c_str());
  return 0;
}

int cmd_probe_mixed(const std::string& config, const std::string& mu_s, const std::string& k_s,
                    const std::string& out) {
  const RunConfig cfg = config_from(config);
  const HomoclinicModel model = cfg.model();
  const auto [k_lo, k_hi] = parse_int_pair(k_s);
  double mu;
  Inventory inv;
  if (mu_s == "auto") {
    // Scan the 1-orbit existence window of the middle k for a value where
    // sinks, sources and an elliptic point coexist.
    const int k0 = (k_lo + k_hi) / 2;
    const auto rep = cascade_scan_one(model, k0);
    if (!rep.mu_sn || !rep.mu_pd)
      throw NumericalError("probe-mixed: could not locate the k=" + std::to_string(k0) +
                           " window for mu=auto");
    mu = 0.5 * (*rep.mu_sn + *rep.mu_pd);
    for (double t : {0.9, 0.95, 0.8, 0.65, 0.5, 0.35, 0.2}) {
      const double cand = *rep.mu_pd + t * (*rep.mu_sn - *rep.mu_pd);
      const Inventory probe = mixed_dynamics_probe(model, cand, k_lo, k_hi);
      if (probe.sinks >= 1 && probe.sources >= 1 && probe.elliptics >= 1) {
        mu = cand;
        inv = probe;
        break;
      }
    }
    if (inv.entries.empty()) inv = mixed_dynamics_probe(model, mu, k_lo, k_hi);
  } else {
    mu = std::stod(mu_s);
    inv = mixed_dynamics_probe(model, mu, k_lo, k_hi);
  }
  CsvWriter csv({"kind", "k", "m", "x", "y", "classification", "is_symmetric", "residual"});
  for (const auto& e : inv.entries)
    csv.add_row({to_string(e.spec.kind), std::to_string(e.spec.k), std::to_string(e.spec.m),
                 format_double(e.record.point.x), format_double(e.record.point.y),
                 to_string(e.record.classification), e.record.is_symmetric ? "1" : "0",
                 format_double(e.record.residual)});
  csv.save(out);
  std::printf(
      "probe-mixed: mu=%.17g -> %d sinks, %d sources, %d saddles, %d elliptic -> %s\n", mu,
      inv.sinks, inv.sources, inv.saddles, inv.elliptics, out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revmix: reversible-map homoclinic bifurcation laboratory"};
  app.require_subcommand(1);

  std::string config, out, plot, family = "productH", orientation = "orientable";
  std::string range = "-2:-0.1:64", window = "-2:-0.2:-2:2", grid2 = "64:64";
  std::string kind = "T1k", krange = "8:14", mu_s = "auto";
  double p1 = 1.0, p2 = -0.5, box_radius = 3.0;
  int grid = 9, period = 1, threads = 0, m_off = 0;
  bool include_derived = false;

  auto* curves = app.add_subcommand("curves", "tabulate bifurcation curves");
  curves->add_option("--family", family);
  curves->add_option("--orientation", orientation);
  curves->add_option("--ctilde-range,--m2-range,--range", range, "abscissa range lo:hi:count");
  curves->add_flag("--include-derived", include_derived, "also emit the derived fold/flip loci");
  curves->add_option("--out", out)->default_str("curves.csv");
  curves->add_option("--plot-script", plot);

  auto* fp = app.add_subcommand("fixed-points", "locate and classify periodic points");
  fp->add_option("--family", family);
  fp->add_option("--p1", p1, "M1 (henon) or c_tilde (productH)");
  fp->add_option("--p2", p2, "M2 (henon) or M_tilde (productH)");
  fp->add_option("--box", box_radius, "seed box radius about the origin");
  fp->add_option("--grid", grid);
  fp->add_option("--period", period);
  fp->add_option("--out", out)->default_str("fixed_points.csv");

  auto* rm = app.add_subcommand("regime-map", "parameter-plane regime census");
  rm->add_option("--family", family);
  rm->add_option("--window", window, "abscissa_lo:abscissa_hi:ordinate_lo:ordinate_hi");
  rm->add_option("--grid", grid2, "nx:ny");
  rm->add_option("--threads", threads, "0 = auto (REVMIX_THREADS honored)");
  rm->add_option("--out", out)->default_str("regime.csv");
  rm->add_option("--plot-script", plot);

  auto* ca = app.add_subcommand("cascade", "bifurcation cascades of the return maps");
  ca->add_option("--config", config, "run-config file (defaults: reference model)");
  ca->add_option("--k", krange, "k range lo:hi");
  ca->add_option("--out", out)->default_str("cascade.csv");

  auto* rc = app.add_subcommand("rescale-check", "distance to the rescaled limit maps");
  rc->add_option("--config", config);
  rc->add_option("--kind", kind, "T1k or T12km");
  rc->add_option("--k", krange);
  rc->add_option("--m-offset", m_off, "m = k + offset (T12km only)");
  rc->add_option("--mu", mu_s, "splitting parameter, or 'auto' to center the window");
  rc->add_option("--box", box_radius)->default_val("2.0");
  rc->add_option("--grid", grid);
  rc->add_option("--out", out)->default_str("rescale.csv");

  auto* pm = app.add_subcommand("probe-mixed", "classified inventory at one mu");
  pm->add_option("--config", config);
  pm->add_option("--mu", mu_s, "splitting parameter, or 'auto'");
  pm->add_option("--k", krange);
  pm->add_option("--out", out)->default_str("probe.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (curves->parsed()) {
      if (out.empty()) out = "curves.csv";
      return cmd_curves(family, orientation, range, include_derived, out, plot);
    }
    if (fp->parsed()) {
      if (out.empty()) out = "fixed_points.csv";
      return cmd_fixed_points(family, p1, p2, box_radius, grid, period, out);
    }
    if (rm->parsed()) {
      if (out.empty()) out = "regime.csv";
      return cmd_regime_map(family, window, grid2, threads, out, plot);
    }
    if (ca->parsed()) {
      if (out.empty()) out = "cascade.csv";
      return cmd_cascade(config, krange, out);
    }
    if (rc->parsed()) {
      if (out.empty()) out = "rescale.csv";
      const bool mu_auto = (mu_s == "auto");
      return cmd_rescale_check(config, kind, krange, m_off, mu_auto ? 0.0 : std::stod(mu_s),
                               mu_auto, box_radius, grid, out);
    }
    if (pm->parsed()) {
      if (out.empty()) out = "probe.csv";
      return cmd_probe_mixed(config, mu_s, krange, out);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 1;
}
