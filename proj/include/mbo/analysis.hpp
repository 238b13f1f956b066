#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mbo/convolve.hpp"
#include "mbo/distance.hpp"
#include "mbo/energy.hpp"
#include "mbo/exact.hpp"
#include "mbo/grid.hpp"
#include "mbo/kernel_analysis.hpp"
#include "mbo/kernels.hpp"
#include "mbo/scheme.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

// ---------------------------------------------------------------- reports

enum class Verdict { pass, fail, info };

struct ReportRow {
  std::string experiment, kernel, shape;
  double h = std::numeric_limits<double>::quiet_NaN();
  std::string metric;
  double value = 0;
  Verdict verdict = Verdict::info;
};

struct Report {
  std::vector<ReportRow> rows;

  void add(std::string experiment, std::string kernel, std::string shape, double h, std::string metric, double value,
           Verdict v) {
    rows.push_back({std::move(experiment), std::move(kernel), std::move(shape), h, std::move(metric), value, v});
  }
  void check(std::string experiment, std::string kernel, std::string shape, double h, std::string metric,
             double value, bool ok) {
    add(std::move(experiment), std::move(kernel), std::move(shape), h, std::move(metric), value,
        ok ? Verdict::pass : Verdict::fail);
  }
  bool passed() const {
    return std::none_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict == Verdict::fail; });
  }
  void append(const Report& o) { rows.insert(rows.end(), o.rows.begin(), o.rows.end()); }
};

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "info";
  }
}

inline void write_report_csv(std::ostream& os, const Report& r) {
  os << "experiment,kernel,shape,h,metric,value,pass\n";
  for (const auto& row : r.rows)
    os << row.experiment << ',' << row.kernel << ',' << row.shape << ',' << detail::fmt_num(row.h) << ','
       << row.metric << ',' << detail::fmt_num(row.value) << ',' << verdict_name(row.verdict) << '\n';
}

struct Tolerances {
  double slope_min = 0.8;          // consistency rates
  double mean_rel = 0.05;          // |mean z/h - prediction| relative, finest h
  double no_crossing_max = 0.10;   // fraction of probes
  double energy_rel = 0.10;        // |I - I*| / I* at the coarsest h
  double extinction_steps = 10;    // |T - T*| <= this * h
  double positive_fraction = 0.95; // backward kernel expansion
  double descent_slack = 1e-9;
  double minimality_slack = 1e-9;
  double variational_slack = 1e-10;
  double fat_fraction = 0.0;       // 0: use the per-example default
  double arrival_constant = 5.0;   // sup |u_h - u| <= C (h + spacing)
};

// ---------------------------------------------------------------- rate fit

struct RateFit {
  double slope = 0, intercept = 0, r2 = 0;
  int used = 0, dropped = 0;
};

// Least squares of log r against log h; nonpositive residuals are dropped.
inline RateFit rate_fit(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> x, y;
  RateFit f;
  for (auto [h, r] : pairs) {
    if (!(h > 0) || !(r > 0) || !std::isfinite(r)) {
      ++f.dropped;
      continue;
    }
    x.push_back(std::log(h));
    y.push_back(std::log(r));
  }
  f.used = static_cast<int>(x.size());
  if (f.used < 3) throw PreconditionError("rate_fit: fewer than 3 positive residuals");
  double n = f.used, mx = 0, my = 0;
  for (int i = 0; i < f.used; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < f.used; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw PreconditionError("rate_fit: all h values coincide");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// ---------------------------------------------------------------- displacement

using Displacement = ExactDisplacement;

namespace detail {

// Multilinear interpolation of cell-center values at x (periodic wrap).
template <class Get>
double multilinear(const GridSpec& s, Get&& get, const Vec& x) {
  int i0[3] = {0, 0, 0};
  double t[3] = {0, 0, 0};
  for (int a = 0; a < s.d(); ++a) {
    double u = (x[a] + 0.5 * s.extent(a)) / s.spacing(a) - 0.5;
    double fl = std::floor(u);
    i0[a] = static_cast<int>(fl);
    t[a] = u - fl;
  }
  auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
  double v = 0;
  const int corners = 1 << s.d();
  for (int c = 0; c < corners; ++c) {
    double w = 1;
    int ix[3] = {0, 0, 0};
    for (int a = 0; a < s.d(); ++a) {
      int bit = (c >> a) & 1;
      w *= bit ? t[a] : 1 - t[a];
      ix[a] = wrap(i0[a] + bit, s.dim(a));
    }
    if (w != 0) v += w * get(s.flat(ix[0], ix[1], ix[2]));
  }
  return v;
}

// First sign change of g along the normal, searching the side where the
// crossing must lie; positive when g(x) > 0.
template <class G>
Displacement first_crossing(G&& g, const Probe& p, double step, double window) {
  Displacement out;
  double g0 = g(p.x);
  if (g0 == 0) {
    out.found = true;
    return out;
  }
  const double dir = g0 > 0 ? 1.0 : -1.0;
  double l0 = 0;
  for (double l = step; l <= window + 1e-15; l += step) {
    double v = g(p.x + (dir * l) * p.normal);
    if ((v > 0) != (g0 > 0)) {
      double lo = l0, hi = l;
      for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        double vm = g(p.x + (dir * mid) * p.normal);
        ((vm > 0) == (g0 > 0) ? lo : hi) = mid;
      }
      out.z = dir * 0.5 * (lo + hi);
      out.found = true;
      return out;
    }
    l0 = l;
  }
  return out;
}

}  // namespace detail

// Signed distance along each probe normal to the 1/2 level of the bilinear
// interpolation of the `after` mask; negative when the probe point lies
// outside `after`.  window <= 0 means 32 cells.
inline std::vector<Displacement> extract_normal_displacement(const BinarySetField& before,
                                                             const BinarySetField& after,
                                                             const std::vector<Probe>& probes, double window = -1) {
  require_same(before.spec, after.spec, "extract_normal_displacement");
  const auto& s = after.spec;
  double dx = s.spacing(0);
  for (int a = 1; a < s.d(); ++a) dx = std::min(dx, s.spacing(a));
  if (window <= 0) window = 32 * s.max_spacing();
  auto g = [&](const Vec& x) {
    return detail::multilinear(s, [&](std::size_t f) { return static_cast<double>(after.mask[f]); }, x) - 0.5;
  };
  std::vector<Displacement> out;
  for (const auto& p : probes) out.push_back(detail::first_crossing(g, p, dx / 8, window));
  return out;
}

// Same search on the interpolated convolution field at `level`.
inline std::vector<Displacement> extract_field_displacement(const ScalarField& field, double level,
                                                            const std::vector<Probe>& probes, double window = -1) {
  const auto& s = field.spec;
  double dx = s.spacing(0);
  for (int a = 1; a < s.d(); ++a) dx = std::min(dx, s.spacing(a));
  if (window <= 0) window = 32 * s.max_spacing();
  auto g = [&](const Vec& x) {
    return detail::multilinear(s, [&](std::size_t f) { return field.values[f]; }, x) - level;
  };
  std::vector<Displacement> out;
  for (const auto& p : probes) out.push_back(detail::first_crossing(g, p, dx / 8, window));
  return out;
}

// ---------------------------------------------------------------- consistency

enum class Measurement { exact_geometry, grid_field, grid_mask };

inline const char* measurement_name(Measurement m) {
  switch (m) {
    case Measurement::exact_geometry: return "exact_geometry";
    case Measurement::grid_field: return "grid_field";
    default: return "grid_mask";
  }
}

struct ConsistencySettings {
  GridSpec spec;
  KernelDescriptor kernel;
  ShapePtr shape;
  std::vector<double> h_list;
  int probes = 64;
  Measurement mode = Measurement::exact_geometry;
  double drift = 0.0;
};

struct ConsistencyRow {
  double h = 0;
  double normalized = 0;       // max |z/(h mu) + H_sigma|
  double raw = 0;              // max |z/mu + h H_sigma|
  double velocity = 0;         // max |z/h + mu H_sigma|
  double mean_z_over_h = 0;
  double mean_prediction = 0;  // mean of -mu H_sigma
  double positive_fraction = 0;
  double no_crossing_fraction = 0;
  std::vector<double> z;
  bool valid = true;
};

struct ConsistencyReport {
  Measurement mode = Measurement::exact_geometry;
  std::vector<ConsistencyRow> rows;
  std::vector<double> mobility, curvature;  // per probe, from the normalized kernel
  std::optional<RateFit> normalized_fit, raw_fit;
  bool valid = true;
};

inline ConsistencyReport consistency_experiment(const ConsistencySettings& cfg) {
  if (!cfg.shape) throw PreconditionError("consistency_experiment: no shape");
  for (std::size_t i = 1; i < cfg.h_list.size(); ++i)
    if (!(cfg.h_list[i] < cfg.h_list[i - 1]))
      throw PreconditionError("consistency_experiment: h_list must be decreasing");
  ConsistencyReport rep;
  rep.mode = cfg.mode;
  const auto Kn = normalized_kernel(cfg.kernel);
  auto probes = cfg.shape->probes(cfg.probes);
  for (const auto& p : probes) {
    rep.mobility.push_back(mobility_at(Kn, p.normal));
    rep.curvature.push_back(anisotropic_curvature(Kn, *cfg.shape, p));
  }
  std::vector<std::pair<double, double>> npairs, rpairs;
  for (double h : cfg.h_list) {
    check_resolvable(cfg.spec, h);
    std::vector<Displacement> z;
    if (cfg.mode == Measurement::exact_geometry) {
      for (const auto& p : probes) z.push_back(exact_normal_displacement(Kn, h, *cfg.shape, p, cfg.drift));
    } else {
      auto Kh = sample_kernel(cfg.spec, cfg.kernel, h);
      auto E0 = make_shape(cfg.spec, *cfg.shape, Kh.support_radius);
      auto field = convolve_fft(Kh, E0);
      if (cfg.mode == Measurement::grid_field) {
        z = extract_field_displacement(field, 0.5 - cfg.drift, probes);
      } else {
        auto E1 = threshold(field, 0.5 - cfg.drift).set;
        z = extract_normal_displacement(E0, E1, probes);
      }
    }
    ConsistencyRow row;
    row.h = h;
    int found = 0, positive = 0;
    double sz = 0, sp = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      row.z.push_back(z[i].found ? z[i].z : std::numeric_limits<double>::quiet_NaN());
      if (!z[i].found) continue;
      ++found;
      if (z[i].z > 0) ++positive;
      double mu = rep.mobility[i], H = rep.curvature[i];
      row.normalized = std::max(row.normalized, std::abs(z[i].z / (h * mu) + H));
      row.raw = std::max(row.raw, std::abs(z[i].z / mu + h * H));
      row.velocity = std::max(row.velocity, std::abs(z[i].z / h + mu * H));
      sz += z[i].z / h;
      sp += -mu * H;
    }
    const double n = static_cast<double>(probes.size());
    row.no_crossing_fraction = (n - found) / n;
    row.positive_fraction = positive / n;
    row.valid = row.no_crossing_fraction <= 0.1;
    if (found > 0) {
      row.mean_z_over_h = sz / found;
      row.mean_prediction = sp / found;
    }
    if (!row.valid) rep.valid = false;
    npairs.emplace_back(h, row.normalized);
    rpairs.emplace_back(h, row.raw);
    rep.rows.push_back(std::move(row));
  }
  if (cfg.h_list.size() >= 3) {
    try {
      rep.normalized_fit = rate_fit(npairs);
      rep.raw_fit = rate_fit(rpairs);
    } catch (const PreconditionError&) {
    }
  }
  return rep;
}

inline Report consistency_report(const ConsistencyReport& r, const std::string& kernel, const std::string& shape,
                                 const Tolerances& tol, const std::string& name = "consistency") {
  Report out;
  const bool assert_rate = r.mode == Measurement::exact_geometry;
  const std::string tag = measurement_name(r.mode);
  for (const auto& row : r.rows) {
    out.add(name, kernel, shape, row.h, tag + ":max_normalized_residual", row.normalized, Verdict::info);
    out.add(name, kernel, shape, row.h, tag + ":max_raw_residual", row.raw, Verdict::info);
    out.add(name, kernel, shape, row.h, tag + ":mean_z_over_h", row.mean_z_over_h, Verdict::info);
    out.add(name, kernel, shape, row.h, tag + ":mean_prediction", row.mean_prediction, Verdict::info);
    out.check(name, kernel, shape, row.h, tag + ":no_crossing_fraction", row.no_crossing_fraction,
              row.no_crossing_fraction <= tol.no_crossing_max);
  }
  if (r.normalized_fit) {
    Verdict v = assert_rate ? (r.normalized_fit->slope >= tol.slope_min ? Verdict::pass : Verdict::fail)
                            : Verdict::info;
    out.add(name, kernel, shape, std::numeric_limits<double>::quiet_NaN(), tag + ":normalized_slope",
            r.normalized_fit->slope, v);
    out.add(name, kernel, shape, std::numeric_limits<double>::quiet_NaN(), tag + ":raw_slope", r.raw_fit->slope,
            Verdict::info);
  }
  if (!r.rows.empty()) {
    const auto& f = r.rows.back();
    double rel = std::abs(f.mean_z_over_h - f.mean_prediction) / std::abs(f.mean_prediction);
    out.add(name, kernel, shape, f.h, tag + ":mean_relative_error", rel,
            assert_rate ? (rel < tol.mean_rel ? Verdict::pass : Verdict::fail) : Verdict::info);
  }
  return out;
}

// ---------------------------------------------------------------- backward kernel

struct BackwardSettings {
  GridSpec spec;
  std::vector<double> h_list;
  double radius = 0.25;
  int probes = 64;
  std::string kernel = "backward_three_hat";
};

struct BackwardReport {
  ConsistencyReport exact;
  std::vector<double> grid_positive_fraction;  // per h, one grid step on the ball
  std::vector<bool> grid_resolvable;           // predicted step at least one cell
  std::vector<double> flat_max_abs;            // per h, max |z| on a flat interface
  std::vector<bool> grid_contracting;          // informational
  double half_cell = 0;
};

inline BackwardReport backward_consistency_experiment(const BackwardSettings& cfg) {
  BackwardReport rep;
  auto K = special_kernels(cfg.kernel, 2);
  auto ball = std::make_shared<Ball>(2, Vec{0, 0, 0}, cfg.radius);
  ConsistencySettings cs{cfg.spec, K, ball, cfg.h_list, cfg.probes, Measurement::exact_geometry, 0.0};
  rep.exact = consistency_experiment(cs);
  rep.half_cell = 0.5 * cfg.spec.max_spacing();
  HalfSpace flat(2, 0, 0.0, 0.25);
  for (std::size_t i = 0; i < cfg.h_list.size(); ++i) {
    const double h = cfg.h_list[i];
    // a mask cannot register motion below one cell
    rep.grid_resolvable.push_back(h * std::abs(rep.exact.rows[i].mean_prediction) >= cfg.spec.max_spacing());
    auto Kh = sample_kernel(cfg.spec, K, h);
    auto E0 = make_shape(cfg.spec, *ball, Kh.support_radius);
    auto E1 = threshold(convolve_fft(Kh, E0), 0.5).set;
    auto z = extract_normal_displacement(E0, E1, ball->probes(cfg.probes));
    double pos = 0;
    for (const auto& d : z)
      if (d.found && d.z > 0) ++pos;
    rep.grid_positive_fraction.push_back(pos / static_cast<double>(z.size()));
    rep.grid_contracting.push_back(is_subset(E1, E0));
    auto F0 = make_shape(cfg.spec, flat);
    auto F1 = threshold(convolve_fft(Kh, F0), 0.5).set;
    double worst = 0;
    for (const auto& d : extract_normal_displacement(F0, F1, flat.probes(cfg.probes)))
      worst = std::max(worst, d.found ? std::abs(d.z) : std::numeric_limits<double>::infinity());
    rep.flat_max_abs.push_back(worst);
  }
  return rep;
}

inline Report backward_report(const BackwardReport& r, const Tolerances& tol) {
  Report out = consistency_report(r.exact, "backward_three_hat", "ball", tol, "backward_consistency");
  const auto& rows = r.exact.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double h = rows[i].h;
    out.check("backward_consistency", "backward_three_hat", "ball", h, "exact_geometry:positive_fraction",
              rows[i].positive_fraction, rows[i].positive_fraction >= tol.positive_fraction);
    if (r.grid_resolvable[i])
      out.check("backward_consistency", "backward_three_hat", "ball", h, "grid_mask:positive_fraction",
                r.grid_positive_fraction[i], r.grid_positive_fraction[i] >= tol.positive_fraction);
    else
      out.add("backward_consistency", "backward_three_hat", "ball", h, "grid_mask:positive_fraction(subcell)",
              r.grid_positive_fraction[i], Verdict::info);
    out.add("backward_consistency", "backward_three_hat", "ball", h, "grid_mask:contracting",
            r.grid_contracting[i] ? 1.0 : 0.0, Verdict::info);
    out.check("backward_consistency", "backward_three_hat", "half_space", h, "grid_mask:flat_max_abs_z",
              r.flat_max_abs[i], r.flat_max_abs[i] <= r.half_cell);
  }
  return out;
}

// ---------------------------------------------------------------- arrival time

struct ShrinkRate {
  double w = std::numeric_limits<double>::infinity();
  int j = -1, m = -1;  // attained at dist(E_{j+m-1}, E_j^c) / ((m-1) h)
};

// Minimal large-scale shrink speed of a nested evolution, read off the
// arrival time: E_k = {u >= (k+1) h}.
inline ShrinkRate measure_shrink_rate(const ScalarField& u, double h) {
  const auto& s = u.spec;
  std::vector<int> level(u.values.size());
  int top = -1;
  for (std::size_t f = 0; f < level.size(); ++f) {
    level[f] = static_cast<int>(std::lround(u.values[f] / h)) - 1;
    top = std::max(top, level[f]);
  }
  ShrinkRate out;
  const double inf = std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 <= top; ++j) {
    IndexBox box;
    box.lo = {s.dim(0), s.dim(1), s.dim(2)};
    box.hi = {-1, -1, -1};
    for (std::size_t f = 0; f < level.size(); ++f) {
      if (level[f] < j) continue;
      auto ix = s.index(f);
      for (int a = 0; a < 3; ++a) {
        box.lo[a] = std::min(box.lo[a], ix[a]);
        box.hi[a] = std::max(box.hi[a], ix[a]);
      }
    }
    for (int a = 0; a < s.d(); ++a) {
      box.lo[a] = std::max(0, box.lo[a] - 1);
      box.hi[a] = std::min(s.dim(a) - 1, box.hi[a] + 1);
    }
    auto dt = squared_distance_in_box(s, box, [&](std::size_t f) { return level[f] < j; });
    std::vector<double> best(top + 1, inf);
    std::size_t b = 0;
    for (int i = box.lo[0]; i <= box.hi[0]; ++i)
      for (int jj = box.lo[1]; jj <= box.hi[1]; ++jj)
        for (int k = box.lo[2]; k <= box.hi[2]; ++k, ++b) {
          int l = level[s.flat(i, jj, k)];
          if (l > j) best[l] = std::min(best[l], dt[b]);
        }
    double suffix = inf;
    for (int l = top; l > j; --l) {
      suffix = std::min(suffix, best[l]);
      double w = std::sqrt(suffix) / ((l - j) * h);
      if (w < out.w) out = {w, j, l - j + 1};
    }
  }
  return out;
}

struct LipschitzCheck {
  int pairs = 0, violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min of bound - |du|
};

// |u(x) - u(y)| <= |x - y| / w + h on random cell pairs.
inline LipschitzCheck check_arrival_lipschitz(const ScalarField& u, double h, double w, int pairs,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, u.values.size() - 1);
  LipschitzCheck c;
  for (int i = 0; i < pairs; ++i) {
    std::size_t a = pick(rng), b = pick(rng);
    double du = std::abs(u.values[a] - u.values[b]);
    double bound = norm(u.spec.center(a) - u.spec.center(b)) / w + h;
    double margin = bound - du;
    c.worst_margin = std::min(c.worst_margin, margin);
    if (margin < -1e-12) ++c.violations;
    ++c.pairs;
  }
  return c;
}

// sup |u_h - u| for the shrinking ball u(x) = max(0, R^2 - |x - c|^2) / (2 rate),
// rate = (d - 1) mu sigma.
inline double arrival_sup_error(const ScalarField& u, const Vec& center, double R0, double rate) {
  double worst = 0;
  for (std::size_t f = 0; f < u.values.size(); ++f) {
    Vec y = u.spec.center(f) - center;
    double exact = std::max(0.0, R0 * R0 - dot(y, y)) / (2 * rate);
    worst = std::max(worst, std::abs(u.values[f] - exact));
  }
  return worst;
}

// ---------------------------------------------------------------- energies

struct EnergySettings {
  GridSpec spec;
  KernelDescriptor kernel;
  ShapePtr shape;
  std::vector<double> h_list;
  int max_steps = 100000;
  bool exact = false;  // radial kernels on a centered ball only
  bool measure_rate = true;
};

struct EnergyRow {
  double h = 0;
  double I = 0;
  double extinction_time = 0;
  int steps = 0;
  bool extinct = false;
  bool monotone = true;           // P_{K,h}(E_{k+1}) <= P_{K,h}(E_k)
  bool below_sigma = true;        // P_{K,h}(E_k) <= P_sigma(E_k) (mask contour)
  double max_sigma_ratio = 0;
  double w = std::numeric_limits<double>::quiet_NaN();
  double T0 = std::numeric_limits<double>::quiet_NaN();
  double P0 = 0;
  double arrival_error = std::numeric_limits<double>::quiet_NaN();
  double spacing = 0;
  ScalarField arrival;
};

struct EnergyReport {
  std::vector<EnergyRow> rows;
  double I_ref = 0;
  bool self_referential = false;
  double T_ref = std::numeric_limits<double>::quiet_NaN();  // exact extinction time when known
  double sigma0 = 0, mu0 = 0;
  bool exact = false;
};

inline EnergyReport energy_convergence_experiment(const EnergySettings& cfg) {
  if (!cfg.shape) throw PreconditionError("energy_convergence_experiment: no shape");
  EnergyReport rep;
  rep.exact = cfg.exact;
  const auto Kn = normalized_kernel(cfg.kernel);
  const int d = cfg.spec.d();
  const Vec e1{1, 0, 0};
  rep.sigma0 = surface_tension_at(Kn, e1);
  rep.mu0 = mobility_at(Kn, e1);
  const auto* ball = dynamic_cast<const Ball*>(cfg.shape.get());
  const bool isotropic_ball = ball && cfg.kernel.radial();
  if (isotropic_ball) {
    double R = ball->radius();
    double speed = (d - 1) * rep.mu0 * rep.sigma0;
    rep.T_ref = R * R / (2 * speed);
    // I* = int_0^T sigma |dB_{R(t)}| dt with R dR/dt = -(d-1) mu sigma
    double area = d == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi;
    rep.I_ref = rep.sigma0 * area * std::pow(R, d + 1) / ((d + 1) * speed);
  }
  if (cfg.exact) {
    if (!isotropic_ball || d != 2) throw PreconditionError("exact energy path needs a radial kernel and a 2D ball");
    for (double h : cfg.h_list) {
      auto run = exact_ball_evolution(Kn, h, ball->radius(), cfg.max_steps);
      EnergyRow row;
      row.h = h;
      row.I = run.I;
      row.extinction_time = run.extinction_time;
      row.steps = static_cast<int>(run.radii.size());
      row.extinct = run.extinct;
      row.P0 = run.adjusted.front();
      double P_sigma = rep.sigma0 * 2 * std::numbers::pi;
      for (std::size_t k = 0; k < run.radii.size(); ++k) {
        if (k + 1 < run.adjusted.size() && run.adjusted[k + 1] > run.adjusted[k] + 1e-12) row.monotone = false;
        double ratio = run.adjusted[k] / (P_sigma * run.radii[k]);
        row.max_sigma_ratio = std::max(row.max_sigma_ratio, ratio);
        if (ratio > 1 + 1e-12) row.below_sigma = false;
      }
      rep.rows.push_back(std::move(row));
    }
    return rep;
  }
  std::optional<DirectionalDistribution> sigma;
  if (d == 2) sigma = surface_tension_of(Kn, 64);
  for (double h : cfg.h_list) {
    EnergyRow row;
    row.h = h;
    row.spacing = cfg.spec.max_spacing();
    EvolveSettings es;
    es.spec = cfg.spec;
    es.kernel = cfg.kernel;
    es.h = h;
    es.shape = cfg.shape;
    es.max_steps = cfg.max_steps;
    es.record_shrink = false;
    std::vector<double> psig;
    if (sigma) es.on_step = [&](int, const BinarySetField& E, const ScalarField&) {
      psig.push_back(anisotropic_perimeter(*sigma, E));
    };
    auto rec = evolve(es);
    row.extinct = rec.extinct;
    row.extinction_time = rec.extinction_time();
    double sum = 0;
    std::vector<double> pk;
    for (const auto& st : rec.steps)
      if (!st.extinct) pk.push_back(st.P_Kh);
    for (double p : pk) sum += p;
    row.I = h * sum;
    row.steps = static_cast<int>(pk.size());
    row.P0 = pk.empty() ? 0 : pk.front();
    for (std::size_t k = 0; k + 1 < pk.size(); ++k)
      if (pk[k + 1] > pk[k] + 1e-9) row.monotone = false;
    for (std::size_t k = 0; k < psig.size() && k < pk.size(); ++k) {
      double ratio = pk[k] / psig[k];
      row.max_sigma_ratio = std::max(row.max_sigma_ratio, ratio);
      if (pk[k] > psig[k] + 1e-9) row.below_sigma = false;
    }
    if (cfg.measure_rate && rec.extinct) {
      row.w = measure_shrink_rate(rec.arrival, h).w;
      row.T0 = cfg.shape->diameter() / row.w;
    }
    if (isotropic_ball) row.arrival_error = arrival_sup_error(rec.arrival, ball->center(), ball->radius(),
                                                              (d - 1) * rep.mu0 * rep.sigma0);
    row.arrival = std::move(rec.arrival);
    rep.rows.push_back(std::move(row));
  }
  if (!isotropic_ball && !rep.rows.empty()) {
    rep.self_referential = true;
    rep.I_ref = rep.rows.back().I;
  }
  return rep;
}

inline Report energy_report(const EnergyReport& r, const std::string& kernel, const std::string& shape,
                            const Tolerances& tol) {
  Report out;
  const std::string tag = r.exact ? "exact_geometry:" : "grid:";
  const std::string ex = "energy_convergence";
  std::vector<double> errs;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    double rel = (row.I - r.I_ref) / r.I_ref;
    errs.push_back(std::abs(row.I - r.I_ref));
    out.check(ex, kernel, shape, row.h, tag + "extinct", row.extinct ? 1 : 0, row.extinct);
    out.add(ex, kernel, shape, row.h, tag + "I", row.I, Verdict::info);
    out.add(ex, kernel, shape, row.h, tag + (r.self_referential ? "I_ref_finest" : "I_star"), r.I_ref,
            Verdict::info);
    out.add(ex, kernel, shape, row.h, tag + "relative_error", rel,
            i == 0 && !r.self_referential ? (std::abs(rel) < tol.energy_rel ? Verdict::pass : Verdict::fail)
                                          : Verdict::info);
    out.check(ex, kernel, shape, row.h, tag + "energy_monotone", row.monotone ? 1 : 0, row.monotone);
    out.check(ex, kernel, shape, row.h, tag + "P_Kh_le_P_sigma", row.max_sigma_ratio, row.below_sigma);
    if (std::isfinite(r.T_ref)) {
      double dt = row.extinction_time - r.T_ref;
      out.check(ex, kernel, shape, row.h, tag + "extinction_time_error", dt,
                std::abs(dt) <= tol.extinction_steps * row.h);
    }
    if (std::isfinite(row.T0)) {
      out.add(ex, kernel, shape, row.h, tag + "shrink_rate_w", row.w, Verdict::info);
      out.check(ex, kernel, shape, row.h, tag + "I_le_T0_P0", row.I / (row.T0 * row.P0),
                row.I <= row.T0 * row.P0 + 1e-12);
    }
    if (std::isfinite(row.arrival_error)) {
      out.check(ex, kernel, shape, row.h, tag + "arrival_sup_error", row.arrival_error,
                row.arrival_error < tol.arrival_constant * (row.h + row.spacing));
    }
  }
  if (!r.self_referential && errs.size() >= 2) {
    bool dec = true;
    for (std::size_t i = 1; i < errs.size(); ++i)
      if (!(errs[i] < errs[i - 1])) dec = false;
    out.add(ex, kernel, shape, std::numeric_limits<double>::quiet_NaN(), tag + "error_strictly_decreasing",
            dec ? 1 : 0, r.exact ? (dec ? Verdict::pass : Verdict::fail) : Verdict::info);
  }
  return out;
}

// ---------------------------------------------------------------- outward minimality

namespace detail {

// Random blob of cells (radius 0..3 cells) around a random candidate cell,
// restricted to `allowed`.
inline BinarySetField random_blob(const BinarySetField& allowed, const std::vector<std::size_t>& candidates,
                                  std::mt19937_64& rng) {
  const auto& s = allowed.spec;
  BinarySetField F(s);
  if (candidates.empty()) return F;
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::uniform_real_distribution<double> rad(0.0, 3.0);
  auto c = s.index(candidates[pick(rng)]);
  double r = rad(rng);
  int ri = static_cast<int>(std::ceil(r));
  for (int i = -ri; i <= ri; ++i)
    for (int j = -ri; j <= ri; ++j)
      for (int k = (s.d() == 3 ? -ri : 0); k <= (s.d() == 3 ? ri : 0); ++k) {
        if (i * i + j * j + k * k > r * r) continue;
        int a = c[0] + i, b = c[1] + j, e = c[2] + k;
        if (a < 0 || b < 0 || e < 0 || a >= s.dim(0) || b >= s.dim(1) || e >= s.dim(2)) continue;
        auto f = s.flat(a, b, e);
        if (allowed.mask[f]) F.mask[f] = 1;
      }
  return F;
}

// Cells of `allowed` within `reach` of `target`.
inline std::vector<std::size_t> cells_near(const BinarySetField& allowed, const BinarySetField& target,
                                           double reach) {
  auto dt = squared_distance_to(target);
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < allowed.mask.size(); ++f)
    if (allowed.mask[f] && dt.values[f] <= reach * reach) out.push_back(f);
  return out;
}

}  // namespace detail

// P_K(E cup F) + S_K(F) - P_K(E) for F outside E.
inline double outward_margin(const SampledKernel& K, const BinarySetField& E, const BinarySetField& F) {
  return k_perimeter(K, set_union(E, F)) + self_interaction(K, F) - k_perimeter(K, E);
}

// Both outward-minimizing predicates by enumeration of all subsets of the
// container's cells (free cells only for the first).  Container cells are
// limited to 20.
struct OmcResult {
  bool omc1 = true, omc2 = true;
  double min_margin1 = std::numeric_limits<double>::infinity();  // P(E cup F) - P(E)
  double min_margin2 = std::numeric_limits<double>::infinity();  // P(G) - P(E cap G)
};

inline OmcResult outward_minimizing(const SampledKernel& K, const BinarySetField& E, const BinarySetField& Omega,
                                    double slack = 1e-12) {
  if (!is_subset(E, Omega)) throw PreconditionError("outward_minimizing: E must lie in the container");
  std::vector<std::size_t> all, free;
  for (std::size_t f = 0; f < Omega.mask.size(); ++f) {
    if (!Omega.mask[f]) continue;
    all.push_back(f);
    if (!E.mask[f]) free.push_back(f);
  }
  if (all.size() > 20) throw PreconditionError("outward_minimizing: container too large to enumerate");
  OmcResult r;
  const double PE = k_perimeter(K, E);
  // trivial competitors (F = empty, G inside E) have margin exactly 0 and are skipped
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << free.size()); ++m) {
    BinarySetField U = E;
    for (std::size_t i = 0; i < free.size(); ++i)
      if (m >> i & 1) U.mask[free[i]] = 1;
    double v = k_perimeter(K, U) - PE;
    r.min_margin1 = std::min(r.min_margin1, v);
  }
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << all.size()); ++m) {
    BinarySetField G(E.spec);
    for (std::size_t i = 0; i < all.size(); ++i)
      if (m >> i & 1) G.mask[all[i]] = 1;
    if (is_subset(G, E)) continue;
    double v = k_perimeter(K, G) - k_perimeter(K, set_intersection(E, G));
    r.min_margin2 = std::min(r.min_margin2, v);
  }
  r.omc1 = r.min_margin1 >= -slack;
  r.omc2 = r.min_margin2 >= -slack;
  return r;
}

// Preservation of outward minimality with an extra functional A on F \ E0:
// hypothesis P(E0 cup F) >= P(E0) + A(F\E0) for all F in Omega implies
// P(E1 cup F) >= P(E1) + A(F\E0) + int_{F cap D} K*(2 chi_D - chi_{F cap D}),
// D = E0 \ E1.  Returns hypothesis and conclusion truth values.
struct ExtOmcResult {
  bool hypothesis = true, conclusion = true, sufficiently_large = true;
  double min_hypothesis = std::numeric_limits<double>::infinity();
  double min_conclusion = std::numeric_limits<double>::infinity();
};

inline ExtOmcResult extended_outward_check(const SampledKernel& K, const BinarySetField& E0,
                                           const BinarySetField& Omega,
                                           const std::function<double(const BinarySetField&)>& A,
                                           double slack = 1e-12) {
  auto E1 = threshold(convolve(K, E0), 0.5).set;
  ExtOmcResult r;
  r.sufficiently_large = is_subset(set_union(E0, E1), Omega);
  std::vector<std::size_t> all;
  for (std::size_t f = 0; f < Omega.mask.size(); ++f)
    if (Omega.mask[f]) all.push_back(f);
  if (all.size() > 20) throw PreconditionError("extended_outward_check: container too large to enumerate");
  const double P0 = k_perimeter(K, E0), P1 = k_perimeter(K, E1);
  auto D = set_difference(E0, E1);
  auto KD = convolve(K, D);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << all.size()); ++m) {
    BinarySetField F(E0.spec);
    for (std::size_t i = 0; i < all.size(); ++i)
      if (m >> i & 1) F.mask[all[i]] = 1;
    auto outside = set_difference(F, E0);
    double a = A(outside);
    r.min_hypothesis = std::min(r.min_hypothesis, k_perimeter(K, set_union(E0, F)) - P0 - a);
    auto FD = set_intersection(F, D);
    double extra = 2 * inner_product(FD, KD) - self_interaction(K, FD);
    r.min_conclusion = std::min(r.min_conclusion, k_perimeter(K, set_union(E1, F)) - P1 - a - extra);
  }
  r.hypothesis = r.min_hypothesis >= -slack;
  r.conclusion = r.min_conclusion >= -slack;
  return r;
}

struct AgreementCount {
  int agree = 0, disagree = 0, skipped = 0;
};

// For disjoint E, F:  P(E cup F) + S(F) >= P(E)  iff  int_F K*chi_{E^c} >= int_F K*chi_E,
// both sides evaluated independently; instances within `margin` are skipped.
inline AgreementCount main_con_agreement(const SampledKernel& K, int instances, std::uint64_t seed,
                                         double margin = 1e-9) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> dens(0.05, 0.6);
  AgreementCount c;
  const auto& s = K.spec;
  for (int n = 0; n < instances; ++n) {
    BinarySetField E(s), F(s);
    double pe = dens(rng), pf = dens(rng);
    std::bernoulli_distribution ce(pe), cf(pf);
    for (std::size_t i = 0; i < E.mask.size(); ++i) {
      if (ce(rng))
        E.mask[i] = 1;
      else if (cf(rng))
        F.mask[i] = 1;
    }
    double lhs = k_perimeter(K, set_union(E, F)) + self_interaction(K, F) - k_perimeter(K, E);
    double rhs = inner_product(F, convolve(K, complement(E))) - inner_product(F, convolve(K, E));
    if (std::abs(lhs) < margin || std::abs(rhs) < margin) {
      ++c.skipped;
      continue;
    }
    ((lhs >= 0) == (rhs >= 0) ? c.agree : c.disagree)++;
  }
  return c;
}

// ---------------------------------------------------------------- contraction suite

struct ContractionSettings {
  GridSpec spec;
  KernelDescriptor kernel;
  ShapePtr shape;
  std::optional<BinarySetField> initial;
  double h = 1e-4;
  int max_steps = 100000;
  std::uint64_t seed = 1;
  int f_draws = 200;
  int g_draws = 200;
  int perturb_draws = 20;
  int perturb_cells = 32;
  int lipschitz_pairs = 10000;
  bool track_components = false;
  bool enforce_guard = true;
};

struct ContractionResult {
  Report report;
  EvolutionRecord record;
  std::vector<int> components;
  bool first_step_contracting = true;
  double witness_margin = std::numeric_limits<double>::quiet_NaN();
  double witness_measure = 0;
  ShrinkRate rate;
};

inline ContractionResult contraction_suite(const ContractionSettings& cfg, const Tolerances& tol = {}) {
  ContractionResult res;
  const std::string ex = "contraction_suite", kn = cfg.kernel.kind();
  const std::string sn = cfg.shape ? cfg.shape->name() : "mask";
  auto Kh = sample_kernel(cfg.spec, cfg.kernel, cfg.h);
  if (!Kh.nonnegative) throw PreconditionError("contraction_suite: needs a nonnegative kernel");
  std::optional<BinarySetField> E0, E1;
  EvolveSettings es;
  es.spec = cfg.spec;
  es.kernel = cfg.kernel;
  es.h = cfg.h;
  es.shape = cfg.shape;
  es.initial = cfg.initial;
  es.max_steps = cfg.max_steps;
  es.enforce_guard = cfg.enforce_guard;
  es.on_step = [&](int k, const BinarySetField& E, const ScalarField&) {
    if (k == 0) E0 = E;
    if (k == 1) E1 = E;
    if (cfg.track_components) res.components.push_back(component_count(E));
  };
  res.record = evolve(es);
  const auto& steps = res.record.steps;
  const double h = cfg.h, sh = std::sqrt(h), diag = cfg.spec.cell_diagonal();
  auto& rep = res.report;
  if (!E0) throw PreconditionError("contraction_suite: empty initial set");
  if (!E1) E1 = BinarySetField(cfg.spec);
  res.first_step_contracting = steps.front().contracting;

  bool nested = !res.record.noncontracting;
  rep.add(ex, kn, sn, h, "nested", nested ? 1 : 0,
          res.first_step_contracting ? (nested ? Verdict::pass : Verdict::fail) : Verdict::info);

  if (!res.first_step_contracting) {
    // E1 \ E0 violates local outward minimality of E0.
    auto F = set_difference(*E1, *E0);
    res.witness_margin = outward_margin(Kh, *E0, F);
    res.witness_measure = F.measure();
    rep.add(ex, kn, sn, h, "witness_margin", res.witness_margin, Verdict::info);
    rep.add(ex, kn, sn, h, "witness_measure", res.witness_measure, Verdict::info);
    return res;
  }

  double worst_shrink = std::numeric_limits<double>::infinity();
  double worst_descent = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    const auto &a = steps[k], &b = steps[k + 1];
    if (!b.extinct && std::isfinite(a.shrink_dist) && std::isfinite(b.shrink_dist))
      worst_shrink = std::min(worst_shrink, b.shrink_dist - a.shrink_dist + diag);
    if (!a.extinct) {
      double next = b.extinct ? 0.0 : b.P_Kh;
      worst_descent = std::min(worst_descent, a.P_Kh - a.S_diff - next + tol.descent_slack);
    }
  }
  if (std::isfinite(worst_shrink))
    rep.check(ex, kn, sn, h, "shrink_monotone_margin", worst_shrink, worst_shrink >= 0);
  if (std::isfinite(worst_descent))
    rep.check(ex, kn, sn, h, "energy_descent_margin", worst_descent, worst_descent >= 0);

  std::mt19937_64 rng(cfg.seed);
  // outward minimality of E0
  {
    auto outside = complement(*E0);
    auto cand = detail::cells_near(outside, *E0, 2 * sh);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.f_draws; ++i) {
      auto F = detail::random_blob(outside, cand, rng);
      worst = std::min(worst, outward_margin(Kh, *E0, F));
    }
    rep.check(ex, kn, sn, h, "outward_minimality_E0", worst, worst >= -tol.minimality_slack);
  }
  // propagation to E1: P(E1 cup G) + S(G) >= P(E1) + 2 int_G K*chi_{E0\E1}
  {
    auto outside = complement(*E1);
    auto cand = detail::cells_near(outside, *E1, 2 * sh);
    auto D = set_difference(*E0, *E1);
    auto KD = convolve(Kh, D);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.g_draws; ++i) {
      auto G = detail::random_blob(outside, cand, rng);
      worst = std::min(worst, outward_margin(Kh, *E1, G) - 2 * inner_product(G, KD));
    }
    rep.check(ex, kn, sn, h, "outward_minimality_E1", worst, worst >= -tol.minimality_slack);
  }
  // E1 minimizes the variational objective among nearby perturbations
  {
    auto base = variational_objective(Kh, h, *E0, *E1);
    double ident = std::abs(base.value - base.reduced - base.constant);
    rep.check(ex, kn, sn, h, "variational_identity", ident, ident <= 1e-10 * std::max(1.0, std::abs(base.value)));
    BinarySetField any(cfg.spec, true);
    auto cand = detail::cells_near(any, set_difference(*E0, *E1), 2 * sh);
    if (cand.empty()) cand = detail::cells_near(any, *E1, 2 * sh);
    double worst = std::numeric_limits<double>::infinity();
    if (!cand.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, cand.size() - 1);
      std::uniform_int_distribution<int> count(1, cfg.perturb_cells);
      for (int i = 0; i < cfg.perturb_draws; ++i) {
        auto E = *E1;
        int n = count(rng);
        for (int c = 0; c < n; ++c) {
          auto f = cand[pick(rng)];
          E.mask[f] ^= 1;
        }
        worst = std::min(worst, variational_objective(Kh, h, *E0, E).value - base.value);
      }
      rep.check(ex, kn, sn, h, "variational_minimality", worst, worst >= -tol.variational_slack);
    }
  }
  // T(A cap B) subset TA cap TB and T(A cup B) superset TA cup TB
  {
    BinarySetField B(cfg.spec);
    const int sx = 3, sy = 2;
    for (std::size_t f = 0; f < B.mask.size(); ++f) {
      if (!E0->mask[f]) continue;
      auto ix = cfg.spec.index(f);
      int i = ix[0] + sx, j = ix[1] + sy;
      if (i < cfg.spec.dim(0) && j < cfg.spec.dim(1)) B.mask[cfg.spec.flat(i, j, ix[2])] = 1;
    }
    auto T = [&](const BinarySetField& S) { return threshold(convolve(Kh, S), 0.5).set; };
    auto TA = T(*E0), TB = T(B);
    bool sub = is_subset(T(set_intersection(*E0, B)), set_intersection(TA, TB));
    bool sup = is_subset(set_union(TA, TB), T(set_union(*E0, B)));
    rep.check(ex, kn, sn, h, "intersection_inclusion", sub ? 1 : 0, sub);
    rep.check(ex, kn, sn, h, "union_inclusion", sup ? 1 : 0, sup);
  }
  // arrival time: exact level sets and large-scale Lipschitz bound
  if (res.record.extinct) {
    const auto& u = res.record.arrival;
    bool levels = true;
    for (double v : u.values) {
      double q = v / h;
      if (v < 0 || std::abs(q - std::round(q)) > 1e-9) levels = false;
    }
    rep.check(ex, kn, sn, h, "arrival_levels", levels ? 1 : 0, levels);
    res.rate = measure_shrink_rate(u, h);
    rep.add(ex, kn, sn, h, "shrink_rate_w", res.rate.w, Verdict::info);
    if (std::isfinite(res.rate.w)) {
      auto lc = check_arrival_lipschitz(u, h, res.rate.w, cfg.lipschitz_pairs, cfg.seed + 1);
      rep.check(ex, kn, sn, h, "arrival_lipschitz_violations", lc.violations, lc.violations == 0);
    }
  }
  if (cfg.track_components && !res.components.empty()) {
    int peak = *std::max_element(res.components.begin(), res.components.end());
    rep.add(ex, kn, sn, h, "initial_components", res.components.front(), Verdict::info);
    rep.add(ex, kn, sn, h, "max_components", peak, Verdict::info);
  }
  return res;
}

// ---------------------------------------------------------------- fattening

struct FatteningResult {
  std::string name;
  double fat_fraction = 0;       // |{|K*chi_E - 1/2| <= 1e-9}| / |domain|
  double required_fraction = 0;
  bool minimal_empty = false;    // T_K E (smallest minimizer)
  bool complement_empty = false; // T_K E^c, stripes only
  bool gap_is_fat_set = false;   // {>= 1/2} \ {> 1/2} equals the fat set
  bool covers_all = false;       // fat set is the whole domain (stripes)
  double inner_radius = 0;       // smooth_plateau: largest centered ball inside the fat set
  int fat_rows = 0;              // disc_plateau: rows where the field equals 1/2
  ScalarField field;
};

namespace detail {

inline FatteningResult fat_summary(std::string name, const ScalarField& field, double required) {
  FatteningResult r;
  r.name = std::move(name);
  r.required_fraction = required;
  BinarySetField fat(field.spec), lower(field.spec), upper(field.spec);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    double v = field.values[i] - 0.5;
    fat.mask[i] = std::abs(v) <= 1e-9;
    lower.mask[i] = v > 1e-9;
    upper.mask[i] = v >= -1e-9;
  }
  r.fat_fraction = static_cast<double>(fat.count()) / static_cast<double>(fat.mask.size());
  r.minimal_empty = threshold(field, 0.5).set.empty();
  r.gap_is_fat_set = set_difference(upper, lower) == fat;
  r.covers_all = fat.count() == fat.mask.size();
  r.field = field;
  return r;
}

}  // namespace detail

inline std::vector<std::string> fattening_examples() { return {"stripes", "smooth_plateau", "disc_plateau"}; }

// Stripes of period 2 with the box kernel at h = 1: the field is 1/2 everywhere.
inline FatteningResult fattening_stripes(int n = 256, double extent = 16) {
  GridSpec s({n, n}, {extent, extent});
  auto K = sample_kernel(s, KernelDescriptor::box(2), 1.0);
  Stripes st(2, 1, 2.0);
  auto E = make_shape(s, st);
  auto r = detail::fat_summary("stripes", convolve(K, E), 1.0);
  r.complement_empty = threshold(convolve(K, complement(E)), 0.5).set.empty();
  return r;
}

// Ball of radius 2^{-1/d} and the smoothed plateau kernel; the plateau radius
// is calibrated so that the discrete kernel mass is twice the cell count of E.
inline FatteningResult fattening_smooth_plateau(int n = 256, double extent = 4, double eps = 0.05) {
  GridSpec s({n, n}, {extent, extent});
  const double R = std::pow(2.0, -0.5);
  Ball ball(2, {0, 0, 0}, R);
  auto E = make_shape(s, ball);
  const double target = 2.0 * static_cast<double>(E.count());
  auto raw_sum = [&](double rho) {
    auto K = KernelDescriptor::smooth_plateau(2, rho, eps);
    double sum = 0;
    for (std::size_t f = 0; f < s.size(); ++f) {
      auto ix = s.index(f);
      Vec x{s.offset(0, ix[0]) * s.spacing(0), s.offset(1, ix[1]) * s.spacing(1), 0};
      if (norm(x) < rho + eps) sum += K(x);
    }
    return sum;
  };
  double lo = 0.95, hi = 1.05;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (raw_sum(mid) < target ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);
  auto K = sample_kernel(s, KernelDescriptor::smooth_plateau(2, rho, eps), 1.0);
  auto r = detail::fat_summary("smooth_plateau", convolve(K, E), 0.0);
  // expected fat ball radius rho - eps - R
  double inner = rho - eps - R;
  r.required_fraction = std::numbers::pi * inner * inner / (extent * extent) * 0.5;
  double best = 0;
  for (double t = 0; t < extent / 2; t += s.spacing(0) / 4) {
    bool ok = true;
    for (std::size_t f = 0; f < s.size() && ok; ++f)
      if (norm(s.center(f)) <= t && std::abs(r.field.values[f] - 0.5) > 1e-9) ok = false;
    if (!ok) break;
    best = t;
  }
  r.inner_radius = best;
  return r;
}

// Slab of n rows and the disc plateau kernel, rows renormalized so that each
// of the p plateau rows carries mass 1/(2n) and the tails carry the rest.
inline FatteningResult fattening_disc_plateau(int grid = 256, double extent = 8, int slab_rows = 48) {
  GridSpec s({grid, grid}, {extent, extent});
  auto desc = KernelDescriptor::disc_plateau(2, 1.0, 0.5);
  const auto* dp = desc.as<kernel_kind::DiscPlateau>();
  std::vector<double> raw(s.size(), 0.0);
  for (std::size_t f = 0; f < s.size(); ++f) {
    auto ix = s.index(f);
    Vec x{s.offset(0, ix[0]) * s.spacing(0), s.offset(1, ix[1]) * s.spacing(1), 0};
    raw[f] = desc(x);
  }
  // row sums (row = offset along the last axis)
  const int ny = s.dim(1);
  std::vector<double> row_sum(ny, 0.0);
  std::vector<bool> plateau(ny, false);
  int p = 0;
  for (int j = 0; j < ny; ++j) {
    double y = std::abs(s.offset(1, j) * s.spacing(1));
    plateau[j] = y <= dp->w;
    if (plateau[j]) ++p;
  }
  for (std::size_t f = 0; f < s.size(); ++f) row_sum[s.index(f)[1]] += raw[f];
  const int n = slab_rows;
  if (!(n < p && p < 2 * n)) throw PreconditionError("fattening_disc_plateau: need slab rows n < p < 2n");
  double tail_total = 0;
  for (int j = 0; j < ny; ++j)
    if (!plateau[j]) tail_total += row_sum[j];
  const double vol = s.cell_volume();
  SampledKernel K;
  K.spec = s;
  K.values.assign(s.size(), 0.0);
  for (std::size_t f = 0; f < s.size(); ++f) {
    int j = s.index(f)[1];
    if (row_sum[j] == 0) continue;
    double target = plateau[j] ? 1.0 / (2 * n) : (1.0 - p / (2.0 * n)) * row_sum[j] / tail_total;
    K.values[f] = raw[f] / row_sum[j] * target / vol;
  }
  double mass = 0;
  for (double v : K.values) mass += v * vol;
  K.mass = mass;
  K.support_radius = desc.support_radius();
  K.nonnegative = true;
  K.desc = desc;
  K.id = next_kernel_id();
  BinarySetField E(s);
  for (std::size_t f = 0; f < s.size(); ++f) {
    int j = s.index(f)[1];
    E.mask[f] = (j >= ny / 2 - n / 2 && j < ny / 2 - n / 2 + n) ? 1 : 0;
  }
  auto r = detail::fat_summary("disc_plateau", convolve(K, E), 0.0);
  for (int j = 0; j < ny; ++j) {
    bool all = true;
    for (int i = 0; i < s.dim(0); ++i)
      if (std::abs(r.field.values[s.flat(i, j)] - 0.5) > 1e-9) all = false;
    if (all) ++r.fat_rows;
  }
  r.required_fraction = 0.5 * (p - n) / static_cast<double>(ny);
  return r;
}

inline FatteningResult fattening_diagnostics(const std::string& name) {
  if (name == "stripes") return fattening_stripes();
  if (name == "smooth_plateau") return fattening_smooth_plateau();
  if (name == "disc_plateau") return fattening_disc_plateau();
  throw ConfigError("unknown fattening example '" + name + "' (valid: stripes, smooth_plateau, disc_plateau)");
}

inline Report fattening_report(const FatteningResult& r, const Tolerances& tol) {
  Report out;
  const std::string ex = "fattening";
  double need = tol.fat_fraction > 0 ? tol.fat_fraction : r.required_fraction;
  out.check(ex, r.name, r.name, 1.0, "fat_fraction", r.fat_fraction,
            r.fat_fraction > 0 && r.fat_fraction >= need * (1 - 1e-12));
  out.add(ex, r.name, r.name, 1.0, "required_fraction", need, Verdict::info);
  out.check(ex, r.name, r.name, 1.0, "minimizer_gap_is_fat_set", r.gap_is_fat_set ? 1 : 0, r.gap_is_fat_set);
  if (r.name == "stripes") {
    out.check(ex, r.name, r.name, 1.0, "T_E_empty", r.minimal_empty ? 1 : 0, r.minimal_empty);
    out.check(ex, r.name, r.name, 1.0, "T_Ec_empty", r.complement_empty ? 1 : 0, r.complement_empty);
    out.check(ex, r.name, r.name, 1.0, "fat_covers_domain", r.covers_all ? 1 : 0, r.covers_all);
  }
  if (r.name == "smooth_plateau")
    out.check(ex, r.name, r.name, 1.0, "fat_ball_radius", r.inner_radius, r.inner_radius > 0);
  if (r.name == "disc_plateau") out.check(ex, r.name, r.name, 1.0, "fat_rows", r.fat_rows, r.fat_rows > 0);
  return out;
}

}  // namespace mbo
