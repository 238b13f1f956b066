#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "mbo/kernels.hpp"
#include "mbo/quadrature.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

// Off-grid evaluation of (K_h * chi_E)(x) for a convex analytic E in 2D:
// polar quadrature around x, with the radial range along each ray given by
// the analytic chord of E.  Values are at roundoff already at tol 1e-9; below
// 1e-11 the outer error estimate is dominated by noise and just subdivides.
inline double exact_field(const KernelDescriptor& K, double h, const Shape& E, const Vec& x, double tol = 1e-11) {
  if (K.d() != 2 || E.d() != 2) throw PreconditionError("exact_field: 2D only");
  if (!E.convex()) throw PreconditionError("exact_field: needs a convex shape");
  const double pi = std::numbers::pi, sh = std::sqrt(h), R = K.ray_extent();
  const auto* gauss = K.as<kernel_kind::Gaussian>();
  const bool constructed = K.as<kernel_kind::Constructed>() != nullptr;
  const int deg = K.ray_degree();
  auto radial = [&](const Vec& e, double a, double b) -> double {
    if (gauss) {
      double eb = std::isfinite(b) ? std::exp(-b * b / 4) : 0.0;
      return K.scale() * (std::exp(-a * a / 4) - eb) / (2 * pi);
    }
    if (constructed) {
      // int r * f r^2 (g - r)^2 dr
      auto [f, g] = K.constructed_fg(e);
      b = std::min(b, g);
      if (!(b > a)) return 0.0;
      auto P = [g](double r) { return r * r * r * r * (g * g / 4 - 2 * g * r / 5 + r * r / 6); };
      return K.scale() * f * (P(b) - P(a));
    }
    b = std::min(b, R);
    if (!(b > a)) return 0.0;
    auto f = [&](double r) { return r * K(r * e); };
    return integrate_pieces(f, with_breaks(a, b, K.ray_breakpoints(e)), deg < 0 ? -1 : deg + 1, 1e-14).value;
  };
  auto outer = [&](double phi) {
    Vec e{std::cos(phi), std::sin(phi), 0};
    auto c = E.chord(x, e);
    if (!c) return 0.0;
    double a = std::max(0.0, c->first / sh), b = c->second / sh;
    if (!(b > a)) return 0.0;
    if (!gauss && a >= R) return 0.0;
    return radial(e, a, b);
  };
  std::vector<double> br;
  for (double t : E.silhouette_angles(x))
    for (int k = -1; k <= 1; ++k) br.push_back(t + 2 * k * pi);
  for (double t : K.angular_breakpoints()) br.push_back(t);
  return integrate_pieces(outer, with_breaks(0, 2 * pi, br), -1, tol).value;
}

struct ExactDisplacement {
  double z = 0;
  bool found = false;
};

// Signed distance along the normal from a boundary point of E0 to the
// boundary of {K_h * chi_E0 > 1/2 - drift}; positive when x lies inside.
inline ExactDisplacement exact_normal_displacement(const KernelDescriptor& K, double h, const Shape& E0,
                                                   const Probe& p, double drift = 0.0, double window = -1) {
  const double sh = std::sqrt(h), level = 0.5 - drift;
  if (window <= 0) window = 2 * sh;
  auto g = [&](double l) { return exact_field(K, h, E0, p.x + l * p.normal) - level; };
  double g0 = g(0);
  ExactDisplacement out;
  if (g0 == 0) {
    out.found = true;
    return out;
  }
  const double dir = g0 > 0 ? 1.0 : -1.0, step = sh / 32;
  double l0 = 0, v0 = g0;
  for (double l = step; l <= window + 1e-15; l += step) {
    double v = g(dir * l);
    if ((v > 0) != (v0 > 0)) {
      double a = dir * l0, b = dir * l, fa = v0, fb = v;
      if (a > b) {
        std::swap(a, b);
        std::swap(fa, fb);
      }
      std::uintmax_t iters = 200;
      auto tolf = [&](double lo, double hi) { return std::abs(hi - lo) <= 1e-15 * sh; };
      auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, tolf, iters);
      out.z = 0.5 * (r.first + r.second);
      out.found = true;
      return out;
    }
    l0 = l;
    v0 = v;
  }
  return out;
}

// Area of B_r intersected with a copy shifted by s.
inline double lens_area(double r, double s) {
  if (s >= 2 * r) return 0.0;
  return 2 * r * r * std::acos(s / (2 * r)) - 0.5 * s * std::sqrt(4 * r * r - s * s);
}

// P_{K,h}(B_r) for a radial kernel in 2D: (1/sqrt h) int K_h(z) (|B_r| - |B_r cap (B_r + z)|) dz.
inline double exact_ball_adjusted_perimeter(const KernelDescriptor& K, double h, double r) {
  if (!K.radial() || K.d() != 2) throw PreconditionError("exact_ball_adjusted_perimeter: radial 2D kernels only");
  const double pi = std::numbers::pi, sh = std::sqrt(h);
  double R = K.ray_extent();
  auto f = [&](double rho) { return rho * K.profile(rho) * (pi * r * r - lens_area(r, rho * sh)); };
  std::vector<double> br = K.ray_breakpoints({1, 0, 0});
  br.push_back(2 * r / sh);
  double upper = K.as<kernel_kind::Gaussian>() ? 2 * R : R;
  auto q = integrate_pieces(f, with_breaks(0, upper, br), -1, 1e-13);
  return 2 * pi * q.value / sh;
}

struct ExactBallRun {
  std::vector<double> radii;     // r_k of the nonempty sets
  std::vector<double> adjusted;  // P_{K,h}(B_{r_k})
  double I = 0;                  // h * sum P_{K,h}
  double extinction_time = 0;    // h * number of nonempty sets
  bool extinct = false;
};

// Thresholding of a centered ball without spatial discretization: every
// step is again a centered ball whose radius is the root of the field.
inline ExactBallRun exact_ball_evolution(const KernelDescriptor& K, double h, double R0, int max_steps = 1000000) {
  ExactBallRun run;
  double r = R0;
  for (int k = 0; k < max_steps; ++k) {
    run.radii.push_back(r);
    run.adjusted.push_back(exact_ball_adjusted_perimeter(K, h, r));
    Ball B(2, {0, 0, 0}, r);
    auto F = [&](double rho) { return exact_field(K, h, B, {rho, 0, 0}) - 0.5; };
    double f0 = F(0);
    if (!(f0 > 0)) {
      run.extinct = true;
      break;
    }
    double hi = r, fhi = F(hi);
    while (fhi > 0) {
      hi *= 1.5;
      fhi = F(hi);
    }
    std::uintmax_t iters = 200;
    auto tolf = [&](double lo, double up) { return std::abs(up - lo) <= 1e-15 * r; };
    auto root = boost::math::tools::toms748_solve(F, 0.0, hi, f0, fhi, tolf, iters);
    r = 0.5 * (root.first + root.second);
  }
  double s = 0;
  for (double p : run.adjusted) s += p;
  run.I = h * s;
  run.extinction_time = h * static_cast<double>(run.radii.size());
  return run;
}

}  // namespace mbo
