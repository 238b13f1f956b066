#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mbo/directional.hpp"
#include "mbo/kernels.hpp"
#include "mbo/quadrature.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

// int_0^inf r^m K(r dir) dr along a unit direction.
inline QuadResult ray_moment(const KernelDescriptor& K, const Vec& dir, int m) {
  auto f = [&](double r) { return std::pow(r, m) * K(r * dir); };
  auto pts = with_breaks(0.0, K.ray_extent(), K.ray_breakpoints(dir));
  int deg = K.ray_degree();
  return integrate_pieces(f, pts, deg < 0 ? -1 : deg + m, 1e-13);
}

// int_{-R}^{R} t^m K(t dir) dt along a full line through the origin.
inline QuadResult line_moment(const KernelDescriptor& K, const Vec& dir, int m) {
  auto f = [&](double t) { return std::pow(t, m) * K(t * dir); };
  double R = K.ray_extent();
  std::vector<double> br{0.0};
  for (double b : K.ray_breakpoints(dir)) br.push_back(b);
  Vec back = -1.0 * dir;
  for (double b : K.ray_breakpoints(back)) br.push_back(-b);
  int deg = K.ray_degree();
  return integrate_pieces(f, with_breaks(-R, R, br), deg < 0 ? -1 : deg + m, 1e-13);
}

inline std::vector<Vec> nodes_of(const KernelDescriptor& K, int n_or_level) {
  std::vector<Vec> out;
  if (K.d() == 2) {
    for (int i = 0; i < n_or_level; ++i) {
      double t = i * std::numbers::pi / n_or_level;
      out.push_back({std::cos(t), std::sin(t), 0});
    }
  } else {
    out = icosphere(n_or_level)->vertices;
  }
  return out;
}

template <class F>
DirectionalDistribution distribution_on(const KernelDescriptor& K, int n_or_level, F&& f) {
  auto nodes = nodes_of(K, n_or_level);
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = f(nodes[i], i);
  if (K.d() == 2) return DirectionalDistribution::circle(std::move(v));
  return DirectionalDistribution::sphere(n_or_level, std::move(v));
}

inline void check_quad(const QuadResult& q, std::size_t node, const char* what) {
  if (!std::isfinite(q.value) || q.error > 1e-8)
    throw NumericError(std::string(what) + ": quadrature did not converge on ray " + std::to_string(node));
}

// A(theta) = int r^d K(r theta) dr,  B(theta) = 2 int r^{d-2} K(r theta) dr.
inline std::pair<DirectionalDistribution, DirectionalDistribution> directional_moments(const KernelDescriptor& K,
                                                                                       int n_or_level) {
  const int d = K.d();
  auto A = distribution_on(K, n_or_level, [&](const Vec& dir, std::size_t i) {
    auto q = ray_moment(K, dir, d);
    check_quad(q, i, "directional_moments");
    return q.value;
  });
  auto B = distribution_on(K, n_or_level, [&](const Vec& dir, std::size_t i) {
    auto q = ray_moment(K, dir, d - 2);
    check_quad(q, i, "directional_moments");
    return 2 * q.value;
  });
  return {A, B};
}

// sigma_K(nu) = 1/2 int |nu.x| K(x) dx, computed as 1/2 int_{S} |nu.theta| A(theta).
inline double surface_tension_at(const KernelDescriptor& K, const Vec& nu) {
  const double pi = std::numbers::pi;
  if (K.d() == 2) {
    double t0 = std::atan2(nu[1], nu[0]);
    auto f = [&](double t) {
      Vec dir{std::cos(t), std::sin(t), 0};
      return std::cos(t - t0) * ray_moment(K, dir, 2).value;
    };
    std::vector<double> br;
    for (double b : K.angular_breakpoints())
      for (int k = -2; k <= 2; ++k) br.push_back(b + 2 * k * pi);
    auto pts = with_breaks(t0 - pi / 2, t0 + pi / 2, br);
    // f is smooth between angular breakpoints but each value carries the
    // inner quadrature's roundoff, which stalls an adaptive outer rule
    double s = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double w = pts[i + 1] - pts[i];
      if (w > 0) s += detail::composite_gl(f, pts[i], pts[i + 1], static_cast<int>(std::ceil(32 * w / pi)));
    }
    return s;
  }
  // Spherical coordinates about nu; evenness folds the lower hemisphere.
  auto frame = detail::tangent_frame(normalized(nu));
  Vec n = normalized(nu);
  auto inner = [&](double al) {
    double ca = std::cos(al), sa = std::sin(al);
    return ca * sa *
           detail::composite_gl(
               [&](double be) {
                 Vec dir = ca * n + (sa * std::cos(be)) * frame[0] + (sa * std::sin(be)) * frame[1];
                 return ray_moment(K, dir, 3).value;
               },
               0, 2 * pi, 16);
  };
  return detail::composite_gl(inner, 0, pi / 2, 8);
}

inline DirectionalDistribution surface_tension_of(const KernelDescriptor& K, int n_or_level) {
  return distribution_on(K, n_or_level, [&](const Vec& nu, std::size_t) { return surface_tension_at(K, nu); });
}

// sigma from a tension generating distribution A (d = 2): int cos(t - nu) A(t) over |t - nu| < pi/2.
inline double surface_tension_from_A(const DirectionalDistribution& A, double nu) {
  const double pi = std::numbers::pi;
  std::vector<double> br;
  for (std::size_t i = 0; i < A.size(); ++i)
    for (int k = -3; k <= 3; ++k) br.push_back(A.angle(i) + k * pi);
  auto pts = with_breaks(nu - pi / 2, nu + pi / 2, br);
  // cos times a linear piece: 8-point Gauss-Legendre is at roundoff on each piece
  return integrate_pieces([&](double t) { return std::cos(t - nu) * A.at_angle(t); }, pts, 15).value;
}

// 1/mu_K(n) = 2 int_{x.n = 0} K, by direct quadrature on the hyperplane.
inline double inverse_mobility_at(const KernelDescriptor& K, const Vec& n) {
  if (K.d() == 2) {
    Vec t{-n[1], n[0], 0};
    auto q = line_moment(K, normalized(t), 0);
    return 2 * q.value;
  }
  auto frame = detail::tangent_frame(normalized(n));
  const double pi = std::numbers::pi;
  auto f = [&](double be) {
    Vec dir = std::cos(be) * frame[0] + std::sin(be) * frame[1];
    return ray_moment(K, dir, 1).value;
  };
  return 2 * integrate_adaptive(f, 0, 2 * pi, 1e-11).value;
}

inline DirectionalDistribution mobility_of(const KernelDescriptor& K, int n_or_level) {
  return distribution_on(K, n_or_level, [&](const Vec& n, std::size_t) { return inverse_mobility_at(K, n); });
}

inline double mobility_at(const KernelDescriptor& K, const Vec& n) { return 1.0 / inverse_mobility_at(K, n); }

// d = 2: 1/mu(n) = 2 B(n_perp).
inline double inverse_mobility_from_B(const DirectionalDistribution& B, double n_angle) {
  return 2 * B.at_angle(n_angle + std::numbers::pi / 2);
}

// H_sigma(x) = sum_i kappa_i int X_i^2 K(X, 0) dX on the tangent hyperplane.
inline double anisotropic_curvature(const KernelDescriptor& K, const Probe& p) {
  if (K.d() == 2) {
    if (p.kappa[0] == 0) return 0.0;
    auto q = line_moment(K, normalized(p.tangents[0]), 2);
    if (!std::isfinite(q.value) || q.error > 1e-8) throw NumericError("anisotropic_curvature: quadrature failure");
    return p.kappa[0] * q.value;
  }
  if (p.kappa[0] == 0 && p.kappa[1] == 0) return 0.0;
  const double pi = std::numbers::pi;
  auto f = [&](double be) {
    double cb = std::cos(be), sb = std::sin(be);
    Vec dir = cb * p.tangents[0] + sb * p.tangents[1];
    double m3 = ray_moment(K, dir, 3).value;
    return (p.kappa[0] * cb * cb + p.kappa[1] * sb * sb) * m3;
  };
  return integrate_adaptive(f, 0, 2 * pi, 1e-11).value;
}

inline double anisotropic_curvature(const KernelDescriptor& K, const Shape& shape, const Probe& p) {
  if (shape.d() != K.d()) throw ShapeError("anisotropic_curvature: dimension mismatch");
  return anisotropic_curvature(K, p);
}

// Continuum mass int K, by radial quadrature over directions.
inline double continuum_mass(const KernelDescriptor& K) {
  const double pi = std::numbers::pi;
  if (K.d() == 2) {
    auto f = [&](double t) { return ray_moment(K, {std::cos(t), std::sin(t), 0}, 1).value; };
    std::vector<double> br = K.angular_breakpoints();
    return integrate_pieces(f, with_breaks(0, 2 * pi, br), -1, 1e-13).value;
  }
  auto f = [&](double th) {
    return std::sin(th) * detail::composite_gl(
                              [&](double ph) {
                                Vec dir{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
                                return ray_moment(K, dir, 2).value;
                              },
                              0, 2 * pi, 16);
  };
  return detail::composite_gl(f, 0, pi, 16);
}

inline KernelDescriptor normalized_kernel(const KernelDescriptor& K) { return K.scaled(1.0 / continuum_mass(K)); }

}  // namespace mbo
