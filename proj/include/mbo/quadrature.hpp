#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mbo {

struct QuadResult {
  double value = 0;
  double error = 0;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; tol is relative to the L1 norm.
// Depth is capped: tolerances near roundoff otherwise split every interval.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double tol = 1e-13, unsigned depth = 15) {
  QuadResult r;
  if (!(b > a)) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, depth, tol, &r.error);
  return r;
}

// Fixed 8-point Gauss-Legendre, exact for polynomials up to degree 15.
template <class F>
double integrate_gl8(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss<double, 8>::integrate(f, a, b);
}

// Integrates over consecutive pieces of `pts` (sorted).  Polynomial pieces
// (degree <= 15) use Gauss-Legendre, others the adaptive rule.
template <class F>
QuadResult integrate_pieces(F&& f, std::vector<double> pts, int degree, double tol = 1e-13) {
  std::sort(pts.begin(), pts.end());
  QuadResult total;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double a = pts[i], b = pts[i + 1];
    if (!(b > a)) continue;
    if (degree >= 0 && degree <= 15) {
      total.value += integrate_gl8(f, a, b);
    } else {
      auto r = integrate_adaptive(f, a, b, tol);
      total.value += r.value;
      total.error += r.error;
    }
  }
  return total;
}

// Breakpoints of [a, b] merged with interior points of `extra`.
inline std::vector<double> with_breaks(double a, double b, const std::vector<double>& extra) {
  std::vector<double> pts{a, b};
  for (double x : extra)
    if (x > a && x < b) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace mbo
