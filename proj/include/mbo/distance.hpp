#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mbo/grid.hpp"

namespace mbo {

namespace detail {

// Lower envelope of parabolas f[q] + (s*(p-q))^2 along one line.
inline void edt_line(const double* f, double* out, int n, double s, std::vector<int>& v,
                     std::vector<double>& z) {
  const double inf = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double fq = f[q] + (s * q) * (s * q);
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    while (true) {
      int p = v[k];
      double zz = (fq - (f[p] + (s * p) * (s * p))) / (2.0 * s * s * (q - p));
      if (zz <= z[k]) {
        if (--k < 0) break;
      } else {
        ++k;
        v[k] = q;
        z[k] = zz;
        z[k + 1] = inf;
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    double dq = s * (q - v[j]);
    out[q] = dq * dq + f[v[j]];
  }
}

}  // namespace detail

// Exact squared Euclidean distance from every cell center to the nearest
// site cell center (non-periodic).  +inf everywhere when there are no sites.
inline ScalarField squared_distance_to(const BinarySetField& sites) {
  const auto& s = sites.spec;
  const double inf = std::numeric_limits<double>::infinity();
  ScalarField dt(s, inf);
  for (std::size_t f = 0; f < sites.mask.size(); ++f)
    if (sites.mask[f]) dt.values[f] = 0.0;
  std::vector<int> v;
  std::vector<double> z, in, out;
  for (int a = 0; a < s.d(); ++a) {
    int n = s.dim(a);
    in.resize(n);
    out.resize(n);
    std::size_t stride = 1;
    for (int b = a + 1; b < 3; ++b) stride *= s.dim(b);
    std::size_t lines = s.size() / n;
    for (std::size_t l = 0; l < lines; ++l) {
      std::size_t inner = l % stride, outer = l / stride;
      std::size_t base = outer * stride * n + inner;
      for (int q = 0; q < n; ++q) in[q] = dt.values[base + q * stride];
      detail::edt_line(in.data(), out.data(), n, s.spacing(a), v, z);
      for (int q = 0; q < n; ++q) dt.values[base + q * stride] = out[q];
    }
  }
  return dt;
}

// Same transform restricted to the cells of `box` (row-major in the box),
// sites given by a predicate on flat indices.  Exact for cells whose nearest
// site lies in the box, e.g. when the box border consists of sites.
template <class IsSite>
std::vector<double> squared_distance_in_box(const GridSpec& s, const IndexBox& box, IsSite&& is_site) {
  const double inf = std::numeric_limits<double>::infinity();
  int n[3] = {1, 1, 1};
  for (int a = 0; a < 3; ++a) n[a] = box.hi[a] - box.lo[a] + 1;
  std::vector<double> dt(static_cast<std::size_t>(n[0]) * n[1] * n[2], inf);
  std::size_t b = 0;
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k, ++b)
        if (is_site(s.flat(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k))) dt[b] = 0.0;
  std::vector<int> v;
  std::vector<double> z, in, out;
  for (int a = 0; a < s.d(); ++a) {
    int m = n[a];
    in.resize(m);
    out.resize(m);
    std::size_t stride = 1;
    for (int c = a + 1; c < 3; ++c) stride *= n[c];
    std::size_t lines = dt.size() / m;
    for (std::size_t l = 0; l < lines; ++l) {
      std::size_t inner = l % stride, outer = l / stride;
      std::size_t base = outer * stride * m + inner;
      for (int q = 0; q < m; ++q) in[q] = dt[base + q * stride];
      detail::edt_line(in.data(), out.data(), m, s.spacing(a), v, z);
      for (int q = 0; q < m; ++q) dt[base + q * stride] = out[q];
    }
  }
  return dt;
}

inline constexpr double kExtinct = std::numeric_limits<double>::infinity();

inline bool is_extinct(double distance) { return std::isinf(distance) && distance > 0; }

// Minimum over cells of `inner` of the distance to the nearest false cell of
// `outer`.  Empty `inner` returns the extinct sentinel (+inf).
inline double boundary_distance(const BinarySetField& inner, const BinarySetField& outer) {
  require_same(inner.spec, outer.spec, "boundary_distance");
  if (inner.empty()) return kExtinct;
  if (!is_subset(inner, outer)) throw PreconditionError("boundary_distance: inner is not a subset of outer");
  auto dt = squared_distance_to(complement(outer));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < inner.mask.size(); ++f)
    if (inner.mask[f]) best = std::min(best, dt.values[f]);
  return std::sqrt(best);
}

}  // namespace mbo
