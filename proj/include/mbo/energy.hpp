#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mbo/convolve.hpp"
#include "mbo/directional.hpp"
#include "mbo/grid.hpp"
#include "mbo/kernels.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

// P_K(E) = int_{E^c} K * chi_E.
inline double k_perimeter(const SampledKernel& K, const BinarySetField& E) {
  return inner_product(complement(E), convolve(K, E));
}

// 1/2 sum_z K(z) sum_x |chi_E(x) - chi_E(x - z)| * vol^2, evaluated without
// any convolution (independent route to P_K).
inline double k_perimeter_pairwise(const SampledKernel& K, const BinarySetField& E) {
  require_same(K.spec, E.spec, "k_perimeter_pairwise");
  const auto& s = E.spec;
  const int n0 = s.dim(0), n1 = s.dim(1), n2 = s.dim(2);
  // contiguous rows run along the last axis with more than one cell
  const bool flat = n2 == 1;
  const std::size_t row = flat ? n1 : n2;
  const int mid = flat ? 1 : n1;
  double total = 0, comp = 0;
  for (std::size_t z = 0; z < K.values.size(); ++z) {
    double kz = K.values[z];
    if (kz == 0) continue;
    auto o = s.index(z);
    const std::size_t cut = static_cast<std::size_t>(flat ? o[1] : o[2]);
    std::size_t mism = 0;
    for (int i = 0; i < n0; ++i) {
      int si = (i - o[0] + n0) % n0;
      for (int j = 0; j < mid; ++j) {
        int sj = flat ? 0 : (j - o[1] + n1) % n1;
        const std::uint8_t* a = &E.mask[s.flat(i, j, 0)];
        const std::uint8_t* b = &E.mask[s.flat(si, sj, 0)];
        // b shifted by `cut` along the row
        for (std::size_t k = 0; k < cut; ++k) mism += a[k] != b[k + row - cut];
        for (std::size_t k = cut; k < row; ++k) mism += a[k] != b[k - cut];
      }
    }
    double y = kz * static_cast<double>(mism) - comp, t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  double vol = s.cell_volume();
  return 0.5 * total * vol * vol;
}

// P_{K,h} = P_{K_h} / sqrt(h).
inline double adjusted_perimeter(const KernelDescriptor& K, double h, const BinarySetField& E) {
  return k_perimeter(sample_kernel(E.spec, K, h), E) / std::sqrt(h);
}

// S_K(F) = int_F K * chi_F.
inline double self_interaction(const SampledKernel& K, const BinarySetField& F) {
  return inner_product(F, convolve(K, F));
}

struct VariationalValue {
  double value = 0;     // (1/sqrt h)[int_{E^c} K*chi_E + int (chi_p - chi_E) K*(chi_p - chi_E)]
  double reduced = 0;   // (1/sqrt h) int_E (1 - 2 K*chi_p)
  double constant = 0;  // (1/sqrt h) int_{E_prev} K*chi_p;  value = reduced + constant
};

inline VariationalValue variational_objective(const SampledKernel& Kh, double h, const BinarySetField& E_prev,
                                              const BinarySetField& E) {
  require_same(E_prev.spec, E.spec, "variational_objective");
  auto fp = convolve(Kh, E_prev);
  auto fe = convolve(Kh, E);
  const double vol = E.spec.cell_volume(), sh = std::sqrt(h);
  double per = inner_product(complement(E), fe);
  double move = 0, mc = 0, red = 0, rc = 0;
  for (std::size_t i = 0; i < E.mask.size(); ++i) {
    double a = static_cast<double>(E_prev.mask[i]) - static_cast<double>(E.mask[i]);
    if (a != 0) {
      double y = a * (fp.values[i] - fe.values[i]) - mc, t = move + y;
      mc = (t - move) - y;
      move = t;
    }
    if (E.mask[i]) {
      double y = (1 - 2 * fp.values[i]) - rc, t = red + y;
      rc = (t - red) - y;
      red = t;
    }
  }
  VariationalValue v;
  v.value = (per + move * vol) / sh;
  v.reduced = red * vol / sh;
  v.constant = inner_product(E_prev, fp) / sh;
  return v;
}

using NormalFunction = std::function<double(const Vec&)>;

inline NormalFunction as_normal_function(const DirectionalDistribution& sigma) {
  return [sigma](const Vec& n) { return sigma(n); };
}

// P_sigma of an analytic shape by quadrature over its boundary.
inline double anisotropic_perimeter(const NormalFunction& sigma, const Shape& shape, int pieces = 64) {
  return shape.boundary_integral(sigma, pieces);
}

inline double anisotropic_perimeter(const DirectionalDistribution& sigma, const Shape& shape, int pieces = 64) {
  return shape.boundary_integral(as_normal_function(sigma), pieces);
}

// P_sigma of a 2D mask: marching squares on the {0,1} field at level 1/2
// (crossings at edge midpoints), summing sigma(normal) * segment length.
inline double anisotropic_perimeter(const NormalFunction& sigma, const BinarySetField& E) {
  const auto& s = E.spec;
  if (s.d() != 2) throw PreconditionError("mask-based anisotropic_perimeter is 2D only");
  const int n0 = s.dim(0), n1 = s.dim(1);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      if ((i == 0 || j == 0 || i == n0 - 1 || j == n1 - 1) && E.mask[s.flat(i, j)])
        throw TopologyError("anisotropic_perimeter: set touches the domain edge, contour would be open");
  const double dx = s.spacing(0), dy = s.spacing(1);
  double total = 0;
  // Corners in counter-clockwise order: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
  const int ci[4] = {0, 1, 1, 0}, cj[4] = {0, 0, 1, 1};
  for (int i = 0; i + 1 < n0; ++i)
    for (int j = 0; j + 1 < n1; ++j) {
      int v[4];
      int sum = 0;
      for (int c = 0; c < 4; ++c) sum += v[c] = E.mask[s.flat(i + ci[c], j + cj[c])];
      if (sum == 0 || sum == 4) continue;
      Vec corner[4];
      for (int c = 0; c < 4; ++c) corner[c] = {ci[c] * dx, cj[c] * dy, 0};
      Vec mid[4];
      bool cut[4];
      for (int e = 0; e < 4; ++e) {
        int a = e, b = (e + 1) % 4;
        cut[e] = v[a] != v[b];
        mid[e] = 0.5 * (corner[a] + corner[b]);
      }
      auto add = [&](int e1, int e2, const Vec& inside) {
        Vec p = mid[e1], q = mid[e2];
        Vec t = q - p;
        double len = norm(t);
        Vec n{t[1], -t[0], 0};
        Vec m = 0.5 * (p + q);
        if (dot(n, inside - m) > 0) n = -1.0 * n;
        total += sigma((1.0 / len) * n) * len;
      };
      if (sum == 2 && v[0] == v[2]) {
        // saddle: isolate each true corner
        for (int c = 0; c < 4; ++c)
          if (v[c]) add((c + 3) % 4, c, corner[c]);
        continue;
      }
      std::vector<int> edges;
      for (int e = 0; e < 4; ++e)
        if (cut[e]) edges.push_back(e);
      Vec inside{0, 0, 0};
      int cnt = 0;
      for (int c = 0; c < 4; ++c)
        if (v[c]) {
          inside = inside + corner[c];
          ++cnt;
        }
      inside = (1.0 / cnt) * inside;
      add(edges[0], edges[1], inside);
    }
  return total;
}

inline double anisotropic_perimeter(const DirectionalDistribution& sigma, const BinarySetField& E) {
  return anisotropic_perimeter(as_normal_function(sigma), E);
}

}  // namespace mbo
