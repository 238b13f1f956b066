#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mbo/errors.hpp"

namespace mbo {

using Vec = std::array<double, 3>;

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec normalized(const Vec& a) { return (1.0 / norm(a)) * a; }

// Periodic uniform grid on the centered box [-L/2, L/2)^d.  Unused trailing
// axes (d = 2) have dims 1 so loops over three indices cover both cases.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::vector<int> dims, std::vector<double> extent) {
    if (dims.size() != extent.size() || dims.size() < 2 || dims.size() > 3)
      throw PreconditionError("GridSpec: need 2 or 3 axes with matching dims/extent");
    d_ = static_cast<int>(dims.size());
    for (int a = 0; a < d_; ++a) {
      if (dims[a] < 8) throw PreconditionError("GridSpec: dims must be >= 8 per axis");
      if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
        throw PreconditionError("GridSpec: extent must be positive");
      dims_[a] = dims[a];
      extent_[a] = extent[a];
    }
  }

  int d() const { return d_; }
  int dim(int a) const { return dims_[a]; }
  double extent(int a) const { return extent_[a]; }
  const std::array<int, 3>& dims() const { return dims_; }
  double spacing(int a) const { return a < d_ ? extent_[a] / dims_[a] : 1.0; }
  double max_spacing() const {
    double s = 0;
    for (int a = 0; a < d_; ++a) s = std::max(s, spacing(a));
    return s;
  }
  double cell_volume() const {
    double v = 1;
    for (int a = 0; a < d_; ++a) v *= spacing(a);
    return v;
  }
  double cell_diagonal() const {
    double s = 0;
    for (int a = 0; a < d_; ++a) s += spacing(a) * spacing(a);
    return std::sqrt(s);
  }
  double volume() const {
    double v = 1;
    for (int a = 0; a < d_; ++a) v *= extent_[a];
    return v;
  }
  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  std::size_t flat(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
  }
  std::array<int, 3> index(std::size_t f) const {
    std::array<int, 3> ix{};
    ix[2] = static_cast<int>(f % dims_[2]);
    f /= dims_[2];
    ix[1] = static_cast<int>(f % dims_[1]);
    ix[0] = static_cast<int>(f / dims_[1]);
    return ix;
  }
  double coord(int a, int i) const { return -0.5 * extent_[a] + (i + 0.5) * spacing(a); }
  Vec center(std::size_t f) const {
    auto ix = index(f);
    Vec x{0, 0, 0};
    for (int a = 0; a < d_; ++a) x[a] = coord(a, ix[a]);
    return x;
  }
  // Minimal-image offset for index i on axis a, in [-n/2, n/2).
  int offset(int a, int i) const {
    int n = dims_[a];
    return i < (n + 1) / 2 ? i : i - n;
  }

  bool operator==(const GridSpec& o) const {
    return d_ == o.d_ && dims_ == o.dims_ && extent_ == o.extent_;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }

 private:
  int d_ = 2;
  std::array<int, 3> dims_{8, 8, 1};
  std::array<double, 3> extent_{1, 1, 1};
};

inline void require_same(const GridSpec& a, const GridSpec& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": grid specs differ");
}

struct BinarySetField {
  GridSpec spec;
  std::vector<std::uint8_t> mask;

  BinarySetField() = default;
  explicit BinarySetField(const GridSpec& s, bool value = false)
      : spec(s), mask(s.size(), value ? 1 : 0) {}

  std::size_t count() const {
    std::size_t c = 0;
    for (auto v : mask) c += v;
    return c;
  }
  double measure() const { return static_cast<double>(count()) * spec.cell_volume(); }
  bool empty() const {
    return std::none_of(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; });
  }
  bool operator[](std::size_t f) const { return mask[f] != 0; }
  bool operator==(const BinarySetField& o) const { return spec == o.spec && mask == o.mask; }
};

struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& s, double v = 0.0) : spec(s), values(s.size(), v) {}

  bool finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
  double operator[](std::size_t f) const { return values[f]; }
};

inline BinarySetField complement(const BinarySetField& a) {
  BinarySetField r(a.spec);
  for (std::size_t i = 0; i < a.mask.size(); ++i) r.mask[i] = a.mask[i] ? 0 : 1;
  return r;
}

template <class Op>
BinarySetField combine(const BinarySetField& a, const BinarySetField& b, Op op, const char* what) {
  require_same(a.spec, b.spec, what);
  BinarySetField r(a.spec);
  for (std::size_t i = 0; i < a.mask.size(); ++i) r.mask[i] = op(a.mask[i] != 0, b.mask[i] != 0) ? 1 : 0;
  return r;
}

inline BinarySetField set_union(const BinarySetField& a, const BinarySetField& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; }, "set_union");
}
inline BinarySetField set_intersection(const BinarySetField& a, const BinarySetField& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; }, "set_intersection");
}
inline BinarySetField set_difference(const BinarySetField& a, const BinarySetField& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; }, "set_difference");
}

inline bool is_subset(const BinarySetField& a, const BinarySetField& b) {
  require_same(a.spec, b.spec, "is_subset");
  for (std::size_t i = 0; i < a.mask.size(); ++i)
    if (a.mask[i] && !b.mask[i]) return false;
  return true;
}

inline bool disjoint(const BinarySetField& a, const BinarySetField& b) {
  require_same(a.spec, b.spec, "disjoint");
  for (std::size_t i = 0; i < a.mask.size(); ++i)
    if (a.mask[i] && b.mask[i]) return false;
  return true;
}

// Smallest index box holding the true cells; lo > hi on some axis when empty.
struct IndexBox {
  std::array<int, 3> lo{0, 0, 0}, hi{-1, -1, -1};
  bool empty() const { return hi[0] < lo[0]; }
};

inline IndexBox bounding_box(const BinarySetField& e) {
  IndexBox b;
  b.lo = {e.spec.dim(0), e.spec.dim(1), e.spec.dim(2)};
  b.hi = {-1, -1, -1};
  for (std::size_t f = 0; f < e.mask.size(); ++f) {
    if (!e.mask[f]) continue;
    auto ix = e.spec.index(f);
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], ix[a]);
      b.hi[a] = std::max(b.hi[a], ix[a]);
    }
  }
  if (b.hi[0] < 0) b = IndexBox{};
  return b;
}

// Number of face-connected components of the true cells (no wraparound).
inline int component_count(const BinarySetField& e) {
  const auto& s = e.spec;
  std::vector<int> label(e.mask.size(), 0);
  std::vector<std::size_t> stack;
  int n = 0;
  for (std::size_t f = 0; f < e.mask.size(); ++f) {
    if (!e.mask[f] || label[f]) continue;
    ++n;
    label[f] = n;
    stack.push_back(f);
    while (!stack.empty()) {
      auto g = stack.back();
      stack.pop_back();
      auto ix = s.index(g);
      for (int a = 0; a < s.d(); ++a) {
        for (int step : {-1, 1}) {
          auto jx = ix;
          jx[a] += step;
          if (jx[a] < 0 || jx[a] >= s.dim(a)) continue;
          auto h = s.flat(jx[0], jx[1], jx[2]);
          if (e.mask[h] && !label[h]) {
            label[h] = n;
            stack.push_back(h);
          }
        }
      }
    }
  }
  return n;
}

}  // namespace mbo
