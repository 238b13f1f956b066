#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "mbo/errors.hpp"
#include "mbo/grid.hpp"

namespace mbo {

// Recursively subdivided icosahedron.  faces[l] holds the triangles of level l,
// children[l][f] the four faces of level l+1 refining face f.
struct Icosphere {
  std::vector<Vec> vertices;
  std::vector<std::vector<std::array<int, 3>>> faces;
  std::vector<std::vector<std::array<int, 4>>> children;
  std::vector<double> weights;  // per vertex of the finest level, summing to 4*pi

  int level() const { return static_cast<int>(faces.size()) - 1; }

  explicit Icosphere(int level) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec> v0 = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : v0) vertices.push_back(normalized(v));
    faces.push_back({{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                     {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                     {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}});
    for (auto& f : faces[0]) {
      const Vec &a = vertices[f[0]], &b = vertices[f[1]], &c = vertices[f[2]];
      if (dot(a + b + c, cross(b - a, c - a)) < 0) std::swap(f[1], f[2]);
    }
    for (int l = 0; l < level; ++l) {
      std::map<std::pair<int, int>, int> mid;
      auto midpoint = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = mid.find(key);
        if (it != mid.end()) return it->second;
        vertices.push_back(normalized(vertices[a] + vertices[b]));
        int id = static_cast<int>(vertices.size()) - 1;
        mid.emplace(key, id);
        return id;
      };
      std::vector<std::array<int, 3>> next;
      std::vector<std::array<int, 4>> kids;
      for (const auto& f : faces[l]) {
        int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
        int base = static_cast<int>(next.size());
        next.push_back({f[0], ab, ca});
        next.push_back({f[1], bc, ab});
        next.push_back({f[2], ca, bc});
        next.push_back({ab, bc, ca});
        kids.push_back({base, base + 1, base + 2, base + 3});
      }
      faces.push_back(std::move(next));
      children.push_back(std::move(kids));
    }
    weights.assign(vertices.size(), 0.0);
    for (const auto& f : faces.back()) {
      const Vec &a = vertices[f[0]], &b = vertices[f[1]], &c = vertices[f[2]];
      double num = std::abs(dot(a, cross(b, c)));
      double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
      double area = 2.0 * std::atan2(num, den);
      for (int k : f) weights[k] += area / 3.0;
    }
  }

  bool inside(const std::array<int, 3>& f, const Vec& p) const {
    const double eps = -1e-12;
    const Vec &a = vertices[f[0]], &b = vertices[f[1]], &c = vertices[f[2]];
    return dot(p, cross(a, b)) >= eps && dot(p, cross(b, c)) >= eps && dot(p, cross(c, a)) >= eps;
  }

  // Finest-level face containing direction p and barycentric weights.
  std::pair<std::array<int, 3>, Vec> locate(const Vec& p) const {
    int fi = -1;
    for (std::size_t i = 0; i < faces[0].size(); ++i)
      if (inside(faces[0][i], p)) {
        fi = static_cast<int>(i);
        break;
      }
    if (fi < 0) throw NumericError("Icosphere: direction not located");
    for (int l = 0; l < level(); ++l) {
      int found = -1;
      for (int c : children[l][fi])
        if (inside(faces[l + 1][c], p)) {
          found = c;
          break;
        }
      if (found < 0) found = children[l][fi][3];
      fi = found;
    }
    const auto& f = faces.back()[fi];
    const Vec &a = vertices[f[0]], &b = vertices[f[1]], &c = vertices[f[2]];
    double det = dot(a, cross(b, c));
    Vec w{dot(p, cross(b, c)) / det, dot(a, cross(p, c)) / det, dot(a, cross(b, p)) / det};
    double s = 0;
    for (auto& x : w) {
      x = std::max(x, 0.0);
      s += x;
    }
    for (auto& x : w) x /= s;
    return {f, w};
  }
};

inline std::shared_ptr<const Icosphere> icosphere(int level) {
  static std::mutex m;
  static std::map<int, std::shared_ptr<const Icosphere>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto& p = cache[level];
  if (!p) p = std::make_shared<const Icosphere>(level);
  return p;
}

// Function on directions.  d = 2: n angles i*pi/n in [0, pi) (evenness
// implied), linear interpolation in angle.  d = 3: icosphere nodes with
// barycentric interpolation and area weights.
class DirectionalDistribution {
 public:
  DirectionalDistribution() = default;

  static DirectionalDistribution circle(std::vector<double> values) {
    if (values.size() < 2) throw PreconditionError("DirectionalDistribution: need >= 2 angles");
    DirectionalDistribution r;
    r.d_ = 2;
    r.values_ = std::move(values);
    return r;
  }
  static DirectionalDistribution sphere(int level, std::vector<double> values) {
    DirectionalDistribution r;
    r.d_ = 3;
    r.sphere_ = icosphere(level);
    if (values.size() != r.sphere_->vertices.size())
      throw PreconditionError("DirectionalDistribution: value count does not match icosphere level");
    r.values_ = std::move(values);
    return r;
  }
  template <class F>
  static DirectionalDistribution circle_from(int n, F&& f) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(i * std::numbers::pi / n);
    return circle(std::move(v));
  }
  template <class F>
  static DirectionalDistribution sphere_from(int level, F&& f) {
    auto s = icosphere(level);
    std::vector<double> v(s->vertices.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(s->vertices[i]);
    return sphere(level, std::move(v));
  }

  int d() const { return d_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  int level() const { return sphere_ ? sphere_->level() : -1; }

  double angle(std::size_t i) const { return i * std::numbers::pi / static_cast<double>(values_.size()); }
  Vec node(std::size_t i) const {
    if (d_ == 2) return {std::cos(angle(i)), std::sin(angle(i)), 0.0};
    return sphere_->vertices[i];
  }
  // Quadrature weight over the full circle/sphere (antipodal copy included).
  double weight(std::size_t i) const {
    if (d_ == 2) return 2.0 * std::numbers::pi / static_cast<double>(values_.size());
    return sphere_->weights[i];
  }

  double at_angle(double theta) const {
    const double pi = std::numbers::pi;
    double n = static_cast<double>(values_.size());
    double t = std::fmod(theta, pi);
    if (t < 0) t += pi;
    double u = t / pi * n;
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= values_.size()) i = values_.size() - 1;
    double w = u - static_cast<double>(i);
    std::size_t j = (i + 1) % values_.size();
    return (1.0 - w) * values_[i] + w * values_[j];
  }

  double operator()(const Vec& dir) const {
    if (d_ == 2) return at_angle(std::atan2(dir[1], dir[0]));
    auto [f, w] = sphere_->locate(normalized(dir));
    return w[0] * values_[f[0]] + w[1] * values_[f[1]] + w[2] * values_[f[2]];
  }

  bool same_nodes(const DirectionalDistribution& o) const {
    return d_ == o.d_ && values_.size() == o.values_.size() && level() == o.level();
  }

 private:
  int d_ = 2;
  std::vector<double> values_;
  std::shared_ptr<const Icosphere> sphere_;
};

}  // namespace mbo
