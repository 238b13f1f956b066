#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mbo/grid.hpp"
#include "mbo/quadrature.hpp"

namespace mbo {

// Boundary point with outward normal and principal curvatures (positive for
// convex shapes) along the orthonormal tangents.
struct Probe {
  Vec x{0, 0, 0};
  Vec normal{0, 0, 0};
  std::array<double, 2> kappa{0, 0};
  std::array<Vec, 2> tangents{};
};

using Interval = std::pair<double, double>;

class Shape {
 public:
  virtual ~Shape() = default;
  virtual int d() const = 0;
  virtual std::string name() const = 0;
  virtual bool contains(const Vec& x) const = 0;
  virtual bool bounded() const { return true; }
  virtual Vec lower() const = 0;
  virtual Vec upper() const = 0;
  virtual bool convex() const { return false; }
  // {t : x + t dir inside}, for convex shapes; nullopt when the line misses.
  virtual std::optional<Interval> chord(const Vec&, const Vec&) const {
    throw PreconditionError(name() + ": chord intervals need a convex shape");
  }
  // Directions (2D angles) seen from x where the chord changes smoothness.
  virtual std::vector<double> silhouette_angles(const Vec&) const { return {}; }
  virtual std::vector<Probe> probes(int) const {
    throw PreconditionError(name() + ": no smooth analytic probes");
  }
  // Integral of f(normal) over the boundary.
  virtual double boundary_integral(const std::function<double(const Vec&)>&, int = 64) const {
    throw PreconditionError(name() + ": boundary integral not available");
  }
  virtual double diameter() const {
    return norm(upper() - lower());
  }
  virtual void check_grid(const GridSpec&) const {}
};

using ShapePtr = std::shared_ptr<const Shape>;

namespace detail {

inline std::optional<Interval> quadratic_chord(double a, double b, double c) {
  // a t^2 + b t + c < 0
  double disc = b * b - 4 * a * c;
  if (disc <= 0) return std::nullopt;
  double s = std::sqrt(disc);
  double q = -0.5 * (b + (b >= 0 ? s : -s));
  double t0 = q / a, t1 = c / q;
  if (t0 > t1) std::swap(t0, t1);
  return Interval{t0, t1};
}

inline std::array<Vec, 2> tangent_frame(const Vec& n) {
  Vec a = std::abs(n[0]) < 0.9 ? Vec{1, 0, 0} : Vec{0, 1, 0};
  Vec t1 = normalized(cross(n, a));
  Vec t2 = cross(n, t1);
  return {t1, t2};
}

// Composite Gauss-Legendre over [a, b] split into `pieces` panels.
template <class F>
double composite_gl(F&& f, double a, double b, int pieces) {
  double s = 0, w = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) s += integrate_gl8(f, a + i * w, a + (i + 1) * w);
  return s;
}

inline double angle_of(const Vec& v) { return std::atan2(v[1], v[0]); }

}  // namespace detail

class Ball : public Shape {
 public:
  Ball(int d, Vec center, double radius) : d_(d), c_(center), r_(radius) {
    if (!(radius > 0)) throw PreconditionError("ball: radius must be positive");
    if (d == 2) c_[2] = 0;
  }
  int d() const override { return d_; }
  std::string name() const override { return "ball"; }
  const Vec& center() const { return c_; }
  double radius() const { return r_; }
  bool contains(const Vec& x) const override {
    Vec y = x - c_;
    return dot(y, y) < r_ * r_;
  }
  Vec lower() const override { return {c_[0] - r_, c_[1] - r_, d_ == 3 ? c_[2] - r_ : 0}; }
  Vec upper() const override { return {c_[0] + r_, c_[1] + r_, d_ == 3 ? c_[2] + r_ : 0}; }
  bool convex() const override { return true; }
  double diameter() const override { return 2 * r_; }
  std::optional<Interval> chord(const Vec& x, const Vec& dir) const override {
    Vec y = x - c_;
    return detail::quadratic_chord(dot(dir, dir), 2 * dot(y, dir), dot(y, y) - r_ * r_);
  }
  std::vector<double> silhouette_angles(const Vec& x) const override {
    Vec y = c_ - x;
    double dist = norm(y);
    if (dist <= r_) return {};
    double base = detail::angle_of(y), half = std::asin(r_ / dist);
    return {base - half, base + half};
  }
  std::vector<Probe> probes(int n) const override {
    std::vector<Probe> out;
    if (d_ == 2) {
      for (int i = 0; i < n; ++i) {
        double t = 2 * std::numbers::pi * (i + 0.5) / n;
        Probe p;
        p.normal = {std::cos(t), std::sin(t), 0};
        p.x = c_ + r_ * p.normal;
        p.kappa = {1 / r_, 0};
        p.tangents = {Vec{-std::sin(t), std::cos(t), 0}, Vec{0, 0, 0}};
        out.push_back(p);
      }
    } else {
      const double ga = std::numbers::pi * (3 - std::sqrt(5.0));
      for (int i = 0; i < n; ++i) {
        double z = 1 - 2 * (i + 0.5) / n, rho = std::sqrt(1 - z * z);
        Probe p;
        p.normal = {rho * std::cos(ga * i), rho * std::sin(ga * i), z};
        p.x = c_ + r_ * p.normal;
        p.kappa = {1 / r_, 1 / r_};
        p.tangents = detail::tangent_frame(p.normal);
        out.push_back(p);
      }
    }
    return out;
  }
  double boundary_integral(const std::function<double(const Vec&)>& f, int pieces) const override {
    const double pi = std::numbers::pi;
    if (d_ == 2)
      return r_ * detail::composite_gl(
                      [&](double t) { return f(Vec{std::cos(t), std::sin(t), 0}); }, 0, 2 * pi, pieces);
    return r_ * r_ * detail::composite_gl(
                         [&](double th) {
                           return std::sin(th) * detail::composite_gl(
                                                     [&](double ph) {
                                                       return f(Vec{std::sin(th) * std::cos(ph),
                                                                    std::sin(th) * std::sin(ph), std::cos(th)});
                                                     },
                                                     0, 2 * pi, pieces);
                         },
                         0, pi, pieces / 2 + 1);
  }

 private:
  int d_;
  Vec c_;
  double r_;
};

// Axis-aligned ellipse (d = 2) or ellipsoid (d = 3).
class Ellipse : public Shape {
 public:
  Ellipse(int d, Vec center, Vec semi_axes) : d_(d), c_(center), a_(semi_axes) {
    if (d == 2) {
      c_[2] = 0;
      a_[2] = 1;
    }
    for (int i = 0; i < d; ++i)
      if (!(a_[i] > 0)) throw PreconditionError("ellipse: semi-axes must be positive");
  }
  int d() const override { return d_; }
  std::string name() const override { return "ellipse"; }
  bool contains(const Vec& x) const override {
    double s = 0;
    for (int i = 0; i < d_; ++i) s += std::pow((x[i] - c_[i]) / a_[i], 2);
    return s < 1;
  }
  Vec lower() const override { return {c_[0] - a_[0], c_[1] - a_[1], d_ == 3 ? c_[2] - a_[2] : 0}; }
  Vec upper() const override { return {c_[0] + a_[0], c_[1] + a_[1], d_ == 3 ? c_[2] + a_[2] : 0}; }
  bool convex() const override { return true; }
  double diameter() const override { return 2 * std::max({a_[0], a_[1], d_ == 3 ? a_[2] : 0.0}); }
  std::optional<Interval> chord(const Vec& x, const Vec& dir) const override {
    double A = 0, B = 0, C = -1;
    for (int i = 0; i < d_; ++i) {
      double y = (x[i] - c_[i]) / a_[i], u = dir[i] / a_[i];
      A += u * u;
      B += 2 * y * u;
      C += y * y;
    }
    return detail::quadratic_chord(A, B, C);
  }
  std::vector<Probe> probes(int n) const override {
    if (d_ != 2) throw PreconditionError("ellipse probes are available in 2D only");
    std::vector<Probe> out;
    double a = a_[0], b = a_[1];
    for (int i = 0; i < n; ++i) {
      double t = 2 * std::numbers::pi * (i + 0.5) / n, ct = std::cos(t), st = std::sin(t);
      Probe p;
      p.x = {c_[0] + a * ct, c_[1] + b * st, 0};
      p.normal = normalized(Vec{b * ct, a * st, 0});
      p.tangents = {normalized(Vec{-a * st, b * ct, 0}), Vec{0, 0, 0}};
      p.kappa = {a * b / std::pow(a * a * st * st + b * b * ct * ct, 1.5), 0};
      out.push_back(p);
    }
    return out;
  }
  double boundary_integral(const std::function<double(const Vec&)>& f, int pieces) const override {
    const double pi = std::numbers::pi;
    double a = a_[0], b = a_[1], c = a_[2];
    if (d_ == 2)
      return detail::composite_gl(
          [&](double t) {
            double ct = std::cos(t), st = std::sin(t);
            return f(normalized(Vec{b * ct, a * st, 0})) * std::hypot(a * st, b * ct);
          },
          0, 2 * pi, pieces);
    return detail::composite_gl(
        [&](double th) {
          return detail::composite_gl(
              [&](double ph) {
                double s = std::sin(th);
                Vec g{s * std::cos(ph) / a, s * std::sin(ph) / b, std::cos(th) / c};
                double ng = norm(g);
                return f((1 / ng) * g) * a * b * c * s * ng;
              },
              0, 2 * pi, pieces);
        },
        0, pi, pieces / 2 + 1);
  }

 private:
  int d_;
  Vec c_, a_;
};

class BallIntersection : public Shape {
 public:
  BallIntersection(int d, std::vector<Ball> balls) : d_(d), balls_(std::move(balls)) {
    if (balls_.empty()) throw PreconditionError("ball_intersection: need at least one ball");
  }
  int d() const override { return d_; }
  std::string name() const override { return "ball_intersection"; }
  bool contains(const Vec& x) const override {
    for (const auto& b : balls_)
      if (!b.contains(x)) return false;
    return true;
  }
  Vec lower() const override {
    Vec lo = balls_[0].lower();
    for (const auto& b : balls_)
      for (int i = 0; i < 3; ++i) lo[i] = std::max(lo[i], b.lower()[i]);
    return lo;
  }
  Vec upper() const override {
    Vec hi = balls_[0].upper();
    for (const auto& b : balls_)
      for (int i = 0; i < 3; ++i) hi[i] = std::min(hi[i], b.upper()[i]);
    return hi;
  }
  bool convex() const override { return true; }
  std::optional<Interval> chord(const Vec& x, const Vec& dir) const override {
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (const auto& b : balls_) {
      auto c = b.chord(x, dir);
      if (!c) return std::nullopt;
      lo = std::max(lo, c->first);
      hi = std::min(hi, c->second);
    }
    if (!(hi > lo)) return std::nullopt;
    return Interval{lo, hi};
  }
  std::vector<double> silhouette_angles(const Vec& x) const override {
    std::vector<double> out;
    for (const auto& b : balls_)
      for (double a : b.silhouette_angles(x)) out.push_back(a);
    if (d_ == 2)
      for (const auto& p : corners()) out.push_back(detail::angle_of(p - x));
    return out;
  }
  double boundary_integral(const std::function<double(const Vec&)>& f, int pieces) const override {
    if (d_ != 2) throw PreconditionError("ball_intersection boundary integral is 2D only");
    const double pi = std::numbers::pi;
    double total = 0;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
      const auto& b = balls_[i];
      std::vector<double> cuts{0.0, 2 * pi};
      for (const auto& p : corners()) {
        Vec y = p - b.center();
        if (std::abs(norm(y) - b.radius()) > 1e-9 * b.radius()) continue;
        double t = detail::angle_of(y);
        if (t < 0) t += 2 * pi;
        cuts.push_back(t);
      }
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double t0 = cuts[k], t1 = cuts[k + 1];
        if (!(t1 > t0)) continue;
        double tm = 0.5 * (t0 + t1);
        Vec pm = b.center() + b.radius() * Vec{std::cos(tm), std::sin(tm), 0};
        bool keep = true;
        for (std::size_t j = 0; j < balls_.size(); ++j)
          if (j != i && !balls_[j].contains(pm)) keep = false;
        if (!keep) continue;
        int n = std::max(1, static_cast<int>(std::ceil(pieces * (t1 - t0) / (2 * pi))));
        total += b.radius() *
                 detail::composite_gl([&](double t) { return f(Vec{std::cos(t), std::sin(t), 0}); }, t0, t1, n);
      }
    }
    return total;
  }
  // Pairwise circle intersection points (2D).
  std::vector<Vec> corners() const {
    std::vector<Vec> out;
    for (std::size_t i = 0; i < balls_.size(); ++i)
      for (std::size_t j = i + 1; j < balls_.size(); ++j) {
        Vec c1 = balls_[i].center(), c2 = balls_[j].center();
        double r1 = balls_[i].radius(), r2 = balls_[j].radius();
        Vec dv = c2 - c1;
        double dist = norm(dv);
        if (dist <= 0 || dist >= r1 + r2 || dist <= std::abs(r1 - r2)) continue;
        double a = (r1 * r1 - r2 * r2 + dist * dist) / (2 * dist);
        double h = std::sqrt(std::max(0.0, r1 * r1 - a * a));
        Vec u = (1 / dist) * dv, v{-u[1], u[0], 0};
        out.push_back(c1 + a * u + h * v);
        out.push_back(c1 + a * u - h * v);
      }
    return out;
  }
  const std::vector<Ball>& balls() const { return balls_; }

 private:
  int d_;
  std::vector<Ball> balls_;
};

// Two ball caps joined by a neck r(s) = r_n cosh(s/a), a > r_n, meeting the
// caps with matching slope at |s| = a*t_j.  Rotationally symmetric about
// `axis` in 3D; in 2D the region |x_perp| < r(s).
class Dumbbell : public Shape {
 public:
  Dumbbell(int d, Vec center, int axis, double neck_radius, double flare, double junction)
      : d_(d), c_(center), axis_(axis), rn_(neck_radius), a_(flare), tj_(junction) {
    if (!(neck_radius > 0) || !(flare > neck_radius) || !(junction > 0))
      throw PreconditionError("dumbbell: need 0 < neck_radius < flare and junction > 0");
    if (axis < 0 || axis >= d) throw PreconditionError("dumbbell: axis out of range");
    if (d == 2) c_[2] = 0;
    zj_ = a_ * tj_;
    double rj = rn_ * std::cosh(tj_), slope = rn_ / a_ * std::sinh(tj_);
    R_ = rj * std::sqrt(1 + slope * slope);
    cz_ = zj_ + slope * rj;
  }
  int d() const override { return d_; }
  std::string name() const override { return "dumbbell"; }
  double lobe_radius() const { return R_; }
  double half_length() const { return cz_ + R_; }
  double profile(double s) const {
    s = std::abs(s);
    if (s <= zj_) return rn_ * std::cosh(s / a_);
    if (s >= cz_ + R_) return 0.0;
    return std::sqrt(std::max(0.0, R_ * R_ - (s - cz_) * (s - cz_)));
  }
  bool contains(const Vec& x) const override {
    Vec y = x - c_;
    double s = y[axis_], rho2 = 0;
    for (int i = 0; i < d_; ++i)
      if (i != axis_) rho2 += y[i] * y[i];
    double r = profile(s);
    return rho2 < r * r;
  }
  Vec lower() const override {
    Vec lo = c_;
    for (int i = 0; i < d_; ++i) lo[i] -= (i == axis_ ? half_length() : R_);
    return lo;
  }
  Vec upper() const override {
    Vec hi = c_;
    for (int i = 0; i < d_; ++i) hi[i] += (i == axis_ ? half_length() : R_);
    return hi;
  }

 private:
  int d_;
  Vec c_;
  int axis_;
  double rn_, a_, tj_, zj_ = 0, R_ = 0, cz_ = 0;
};

// Bands of width period/2: x in E iff floor((x_axis - offset)/(period/2)) is even.
class Stripes : public Shape {
 public:
  Stripes(int d, int axis, double period, double offset = 0.0)
      : d_(d), axis_(axis), p_(period), off_(offset) {
    if (!(period > 0)) throw PreconditionError("stripes: period must be positive");
    if (axis < 0 || axis >= d) throw PreconditionError("stripes: axis out of range");
  }
  int d() const override { return d_; }
  std::string name() const override { return "stripes"; }
  bool bounded() const override { return false; }
  bool contains(const Vec& x) const override {
    double k = std::floor((x[axis_] - off_) / (0.5 * p_));
    return std::fmod(std::abs(k), 2.0) == 0.0;
  }
  Vec lower() const override { return {-1e300, -1e300, -1e300}; }
  Vec upper() const override { return {1e300, 1e300, 1e300}; }
  void check_grid(const GridSpec& s) const override {
    double q = s.extent(axis_) / p_;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q))
      throw ContainmentError("stripes: period must divide the domain extent along the stripe axis");
  }
  int axis() const { return axis_; }
  double period() const { return p_; }

 private:
  int d_, axis_;
  double p_, off_;
};

// {x : x_axis < offset}.  On the periodic grid the domain edge is a second
// interface; tests only look near x_axis = offset.
class HalfSpace : public Shape {
 public:
  HalfSpace(int d, int axis, double offset = 0.0, double probe_span = 0.25)
      : d_(d), axis_(axis), off_(offset), span_(probe_span) {
    if (axis < 0 || axis >= d) throw PreconditionError("half_space: axis out of range");
  }
  int d() const override { return d_; }
  std::string name() const override { return "half_space"; }
  bool bounded() const override { return false; }
  bool contains(const Vec& x) const override { return x[axis_] < off_; }
  Vec lower() const override { return {-1e300, -1e300, -1e300}; }
  Vec upper() const override { return {1e300, 1e300, 1e300}; }
  bool convex() const override { return true; }
  std::optional<Interval> chord(const Vec& x, const Vec& dir) const override {
    const double inf = std::numeric_limits<double>::infinity();
    double u = dir[axis_], gap = off_ - x[axis_];
    if (u > 0) return Interval{-inf, gap / u};
    if (u < 0) return Interval{gap / u, inf};
    if (gap > 0) return Interval{-inf, inf};
    return std::nullopt;
  }
  std::vector<Probe> probes(int n) const override {
    std::vector<Probe> out;
    int other = axis_ == 0 ? 1 : 0;
    for (int i = 0; i < n; ++i) {
      Probe p;
      p.x[axis_] = off_;
      p.x[other] = -span_ + 2 * span_ * (i + 0.5) / n;
      p.normal[axis_] = 1.0;
      p.tangents = detail::tangent_frame(p.normal);
      if (d_ == 2) p.tangents[0] = {p.normal[1], -p.normal[0], 0};
      out.push_back(p);
    }
    return out;
  }

 private:
  int d_, axis_;
  double off_, span_;
};

// Cell-center rasterization.  Bounded shapes must stay `guard` away from the
// domain edge so that no kernel mass wraps around.
inline BinarySetField make_shape(const GridSpec& spec, const Shape& shape, double guard = 0.0) {
  if (shape.d() != spec.d()) throw PreconditionError("make_shape: dimension mismatch");
  if (shape.bounded()) {
    Vec lo = shape.lower(), hi = shape.upper();
    for (int a = 0; a < spec.d(); ++a) {
      double lim = 0.5 * spec.extent(a) - guard;
      if (lo[a] < -lim || hi[a] > lim)
        throw ContainmentError(shape.name() + ": shape exceeds the domain minus the guard band (" +
                               std::to_string(guard) + ") on axis " + std::to_string(a));
    }
  }
  shape.check_grid(spec);
  BinarySetField e(spec);
  for (std::size_t f = 0; f < e.mask.size(); ++f) e.mask[f] = shape.contains(spec.center(f)) ? 1 : 0;
  return e;
}

}  // namespace mbo
