#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "mbo/directional.hpp"
#include "mbo/errors.hpp"
#include "mbo/grid.hpp"
#include "mbo/quadrature.hpp"

namespace mbo {

// eta(s) = exp(s^2/(s^2-1)) on (-1, 1): equals 1 at 0, flat to all orders at +-1.
inline double bump(double s) {
  if (std::abs(s) >= 1) return 0.0;
  double s2 = s * s;
  return std::exp(s2 / (s2 - 1));
}

// eta~(s) = eta(eta(s-1)) on [0, 1]: decreasing from 1 to 0 with all
// derivatives vanishing at both ends.
inline double bump_flat(double s) {
  if (s < 0 || s > 1) return 0.0;
  return bump(bump(s - 1));
}

inline double sphere_area(int d) { return d == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi; }

namespace kernel_kind {

struct Gaussian {
  int d;
};
struct Constructed {
  DirectionalDistribution A, B;
};
struct Box {
  int d;
};
struct StripeBox {
  int d;
  int axis;
  double halfwidth;
};
struct ThreeHat {
  std::array<double, 3> w;
};
struct SmoothPlateau {
  int d;
  double rho, eps, norm;
};
struct DiscPlateau {
  int d;
  double w, tau;
};
struct CustomRadial {
  int d;
  std::vector<double> r, v;
};

}  // namespace kernel_kind

// Analytic kernel at time scale h = 1, optionally multiplied by `scale`.
class KernelDescriptor {
 public:
  using Params = std::variant<kernel_kind::Gaussian, kernel_kind::Constructed, kernel_kind::Box,
                              kernel_kind::StripeBox, kernel_kind::ThreeHat, kernel_kind::SmoothPlateau,
                              kernel_kind::DiscPlateau, kernel_kind::CustomRadial>;

  KernelDescriptor() : p_(kernel_kind::Gaussian{2}), kind_("gaussian") {}
  KernelDescriptor(Params p, std::string kind) : p_(std::move(p)), kind_(std::move(kind)) {}

  static KernelDescriptor gaussian(int d = 2) {
    check_d(d);
    return {kernel_kind::Gaussian{d}, "gaussian"};
  }
  static KernelDescriptor box(int d = 2) {
    check_d(d);
    return {kernel_kind::Box{d}, "box"};
  }
  static KernelDescriptor stripe_box(int d = 2, int axis = -1, double halfwidth = 1.0) {
    check_d(d);
    if (axis < 0) axis = d - 1;
    if (!(halfwidth > 0)) throw DomainError("stripe_box: halfwidth must be positive");
    return {kernel_kind::StripeBox{d, axis, halfwidth}, "stripe_box"};
  }
  static KernelDescriptor three_hat(std::array<double, 3> w, std::string kind) {
    return {kernel_kind::ThreeHat{w}, std::move(kind)};
  }
  static KernelDescriptor smooth_plateau(int d = 2, double rho = 1.0, double eps = 0.05) {
    check_d(d);
    if (!(rho > eps) || !(eps > 0)) throw DomainError("smooth_plateau: need rho > eps > 0");
    auto m = integrate_adaptive([&](double s) { return bump_flat(s) * std::pow(s, d - 1); }, 0.0, 1.0, 1e-14);
    double norm = std::pow(eps, d) * sphere_area(d) * m.value;
    return {kernel_kind::SmoothPlateau{d, rho, eps, norm}, "smooth_plateau"};
  }
  static KernelDescriptor disc_plateau(int d = 2, double w = 1.0, double tau = 0.5) {
    check_d(d);
    if (!(w > 0) || !(tau > 0)) throw DomainError("disc_plateau: widths must be positive");
    return {kernel_kind::DiscPlateau{d, w, tau}, "disc_plateau"};
  }
  static KernelDescriptor custom_radial(int d, std::vector<double> r, std::vector<double> v) {
    check_d(d);
    if (r.size() < 2 || r.size() != v.size() || r[0] != 0.0)
      throw DomainError("custom_radial: need knots starting at r = 0 with one value per knot");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(r[i] > r[i - 1])) throw DomainError("custom_radial: knots must increase");
    return {kernel_kind::CustomRadial{d, std::move(r), std::move(v)}, "custom_radial"};
  }

  const std::string& kind() const { return kind_; }
  const Params& params() const { return p_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&p_);
  }
  double scale() const { return scale_; }
  KernelDescriptor scaled(double c) const {
    KernelDescriptor k = *this;
    k.scale_ *= c;
    return k;
  }

  int d() const {
    return std::visit(
        [](const auto& p) -> int {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, kernel_kind::ThreeHat>)
            return 2;
          else if constexpr (std::is_same_v<T, kernel_kind::Constructed>)
            return p.A.d();
          else
            return p.d;
        },
        p_);
  }

  bool radial() const {
    return as<kernel_kind::Gaussian>() || as<kernel_kind::ThreeHat>() || as<kernel_kind::SmoothPlateau>() ||
           as<kernel_kind::CustomRadial>();
  }

  bool nonnegative() const {
    if (as<kernel_kind::ThreeHat>()) return false;
    if (auto c = as<kernel_kind::CustomRadial>())
      return *std::min_element(c->v.begin(), c->v.end()) >= 0 && scale_ >= 0;
    return scale_ >= 0;
  }

  // Radial profile K~(r) for radial kernels.
  double profile(double r) const {
    r = std::abs(r);
    if (auto g = as<kernel_kind::Gaussian>())
      return scale_ * std::pow(4 * std::numbers::pi, -0.5 * g->d) * std::exp(-r * r / 4);
    if (auto t = as<kernel_kind::ThreeHat>()) {
      auto hat = [r](double c) { return std::max(0.0, 1 - std::abs(2 * r - c)); };
      return scale_ * (t->w[0] * hat(1) + t->w[1] * hat(7) + t->w[2] * hat(9));
    }
    if (auto s = as<kernel_kind::SmoothPlateau>()) return scale_ * plateau_profile(*s, r);
    if (auto c = as<kernel_kind::CustomRadial>()) {
      if (r >= c->r.back()) return 0.0;
      auto it = std::upper_bound(c->r.begin(), c->r.end(), r);
      std::size_t i = static_cast<std::size_t>(it - c->r.begin()) - 1;
      double w = (r - c->r[i]) / (c->r[i + 1] - c->r[i]);
      return scale_ * ((1 - w) * c->v[i] + w * c->v[i + 1]);
    }
    throw DomainError(kind_ + ": not a radial kernel");
  }

  // (f, g) of the constructed kernel along direction dir.
  std::pair<double, double> constructed_fg(const Vec& dir) const {
    const auto& c = std::get<kernel_kind::Constructed>(p_);
    return fg_from(c.A.d(), c.A(dir), c.B(dir));
  }

  static std::pair<double, double> fg_from(int d, double A, double B) {
    double p1 = d * d * d + 6.0 * d * d + 11.0 * d + 6.0;
    double p2 = d * d * d + 12.0 * d * d + 47.0 * d + 60.0;
    double g = std::sqrt(2 * p2 / p1 * A / B);
    double f = std::pow(2.0, -(d + 7) / 2.0) * std::pow(p1 * B, (d + 5) / 2.0) / std::pow(p2 * A, (d + 3) / 2.0);
    return {f, g};
  }

  double operator()(const Vec& x) const {
    if (radial()) return profile(norm(x));
    if (auto c = as<kernel_kind::Constructed>()) {
      double r = norm(x);
      if (r == 0) return 0.0;
      auto [f, g] = fg_from(c->A.d(), c->A(x), c->B(x));
      if (r >= g) return 0.0;
      return scale_ * f * r * r * (g - r) * (g - r);
    }
    if (auto b = as<kernel_kind::Box>()) {
      double v = std::pow(0.5, b->d);
      for (int i = 0; i < b->d; ++i) v *= box_factor(x[i]);
      return scale_ * v;
    }
    if (auto b = as<kernel_kind::StripeBox>()) {
      double v = 1.0;
      for (int i = 0; i < b->d; ++i)
        v *= i == b->axis ? box_factor(x[i] / b->halfwidth) / (2 * b->halfwidth) : 0.5 * box_factor(x[i]);
      return scale_ * v;
    }
    if (auto p = as<kernel_kind::DiscPlateau>()) {
      double y = std::abs(x[p->d - 1]), X2 = 0;
      for (int i = 0; i < p->d - 1; ++i) X2 += x[i] * x[i];
      double X = std::sqrt(X2);
      if (y <= p->w) {
        double phi = 1 - bump(y / p->w) / 4;
        return scale_ * std::pow(phi, 1 - p->d) * bump(X / phi);
      }
      if (y < p->w + p->tau) return scale_ * bump_flat((y - p->w) / p->tau) * bump(X);
      return 0.0;
    }
    throw DomainError(kind_ + ": evaluation not implemented");
  }

  // L-infinity half-width of the support (effective support for the Gaussian).
  double support_radius() const {
    if (as<kernel_kind::Gaussian>()) return gaussian_cutoff();
    if (auto c = as<kernel_kind::Constructed>()) return max_g(*c);
    if (as<kernel_kind::Box>()) return 1.0;
    if (auto b = as<kernel_kind::StripeBox>()) return std::max(1.0, b->halfwidth);
    if (as<kernel_kind::ThreeHat>()) return 5.0;
    if (auto s = as<kernel_kind::SmoothPlateau>()) return s->rho + s->eps;
    if (auto p = as<kernel_kind::DiscPlateau>()) return std::max(1.0, p->w + p->tau);
    return std::get<kernel_kind::CustomRadial>(p_).r.back();
  }

  // Euclidean radius beyond which the kernel vanishes (or is negligible).
  double ray_extent() const {
    if (auto b = as<kernel_kind::Box>()) return std::sqrt(static_cast<double>(b->d));
    if (auto b = as<kernel_kind::StripeBox>()) return std::sqrt(b->halfwidth * b->halfwidth + (b->d - 1));
    if (auto p = as<kernel_kind::DiscPlateau>()) return std::hypot(1.0, p->w + p->tau);
    return support_radius();
  }

  // Radii along unit direction dir where the ray profile is not smooth.
  std::vector<double> ray_breakpoints(const Vec& dir) const {
    if (as<kernel_kind::Constructed>()) return {constructed_fg(dir).second};
    if (auto b = as<kernel_kind::Box>()) return {box_exit(dir, b->d, -1, 1.0)};
    if (auto b = as<kernel_kind::StripeBox>()) return {box_exit(dir, b->d, b->axis, b->halfwidth)};
    if (as<kernel_kind::ThreeHat>()) return {0.5, 1.0, 3.0, 3.5, 4.0, 4.5, 5.0};
    if (auto s = as<kernel_kind::SmoothPlateau>()) return {s->rho - s->eps, s->rho + s->eps};
    if (auto c = as<kernel_kind::CustomRadial>()) return c->r;
    return {};
  }

  // Polynomial degree along rays between breakpoints; -1 if not polynomial.
  int ray_degree() const {
    if (as<kernel_kind::Constructed>()) return 4;
    if (as<kernel_kind::Box>() || as<kernel_kind::StripeBox>()) return 0;
    if (as<kernel_kind::ThreeHat>() || as<kernel_kind::CustomRadial>()) return 1;
    return -1;
  }

  // 2D angles in [0, 2 pi) where ray integrals are not smooth in the angle.
  std::vector<double> angular_breakpoints() const {
    const double pi = std::numbers::pi;
    std::vector<double> out;
    if (auto c = as<kernel_kind::Constructed>()) {
      if (c->A.d() != 2) return out;
      for (std::size_t i = 0; i < c->A.size(); ++i) {
        out.push_back(c->A.angle(i));
        out.push_back(c->A.angle(i) + pi);
      }
    } else if (as<kernel_kind::Box>()) {
      for (int k = 0; k < 4; ++k) out.push_back(pi / 4 + k * pi / 2);
    } else if (auto b = as<kernel_kind::StripeBox>()) {
      double w = b->halfwidth;
      double a = b->axis == 1 ? std::atan2(w, 1.0) : std::atan2(1.0, w);
      out = {a, pi - a, pi + a, 2 * pi - a};
    }
    return out;
  }

  static double gaussian_cutoff() { return std::sqrt(4 * std::log(1e12)); }

 private:
  static void check_d(int d) {
    if (d != 2 && d != 3) throw DomainError("kernels are defined for d = 2 or 3");
  }
  static double box_factor(double t) {
    double a = std::abs(t);
    if (a < 1 - 1e-12) return 1.0;
    if (a <= 1 + 1e-12) return 0.5;
    return 0.0;
  }
  static double box_exit(const Vec& dir, int d, int axis, double w) {
    double r = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
      double half = i == axis ? w : 1.0;
      if (dir[i] != 0) r = std::min(r, half / std::abs(dir[i]));
    }
    return r;
  }
  static double max_g(const kernel_kind::Constructed& c) {
    double g = 0;
    for (std::size_t i = 0; i < c.A.size(); ++i)
      g = std::max(g, fg_from(c.A.d(), c.A.value(i), c.B.value(i)).second);
    return g;
  }
  static double plateau_profile(const kernel_kind::SmoothPlateau& s, double r) {
    if (r <= s.rho - s.eps) return 1.0;
    if (r >= s.rho + s.eps) return 0.0;
    const int d = s.d;
    auto inner = [&](double t) {
      double u = t * s.eps;
      if (u <= 0) return 0.0;
      double c = (r * r + u * u - s.rho * s.rho) / (2 * r * u);
      c = std::clamp(c, -1.0, 1.0);
      double ang = d == 2 ? 2 * std::acos(c) : 2 * std::numbers::pi * (1 - c);
      return bump_flat(t) * std::pow(t, d - 1) * ang;
    };
    std::vector<double> pts{0.0, 1.0};
    for (double u : {std::abs(s.rho - r), s.rho + r})
      if (u / s.eps > 0 && u / s.eps < 1) pts.push_back(u / s.eps);
    std::sort(pts.begin(), pts.end());
    // the angle has square-root ends at the breakpoints; t = a + (b-a)(1-cos phi)/2 smooths them.
    // After the change of variable GK is at roundoff well before its error estimate says so.
    double total = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double a = pts[i], b = pts[i + 1];
      if (!(b > a)) continue;
      auto g = [&](double phi) { return inner(a + 0.5 * (b - a) * (1 - std::cos(phi))) * 0.5 * (b - a) * std::sin(phi); };
      total += integrate_adaptive(g, 0.0, std::numbers::pi, 1e-10).value;
    }
    return total * std::pow(s.eps, d) / s.norm;
  }

  Params p_;
  std::string kind_;
  double scale_ = 1.0;
};

// Kernel sampled on the grid, stored with the origin at flat index 0 and
// minimal-image offsets.
struct SampledKernel {
  GridSpec spec;
  std::vector<double> values;
  double mass = 0;
  double support_radius = 0;
  bool nonnegative = true;
  bool even = true;
  double h = 1;
  KernelDescriptor desc;
  std::uint64_t id = 0;

  double at_offset(int i, int j, int k = 0) const {
    auto wrap = [](int o, int n) { return ((o % n) + n) % n; };
    return values[spec.flat(wrap(i, spec.dim(0)), wrap(j, spec.dim(1)), wrap(k, spec.dim(2)))];
  }
};

inline std::uint64_t next_kernel_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

inline double min_resolvable_h(const GridSpec& s) {
  double m = 4 * s.max_spacing();
  return m * m;
}

inline void check_resolvable(const GridSpec& s, double h) {
  if (!(h > 0)) throw ConfigError("time step h must be positive");
  if (std::sqrt(h) < 4 * s.max_spacing() * (1 - 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "h = %.6g is below the resolvability floor sqrt(h) >= 4*spacing; minimal admissible h = %.6g", h,
                  min_resolvable_h(s));
    throw ConfigError(buf);
  }
}

// Samples h^{-d/2} K(x/sqrt(h)) at cell centers, symmetrizes and normalizes
// the discrete mass to 1.
inline SampledKernel sample_kernel(const GridSpec& spec, const KernelDescriptor& K, double h,
                                   bool check_resolution = true) {
  if (K.d() != spec.d()) throw ShapeError("sample_kernel: kernel and grid dimensions differ");
  if (check_resolution) check_resolvable(spec, h);
  const int d = spec.d();
  const double sh = std::sqrt(h), amp = std::pow(h, -0.5 * d);
  const bool compact = !K.as<kernel_kind::Gaussian>();
  const double reach = K.support_radius() * sh;
  std::vector<double> raw(spec.size(), 0.0);
  for (std::size_t f = 0; f < raw.size(); ++f) {
    auto ix = spec.index(f);
    Vec x{0, 0, 0};
    bool skip = false;
    for (int a = 0; a < d; ++a) {
      x[a] = spec.offset(a, ix[a]) * spec.spacing(a);
      if (compact && std::abs(x[a]) > reach * (1 + 1e-12)) skip = true;
    }
    if (skip) continue;
    raw[f] = amp * K((1.0 / sh) * x);
  }
  SampledKernel k;
  k.spec = spec;
  k.values.assign(raw.size(), 0.0);
  for (std::size_t f = 0; f < raw.size(); ++f) {
    auto ix = spec.index(f);
    int m[3] = {0, 0, 0};
    for (int a = 0; a < 3; ++a) m[a] = (spec.dim(a) - ix[a]) % spec.dim(a);
    k.values[f] = 0.5 * (raw[f] + raw[spec.flat(m[0], m[1], m[2])]);
  }
  double sum = 0, c = 0;
  for (double v : k.values) {
    double y = v - c, t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  double mass = sum * spec.cell_volume();
  if (!(mass > 0) || !std::isfinite(mass)) throw NumericError("sample_kernel: nonpositive discrete mass");
  for (double& v : k.values) v /= mass;
  sum = 0;
  c = 0;
  for (double v : k.values) {
    double y = v - c, t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  k.mass = sum * spec.cell_volume();
  k.support_radius = K.support_radius() * sh;
  k.nonnegative = *std::min_element(k.values.begin(), k.values.end()) >= 0;
  k.even = true;
  k.h = h;
  k.desc = K;
  k.id = next_kernel_id();
  return k;
}

inline SampledKernel rescale_kernel(const KernelDescriptor& K, const GridSpec& spec, double h) {
  return sample_kernel(spec, K, h);
}

inline SampledKernel rescale_kernel(const SampledKernel& K, double h) { return sample_kernel(K.spec, K.desc, h); }

inline SampledKernel gaussian_kernel(const GridSpec& spec) {
  return sample_kernel(spec, KernelDescriptor::gaussian(spec.d()), 1.0);
}

// Weights of the backwards-in-time kernel: sum of three hats centered at
// r = 1/2, 7/2, 9/2 (half-width 1/2), fixed by mass 1, 1/mu = 1, sigma = -1.
inline std::array<double, 3> three_hat_weights() {
  const double pi = std::numbers::pi;
  return {(329 * pi - 384) / (576 * pi), 5 * (48 - pi) / (144 * pi), -(1 / pi + 7.0 / 192.0)};
}

// The three weights as printed in the literature (sigma comes out as -4).
inline std::array<double, 3> three_hat_weights_quoted() {
  const double pi = std::numbers::pi;
  return {(185 * pi - 384) / (576 * pi), (139 * pi + 240) / (144 * pi), -(151 * pi + 192) / (192 * pi)};
}

inline std::vector<std::string> special_kernel_names() {
  return {"gaussian",     "box",           "backward_three_hat", "backward_three_hat_quoted",
          "stripe_box",   "smooth_plateau", "disc_plateau"};
}

inline KernelDescriptor special_kernels(const std::string& name, int d = 2) {
  if (name == "gaussian") return KernelDescriptor::gaussian(d);
  if (name == "box") return KernelDescriptor::box(d);
  if (name == "backward_three_hat" || name == "backward_three_hat_quoted") {
    if (d != 2) throw DomainError("backward_three_hat is defined in 2D only");
    return KernelDescriptor::three_hat(name == "backward_three_hat" ? three_hat_weights() : three_hat_weights_quoted(),
                                       name);
  }
  if (name == "stripe_box") return KernelDescriptor::stripe_box(d);
  if (name == "smooth_plateau") return KernelDescriptor::smooth_plateau(d);
  if (name == "disc_plateau") return KernelDescriptor::disc_plateau(d);
  std::string valid;
  for (const auto& n : special_kernel_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw DomainError("unknown kernel '" + name + "' (valid: " + valid + ")");
}

}  // namespace mbo
