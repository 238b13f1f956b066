#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mbo/analysis.hpp"
#include "mbo/errors.hpp"
#include "mbo/grid.hpp"
#include "mbo/kernel_design.hpp"
#include "mbo/kernels.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

// Flat `section.key = value` configuration.  Lists are comma separated,
// `#` starts a comment.

struct ConfigErrors : ConfigError {
  std::vector<std::string> items;
  explicit ConfigErrors(std::vector<std::string> all) : ConfigError(join(all)), items(std::move(all)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : "\n") + e;
    return s;
  }
};

inline std::vector<std::string> experiment_names() {
  return {"evolve",  "consistency", "backward_consistency", "energy_convergence", "contraction_suite",
          "fattening", "kernel_design"};
}

inline std::vector<std::string> config_kernel_names() {
  auto v = special_kernel_names();
  v.push_back("custom_radial");
  v.push_back("constructed");
  return v;
}

inline std::vector<std::string> shape_names() {
  return {"ball", "ellipse", "ball_intersection", "dumbbell", "stripes", "half_space"};
}

struct ExperimentConfig {
  GridSpec spec;
  std::string kernel_kind = "gaussian";
  KernelDescriptor kernel;
  std::string shape_kind = "ball";
  ShapePtr shape;
  std::string experiment = "evolve";
  double h = 0;
  std::vector<double> h_list;
  int max_steps = 100000;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int probes = 64;
  Measurement measurement = Measurement::exact_geometry;
  double drift = 0;
  int f_draws = 200, g_draws = 200;
  bool track_components = false;
  bool exact_energy = false;
  std::string fattening_example = "stripes";
  std::string sigma_file;  // kernel_design input
  int n_basis = 16;
  double design_residual = 1e-6;
  double design_mobility = 0;  // 0: constant B from the constructed kernel parameters
  Tolerances tol;
  std::map<std::string, std::string> raw;  // key -> value text as read
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(v);
}

inline bool parse_int(const std::string& s, long long& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

inline std::string join_names(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& n : v) s += (s.empty() ? "" : ", ") + n;
  return s;
}

enum class KeyType { real, integer, text, boolean, reals, integers };

struct KeySpec {
  KeyType type;
  std::vector<std::string> choices;  // enums
};

inline const std::map<std::string, KeySpec>& key_table() {
  using K = KeyType;
  static const std::map<std::string, KeySpec> t = {
      {"domain.dims", {K::integers, {}}},
      {"domain.extent", {K::reals, {}}},
      {"kernel.kind", {K::text, config_kernel_names()}},
      {"kernel.axis", {K::integer, {}}},
      {"kernel.halfwidth", {K::real, {}}},
      {"kernel.rho", {K::real, {}}},
      {"kernel.eps", {K::real, {}}},
      {"kernel.w", {K::real, {}}},
      {"kernel.tau", {K::real, {}}},
      {"kernel.knots", {K::reals, {}}},
      {"kernel.values", {K::reals, {}}},
      {"kernel.nodes", {K::integer, {}}},
      {"kernel.A_mean", {K::real, {}}},
      {"kernel.A_cos2", {K::real, {}}},
      {"kernel.B_mean", {K::real, {}}},
      {"kernel.B_cos2", {K::real, {}}},
      {"shape.kind", {K::text, shape_names()}},
      {"shape.center", {K::reals, {}}},
      {"shape.radius", {K::real, {}}},
      {"shape.semi_axes", {K::reals, {}}},
      {"shape.centers", {K::reals, {}}},
      {"shape.radii", {K::reals, {}}},
      {"shape.axis", {K::integer, {}}},
      {"shape.neck_radius", {K::real, {}}},
      {"shape.flare", {K::real, {}}},
      {"shape.junction", {K::real, {}}},
      {"shape.period", {K::real, {}}},
      {"shape.offset", {K::real, {}}},
      {"run.experiment", {K::text, experiment_names()}},
      {"run.h", {K::real, {}}},
      {"run.h_list", {K::reals, {}}},
      {"run.max_steps", {K::integer, {}}},
      {"run.output_dir", {K::text, {}}},
      {"run.seed", {K::integer, {}}},
      {"run.probes", {K::integer, {}}},
      {"run.measurement", {K::text, {"exact_geometry", "grid_field", "grid_mask"}}},
      {"run.drift", {K::real, {}}},
      {"run.f_draws", {K::integer, {}}},
      {"run.g_draws", {K::integer, {}}},
      {"run.track_components", {K::boolean, {}}},
      {"run.exact", {K::boolean, {}}},
      {"fattening.example", {K::text, {"stripes", "smooth_plateau", "disc_plateau"}}},
      {"fattening.fraction", {K::real, {}}},
      {"design.sigma_file", {K::text, {}}},
      {"design.n_basis", {K::integer, {}}},
      {"design.max_residual", {K::real, {}}},
      {"design.mobility", {K::real, {}}},
      {"tol.slope_min", {K::real, {}}},
      {"tol.mean_rel", {K::real, {}}},
      {"tol.no_crossing_max", {K::real, {}}},
      {"tol.energy_rel", {K::real, {}}},
      {"tol.extinction_steps", {K::real, {}}},
      {"tol.positive_fraction", {K::real, {}}},
      {"tol.descent_slack", {K::real, {}}},
      {"tol.minimality_slack", {K::real, {}}},
      {"tol.variational_slack", {K::real, {}}},
      {"tol.fat_fraction", {K::real, {}}},
      {"tol.arrival_constant", {K::real, {}}},
  };
  return t;
}

struct Entry {
  std::string value;
  int line = 0;
  std::vector<double> reals;
  std::vector<long long> ints;
  bool flag = false;
};

}  // namespace detail

// Descriptor back to config lines (round trip through parse_config).
inline std::string kernel_config_lines(const KernelDescriptor& K) {
  std::ostringstream os;
  os.precision(17);
  os << "kernel.kind = " << K.kind() << "\n";
  if (auto* p = K.as<kernel_kind::StripeBox>()) os << "kernel.axis = " << p->axis << "\nkernel.halfwidth = " << p->halfwidth << "\n";
  if (auto* p = K.as<kernel_kind::SmoothPlateau>()) os << "kernel.rho = " << p->rho << "\nkernel.eps = " << p->eps << "\n";
  if (auto* p = K.as<kernel_kind::DiscPlateau>()) os << "kernel.w = " << p->w << "\nkernel.tau = " << p->tau << "\n";
  if (auto* p = K.as<kernel_kind::CustomRadial>()) {
    os << "kernel.knots = ";
    for (std::size_t i = 0; i < p->r.size(); ++i) os << (i ? ", " : "") << p->r[i];
    os << "\nkernel.values = ";
    for (std::size_t i = 0; i < p->v.size(); ++i) os << (i ? ", " : "") << p->v[i];
    os << "\n";
  }
  if (K.as<kernel_kind::Constructed>())
    throw PreconditionError("kernel_config_lines: constructed kernels are given by A/B tables, not config lines");
  return os.str();
}

inline DirectionalDistribution read_sigma_samples(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("design.sigma_file: cannot open " + path);
  std::vector<double> theta, val;
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    auto h = line.find('#');
    if (h != std::string::npos) line.resize(h);
    for (char& c : line)
      if (c == ',' || c == '\t') c = ' ';
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty()) continue;
    double a = 0, b = 0;
    if (tok.size() == 1 && detail::parse_double(tok[0], a)) {
      val.push_back(a);
    } else if (tok.size() == 2 && detail::parse_double(tok[0], a) && detail::parse_double(tok[1], b)) {
      theta.push_back(a);
      val.push_back(b);
    } else if (ln == 1) {
      continue;  // header
    } else {
      throw ConfigError(path + ":" + std::to_string(ln) + ": expected 'value' or 'theta, value'");
    }
  }
  if (val.size() < 2) throw ConfigError(path + ": need at least 2 samples");
  if (!theta.empty()) {
    if (theta.size() != val.size()) throw ConfigError(path + ": mixed one- and two-column rows");
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (std::abs(theta[i] - i * std::numbers::pi / val.size()) > 1e-9)
        throw ConfigError(path + ": angles must be i*pi/n, row " + std::to_string(i + 1));
  }
  return DirectionalDistribution::circle(std::move(val));
}

inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  std::vector<std::string> errs;
  std::map<std::string, Entry> kv;
  const auto& table = key_table();
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  auto err = [&](int l, const std::string& m) { errs.push_back("line " + std::to_string(l) + ": " + m); };
  while (std::getline(is, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      err(ln, "expected 'section.key = value'");
      continue;
    }
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    auto it = table.find(key);
    if (it == table.end()) {
      err(ln, "unknown key '" + key + "'");
      continue;
    }
    if (kv.count(key)) err(ln, "duplicate key '" + key + "' (first on line " + std::to_string(kv[key].line) + ")");
    Entry e;
    e.value = val;
    e.line = ln;
    const auto& ks = it->second;
    bool ok = true;
    switch (ks.type) {
      case KeyType::real: {
        double v;
        ok = parse_double(val, v);
        if (ok) e.reals = {v};
        if (!ok) err(ln, key + ": expected a real number, got '" + val + "'");
        break;
      }
      case KeyType::integer: {
        long long v;
        ok = parse_int(val, v);
        if (ok) e.ints = {v};
        if (!ok) err(ln, key + ": expected an integer, got '" + val + "'");
        break;
      }
      case KeyType::reals:
        for (const auto& t : split_list(val)) {
          double v;
          if (!parse_double(t, v)) {
            err(ln, key + ": expected a list of real numbers, got '" + t + "'");
            ok = false;
            break;
          }
          e.reals.push_back(v);
        }
        break;
      case KeyType::integers:
        for (const auto& t : split_list(val)) {
          long long v;
          if (!parse_int(t, v)) {
            err(ln, key + ": expected a list of integers, got '" + t + "'");
            ok = false;
            break;
          }
          e.ints.push_back(v);
        }
        break;
      case KeyType::boolean:
        if (val == "true" || val == "1")
          e.flag = true;
        else if (val == "false" || val == "0")
          e.flag = false;
        else {
          ok = false;
          err(ln, key + ": expected true or false, got '" + val + "'");
        }
        break;
      case KeyType::text:
        if (val.empty()) {
          ok = false;
          err(ln, key + ": empty value");
        } else if (!ks.choices.empty() && std::find(ks.choices.begin(), ks.choices.end(), val) == ks.choices.end()) {
          ok = false;
          err(ln, key + ": unknown value '" + val + "' (valid: " + join_names(ks.choices) + ")");
        }
        break;
    }
    if (ok) kv[key] = std::move(e);
  }

  ExperimentConfig c;
  for (const auto& [k, e] : kv) c.raw[k] = e.value;
  auto has = [&](const std::string& k) { return kv.count(k) > 0; };
  auto lineof = [&](const std::string& k) { return has(k) ? kv[k].line : 0; };
  auto real = [&](const std::string& k, double def) { return has(k) ? kv[k].reals[0] : def; };
  auto integer = [&](const std::string& k, long long def) { return has(k) ? kv[k].ints[0] : def; };
  auto text = [&](const std::string& k, const std::string& def) { return has(k) ? kv[k].value : def; };
  auto positive = [&](const std::string& k) {
    if (has(k) && !(kv[k].reals[0] > 0)) err(lineof(k), k + " must be positive");
  };

  // domain
  bool domain_ok = false;
  if (!has("domain.dims")) {
    errs.push_back("missing required key 'domain.dims'");
  } else {
    auto dims = kv["domain.dims"].ints;
    std::vector<double> ext = has("domain.extent") ? kv["domain.extent"].reals : std::vector<double>{1.0};
    if (dims.size() < 2 || dims.size() > 3) {
      err(lineof("domain.dims"), "domain.dims: need 2 or 3 entries");
    } else if (std::any_of(dims.begin(), dims.end(), [](long long n) { return n < 2; })) {
      err(lineof("domain.dims"), "domain.dims: every axis needs at least 2 cells");
    } else if (ext.size() != 1 && ext.size() != dims.size()) {
      err(lineof("domain.extent"), "domain.extent: give one value or one per axis");
    } else if (std::any_of(ext.begin(), ext.end(), [](double x) { return !(x > 0); })) {
      err(lineof("domain.extent"), "domain.extent must be positive");
    } else {
      if (ext.size() == 1) ext.assign(dims.size(), ext[0]);
      c.spec = GridSpec(std::vector<int>(dims.begin(), dims.end()), ext);
      domain_ok = true;
    }
  }
  const int d = domain_ok ? c.spec.d() : 2;

  // run
  c.experiment = text("run.experiment", "evolve");
  c.max_steps = static_cast<int>(integer("run.max_steps", 100000));
  if (c.max_steps < 1) err(lineof("run.max_steps"), "run.max_steps must be >= 1");
  c.output_dir = text("run.output_dir", "out");
  long long seed = integer("run.seed", 1);
  if (seed < 0) err(lineof("run.seed"), "run.seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(std::max(0LL, seed));
  c.probes = static_cast<int>(integer("run.probes", 64));
  if (c.probes < 4) err(lineof("run.probes"), "run.probes must be >= 4");
  std::string m = text("run.measurement", "exact_geometry");
  c.measurement = m == "grid_field" ? Measurement::grid_field
                  : m == "grid_mask" ? Measurement::grid_mask
                                     : Measurement::exact_geometry;
  c.drift = real("run.drift", 0.0);
  c.f_draws = static_cast<int>(integer("run.f_draws", 200));
  c.g_draws = static_cast<int>(integer("run.g_draws", 200));
  c.track_components = has("run.track_components") && kv["run.track_components"].flag;
  c.exact_energy = has("run.exact") && kv["run.exact"].flag;
  c.h = real("run.h", 0.0);
  if (has("run.h_list")) c.h_list = kv["run.h_list"].reals;
  positive("run.h");
  for (double h : c.h_list)
    if (!(h > 0)) err(lineof("run.h_list"), "run.h_list entries must be positive");
  for (std::size_t i = 1; i < c.h_list.size(); ++i)
    if (!(c.h_list[i] < c.h_list[i - 1])) {
      err(lineof("run.h_list"), "run.h_list must be strictly decreasing");
      break;
    }
  const std::string& ex = c.experiment;
  const bool single_h = ex == "evolve" || ex == "contraction_suite";
  const bool multi_h = ex == "consistency" || ex == "backward_consistency" || ex == "energy_convergence";
  if (single_h && !has("run.h")) errs.push_back("experiment '" + ex + "' needs run.h");
  if (multi_h) {
    std::size_t need = ex == "energy_convergence" ? 2 : 3;
    if (c.h_list.size() < need)
      errs.push_back("experiment '" + ex + "' needs run.h_list with at least " + std::to_string(need) + " entries");
  }
  if (domain_ok) {
    double hmin = min_resolvable_h(c.spec);
    char buf[160];
    auto check_h = [&](double h, const std::string& k) {
      if (h > 0 && h < hmin) {
        std::snprintf(buf, sizeof buf, "%s = %.6g is below the resolvability floor; minimal h = (4*spacing)^2 = %.6g",
                      k.c_str(), h, hmin);
        err(lineof(k), buf);
      }
    };
    if (single_h || (!multi_h && has("run.h"))) check_h(c.h, "run.h");
    if (multi_h)
      for (double h : c.h_list) check_h(h, "run.h_list");
  }

  // kernel
  c.kernel_kind = text("kernel.kind", "gaussian");
  for (auto k : {"kernel.halfwidth", "kernel.rho", "kernel.eps", "kernel.w", "kernel.tau", "kernel.A_mean", "kernel.B_mean"})
    positive(k);
  try {
    const auto& kk = c.kernel_kind;
    if (kk == "stripe_box") {
      int axis = static_cast<int>(integer("kernel.axis", d - 1));
      if (axis < 0 || axis >= d)
        err(lineof("kernel.axis"), "kernel.axis out of range");
      else
        c.kernel = KernelDescriptor::stripe_box(d, axis, real("kernel.halfwidth", 1.0));
    } else if (kk == "smooth_plateau") {
      c.kernel = KernelDescriptor::smooth_plateau(d, real("kernel.rho", 1.0), real("kernel.eps", 0.05));
    } else if (kk == "disc_plateau") {
      c.kernel = KernelDescriptor::disc_plateau(d, real("kernel.w", 1.0), real("kernel.tau", 0.5));
    } else if (kk == "custom_radial") {
      if (!has("kernel.knots") || !has("kernel.values"))
        errs.push_back("kernel.kind = custom_radial needs kernel.knots and kernel.values");
      else
        c.kernel = KernelDescriptor::custom_radial(d, kv["kernel.knots"].reals, kv["kernel.values"].reals);
    } else if (kk == "constructed") {
      if (d != 2) {
        err(lineof("kernel.kind"), "constructed kernels from A/B parameters are 2D only");
      } else {
        int n = static_cast<int>(integer("kernel.nodes", 64));
        double am = real("kernel.A_mean", 1.0), ac = real("kernel.A_cos2", 0.0);
        double bm = real("kernel.B_mean", 1.0), bc = real("kernel.B_cos2", 0.0);
        if (std::abs(ac) >= 1 || std::abs(bc) >= 1)
          errs.push_back("kernel.A_cos2 and kernel.B_cos2 must lie in (-1, 1) so that A, B stay positive");
        else if (n < 8)
          err(lineof("kernel.nodes"), "kernel.nodes must be >= 8");
        else {
          auto A = DirectionalDistribution::circle_from(n, [&](double t) { return am * (1 + ac * std::cos(2 * t)); });
          auto B = DirectionalDistribution::circle_from(n, [&](double t) { return bm * (1 + bc * std::cos(2 * t)); });
          c.kernel = construct_kernel(A, B);
        }
      }
    } else {
      c.kernel = special_kernels(kk, d);
    }
  } catch (const DomainError& e) {
    err(lineof("kernel.kind"), e.what());
  }

  // shape
  c.shape_kind = text("shape.kind", "ball");
  for (auto k : {"shape.radius", "shape.neck_radius", "shape.flare", "shape.period"}) positive(k);
  auto vec = [&](const std::string& k, Vec def) {
    if (!has(k)) return def;
    const auto& r = kv[k].reals;
    if (static_cast<int>(r.size()) != d) {
      err(lineof(k), k + ": need " + std::to_string(d) + " entries");
      return def;
    }
    Vec v{0, 0, 0};
    for (int a = 0; a < d; ++a) v[a] = r[a];
    return v;
  };
  try {
    const auto& sk = c.shape_kind;
    Vec center = vec("shape.center", {0, 0, 0});
    int axis = static_cast<int>(integer("shape.axis", sk == "dumbbell" ? d - 1 : 0));
    if (axis < 0 || axis >= d) err(lineof("shape.axis"), "shape.axis out of range");
    axis = std::clamp(axis, 0, d - 1);
    if (sk == "ball") {
      c.shape = std::make_shared<Ball>(d, center, real("shape.radius", 0.25));
    } else if (sk == "ellipse") {
      c.shape = std::make_shared<Ellipse>(d, center, vec("shape.semi_axes", {0.3, 0.2, 0.2}));
    } else if (sk == "ball_intersection") {
      std::vector<double> cs = has("shape.centers") ? kv["shape.centers"].reals : std::vector<double>{};
      std::vector<double> rs = has("shape.radii") ? kv["shape.radii"].reals : std::vector<double>{};
      if (rs.empty() || cs.size() != rs.size() * d) {
        errs.push_back("shape.kind = ball_intersection needs shape.radii and shape.centers with d entries per ball");
      } else {
        std::vector<Ball> balls;
        for (std::size_t b = 0; b < rs.size(); ++b) {
          Vec x{0, 0, 0};
          for (int a = 0; a < d; ++a) x[a] = cs[b * d + a];
          balls.emplace_back(d, x, rs[b]);
        }
        c.shape = std::make_shared<BallIntersection>(d, std::move(balls));
      }
    } else if (sk == "dumbbell") {
      c.shape = std::make_shared<Dumbbell>(d, center, axis, real("shape.neck_radius", 0.06), real("shape.flare", 0.08),
                                           real("shape.junction", 1.2));
    } else if (sk == "stripes") {
      c.shape = std::make_shared<Stripes>(d, axis, real("shape.period", 0.5), real("shape.offset", 0.0));
    } else if (sk == "half_space") {
      c.shape = std::make_shared<HalfSpace>(d, axis, real("shape.offset", 0.0));
    }
    if (c.shape && domain_ok) c.shape->check_grid(c.spec);
  } catch (const std::exception& e) {
    err(lineof("shape.kind"), std::string("shape: ") + e.what());
  }

  // fattening, design
  c.fattening_example = text("fattening.example", "stripes");
  c.tol.fat_fraction = real("fattening.fraction", 0.0);
  if (c.tol.fat_fraction < 0 || c.tol.fat_fraction > 1) err(lineof("fattening.fraction"), "fattening.fraction must lie in [0, 1]");
  c.sigma_file = text("design.sigma_file", "");
  c.n_basis = static_cast<int>(integer("design.n_basis", 16));
  if (c.n_basis < 2) err(lineof("design.n_basis"), "design.n_basis must be >= 2");
  c.design_residual = real("design.max_residual", 1e-6);
  positive("design.max_residual");
  c.design_mobility = real("design.mobility", 0.0);
  if (has("design.mobility") && !(c.design_mobility > 0)) err(lineof("design.mobility"), "design.mobility must be positive");
  if (ex == "kernel_design" && c.sigma_file.empty() && c.kernel_kind != "constructed")
    errs.push_back("experiment 'kernel_design' needs design.sigma_file or kernel.kind = constructed");
  if (ex == "kernel_design" && d != 2) errs.push_back("experiment 'kernel_design' is 2D only");

  // tolerances
  auto& t = c.tol;
  t.slope_min = real("tol.slope_min", t.slope_min);
  t.mean_rel = real("tol.mean_rel", t.mean_rel);
  t.no_crossing_max = real("tol.no_crossing_max", t.no_crossing_max);
  t.energy_rel = real("tol.energy_rel", t.energy_rel);
  t.extinction_steps = real("tol.extinction_steps", t.extinction_steps);
  t.positive_fraction = real("tol.positive_fraction", t.positive_fraction);
  t.descent_slack = real("tol.descent_slack", t.descent_slack);
  t.minimality_slack = real("tol.minimality_slack", t.minimality_slack);
  t.variational_slack = real("tol.variational_slack", t.variational_slack);
  t.arrival_constant = real("tol.arrival_constant", t.arrival_constant);
  if (has("tol.fat_fraction")) t.fat_fraction = real("tol.fat_fraction", 0.0);

  // experiment-specific requirements
  if ((ex == "consistency" || ex == "energy_convergence" || ex == "backward_consistency") && d != 2 &&
      !(ex == "energy_convergence" && !c.exact_energy))
    errs.push_back("experiment '" + ex + "' runs in 2D only");
  if (ex == "energy_convergence" && c.exact_energy && c.shape_kind != "ball")
    err(lineof("run.exact"), "run.exact = true needs shape.kind = ball");
  if (ex == "contraction_suite" && domain_ok && !c.kernel.nonnegative())
    err(lineof("kernel.kind"), "contraction_suite needs a nonnegative kernel");

  if (!errs.empty()) throw ConfigErrors(std::move(errs));
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mbo
