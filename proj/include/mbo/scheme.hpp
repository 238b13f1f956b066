#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mbo/convolve.hpp"
#include "mbo/distance.hpp"
#include "mbo/grid.hpp"
#include "mbo/kernels.hpp"
#include "mbo/shapes.hpp"

namespace mbo {

inline constexpr double kTieEpsilon = 1e-12;

struct ThresholdResult {
  BinarySetField set;
  std::size_t ties = 0;
};

// {field > level}; values within kTieEpsilon of the level are ties and are
// left out (smallest minimizer).
inline ThresholdResult threshold(const ScalarField& field, double level) {
  ThresholdResult r{BinarySetField(field.spec), 0};
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    double v = field.values[i] - level;
    if (std::abs(v) <= kTieEpsilon)
      ++r.ties;
    else if (v > 0)
      r.set.mask[i] = 1;
  }
  return r;
}

// True cells must keep one kernel support radius away from the domain edge.
inline void check_guard_band(const BinarySetField& E, double radius) {
  auto box = bounding_box(E);
  if (box.empty()) return;
  const auto& s = E.spec;
  for (int a = 0; a < s.d(); ++a) {
    double lim = 0.5 * s.extent(a) - radius;
    if (s.coord(a, box.lo[a]) < -lim - 1e-12 || s.coord(a, box.hi[a]) > lim + 1e-12)
      throw ContainmentError("guard band violated on axis " + std::to_string(a) +
                             ": set reaches within the kernel support radius of the periodic edge");
  }
}

struct StepOptions {
  double drift = 0.0;
  bool enforce_guard = true;
};

inline ThresholdResult threshold_step(const SampledKernel& Kh, const BinarySetField& E, StepOptions opt = {}) {
  if (opt.enforce_guard) check_guard_band(E, Kh.support_radius);
  return threshold(convolve(Kh, E), 0.5 - opt.drift);
}

inline ThresholdResult threshold_step_with_drift(const SampledKernel& Kh, const BinarySetField& E, double c,
                                                 bool enforce_guard = true) {
  return threshold_step(Kh, E, StepOptions{c, enforce_guard});
}

struct StepEntry {
  int k = 0;
  double t = 0;
  double measure = 0;
  double P_Kh = 0;          // adjusted perimeter of E_k
  double S_diff = 0;        // adjusted self-interaction of E_k \ E_{k+1}
  double shrink_dist = 0;   // dist(E_{k+1}, complement of E_k); +inf when E_{k+1} is empty
  std::size_t ties = 0;     // ties while computing E_{k+1}
  bool contracting = true;  // E_{k+1} subset of E_k
  bool extinct = false;     // E_k empty (or terminated below resolution)
};

struct EvolveSettings {
  GridSpec spec;
  KernelDescriptor kernel;
  double h = 1e-4;
  ShapePtr shape;
  std::optional<BinarySetField> initial;  // overrides shape rasterization
  int max_steps = 100000;
  double drift = 0.0;
  bool enforce_guard = true;
  bool record_shrink = true;
  bool keep_masks = false;
  bool use_direct = false;
  // Called for every E_k with its convolution field.
  std::function<void(int, const BinarySetField&, const ScalarField&)> on_step;
};

struct EvolutionRecord {
  std::vector<StepEntry> steps;
  ScalarField arrival;  // u_h = h * sum_{k >= 0} chi_{E_k}
  double h = 0;
  KernelDescriptor kernel;
  std::string shape_name;
  bool extinct = false;
  bool sub_resolution = false;
  bool partial = false;
  bool noncontracting = false;
  std::vector<BinarySetField> masks;

  // h times the number of nonempty sets.
  double extinction_time() const {
    int n = 0;
    for (const auto& s : steps)
      if (!s.extinct) ++n;
    return n * h;
  }
};

inline EvolutionRecord evolve(const EvolveSettings& cfg) {
  const auto& spec = cfg.spec;
  EvolutionRecord rec;
  rec.h = cfg.h;
  rec.kernel = cfg.kernel;
  rec.shape_name = cfg.shape ? cfg.shape->name() : "mask";
  auto Kh = sample_kernel(spec, cfg.kernel, cfg.h);
  BinarySetField E = cfg.initial ? *cfg.initial
                                 : make_shape(spec, *cfg.shape, cfg.enforce_guard ? Kh.support_radius : 0.0);
  rec.arrival = ScalarField(spec, 0.0);
  const double sh = std::sqrt(cfg.h);
  auto conv = [&](const BinarySetField& S) {
    return cfg.use_direct ? convolve_direct(Kh, S) : convolve_fft(Kh, S);
  };
  ScalarField field = conv(E);
  for (int k = 0;; ++k) {
    StepEntry st;
    st.k = k;
    st.t = k * cfg.h;
    st.measure = E.measure();
    if (E.empty()) {
      st.extinct = true;
      st.shrink_dist = kExtinct;
      rec.steps.push_back(st);
      rec.extinct = true;
      if (cfg.keep_masks) rec.masks.push_back(E);
      break;
    }
    if (cfg.on_step) cfg.on_step(k, E, field);
    for (std::size_t i = 0; i < E.mask.size(); ++i)
      if (E.mask[i]) rec.arrival.values[i] += cfg.h;
    st.P_Kh = inner_product(complement(E), field) / sh;
    if (k >= cfg.max_steps) {
      rec.partial = true;
      rec.steps.push_back(st);
      if (cfg.keep_masks) rec.masks.push_back(E);
      break;
    }
    if (cfg.enforce_guard) check_guard_band(E, Kh.support_radius);
    auto next = threshold(field, 0.5 - cfg.drift);
    st.ties = next.ties;
    st.contracting = is_subset(next.set, E);
    if (!st.contracting) rec.noncontracting = true;
    ScalarField next_field = conv(next.set);
    if (st.contracting) {
      // K * chi_{E_k \ E_{k+1}} = field_k - field_{k+1}
      double s = 0, c = 0;
      for (std::size_t i = 0; i < E.mask.size(); ++i) {
        if (!E.mask[i] || next.set.mask[i]) continue;
        double y = (field.values[i] - next_field.values[i]) - c, t = s + y;
        c = (t - s) - y;
        s = t;
      }
      st.S_diff = s * spec.cell_volume() / sh;
      st.shrink_dist = cfg.record_shrink ? boundary_distance(next.set, E) : std::numeric_limits<double>::quiet_NaN();
    } else {
      auto D = set_difference(E, next.set);
      st.S_diff = inner_product(D, conv(D)) / sh;
      st.shrink_dist = std::numeric_limits<double>::quiet_NaN();
    }
    rec.steps.push_back(st);
    if (cfg.keep_masks) rec.masks.push_back(E);
    std::size_t cnt = next.set.count();
    E = std::move(next.set);
    field = std::move(next_field);
    if (cnt > 0 && cnt < 4) {
      StepEntry last;
      last.k = k + 1;
      last.t = (k + 1) * cfg.h;
      last.measure = E.measure();
      last.extinct = true;
      last.shrink_dist = kExtinct;
      for (std::size_t i = 0; i < E.mask.size(); ++i)
        if (E.mask[i]) rec.arrival.values[i] += cfg.h;
      rec.steps.push_back(last);
      if (cfg.keep_masks) rec.masks.push_back(E);
      rec.extinct = true;
      rec.sub_resolution = true;
      break;
    }
  }
  return rec;
}

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_steps_csv(std::ostream& os, const EvolutionRecord& rec) {
  os << "k,t,measure,P_Kh,S_diff,shrink_dist,ties,contracting,extinct\n";
  for (const auto& s : rec.steps) {
    os << s.k << ',' << detail::fmt_num(s.t) << ',' << detail::fmt_num(s.measure) << ',' << detail::fmt_num(s.P_Kh)
       << ',' << detail::fmt_num(s.S_diff) << ',' << detail::fmt_num(s.shrink_dist) << ',' << s.ties << ','
       << (s.contracting ? "true" : "false") << ',' << (s.extinct ? "true" : "false") << '\n';
  }
}

}  // namespace mbo
