#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbo/analysis.hpp"
#include "mbo/config.hpp"
#include "mbo/kernel_analysis.hpp"
#include "mbo/kernel_design.hpp"
#include "mbo/raster_io.hpp"
#include "mbo/scheme.hpp"

namespace mbo {

enum ExitCode : int { kExitPass = 0, kExitAssertion = 1, kExitConfig = 2, kExitRuntime = 3 };

struct RunOutput {
  Report report;
  std::vector<std::string> files;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

inline void run_evolve(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  EvolveSettings es;
  es.spec = c.spec;
  es.kernel = c.kernel;
  es.h = c.h;
  es.shape = c.shape;
  es.max_steps = c.max_steps;
  es.drift = c.drift;
  auto rec = evolve(es);
  {
    auto os = open_out(dir / "steps.csv");
    write_steps_csv(os, rec);
  }
  write_mbof((dir / "arrival.mbof").string(), rec.arrival);
  out.files.insert(out.files.end(), {"steps.csv", "arrival.mbof"});
  auto& r = out.report;
  const auto& kn = c.kernel_kind;
  const auto& sn = c.shape_kind;
  r.add("evolve", kn, sn, c.h, "steps", static_cast<double>(rec.steps.size()), Verdict::info);
  r.add("evolve", kn, sn, c.h, "extinction_time", rec.extinction_time(), Verdict::info);
  r.add("evolve", kn, sn, c.h, "extinct", rec.extinct ? 1 : 0, Verdict::info);
  r.add("evolve", kn, sn, c.h, "partial", rec.partial ? 1 : 0, Verdict::info);
  r.add("evolve", kn, sn, c.h, "noncontracting", rec.noncontracting ? 1 : 0, Verdict::info);
}

inline void run_consistency(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  ConsistencySettings cs{c.spec, c.kernel, c.shape, c.h_list, c.probes, c.measurement, c.drift};
  auto rep = consistency_experiment(cs);
  auto probes = c.shape->probes(c.probes);
  auto os = open_out(dir / "consistency.csv");
  os << "h,probe,x,y,z,z_over_h,prediction\n";
  for (const auto& row : rep.rows)
    for (std::size_t i = 0; i < probes.size(); ++i)
      os << fmt_num(row.h) << ',' << i << ',' << fmt_num(probes[i].x[0]) << ',' << fmt_num(probes[i].x[1]) << ','
         << fmt_num(row.z[i]) << ',' << fmt_num(row.z[i] / row.h) << ','
         << fmt_num(-rep.mobility[i] * rep.curvature[i]) << '\n';
  out.files.push_back("consistency.csv");
  out.report.append(consistency_report(rep, c.kernel_kind, c.shape_kind, c.tol));
}

inline void run_backward(const ExperimentConfig& c, RunOutput& out) {
  BackwardSettings bs;
  bs.spec = c.spec;
  bs.h_list = c.h_list;
  bs.probes = c.probes;
  if (auto* b = dynamic_cast<const Ball*>(c.shape.get())) bs.radius = b->radius();
  if (c.kernel_kind == "backward_three_hat_quoted") bs.kernel = c.kernel_kind;
  auto rep = backward_consistency_experiment(bs);
  out.report.append(backward_report(rep, c.tol));
}

inline void run_energy(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  EnergySettings es{c.spec, c.kernel, c.shape, c.h_list, c.max_steps, c.exact_energy, true};
  auto rep = energy_convergence_experiment(es);
  auto os = open_out(dir / "energy.csv");
  os << "h,I,I_ref,relative_error,extinction_time,steps,monotone,below_sigma,w\n";
  for (const auto& r : rep.rows)
    os << fmt_num(r.h) << ',' << fmt_num(r.I) << ',' << fmt_num(rep.I_ref) << ','
       << fmt_num((r.I - rep.I_ref) / rep.I_ref) << ',' << fmt_num(r.extinction_time) << ',' << r.steps << ','
       << (r.monotone ? "true" : "false") << ',' << (r.below_sigma ? "true" : "false") << ',' << fmt_num(r.w)
       << '\n';
  out.files.push_back("energy.csv");
  out.report.append(energy_report(rep, c.kernel_kind, c.shape_kind, c.tol));
}

inline void run_contraction(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  ContractionSettings cs;
  cs.spec = c.spec;
  cs.kernel = c.kernel;
  cs.shape = c.shape;
  cs.h = c.h;
  cs.max_steps = c.max_steps;
  cs.seed = c.seed;
  cs.f_draws = c.f_draws;
  cs.g_draws = c.g_draws;
  cs.track_components = c.track_components;
  auto res = contraction_suite(cs, c.tol);
  {
    auto os = open_out(dir / "steps.csv");
    write_steps_csv(os, res.record);
  }
  write_mbof((dir / "arrival.mbof").string(), res.record.arrival);
  out.files.insert(out.files.end(), {"steps.csv", "arrival.mbof"});
  out.report.append(res.report);
  out.report.add("contraction_suite", c.kernel_kind, c.shape_kind, c.h, "seed", static_cast<double>(c.seed),
                 Verdict::info);
}

inline void run_fattening(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  auto r = fattening_diagnostics(c.fattening_example);
  write_mbof((dir / "fat_field.mbof").string(), r.field);
  out.files.push_back("fat_field.mbof");
  out.report.append(fattening_report(r, c.tol));
}

inline void run_kernel_design(const ExperimentConfig& c, const std::filesystem::path& dir, RunOutput& out) {
  auto& rep = out.report;
  const std::string ex = "kernel_design";
  DirectionalDistribution A, B;
  std::optional<DirectionalDistribution> sigma_in;
  if (!c.sigma_file.empty()) {
    sigma_in = read_sigma_samples(c.sigma_file);
    SigmaFit fit;
    try {
      fit = fit_A_from_sigma(*sigma_in, c.n_basis, c.design_residual);
    } catch (const NotRepresentable& e) {
      rep.check(ex, "constructed", "-", std::numeric_limits<double>::quiet_NaN(), "A_fit_residual", e.residual,
                false);
      return;
    }
    rep.check(ex, "constructed", "-", std::numeric_limits<double>::quiet_NaN(), "A_fit_residual", fit.residual,
              true);
    rep.add(ex, "constructed", "-", std::numeric_limits<double>::quiet_NaN(), "active_atoms", fit.active,
            Verdict::info);
    A = fit.A;
    // 1/mu(theta^perp) = 2 B(theta)
    double mu = c.design_mobility > 0 ? c.design_mobility : 1.0;
    B = DirectionalDistribution::circle(std::vector<double>(A.size(), 1.0 / (2 * mu)));
  } else {
    const auto* p = c.kernel.as<kernel_kind::Constructed>();
    A = p->A;
    B = p->B;
  }
  auto K = construct_kernel(A, B);
  const int n = static_cast<int>(A.size());
  auto [A2, B2] = directional_moments(K, n);
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, std::abs(A2.value(i) - A.value(i)) / A.value(i));
    worst = std::max(worst, std::abs(B2.value(i) - B.value(i)) / B.value(i));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.check(ex, "constructed", "-", nan, "moment_roundtrip_max_rel", worst, worst < 1e-3);
  auto sig = surface_tension_of(K, n);
  auto inv_mu = mobility_of(K, n);
  {
    auto os = open_out(dir / "A_fit.csv");
    os << "theta,A,B" << (sigma_in ? ",sigma_in" : "") << "\n";
    for (int i = 0; i < n; ++i) {
      os << fmt_num(A.angle(i)) << ',' << fmt_num(A.value(i)) << ',' << fmt_num(B.value(i));
      if (sigma_in) os << ',' << fmt_num(sigma_in->value(i));
      os << '\n';
    }
  }
  {
    auto os = open_out(dir / "sigma_mu.csv");
    os << "theta,A_recovered,B_recovered,sigma_K,inverse_mu_K,mu_K\n";
    for (int i = 0; i < n; ++i)
      os << fmt_num(A.angle(i)) << ',' << fmt_num(A2.value(i)) << ',' << fmt_num(B2.value(i)) << ','
         << fmt_num(sig.value(i)) << ',' << fmt_num(inv_mu.value(i)) << ',' << fmt_num(1 / inv_mu.value(i)) << '\n';
  }
  if (sigma_in) {
    double dev = 0;
    for (int i = 0; i < n; ++i)
      dev = std::max(dev, std::abs(sig.value(i) - sigma_in->value(i)) / std::abs(sigma_in->value(i)));
    rep.add(ex, "constructed", "-", nan, "sigma_K_vs_input_max_rel", dev, Verdict::info);
  }
  // sampled kernel dump at a time scale that fits the domain
  double h = c.h;
  if (!(h > 0)) {
    double ext = std::min(c.spec.extent(0), c.spec.extent(1));
    double r = 0.25 * ext / K.support_radius();
    h = std::max(r * r, min_resolvable_h(c.spec));
  }
  auto Kh = sample_kernel(c.spec, K, h);
  ScalarField kf(c.spec);
  kf.values = Kh.values;
  write_mbof((dir / "kernel.mbof").string(), kf);
  rep.add(ex, "constructed", "-", h, "sampled_mass", Kh.mass, Verdict::info);
  out.files.insert(out.files.end(), {"A_fit.csv", "sigma_mu.csv", "kernel.mbof"});
}

inline std::string assertion_line(const ReportRow& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", r.value);
  std::string s = r.verdict == Verdict::pass ? "PASS " : "FAIL ";
  s += r.experiment + " " + r.kernel + " " + r.shape;
  if (std::isfinite(r.h)) {
    char hb[32];
    std::snprintf(hb, sizeof hb, " h=%.3g", r.h);
    s += hb;
  }
  return s + " " + r.metric + " = " + buf;
}

}  // namespace detail

// Runs a validated configuration, writes outputs, returns the exit code.
// Module errors propagate.
inline int run(const ExperimentConfig& c, std::ostream& log, bool quiet = false, RunOutput* captured = nullptr) {
  namespace fs = std::filesystem;
  fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("run.output_dir: cannot create " + dir.string());
  RunOutput out;
  const auto& ex = c.experiment;
  if (ex == "evolve")
    detail::run_evolve(c, dir, out);
  else if (ex == "consistency")
    detail::run_consistency(c, dir, out);
  else if (ex == "backward_consistency")
    detail::run_backward(c, out);
  else if (ex == "energy_convergence")
    detail::run_energy(c, dir, out);
  else if (ex == "contraction_suite")
    detail::run_contraction(c, dir, out);
  else if (ex == "fattening")
    detail::run_fattening(c, dir, out);
  else
    detail::run_kernel_design(c, dir, out);
  {
    auto os = detail::open_out(dir / "report.csv");
    write_report_csv(os, out.report);
  }
  out.files.push_back("report.csv");
  int passed = 0, failed = 0, info = 0;
  for (const auto& r : out.report.rows) {
    if (r.verdict == Verdict::info) {
      ++info;
      continue;
    }
    (r.verdict == Verdict::pass ? passed : failed)++;
    if (!quiet) log << detail::assertion_line(r) << '\n';
  }
  nlohmann::ordered_json js;
  js["experiment"] = ex;
  js["kernel"] = c.kernel_kind;
  js["shape"] = c.shape_kind;
  js["seed"] = c.seed;
  js["config"] = c.raw;
  js["assertions"] = {{"passed", passed}, {"failed", failed}, {"info", info}};
  js["passed"] = failed == 0;
  out.files.push_back("summary.json");
  js["files"] = out.files;
  {
    auto os = detail::open_out(dir / "summary.json");
    os << js.dump(2) << '\n';
  }
  log << (failed == 0 ? "OK " : "FAILED ") << ex << ": " << passed << " passed, " << failed << " failed\n";
  if (captured) *captured = std::move(out);
  return failed == 0 ? kExitPass : kExitAssertion;
}

// Full pipeline with exit-code mapping: parse, override, run.
inline int run_file(const std::string& path, const std::optional<std::string>& output_dir,
                    const std::optional<std::uint64_t>& seed, bool quiet, std::ostream& log, std::ostream& err) {
  try {
    auto c = load_config(path);
    if (output_dir) c.output_dir = *output_dir;
    if (seed) {
      c.seed = *seed;
      c.raw["run.seed"] = std::to_string(*seed);
    }
    return run(c, log, quiet);
  } catch (const ConfigError& e) {
    err << "configuration error:\n" << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mbo
