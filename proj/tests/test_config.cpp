#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mbo/cli.hpp"

using namespace mbo;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "# minimal run\n"
    "domain.dims = 256, 256\n"
    "domain.extent = 0.5\n"
    "kernel.kind = gaussian\n"
    "shape.kind = ball\n"
    "shape.radius = 0.1\n"
    "run.experiment = evolve\n"
    "run.h = 1e-4\n";

fs::path scratch(const std::string& name) {
  static const std::string tag = std::to_string(std::random_device{}());
  auto p = fs::temp_directory_path() / ("mbo_test_" + tag) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string l;
  while (std::getline(is, l)) out.push_back(l);
  return out;
}

std::vector<std::string> config_errors(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigErrors& e) {
    return e.items;
  }
  return {};
}

int run_text(const std::string& text, const fs::path& dir, std::string* err_out = nullptr,
             std::optional<std::uint64_t> seed = {}) {
  auto cfg = write_text(dir / "run.cfg", text);
  std::ostringstream log, err;
  int rc = run_file(cfg.string(), (dir / "out").string(), seed, true, log, err);
  if (err_out) *err_out = err.str();
  return rc;
}

}  // namespace

TEST(Config, MinimalConfigParses) {
  auto c = parse_config(kMinimal);
  EXPECT_EQ(c.spec.d(), 2);
  EXPECT_EQ(c.spec.dim(0), 256);
  EXPECT_DOUBLE_EQ(c.spec.extent(1), 0.5);
  EXPECT_EQ(c.kernel.kind(), "gaussian");
  EXPECT_EQ(c.shape->name(), "ball");
  EXPECT_DOUBLE_EQ(c.h, 1e-4);
  EXPECT_EQ(c.experiment, "evolve");
  EXPECT_EQ(c.raw.at("run.h"), "1e-4");
}

TEST(Config, UnknownKernelNamesLineAndValidSet) {
  std::string text = kMinimal;
  text.replace(text.find("kernel.kind = gaussian"), 22, "kernel.kind = bogus");
  auto errs = config_errors(text);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].rfind("line 4: ", 0), 0u) << errs[0];
  EXPECT_NE(errs[0].find("'bogus'"), std::string::npos);
  for (const auto& n : config_kernel_names()) EXPECT_NE(errs[0].find(n), std::string::npos) << n;
}

TEST(Config, StepBelowResolvabilityFloor) {
  std::string text = kMinimal;
  text.replace(text.find("domain.extent = 0.5"), 19, "domain.extent = 1.0");
  auto errs = config_errors(text);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].rfind("line 8: ", 0), 0u) << errs[0];
  // spacing 1/256
  EXPECT_NE(errs[0].find("minimal h = (4*spacing)^2 = 0.000244141"), std::string::npos) << errs[0];
}

TEST(Config, AllErrorsAreCollected) {
  auto errs = config_errors(
      "domain.dims = 64, x\n"
      "kernel.kind = gaussian\n"
      "colour = blue\n"
      "run.h = fast\n"
      "run.track_components = maybe\n"
      "no equals sign here\n");
  ASSERT_GE(errs.size(), 5u);
  auto has = [&](const std::string& what) {
    for (const auto& e : errs)
      if (e.find(what) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(has("line 1: domain.dims: expected a list of integers, got 'x'"));
  EXPECT_TRUE(has("line 3: unknown key 'colour'"));
  EXPECT_TRUE(has("line 4: run.h: expected a real number, got 'fast'"));
  EXPECT_TRUE(has("line 5: run.track_components: expected true or false"));
  EXPECT_TRUE(has("line 6: expected 'section.key = value'"));
  EXPECT_TRUE(has("missing required key 'domain.dims'"));
}

TEST(Config, ConstraintViolations) {
  auto errs = config_errors(std::string(kMinimal) + "run.h_list = 1e-3, 2e-3, 1e-4\nshape.center = 0.1\nrun.probes = 2\n");
  auto has = [&](const std::string& what) {
    for (const auto& e : errs)
      if (e.find(what) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(has("line 9: run.h_list must be strictly decreasing"));
  EXPECT_TRUE(has("line 10: shape.center: need 2 entries"));
  EXPECT_TRUE(has("line 11: run.probes must be >= 4"));
  auto dup = config_errors(std::string(kMinimal) + "run.h = 2e-4\n");
  ASSERT_EQ(dup.size(), 1u);
  EXPECT_NE(dup[0].find("duplicate key 'run.h' (first on line 8)"), std::string::npos);
}

TEST(Config, ExperimentRequirements) {
  std::string text = kMinimal;
  text.replace(text.find("run.experiment = evolve"), 23, "run.experiment = consistency");
  auto errs = config_errors(text);
  ASSERT_FALSE(errs.empty());
  EXPECT_NE(errs[0].find("needs run.h_list with at least 3 entries"), std::string::npos);
  auto design = config_errors("domain.dims = 64, 64\nrun.experiment = kernel_design\n");
  ASSERT_EQ(design.size(), 1u);
  EXPECT_NE(design[0].find("needs design.sigma_file or kernel.kind = constructed"), std::string::npos);
}

TEST(Config, KernelLinesRoundTrip) {
  for (const auto& K : {KernelDescriptor::stripe_box(2, 0, 0.7), KernelDescriptor::smooth_plateau(2, 1.3, 0.1),
                        KernelDescriptor::disc_plateau(2, 0.9, 0.4),
                        KernelDescriptor::custom_radial(2, {0, 0.5, 1.25}, {1, 0.75, 0}), KernelDescriptor::gaussian(2)}) {
    std::string text = "domain.dims = 64, 64\ndomain.extent = 4\nshape.radius = 0.5\nrun.h = 0.1\n" + kernel_config_lines(K);
    auto c = parse_config(text);
    EXPECT_EQ(c.kernel.kind(), K.kind());
    for (Vec x : {Vec{0, 0, 0}, Vec{0.3, -0.2, 0}, Vec{0.6, 0.5, 0}, Vec{1.2, 0.1, 0}})
      EXPECT_DOUBLE_EQ(c.kernel(x), K(x)) << K.kind();
  }
  auto A = DirectionalDistribution::circle_from(16, [](double) { return 1.0; });
  EXPECT_THROW(kernel_config_lines(construct_kernel(A, A)), PreconditionError);
}

TEST(Run, EvolveWritesStepsAndSummary) {
  auto dir = scratch("evolve");
  ASSERT_EQ(run_text(kMinimal, dir), kExitPass);
  auto rows = lines_of(read_text(dir / "out" / "steps.csv"));
  ASSERT_GE(rows.size(), 3u);
  EXPECT_EQ(rows[0], "k,t,measure,P_Kh,S_diff,shrink_dist,ties,contracting,extinct");
  // the last column is the extinction flag
  EXPECT_EQ(rows.back().substr(rows.back().rfind(',') + 1), "true");
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), "false");
  auto js = nlohmann::json::parse(read_text(dir / "out" / "summary.json"));
  EXPECT_EQ(js["experiment"], "evolve");
  EXPECT_TRUE(js["passed"].get<bool>());
  EXPECT_EQ(js["config"]["shape.radius"], "0.1");
  // steps = rows of steps.csv minus the header
  auto report = lines_of(read_text(dir / "out" / "report.csv"));
  bool found = false;
  for (const auto& l : report)
    if (l.rfind("evolve,gaussian,ball,", 0) == 0 && l.find(",steps,") != std::string::npos) {
      found = true;
      EXPECT_NE(l.find(",steps," + std::to_string(rows.size() - 1) + ",info"), std::string::npos) << l;
    }
  EXPECT_TRUE(found);
}

TEST(Run, OutputsReparse) {
  auto dir = scratch("reparse");
  ASSERT_EQ(run_text(kMinimal, dir), kExitPass);
  auto r = read_mbof((dir / "out" / "arrival.mbof").string());
  ASSERT_TRUE(std::holds_alternative<ScalarField>(r));
  const auto& u = std::get<ScalarField>(r);
  EXPECT_EQ(u.spec.dim(0), 256);
  EXPECT_DOUBLE_EQ(u.spec.extent(0), 0.5);
  double top = 0;
  for (double v : u.values) top = std::max(top, v);
  // the last nonempty iterate sits near t = R^2 / 2
  EXPECT_NEAR(top, 0.005, 10e-4);
  auto report = lines_of(read_text(dir / "out" / "report.csv"));
  EXPECT_EQ(report[0], "experiment,kernel,shape,h,metric,value,pass");
  for (std::size_t i = 1; i < report.size(); ++i) {
    int commas = 0;
    for (char ch : report[i]) commas += ch == ',';
    EXPECT_EQ(commas, 6) << report[i];
  }
}

TEST(Run, ExitCodes) {
  auto dir = scratch("codes");
  std::string err;
  std::string bad = kMinimal;
  bad.replace(bad.find("kernel.kind = gaussian"), 22, "kernel.kind = bogus");
  EXPECT_EQ(run_text(bad, dir, &err), kExitConfig);
  EXPECT_NE(err.find("configuration error"), std::string::npos);
  // ball too close to the periodic wrap for the Gaussian guard band
  std::string near_edge = kMinimal;
  near_edge.replace(near_edge.find("shape.radius = 0.1"), 18, "shape.radius = 0.24");
  EXPECT_EQ(run_text(near_edge, dir, &err), kExitRuntime);
  EXPECT_NE(err.find("runtime error"), std::string::npos);
  // a fat fraction that the disc plateau example cannot reach
  EXPECT_EQ(run_text("domain.dims = 16, 16\nrun.experiment = fattening\nfattening.example = disc_plateau\n"
                     "fattening.fraction = 0.5\n",
                     dir),
            kExitAssertion);
}

TEST(Run, FatteningStripes) {
  auto dir = scratch("fat");
  ASSERT_EQ(run_text("domain.dims = 16, 16\nrun.experiment = fattening\nfattening.example = stripes\n", dir), kExitPass);
  auto r = read_mbof((dir / "out" / "fat_field.mbof").string());
  const auto& f = std::get<ScalarField>(r);
  for (double v : f.values) ASSERT_NEAR(v, 0.5, 1e-12);
  auto report = read_text(dir / "out" / "report.csv");
  EXPECT_NE(report.find("fattening,stripes,stripes,1,fat_fraction,1,pass"), std::string::npos) << report;
}

TEST(Run, KernelDesignFromSigmaSamples) {
  auto dir = scratch("design");
  std::string samples = "theta,sigma\n";
  const int n = 32;
  for (int i = 0; i < n; ++i) samples += std::to_string(i * std::numbers::pi / n) + ", 0.5\n";
  // angles printed with 6 digits are not i*pi/n to 1e-9: use one-column input
  std::string one = "sigma\n";
  for (int i = 0; i < n; ++i) one += "0.5\n";
  auto sig = write_text(dir / "sigma.csv", one);
  std::string cfg = "domain.dims = 64, 64\ndomain.extent = 4\nshape.radius = 0.5\nrun.experiment = kernel_design\n"
                    "design.sigma_file = " + sig.string() + "\ndesign.n_basis = 8\n";
  ASSERT_EQ(run_text(cfg, dir), kExitPass);
  auto sm = lines_of(read_text(dir / "out" / "sigma_mu.csv"));
  ASSERT_EQ(sm.size(), n + 1u);
  EXPECT_EQ(sm[0], "theta,A_recovered,B_recovered,sigma_K,inverse_mu_K,mu_K");
  for (std::size_t i = 1; i < sm.size(); ++i) {
    std::istringstream ls(sm[i]);
    std::string tok;
    std::vector<double> v;
    while (std::getline(ls, tok, ',')) v.push_back(std::stod(tok));
    ASSERT_EQ(v.size(), 6u);
    EXPECT_NEAR(v[3], 0.5, 1e-3);
    // B = 1/2 so that mu = 1
    EXPECT_NEAR(v[5], 1.0, 1e-3);
  }
  auto K = read_mbof((dir / "out" / "kernel.mbof").string());
  const auto& kf = std::get<ScalarField>(K);
  double mass = 0;
  for (double v : kf.values) mass += v * kf.spec.cell_volume();
  EXPECT_NEAR(mass, 1.0, 1e-2);
  EXPECT_EQ(lines_of(read_text(dir / "out" / "A_fit.csv"))[0], "theta,A,B,sigma_in");
  // mixed and malformed angle columns are configuration errors
  write_text(dir / "sigma.csv", samples);
  std::string err;
  EXPECT_EQ(run_text(cfg, dir, &err), kExitConfig);
  EXPECT_NE(err.find("angles must be i*pi/n"), std::string::npos) << err;
}

TEST(Run, SameSeedGivesIdenticalBytes) {
  std::string text = std::string(kMinimal) + "run.experiment = contraction_suite\n";
  text.replace(text.find("run.experiment = evolve\n"), 24, "");
  text += "run.f_draws = 40\nrun.g_draws = 40\n";
  auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run_text(text, a, nullptr, 7), kExitPass);
  ASSERT_EQ(run_text(text, b, nullptr, 7), kExitPass);
  for (auto f : {"steps.csv", "report.csv", "arrival.mbof", "summary.json"})
    EXPECT_EQ(read_text(a / "out" / f), read_text(b / "out" / f)) << f;
  auto js = nlohmann::json::parse(read_text(a / "out" / "summary.json"));
  EXPECT_EQ(js["seed"], 7);
  EXPECT_EQ(js["config"]["run.seed"], "7");
}

#ifdef MBO_LAB_PATH
TEST(Binary, RunsConfigsAndMapsExitCodes) {
  auto dir = scratch("binary");
  auto cfg = write_text(dir / "ok.cfg", "domain.dims = 16, 16\nrun.experiment = fattening\n");
  auto bad = write_text(dir / "bad.cfg", "domain.dims = 16, 16\nrun.experiment = nothing\n");
  auto sh = [&](const std::string& args) {
    std::string cmd = std::string("\"") + MBO_LAB_PATH + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  EXPECT_EQ(sh("run \"" + cfg.string() + "\" --output-dir \"" + (dir / "o").string() + "\" --seed 3"), 0);
  auto log = read_text(dir / "log.txt");
  EXPECT_NE(log.find("PASS fattening stripes stripes"), std::string::npos) << log;
  EXPECT_NE(log.find("OK fattening:"), std::string::npos) << log;
  EXPECT_EQ(nlohmann::json::parse(read_text(dir / "o" / "summary.json"))["seed"], 3);
  EXPECT_EQ(sh("run \"" + cfg.string() + "\" --output-dir \"" + (dir / "q").string() + "\" --quiet"), 0);
  EXPECT_EQ(lines_of(read_text(dir / "log.txt")).size(), 1u);
  EXPECT_EQ(sh("run \"" + bad.string() + "\""), 2);
  EXPECT_EQ(sh("run \"" + (dir / "missing.cfg").string() + "\""), 2);
  EXPECT_EQ(sh("frobnicate"), 2);
}
#endif
