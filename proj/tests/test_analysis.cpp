#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mbo/analysis.hpp"

using namespace mbo;

namespace {

BinarySetField block(const GridSpec& s, int i0, int i1, int j0, int j1) {
  BinarySetField e(s);
  for (int i = i0; i < i1; ++i)
    for (int j = j0; j < j1; ++j) e.mask[s.flat(i, j)] = 1;
  return e;
}

}  // namespace

TEST(RateFit, ExactPowerLaws) {
  std::vector<std::pair<double, double>> a, b;
  for (double h : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    a.push_back({h, 3 * h});
    b.push_back({h, 0.2 * std::pow(h, 1.5)});
  }
  auto fa = rate_fit(a), fb = rate_fit(b);
  EXPECT_NEAR(fa.slope, 1.0, 1e-12);
  EXPECT_NEAR(fa.r2, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(fa.intercept), 3.0, 1e-10);
  EXPECT_NEAR(fb.slope, 1.5, 1e-12);
}

TEST(RateFit, NoisyQuadratic) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  std::vector<std::pair<double, double>> p;
  for (double h = 1e-2; h > 1e-4; h /= 2) p.push_back({h, 3 * h * h * (1 + noise(rng))});
  auto f = rate_fit(p);
  EXPECT_GT(f.slope, 1.9);
  EXPECT_LT(f.slope, 2.1);
}

TEST(RateFit, DropsNonpositiveAndNeedsThree) {
  std::vector<std::pair<double, double>> p{{1e-2, 1e-2}, {5e-3, 0.0}, {2e-3, 2e-3}, {1e-3, -1.0}};
  EXPECT_THROW(rate_fit(p), PreconditionError);
  p.push_back({5e-4, 5e-4});
  auto f = rate_fit(p);
  EXPECT_EQ(f.used, 3);
  EXPECT_EQ(f.dropped, 2);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
}

TEST(Displacement, IdentityIsWithinACell) {
  GridSpec s({256, 256}, {1, 1});
  Ball b(2, {0.003, -0.001, 0}, 0.3);
  auto E = make_shape(s, b);
  auto z = extract_normal_displacement(E, E, b.probes(32));
  for (const auto& d : z) {
    ASSERT_TRUE(d.found);
    EXPECT_LE(std::abs(d.z), s.spacing(0));
  }
}

TEST(Displacement, ConcentricShrink) {
  GridSpec s({256, 256}, {1, 1});
  const double R = 0.3, delta = 0.02;
  Ball b(2, {0, 0, 0}, R);
  auto before = make_shape(s, b), after = make_shape(s, Ball(2, {0, 0, 0}, R - delta));
  auto z = extract_normal_displacement(before, after, b.probes(32));
  double mean = 0;
  for (const auto& d : z) {
    ASSERT_TRUE(d.found);
    EXPECT_NEAR(d.z, -delta, s.spacing(0));
    mean += d.z / z.size();
  }
  EXPECT_NEAR(mean, -delta, 0.25 * s.spacing(0));
}

TEST(Displacement, GaussianFieldMovesAtInverseRadius) {
  GridSpec s({512, 512}, {1, 1});
  const double R = 0.25, h = 1e-3;
  Ball b(2, {0, 0, 0}, R);
  auto f = convolve(sample_kernel(s, KernelDescriptor::gaussian(2), h), make_shape(s, b));
  auto z = extract_field_displacement(f, 0.5, b.probes(64));
  double mean = 0;
  for (const auto& d : z) {
    ASSERT_TRUE(d.found);
    mean += d.z / h / z.size();
  }
  // z/h -> -1/R; the next order term is O(sqrt h / R) relative
  EXPECT_NEAR(mean, -1 / R, 0.1 / R);
}

TEST(Consistency, ExactGeometryConvergesForGaussianBall) {
  ConsistencySettings cfg;
  cfg.spec = GridSpec({1024, 1024}, {1, 1});
  cfg.kernel = KernelDescriptor::gaussian(2);
  cfg.shape = std::make_shared<Ball>(2, Vec{0, 0, 0}, 0.25);
  cfg.h_list = {1e-3, 5e-4, 2.5e-4};
  cfg.probes = 16;
  auto r = consistency_experiment(cfg);
  ASSERT_TRUE(r.valid);
  ASSERT_TRUE(r.normalized_fit.has_value());
  EXPECT_GE(r.normalized_fit->slope, 0.8);
  EXPECT_NEAR(r.rows.back().mean_z_over_h, -4.0, 0.2);
  EXPECT_TRUE(consistency_report(r, "gaussian", "ball", {}, "consistency").passed());
}

TEST(Backward, BallExpandsAndPlaneStays) {
  BackwardSettings cfg;
  cfg.spec = GridSpec({1024, 1024}, {0.5, 0.5});
  cfg.h_list = {4e-4, 2e-4, 1e-4};
  cfg.radius = 0.1;
  cfg.probes = 32;
  auto r = backward_consistency_experiment(cfg);
  for (std::size_t i = 0; i < r.exact.rows.size(); ++i) {
    // sigma = -1, mu = 1: z / h -> +1/R
    EXPECT_NEAR(r.exact.rows[i].mean_prediction, 1 / cfg.radius, 1e-6);
    EXPECT_EQ(r.exact.rows[i].positive_fraction, 1.0);
    EXPECT_TRUE(r.grid_resolvable[i]);
    EXPECT_GE(r.grid_positive_fraction[i], 0.95);
    EXPECT_LE(r.flat_max_abs[i], r.half_cell);
    EXPECT_FALSE(r.grid_contracting[i]);
  }
  EXPECT_TRUE(backward_report(r, {}).passed());
}

TEST(Backward, SubcellStepsAreNotAsserted) {
  BackwardSettings cfg;
  cfg.spec = GridSpec({256, 256}, {0.9, 0.9});
  cfg.h_list = {1e-3, 2.5e-4};
  cfg.radius = 0.1;
  cfg.probes = 16;
  auto r = backward_consistency_experiment(cfg);
  // h / R against a spacing of 0.0035
  EXPECT_TRUE(r.grid_resolvable[0]);
  EXPECT_FALSE(r.grid_resolvable[1]);
  auto rep = backward_report(r, {});
  for (const auto& row : rep.rows)
    if (row.metric.find("subcell") != std::string::npos) {
      EXPECT_EQ(row.h, 2.5e-4);
      EXPECT_EQ(row.verdict, Verdict::info);
    }
}

TEST(Arrival, ShrinkRateOfNestedSquares) {
  // E_k: square of half-width 20 - 2k cells, k = 0..9
  GridSpec s({64, 64}, {1, 1});
  const double h = 0.01, dx = s.spacing(0);
  ScalarField u(s, 0.0);
  for (int k = 0; k < 10; ++k) {
    int w = 20 - 2 * k;
    for (int i = 32 - w; i < 32 + w; ++i)
      for (int j = 32 - w; j < 32 + w; ++j) u.values[s.flat(i, j)] = (k + 1) * h;
  }
  // dist(E_l, E_j^c) = (2 (l - j) + 1) cells, smallest per step at l - j = 9
  auto r = measure_shrink_rate(u, h);
  EXPECT_NEAR(r.w, 19 * dx / (9 * h), 1e-9);
  EXPECT_EQ(r.m, 10);
  auto lc = check_arrival_lipschitz(u, h, r.w, 5000, 4);
  EXPECT_EQ(lc.violations, 0);
  auto bad = check_arrival_lipschitz(u, h, 10 * r.w, 5000, 4);
  EXPECT_GT(bad.violations, 0);
}

TEST(Arrival, BallRunShrinksNoSlowerThanItsCurvature) {
  EvolveSettings cfg;
  cfg.spec = GridSpec({256, 256}, {0.5, 0.5});
  cfg.kernel = KernelDescriptor::gaussian(2);
  cfg.h = 1e-4;
  const double R0 = 0.1;
  cfg.shape = std::make_shared<Ball>(2, Vec{0, 0, 0}, R0);
  auto rec = evolve(cfg);
  ASSERT_TRUE(rec.extinct);
  auto r = measure_shrink_rate(rec.arrival, cfg.h);
  // normal speed is 1/R >= 1/R0
  EXPECT_GT(r.w, 0.8 / R0);
  EXPECT_EQ(check_arrival_lipschitz(rec.arrival, cfg.h, r.w, 20000, 5).violations, 0);
  EXPECT_LT(arrival_sup_error(rec.arrival, {0, 0, 0}, R0, 1.0), 5 * (cfg.h + cfg.spec.spacing(0)));
}

// enumeration tests: kernel narrower than a cell, far below the resolution floor
SampledKernel narrow_gaussian(const GridSpec& s) {
  return sample_kernel(s, KernelDescriptor::gaussian(2), 0.16 * s.spacing(0) * s.spacing(0), false);
}

TEST(OutwardMinimality, PredicatesAgreeOnSmallContainers) {
  GridSpec s({16, 16}, {1, 1});
  auto K = narrow_gaussian(s);
  std::mt19937_64 rng(21);
  int seen_true = 0, seen_false = 0;
  for (int trial = 0; trial < 12; ++trial) {
    auto Omega = block(s, 6, 9, 6, 10);
    BinarySetField E(s);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t f = 0; f < s.size(); ++f)
      if (Omega.mask[f] && coin(rng)) E.mask[f] = 1;
    auto r = outward_minimizing(K, E, Omega);
    EXPECT_EQ(r.omc1, r.omc2) << trial;
    (r.omc1 ? seen_true : seen_false)++;
  }
  // the full block is outward minimizing in itself; a checkerboard is not
  EXPECT_TRUE(outward_minimizing(K, block(s, 6, 9, 6, 10), block(s, 6, 9, 6, 10)).omc1);
  BinarySetField checker(s);
  for (int i = 6; i < 9; ++i)
    for (int j = 6; j < 10; ++j) checker.mask[s.flat(i, j)] = (i + j) % 2;
  auto c = outward_minimizing(K, checker, block(s, 6, 9, 6, 10));
  EXPECT_FALSE(c.omc1);
  EXPECT_FALSE(c.omc2);
  EXPECT_GT(seen_false, 0);
  EXPECT_GT(seen_true, 0);
}

TEST(OutwardMinimality, ContainerTooLargeThrows) {
  GridSpec s({16, 16}, {1, 1});
  auto K = sample_kernel(s, KernelDescriptor::gaussian(2), 1.0 / 16);
  auto Omega = block(s, 4, 9, 4, 9);
  EXPECT_THROW(outward_minimizing(K, BinarySetField(s), Omega), PreconditionError);
}

TEST(OutwardMinimality, ExtendedHypothesisImpliesConclusion) {
  GridSpec s({16, 16}, {1, 1});
  auto K = narrow_gaussian(s);
  auto Omega = block(s, 6, 9, 6, 10);
  std::mt19937_64 rng(22);
  std::bernoulli_distribution coin(0.6);
  auto zero = [](const BinarySetField&) { return 0.0; };
  auto minus_s = [&](const BinarySetField& F) { return -self_interaction(K, F); };
  int hyp = 0;
  for (int trial = 0; trial < 8; ++trial) {
    BinarySetField E0(s);
    for (std::size_t f = 0; f < s.size(); ++f)
      if (Omega.mask[f] && coin(rng)) E0.mask[f] = 1;
    for (const auto& A : {std::function<double(const BinarySetField&)>(zero),
                          std::function<double(const BinarySetField&)>(minus_s)}) {
      auto r = extended_outward_check(K, E0, Omega, A);
      if (r.hypothesis && r.sufficiently_large) {
        ++hyp;
        EXPECT_TRUE(r.conclusion) << trial << " " << r.min_conclusion;
      }
    }
  }
  EXPECT_GT(hyp, 0);
}

TEST(OutwardMinimality, TwoRoutesAgreeOnRandomPairs) {
  GridSpec s({32, 32}, {1, 1});
  for (auto name : {"gaussian", "box", "disc_plateau"}) {
    auto K = sample_kernel(s, special_kernels(name), 1.0 / 64);
    auto c = main_con_agreement(K, 200, 23);
    EXPECT_EQ(c.disagree, 0) << name;
    EXPECT_GT(c.agree, 150) << name;
  }
}

TEST(Contraction, BallSuitePasses) {
  ContractionSettings cfg;
  cfg.spec = GridSpec({256, 256}, {0.5, 0.5});
  cfg.kernel = KernelDescriptor::gaussian(2);
  cfg.shape = std::make_shared<Ball>(2, Vec{0, 0, 0}, 0.1);
  cfg.h = 1e-4;
  cfg.f_draws = 60;
  cfg.g_draws = 60;
  cfg.perturb_draws = 10;
  cfg.lipschitz_pairs = 2000;
  cfg.track_components = true;
  auto r = contraction_suite(cfg);
  EXPECT_TRUE(r.first_step_contracting);
  EXPECT_TRUE(r.report.passed());
  EXPECT_TRUE(r.record.extinct);
  EXPECT_EQ(r.components.front(), 1);
  EXPECT_TRUE(std::isfinite(r.rate.w));
}

TEST(Contraction, NarrowGapFillsAndGivesAWitness) {
  ContractionSettings cfg;
  cfg.spec = GridSpec({256, 256}, {0.5, 0.5});
  cfg.kernel = KernelDescriptor::gaussian(2);
  cfg.h = 1e-4;
  auto E = set_union(make_shape(cfg.spec, Ball(2, {-0.063, 0, 0}, 0.06)),
                     make_shape(cfg.spec, Ball(2, {0.063, 0, 0}, 0.06)));
  cfg.initial = E;
  cfg.max_steps = 3;
  auto r = contraction_suite(cfg);
  EXPECT_FALSE(r.first_step_contracting);
  EXPECT_LT(r.witness_margin, 0.0);
  EXPECT_GT(r.witness_measure, 0.0);
}

TEST(Fattening, AllExamplesPass) {
  for (const auto& name : fattening_examples()) {
    auto r = fattening_diagnostics(name);
    EXPECT_TRUE(fattening_report(r, {}).passed()) << name;
    EXPECT_GT(r.fat_fraction, 0.0) << name;
    EXPECT_TRUE(r.gap_is_fat_set) << name;
  }
  EXPECT_THROW(fattening_diagnostics("nope"), ConfigError);
}

TEST(Fattening, StripesAreFatEverywhere) {
  auto r = fattening_stripes();
  EXPECT_TRUE(r.covers_all);
  EXPECT_TRUE(r.minimal_empty);
  EXPECT_TRUE(r.complement_empty);
  EXPECT_DOUBLE_EQ(r.fat_fraction, 1.0);
}

TEST(Report, CsvHasOneRowPerCheck) {
  Report r;
  r.check("e", "k", "s", 0.5, "m", 1.0, true);
  r.add("e", "k", "s", 0.5, "n", 2.0, Verdict::info);
  EXPECT_TRUE(r.passed());
  r.check("e", "k", "s", 0.5, "o", 3.0, false);
  EXPECT_FALSE(r.passed());
  std::ostringstream os;
  write_report_csv(os, r);
  std::string s = os.str();
  EXPECT_EQ(s.rfind("experiment,kernel,shape,h,metric,value,pass\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
  EXPECT_NE(s.find(",fail\n"), std::string::npos);
}
