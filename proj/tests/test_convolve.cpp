#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mbo/convolve.hpp"
#include "mbo/kernel_design.hpp"
#include "mbo/shapes.hpp"

using namespace mbo;

namespace {

BinarySetField random_set(const GridSpec& s, std::uint64_t seed, double p = 0.4) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  BinarySetField e(s);
  for (auto& v : e.mask) v = coin(rng);
  return e;
}

std::vector<KernelDescriptor> library_kernels(int d) {
  std::vector<KernelDescriptor> ks;
  for (const auto& n : special_kernel_names()) {
    if (d == 3 && n.rfind("backward_three_hat", 0) == 0) continue;
    ks.push_back(special_kernels(n, d));
  }
  ks.push_back(KernelDescriptor::custom_radial(d, {0, 0.5, 1.5}, {1, 0.8, 0}));
  if (d == 2) {
    auto A = DirectionalDistribution::circle_from(32, [](double t) { return 1 + 0.3 * std::cos(2 * t); });
    auto B = DirectionalDistribution::circle_from(32, [](double) { return 1.0; });
    ks.push_back(construct_kernel(A, B));
  }
  return ks;
}

}  // namespace

TEST(Convolve, FftMatchesDirect2D) {
  GridSpec s({16, 16}, {1, 1});
  auto E = random_set(s, 1);
  for (const auto& K : library_kernels(2)) {
    auto Kh = sample_kernel(s, K, 0.0625);
    auto a = convolve_fft(Kh, E), b = convolve_direct(Kh, E);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-10) << K.kind();
  }
}

TEST(Convolve, FftMatchesDirect3D) {
  GridSpec s({8, 8, 8}, {1, 1, 1});
  auto E = random_set(s, 2);
  for (const auto& K : library_kernels(3)) {
    auto Kh = sample_kernel(s, K, 0.25);
    auto a = convolve_fft(Kh, E), b = convolve_direct(Kh, E);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-10) << K.kind();
  }
}

TEST(Convolve, FftMatchesDirectOnNonSquareGrid) {
  GridSpec s({12, 20}, {0.6, 1.0});
  auto E = random_set(s, 3);
  auto Kh = sample_kernel(s, KernelDescriptor::gaussian(2), 0.04);
  auto a = convolve_fft(Kh, E), b = convolve_direct(Kh, E);
  for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Convolve, FullSetGivesKernelMass) {
  GridSpec s({64, 64}, {1, 1});
  for (const auto& K : library_kernels(2)) {
    auto Kh = sample_kernel(s, K, 0.01);
    auto f = convolve(Kh, BinarySetField(s, true));
    for (double v : f.values) ASSERT_NEAR(v, 1.0, 1e-12) << K.kind();
  }
}

TEST(Convolve, ComplementDuality) {
  GridSpec s({64, 64}, {1, 1});
  auto E = make_shape(s, Ball(2, {0.05, 0, 0}, 0.3));
  auto Kh = sample_kernel(s, KernelDescriptor::gaussian(2), 0.005);
  auto a = convolve(Kh, E), b = convolve(Kh, complement(E));
  for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(a.values[i] + b.values[i], 1.0, 1e-12);
}

TEST(Convolve, HalfSpaceIsOneHalfAcrossTheBoundary) {
  // even kernel: rows mirrored about the interface sum to 1
  GridSpec s({64, 64}, {1, 1});
  auto E = make_shape(s, HalfSpace(2, 0));
  for (const auto& K : library_kernels(2)) {
    auto f = convolve(sample_kernel(s, K, 0.01), E);
    for (int k = 0; k < 8; ++k)
      for (int j = 0; j < 64; ++j) ASSERT_NEAR(f.values[s.flat(31 - k, j)] + f.values[s.flat(32 + k, j)], 1.0, 1e-12);
  }
}

TEST(Convolve, StripesWithBoxGiveExactlyOneHalf) {
  GridSpec s({128, 128}, {16, 16});
  auto E = make_shape(s, Stripes(2, 1, 2.0));
  auto f = convolve(sample_kernel(s, KernelDescriptor::box(2), 1.0), E);
  for (double v : f.values) ASSERT_NEAR(v, 0.5, 1e-12);
}

TEST(Convolve, MassIsConserved) {
  GridSpec s({64, 64}, {1, 1});
  auto E = random_set(s, 5, 0.2);
  auto f = convolve(sample_kernel(s, KernelDescriptor::gaussian(2), 0.01), E);
  double total = 0;
  for (double v : f.values) total += v * s.cell_volume();
  EXPECT_NEAR(total, E.measure(), 1e-12);
}

TEST(Convolve, MonotoneForNonnegativeKernels) {
  GridSpec s({64, 64}, {1, 1});
  auto E = random_set(s, 6, 0.2);
  auto F = set_union(E, random_set(s, 7, 0.2));
  for (const auto& K : library_kernels(2)) {
    if (!K.nonnegative()) continue;
    auto Kh = sample_kernel(s, K, 0.01);
    auto a = convolve(Kh, E), b = convolve(Kh, F);
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_LE(a.values[i], b.values[i] + 1e-14) << K.kind();
  }
}

TEST(Convolve, ReciprocityOfInnerProducts) {
  GridSpec s({64, 64}, {1, 1});
  auto A = random_set(s, 8, 0.3), B = random_set(s, 9, 0.3);
  for (const auto& K : library_kernels(2)) {
    auto Kh = sample_kernel(s, K, 0.01);
    EXPECT_NEAR(inner_product(A, convolve(Kh, B)), inner_product(B, convolve(Kh, A)), 1e-12) << K.kind();
  }
}

TEST(Convolve, ScalarFieldConvolutionIsLinear) {
  GridSpec s({64, 64}, {1, 1});
  auto A = random_set(s, 10), B = random_set(s, 11);
  auto Kh = sample_kernel(s, KernelDescriptor::gaussian(2), 0.01);
  ScalarField f(s);
  for (std::size_t i = 0; i < s.size(); ++i) f.values[i] = 2.0 * A.mask[i] - 0.5 * B.mask[i];
  auto g = engine_for(s).convolve(Kh, f);
  auto a = convolve(Kh, A), b = convolve(Kh, B);
  for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(g.values[i], 2 * a.values[i] - 0.5 * b.values[i], 1e-12);
}

TEST(Convolve, MismatchedSpecsThrow) {
  GridSpec s({16, 16}, {1, 1}), t({16, 16}, {2, 2});
  auto Kh = sample_kernel(s, KernelDescriptor::gaussian(2), 0.0625);
  EXPECT_THROW(convolve(Kh, BinarySetField(t)), ShapeError);
}
