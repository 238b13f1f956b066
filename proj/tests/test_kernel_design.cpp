#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mbo/kernel_analysis.hpp"
#include "mbo/kernel_design.hpp"

using namespace mbo;

namespace {

constexpr double pi = std::numbers::pi;

template <class F>
double simpson(F&& f, double a, double b, int n) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
  return s * h / 3;
}

double sigma_of_atoms(const SigmaFit& fit, double x) {
  double s = 0;
  for (std::size_t k = 0; k < fit.coefficients.size(); ++k)
    s += fit.coefficients[k] * sigma_atom(fit.shifts[k], fit.widths[k], x);
  return s;
}

}  // namespace

TEST(KernelDesign, ConstructedKernelReproducesMoments) {
  const int n = 48;
  auto A = DirectionalDistribution::circle_from(n, [](double t) { return 0.8 + 0.3 * std::cos(2 * t) + 0.1 * std::sin(4 * t); });
  auto B = DirectionalDistribution::circle_from(n, [](double t) { return 1.2 - 0.4 * std::sin(2 * t); });
  auto K = construct_kernel(A, B);
  auto [A2, B2] = directional_moments(K, n);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(A2.value(i), A.value(i), 1e-3 * A.value(i));
    EXPECT_NEAR(B2.value(i), B.value(i), 1e-3 * B.value(i));
  }
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 2000; ++i) EXPECT_GE(K({u(rng), u(rng), 0}), 0.0);
}

TEST(KernelDesign, ConstructedKernel3DMoments) {
  auto A = DirectionalDistribution::sphere_from(1, [](const Vec& x) { return 1.0 + 0.2 * x[2] * x[2]; });
  auto B = DirectionalDistribution::sphere_from(1, [](const Vec& x) { return 0.7 + 0.1 * x[0] * x[0]; });
  auto [A2, B2] = directional_moments(construct_kernel(A, B), 1);
  for (std::size_t i = 0; i < A.size(); ++i) {
    EXPECT_NEAR(A2.value(i), A.value(i), 1e-3 * A.value(i));
    EXPECT_NEAR(B2.value(i), B.value(i), 1e-3 * B.value(i));
  }
}

TEST(KernelDesign, NonpositiveMomentsRejected) {
  auto A = DirectionalDistribution::circle_from(8, [](double t) { return std::cos(t); });
  auto B = DirectionalDistribution::circle_from(8, [](double) { return 1.0; });
  EXPECT_THROW(construct_kernel(A, B), DomainError);
  EXPECT_THROW(construct_kernel(B, A), DomainError);
}

TEST(KernelDesign, SigmaAtomMatchesQuadrature) {
  for (double a : {0.0, 0.4, 2.0})
    for (double b : {0.1, 0.7, pi / 2})
      for (double x : {0.0, 0.3, 1.9, 3.0}) {
        // sigma(x) = 1/2 int |cos(y - x)| A(y) dy with A the indicator of the arcs around a and a + pi
        double ref = 0;
        for (double c : {a, a + pi})
          ref += 0.5 * simpson([&](double y) { return std::abs(std::cos(y - x)); }, c - b, c + b, 200000);
        EXPECT_NEAR(sigma_atom(a, b, x), ref, 1e-6) << a << " " << b << " " << x;
      }
}

TEST(KernelDesign, DictionaryMemberIsRecovered) {
  const int nb = 8;
  const double a1 = 2 * pi / nb, b1 = 3 * pi / (2 * nb), a2 = 5 * pi / nb, b2 = pi / (2 * nb);
  auto target = [&](double x) { return 2 * sigma_atom(a1, b1, x) + 0.5 * sigma_atom(a2, b2, x); };
  auto sigma = DirectionalDistribution::circle_from(64, target);
  auto fit = fit_A_from_sigma(sigma, nb, 1e-8);
  EXPECT_LT(fit.residual, 1e-8);
  EXPECT_GE(fit.active, 1);
  for (double x : {0.05, 0.77, 1.3, 2.9}) EXPECT_NEAR(sigma_of_atoms(fit, x), target(x), 1e-6);
}

TEST(KernelDesign, ConstantSigmaGivesConstantA) {
  // A = a constant gives sigma = 2 a
  auto sigma = DirectionalDistribution::circle_from(64, [](double) { return 0.7; });
  auto fit = fit_A_from_sigma(sigma, 8);
  for (std::size_t i = 0; i < fit.A.size(); ++i) EXPECT_NEAR(fit.A.value(i), 0.35, 1e-6);
}

TEST(KernelDesign, CornerProfileResidualShrinksWithBasis) {
  // |cos| + |sin|: A concentrated on two directions, never an exact member
  auto sigma = DirectionalDistribution::circle_from(96, [](double x) { return std::abs(std::cos(x)) + std::abs(std::sin(x)); });
  double prev = std::numeric_limits<double>::infinity();
  for (int nb : {4, 8, 16}) {
    double r = fit_sigma_nnls(sigma, nb).residual;
    EXPECT_LE(r, prev + 1e-9) << nb;
    prev = r;
  }
}

TEST(KernelDesign, SignedSigmaIsNotRepresentable) {
  auto sigma = DirectionalDistribution::circle_from(32, [](double x) { return -1.0 + 0.1 * std::cos(2 * x); });
  try {
    fit_A_from_sigma(sigma, 8);
    FAIL();
  } catch (const NotRepresentable& e) {
    EXPECT_GT(e.residual, 0.5);
  }
}

TEST(KernelDesign, FittedKernelHasRequestedTension) {
  auto sigma = DirectionalDistribution::circle_from(64, [](double) { return 0.5; });
  auto fit = fit_A_from_sigma(sigma, 4);
  auto B = DirectionalDistribution::circle_from(64, [](double) { return 1.0; });
  auto K = construct_kernel(fit.A, B);
  for (double x : {0.0, 1.0, 2.5}) EXPECT_NEAR(surface_tension_at(K, {std::cos(x), std::sin(x), 0}), 0.5, 1e-3);
}
