#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "mbo/directional.hpp"
#include "mbo/errors.hpp"
#include "mbo/kernels.hpp"

namespace mbo {

// int_0^a r^m (a - r)^2 dr = 2 a^{m+3} / ((m+1)(m+2)(m+3)).
inline double polynomial_cutoff_moment(int m, double a) {
  double mm = m;
  return 2 * std::pow(a, m + 3) / (mm * mm * mm + 6 * mm * mm + 11 * mm + 6);
}

// K(r theta) = f(theta) r^2 (g(theta) - r)^2 on [0, g(theta)], with f, g chosen
// so that the directional moments of K are exactly A and B.
inline KernelDescriptor construct_kernel(const DirectionalDistribution& A, const DirectionalDistribution& B) {
  if (!A.same_nodes(B)) throw DomainError("construct_kernel: A and B must share the angle grid");
  if (A.d() != 2 && A.d() != 3) throw DomainError("construct_kernel: d must be 2 or 3");
  for (std::size_t i = 0; i < A.size(); ++i)
    if (!(A.value(i) > 0) || !(B.value(i) > 0) || !std::isfinite(A.value(i)) || !std::isfinite(B.value(i)))
      throw DomainError("construct_kernel: A and B must be strictly positive (node " + std::to_string(i) + ")");
  return {kernel_kind::Constructed{A, B}, "constructed"};
}

// Antiderivative of |cos| with F(0) = 0.
inline double abs_cos_primitive(double t) {
  double n = std::round(t / std::numbers::pi);
  return 2 * n + std::sin(t - n * std::numbers::pi);
}

// sigma of A = indicator of the arcs within b of +-a:  int_{a-b}^{a+b} |cos(y - x)| dy.
inline double sigma_atom(double a, double b, double x) {
  return abs_cos_primitive(a + b - x) - abs_cos_primitive(a - b - x);
}

// Value of the arc indicator at angle t, 1/2 on the arc ends.
inline double arc_indicator(double a, double b, double t) {
  const double pi = std::numbers::pi;
  if (b >= pi / 2) return 1.0;
  double u = std::remainder(t - a, pi);
  double dist = std::abs(u);
  if (dist < b - 1e-12) return 1.0;
  if (dist <= b + 1e-12) return 0.5;
  return 0.0;
}

struct SigmaFit {
  DirectionalDistribution A;
  std::vector<double> coefficients;
  std::vector<double> shifts, widths;  // atom k = (shifts[k], widths[k])
  double residual = 0;                 // root mean square over the samples
  int iterations = 0;
  int active = 0;
};

// Nonnegative least squares min |M c - y|^2, c >= 0 (Lawson-Hanson active set).
// Subproblems are solved by column-pivoted QR on the passive columns.
inline std::vector<double> nnls_active_set(const std::vector<std::vector<double>>& cols, const std::vector<double>& y,
                                           int* iterations_out = nullptr) {
  const Eigen::Index K = static_cast<Eigen::Index>(cols.size()), m = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd M(m, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index r = 0; r < m; ++r) M(r, k) = cols[k][r];
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(K);
  std::vector<char> passive(K, 0), blocked(K, 0);
  const double tol = 1e-13 * (1.0 + (M.transpose() * b).cwiseAbs().maxCoeff());

  auto solve_passive = [&](std::vector<Eigen::Index>& idx) {
    idx.clear();
    for (Eigen::Index k = 0; k < K; ++k)
      if (passive[k]) idx.push_back(k);
    Eigen::MatrixXd Mp(m, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) Mp.col(static_cast<Eigen::Index>(i)) = M.col(idx[i]);
    return Eigen::VectorXd(Mp.colPivHouseholderQr().solve(b));
  };

  int it = 0;
  const int max_it = 3 * static_cast<int>(K) + 10;
  std::vector<Eigen::Index> idx;
  for (; it < max_it; ++it) {
    Eigen::VectorXd w = M.transpose() * (b - M * x);
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < K; ++k)
      if (!passive[k] && !blocked[k] && w[k] > best) {
        best = w[k];
        j = k;
      }
    if (j < 0) break;
    passive[j] = 1;
    Eigen::VectorXd z = solve_passive(idx);
    auto pos_of = [&](Eigen::Index k) { return std::find(idx.begin(), idx.end(), k) - idx.begin(); };
    if (z[pos_of(j)] <= 0) {  // rounding: the entering column does not help
      passive[j] = 0;
      blocked[j] = 1;
      continue;
    }
    while (true) {
      double alpha = 1.0;
      bool feasible = true;
      for (std::size_t i = 0; i < idx.size(); ++i)
        if (z[static_cast<Eigen::Index>(i)] <= 0) {
          feasible = false;
          double xi = x[idx[i]];
          alpha = std::min(alpha, xi / (xi - z[static_cast<Eigen::Index>(i)]));
        }
      if (feasible) {
        x.setZero();
        for (std::size_t i = 0; i < idx.size(); ++i) x[idx[i]] = z[static_cast<Eigen::Index>(i)];
        break;
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double& xi = x[idx[i]];
        xi += alpha * (z[static_cast<Eigen::Index>(i)] - xi);
        if (xi <= 1e-15) {
          xi = 0;
          passive[idx[i]] = 0;
        }
      }
      z = solve_passive(idx);
      if (idx.empty()) break;
    }
    std::fill(blocked.begin(), blocked.end(), 0);
  }
  if (iterations_out) *iterations_out = it;
  return std::vector<double>(x.data(), x.data() + K);
}

// Samples sigma on the grid of `sigma` (angles i*pi/n), fits a nonnegative
// combination of n_basis shifts x n_basis widths arc atoms.  No threshold.
inline SigmaFit fit_sigma_nnls(const DirectionalDistribution& sigma, int n_basis) {
  if (sigma.d() != 2) throw DomainError("fit_A_from_sigma: d = 2 only");
  if (n_basis < 1) throw DomainError("fit_A_from_sigma: n_basis must be positive");
  const double pi = std::numbers::pi;
  SigmaFit fit;
  std::vector<std::vector<double>> cols;
  for (int i = 0; i < n_basis; ++i)
    for (int j = 0; j < n_basis; ++j) {
      double a = i * pi / n_basis, b = (j + 1) * pi / (2.0 * n_basis);
      fit.shifts.push_back(a);
      fit.widths.push_back(b);
      std::vector<double> col(sigma.size());
      for (std::size_t r = 0; r < sigma.size(); ++r) col[r] = sigma_atom(a, b, sigma.angle(r));
      cols.push_back(std::move(col));
    }
  fit.coefficients = nnls_active_set(cols, sigma.values(), &fit.iterations);
  double ss = 0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    double v = 0;
    for (std::size_t k = 0; k < cols.size(); ++k) v += fit.coefficients[k] * cols[k][r];
    ss += (v - sigma.value(r)) * (v - sigma.value(r));
  }
  fit.residual = std::sqrt(ss / static_cast<double>(sigma.size()));
  std::vector<double> a(sigma.size(), 0.0);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (fit.coefficients[k] == 0) continue;
    ++fit.active;
    for (std::size_t r = 0; r < a.size(); ++r)
      a[r] += fit.coefficients[k] * arc_indicator(fit.shifts[k], fit.widths[k], sigma.angle(r));
  }
  fit.A = DirectionalDistribution::circle(std::move(a));
  return fit;
}

struct NotRepresentable : NumericError {
  double residual;
  NotRepresentable(const std::string& msg, double r) : NumericError(msg), residual(r) {}
};

inline SigmaFit fit_A_from_sigma(const DirectionalDistribution& sigma, int n_basis, double max_residual = 1e-6) {
  auto fit = fit_sigma_nnls(sigma, n_basis);
  if (!(fit.residual <= max_residual))
    throw NotRepresentable("fit_A_from_sigma: not representable by a nonnegative A (rms residual " +
                               std::to_string(fit.residual) + ")",
                           fit.residual);
  return fit;
}

}  // namespace mbo
