#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "raschkit/error.hpp"

namespace raschkit {

/// Nodes and weights for expectations against a Gaussian N(mu, sigma^2).
/// Weights are positive and normalized to sum to 1; nodes are strictly
/// increasing.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double mu = 0.0;
  double sigma = 1.0;
};

namespace detail {

// Implicit-QL diagonalization of a symmetric tridiagonal matrix, applying the
// rotations to an input vector z (EISPACK IMTQL2 as adapted for quadrature by
// Elhay & Kautsky, TOMS 655). On exit d holds ascending eigenvalues and z[i]
// the first component of the i-th normalized eigenvector.
inline void symtridiag_eigen(std::vector<double>& d, std::vector<double>& e,
                             std::vector<double>& z) {
  const int n = static_cast<int>(d.size());
  if (n == 1) return;
  const double prec = std::numeric_limits<double>::epsilon();
  const int max_sweeps = 60;
  e[n - 1] = 0.0;

  for (int l = 0; l < n; ++l) {
    int sweeps = 0;
    for (;;) {
      int m = l;
      for (; m < n - 1; ++m)
        if (std::abs(e[m]) <= prec * (std::abs(d[m]) + std::abs(d[m + 1]))) break;
      if (m == l) break;
      if (++sweeps > max_sweeps)
        throw NumericError("quadrature: tridiagonal eigensolver failed to converge");

      double p = d[l];
      double g = (d[l + 1] - p) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - p + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0;
      p = 0.0;
      for (int i = m - 1; i >= l; --i) {
        double f = s * e[i];
        const double b = c * e[i];
        if (std::abs(g) <= std::abs(f)) {
          c = g / f;
          r = std::hypot(c, 1.0);
          e[i + 1] = f * r;
          s = 1.0 / r;
          c *= s;
        } else {
          s = f / g;
          r = std::hypot(s, 1.0);
          e[i + 1] = g * r;
          c = 1.0 / r;
          s *= c;
        }
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        f = z[i + 1];
        z[i + 1] = s * z[i] + c * f;
        z[i] = c * z[i] - s * f;
      }
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }

  // insertion sort by eigenvalue, carrying z along
  for (int i = 1; i < n; ++i) {
    const double dv = d[i], zv = z[i];
    int k = i - 1;
    for (; k >= 0 && d[k] > dv; --k) {
      d[k + 1] = d[k];
      z[k + 1] = z[k];
    }
    d[k + 1] = dv;
    z[k + 1] = zv;
  }
}

}  // namespace detail

/// n-point Gauss-Hermite rule rescaled for expectations under N(mu, sigma^2),
/// exact for polynomials of degree <= 2n-1. Nodes and weights come from the
/// Golub-Welsch eigendecomposition of the Hermite Jacobi matrix.
inline QuadratureRule gauss_hermite(int n, double mu, double sigma) {
  if (n < 1 || n > 101)
    throw DomainError("gauss_hermite: n must be in [1, 101], got " + std::to_string(n));
  if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
    throw DomainError("gauss_hermite: mu must be finite and sigma positive");

  // Jacobi matrix for the weight exp(-x^2): zero diagonal, offdiag sqrt(k/2).
  std::vector<double> d(n, 0.0), e(n, 0.0), z(n, 0.0);
  for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(k / 2.0);
  const double mu0 = std::sqrt(3.14159265358979323846);  // integral of weight
  z[0] = std::sqrt(mu0);
  detail::symtridiag_eigen(d, e, z);

  QuadratureRule rule;
  rule.mu = mu;
  rule.sigma = sigma;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double wsum = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mu + sigma * std::sqrt(2.0) * d[i];
    rule.weights[i] = z[i] * z[i];
    wsum += rule.weights[i];
  }
  for (double& w : rule.weights) w /= wsum;
  for (int i = 1; i < n; ++i)
    if (!(rule.nodes[i] > rule.nodes[i - 1]))
      throw NumericError("gauss_hermite: nodes not strictly increasing");
  return rule;
}

/// Expectation of f under the rule's Gaussian: sum_k w_k f(node_k).
template <typename F>
double expect(const QuadratureRule& rule, F&& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double fx = f(rule.nodes[k]);
    if (!std::isfinite(fx))
      throw NumericError("expect: non-finite integrand at node " +
                         std::to_string(rule.nodes[k]));
    acc += rule.weights[k] * fx;
  }
  return acc;
}

}  // namespace raschkit
