#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "raschkit/error.hpp"
#include "raschkit/response_matrix.hpp"

namespace raschkit {

/// Stable logistic sigmoid; no overflow anywhere on the real line.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sigmoid(x)) without intermediate overflow or log-of-zero.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Probability that a subject of ability theta answers an item of difficulty
/// b correctly: 1 / (1 + exp(-(theta - b))).
inline double p_correct(double theta, double b) {
  if (!std::isfinite(theta) || !std::isfinite(b))
    throw DomainError("p_correct: non-finite input");
  return sigmoid(theta - b);
}

namespace detail {
inline void check_dims(const ResponseMatrix& m, std::span<const double> thetas,
                       std::span<const double> bs, const char* where) {
  if (thetas.size() != m.n_subjects() || bs.size() != m.n_items())
    throw DomainError(std::string(where) + ": dimension mismatch");
  for (double t : thetas)
    if (!std::isfinite(t)) throw DomainError(std::string(where) + ": non-finite ability");
  for (double b : bs)
    if (!std::isfinite(b)) throw DomainError(std::string(where) + ": non-finite difficulty");
}
}  // namespace detail

/// Bernoulli log-likelihood of the observed cells; missing cells contribute
/// nothing. Accumulated in row-major order so results are reproducible.
inline double log_likelihood(const ResponseMatrix& m, std::span<const double> thetas,
                             std::span<const double> bs) {
  detail::check_dims(m, thetas, bs, "log_likelihood");
  double ll = 0.0;
  for (std::size_t j = 0; j < m.n_subjects(); ++j)
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      const Cell c = m.cell(j, i);
      if (c == Cell::missing) continue;
      const double x = thetas[j] - bs[i];
      ll += (c == Cell::correct) ? log_sigmoid(x) : log_sigmoid(-x);
    }
  return ll;
}

struct LogLikGrad {
  std::vector<double> wrt_theta;  // d ll / d theta_j = sum_i (y - p)
  std::vector<double> wrt_b;      // d ll / d b_i     = sum_j (p - y)
};

inline LogLikGrad grad_log_likelihood(const ResponseMatrix& m,
                                      std::span<const double> thetas,
                                      std::span<const double> bs) {
  detail::check_dims(m, thetas, bs, "grad_log_likelihood");
  LogLikGrad g;
  g.wrt_theta.assign(m.n_subjects(), 0.0);
  g.wrt_b.assign(m.n_items(), 0.0);
  for (std::size_t j = 0; j < m.n_subjects(); ++j)
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      const Cell c = m.cell(j, i);
      if (c == Cell::missing) continue;
      const double resid =
          (c == Cell::correct ? 1.0 : 0.0) - sigmoid(thetas[j] - bs[i]);
      g.wrt_theta[j] += resid;
      g.wrt_b[i] -= resid;
    }
  return g;
}

}  // namespace raschkit
