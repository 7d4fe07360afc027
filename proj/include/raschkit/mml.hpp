#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "raschkit/error.hpp"
#include "raschkit/parallel.hpp"
#include "raschkit/quadrature.hpp"
#include "raschkit/rasch.hpp"
#include "raschkit/response_matrix.hpp"

namespace raschkit {

struct MmlConfig {
  int quadrature_points = 41;
  double prior_theta_sigma = 1.0;      // abilities marginalized as N(0, sigma^2)
  int max_iterations = 500;
  double convergence_tol = 1e-5;       // max |delta b| per EM sweep
  double difficulty_prior_sigma = 10.0;  // weak ridge keeping extreme items finite
  unsigned threads = 0;                // 0 = all available
};

struct MmlFit {
  std::vector<double> difficulties;   // per item
  std::vector<double> abilities;      // per subject, MAP given the fit
  // Penalized quadrature marginal log-likelihood (marginal ll plus the
  // difficulty ridge term), evaluated before each M-step and once after the
  // final one. Non-decreasing up to floating-point slack.
  std::vector<double> loglik_trace;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline void check_mml_config(const MmlConfig& cfg) {
  if (cfg.quadrature_points < 1 || cfg.quadrature_points > 101)
    throw DomainError("mml: quadrature_points must be in [1, 101]");
  if (!(cfg.prior_theta_sigma > 0.0)) throw DomainError("mml: prior_theta_sigma must be positive");
  if (cfg.max_iterations < 1) throw DomainError("mml: max_iterations must be positive");
  if (!(cfg.convergence_tol > 0.0)) throw DomainError("mml: convergence_tol must be positive");
  if (!(cfg.difficulty_prior_sigma > 0.0))
    throw DomainError("mml: difficulty_prior_sigma must be positive");
}

// Expected-count tables from one E-step: for item i and node q,
// r = expected number of correct responses, n = expected response count.
struct EStepResult {
  std::vector<double> r;  // [item * Q + q]
  std::vector<double> n;  // [item * Q + q]
  double marginal_loglik = 0.0;
};

inline EStepResult estep(const ResponseMatrix& m, const QuadratureRule& rule,
                         const std::vector<double>& bs, unsigned threads) {
  const std::size_t nj = m.n_subjects(), ni = m.n_items();
  const std::size_t nq = rule.nodes.size();

  std::vector<double> log_weight(nq);
  for (std::size_t q = 0; q < nq; ++q) log_weight[q] = std::log(rule.weights[q]);

  // Per-item per-node response log-probabilities, shared by all subjects.
  std::vector<double> lp(ni * nq), lq(ni * nq);
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t q = 0; q < nq; ++q) {
      const double x = rule.nodes[q] - bs[i];
      lp[i * nq + q] = log_sigmoid(x);
      lq[i * nq + q] = log_sigmoid(-x);
    }

  const std::size_t block = 64;
  const std::size_t n_blocks = block_count(nj, block);
  std::vector<EStepResult> partial(n_blocks);

  for_blocks(nj, block, threads, [&](std::size_t bi, std::size_t begin, std::size_t end) {
    EStepResult& part = partial[bi];
    part.r.assign(ni * nq, 0.0);
    part.n.assign(ni * nq, 0.0);
    std::vector<double> lw(nq), w(nq);
    for (std::size_t j = begin; j < end; ++j) {
      lw = log_weight;
      for (std::size_t i = 0; i < ni; ++i) {
        const Cell c = m.cell(j, i);
        if (c == Cell::missing) continue;
        const double* row = (c == Cell::correct ? lp.data() : lq.data()) + i * nq;
        for (std::size_t q = 0; q < nq; ++q) lw[q] += row[q];
      }
      double mx = lw[0];
      for (std::size_t q = 1; q < nq; ++q) mx = std::max(mx, lw[q]);
      double sum = 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        w[q] = std::exp(lw[q] - mx);
        sum += w[q];
      }
      part.marginal_loglik += mx + std::log(sum);
      const double inv = 1.0 / sum;
      for (std::size_t q = 0; q < nq; ++q) w[q] *= inv;
      for (std::size_t i = 0; i < ni; ++i) {
        const Cell c = m.cell(j, i);
        if (c == Cell::missing) continue;
        double* np = part.n.data() + i * nq;
        for (std::size_t q = 0; q < nq; ++q) np[q] += w[q];
        if (c == Cell::correct) {
          double* rp = part.r.data() + i * nq;
          for (std::size_t q = 0; q < nq; ++q) rp[q] += w[q];
        }
      }
    }
  });

  EStepResult out;
  out.r.assign(ni * nq, 0.0);
  out.n.assign(ni * nq, 0.0);
  for (const auto& part : partial) {
    if (part.r.empty()) continue;
    for (std::size_t k = 0; k < out.r.size(); ++k) {
      out.r[k] += part.r[k];
      out.n[k] += part.n[k];
    }
    out.marginal_loglik += part.marginal_loglik;
  }
  return out;
}

// Expected complete-data objective for one item (plus its ridge term).
inline double item_objective(std::span<const double> nodes, const double* r,
                             const double* n, double b, double ridge_var) {
  double acc = -b * b / (2.0 * ridge_var);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double x = nodes[q] - b;
    acc += r[q] * log_sigmoid(x) + (n[q] - r[q]) * log_sigmoid(-x);
  }
  return acc;
}

// Damped Newton ascent on the strictly concave per-item M-step objective.
inline double mstep_item(std::span<const double> nodes, const double* r,
                         const double* n, double b0, double ridge_var,
                         int item_index) {
  double b = b0;
  double obj = item_objective(nodes, r, n, b, ridge_var);
  for (int it = 0; it < 100; ++it) {
    double g = -b / ridge_var, h = -1.0 / ridge_var;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double p = sigmoid(nodes[q] - b);
      g += n[q] * p - r[q];
      h -= n[q] * p * (1.0 - p);
    }
    double step = -g / h;
    if (!std::isfinite(step))
      throw NumericError("mml: non-finite M-step update for item " +
                         std::to_string(item_index));
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const double cand = b + step;
      const double cand_obj = item_objective(nodes, r, n, cand, ridge_var);
      if (cand_obj >= obj - 1e-12) {
        b = cand;
        obj = cand_obj;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || std::abs(step) < 1e-11) break;
  }
  return b;
}

}  // namespace detail

/// MAP ability scores given fixed item difficulties: per subject, Newton
/// ascent on sum_i log p(y | theta, b_i) - theta^2 / (2 sigma^2). Subjects
/// with no responses sit at the prior mode 0.
inline std::vector<double> score_map(const ResponseMatrix& m,
                                     std::span<const double> difficulties,
                                     double prior_sigma, unsigned threads = 0) {
  if (difficulties.size() != m.n_items())
    throw DomainError("score_map: difficulty count does not match items");
  for (double b : difficulties)
    if (!std::isfinite(b)) throw DomainError("score_map: non-finite difficulty");
  if (!(prior_sigma > 0.0)) throw DomainError("score_map: prior_sigma must be positive");

  const double prior_var = prior_sigma * prior_sigma;
  const std::size_t nj = m.n_subjects(), ni = m.n_items();
  std::vector<double> thetas(nj, 0.0);

  for_blocks(nj, 64, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      double theta = 0.0;
      auto objective = [&](double t) {
        double acc = -t * t / (2.0 * prior_var);
        for (std::size_t i = 0; i < ni; ++i) {
          const Cell c = m.cell(j, i);
          if (c == Cell::missing) continue;
          const double x = t - difficulties[i];
          acc += (c == Cell::correct) ? log_sigmoid(x) : log_sigmoid(-x);
        }
        return acc;
      };
      double obj = objective(theta);
      for (int it = 0; it < 100; ++it) {
        double g = -theta / prior_var, h = -1.0 / prior_var;
        for (std::size_t i = 0; i < ni; ++i) {
          const Cell c = m.cell(j, i);
          if (c == Cell::missing) continue;
          const double p = sigmoid(theta - difficulties[i]);
          g += (c == Cell::correct ? 1.0 : 0.0) - p;
          h -= p * (1.0 - p);
        }
        double step = -g / h;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
          const double cand_obj = objective(theta + step);
          if (cand_obj >= obj - 1e-14) {
            theta += step;
            obj = cand_obj;
            accepted = true;
            break;
          }
          step *= 0.5;
        }
        if (!accepted || std::abs(step) < 1e-8) break;
      }
      thetas[j] = theta;
    }
  });
  return thetas;
}

/// Bock-Aitkin marginal maximum likelihood: abilities are integrated out as
/// N(0, sigma_theta^2) random effects over a fixed Gauss-Hermite grid; each
/// EM sweep re-weights subjects over the grid (E) and maximizes every item's
/// expected complete-data likelihood by damped Newton (M). A weak Gaussian
/// ridge on b keeps all-correct/all-incorrect items finite. Abilities are
/// then scored by score_map.
inline MmlFit fit_mml(const ResponseMatrix& m, const MmlConfig& cfg = {}) {
  detail::check_mml_config(cfg);
  if (!is_pruned(m))
    throw DomainError("fit_mml: matrix not pruned (a subject or item has no responses)");

  const std::size_t ni = m.n_items();
  const auto rule = gauss_hermite(cfg.quadrature_points, 0.0, cfg.prior_theta_sigma);
  const double ridge_var = cfg.difficulty_prior_sigma * cfg.difficulty_prior_sigma;

  // start from smoothed percent-correct logits
  const auto counts = m.item_response_counts();
  std::vector<double> correct(ni, 0.0);
  for (std::size_t j = 0; j < m.n_subjects(); ++j)
    for (std::size_t i = 0; i < ni; ++i)
      if (m.correct(j, i)) correct[i] += 1.0;
  std::vector<double> bs(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    const double pc = (correct[i] + 0.5) / (static_cast<double>(counts[i]) + 1.0);
    bs[i] = -std::log(pc / (1.0 - pc));
  }

  auto penalty = [&](const std::vector<double>& b) {
    double acc = 0.0;
    for (double v : b) acc -= v * v / (2.0 * ridge_var);
    return acc;
  };

  MmlFit fit;
  fit.difficulties = bs;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const auto es = detail::estep(m, rule, fit.difficulties, cfg.threads);
    if (!std::isfinite(es.marginal_loglik))
      throw NumericError("mml: non-finite marginal likelihood at iteration " +
                         std::to_string(iter));
    fit.loglik_trace.push_back(es.marginal_loglik + penalty(fit.difficulties));

    std::vector<double> updated(ni);
    const std::size_t nq = rule.nodes.size();
    for_blocks(ni, 16, cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        updated[i] = detail::mstep_item(rule.nodes, es.r.data() + i * nq,
                                        es.n.data() + i * nq, fit.difficulties[i],
                                        ridge_var, static_cast<int>(i));
    });

    double max_delta = 0.0;
    for (std::size_t i = 0; i < ni; ++i)
      max_delta = std::max(max_delta, std::abs(updated[i] - fit.difficulties[i]));
    fit.difficulties = std::move(updated);
    ++fit.iterations;
    if (max_delta < cfg.convergence_tol) {
      fit.converged = true;
      break;
    }
  }

  const auto final_es = detail::estep(m, rule, fit.difficulties, cfg.threads);
  fit.loglik_trace.push_back(final_es.marginal_loglik + penalty(fit.difficulties));
  fit.abilities = score_map(m, fit.difficulties, cfg.prior_theta_sigma, cfg.threads);
  return fit;
}

}  // namespace raschkit
