#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "raschkit/error.hpp"
#include "raschkit/parallel.hpp"
#include "raschkit/rasch.hpp"
#include "raschkit/response_matrix.hpp"
#include "raschkit/rng.hpp"

namespace raschkit {

enum class PriorKind { vague, hierarchical };

/// Prior over abilities and difficulties. The vague prior fixes
/// theta ~ N(0, 1) and b ~ N(0, 10^3). The hierarchical prior places
/// Gaussian factors on the means and Gamma(1,1) factors on the precisions:
///   theta | m_t, u_t ~ N(m_t, 1/u_t),  b | m_b, u_b ~ N(m_b, 1/u_b),
///   m ~ N(0, 10^6),  u ~ Gamma(1, 1).
struct PriorSpec {
  PriorKind kind = PriorKind::vague;
  double theta_sigma = 1.0;
  double b_sigma = 31.6227766016837933;  // sqrt(1000)
  double mean_hyper_sigma = 1000.0;      // sqrt(10^6)
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;

  static PriorSpec vague() { return PriorSpec{}; }
  static PriorSpec hierarchical() {
    PriorSpec p;
    p.kind = PriorKind::hierarchical;
    return p;
  }
};

inline PriorKind prior_kind_from_name(const std::string& name) {
  if (name == "vague") return PriorKind::vague;
  if (name == "hierarchical") return PriorKind::hierarchical;
  throw DomainError("unknown prior '" + name + "' (expected vague or hierarchical)");
}

inline const char* prior_kind_name(PriorKind k) {
  return k == PriorKind::vague ? "vague" : "hierarchical";
}

/// Gaussian factor over a hyper-mean plus a Gaussian factor over the log of a
/// hyper-precision (so the precision itself is log-normal).
struct HyperBlock {
  double m_mean = 0.0;
  double m_log_std = 0.0;
  double logu_mean = 0.0;
  double logu_log_std = 0.0;
};

/// Mean-field Gaussian factors: one (mean, log-std) pair per ability and per
/// difficulty, plus hyperparameter factors used under the hierarchical prior.
struct VariationalState {
  std::vector<double> theta_mean, theta_log_std;
  std::vector<double> b_mean, b_log_std;
  HyperBlock theta_hyper, b_hyper;
};

struct ViConfig {
  int mc_samples = 5;
  int max_steps = 5000;
  double step_size = 0.1;  // AdaGrad base rate: per-parameter scaling, ~1/sqrt(t) decay
  int elbo_window = 100;
  double rel_tol = 1e-4;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ViFit {
  std::vector<double> b_mean, b_std;
  std::vector<double> theta_mean, theta_std;
  HyperBlock theta_hyper, b_hyper;  // meaningful for hierarchical fits
  PriorKind prior = PriorKind::vague;
  std::vector<double> elbo_trace;   // one MC estimate per step
  bool converged = false;
  int steps = 0;
};

/// Closed-form KL(N(q_mu, q_sigma^2) || N(p_mu, p_sigma^2)).
inline double kl_gaussian(double q_mu, double q_sigma, double p_mu, double p_sigma) {
  if (!(q_sigma > 0.0) || !(p_sigma > 0.0))
    throw DomainError("kl_gaussian: sigmas must be positive");
  const double var_ratio = (q_sigma * q_sigma) / (p_sigma * p_sigma);
  const double mean_term = (q_mu - p_mu) * (q_mu - p_mu) / (p_sigma * p_sigma);
  return 0.5 * (var_ratio + mean_term - 1.0) + std::log(p_sigma / q_sigma);
}

/// Gradient of the ELBO estimate, shaped like the state.
struct ViGradient {
  std::vector<double> theta_mean, theta_log_std;
  std::vector<double> b_mean, b_log_std;
  HyperBlock theta_hyper, b_hyper;

  explicit ViGradient(std::size_t n_subjects = 0, std::size_t n_items = 0)
      : theta_mean(n_subjects, 0.0),
        theta_log_std(n_subjects, 0.0),
        b_mean(n_items, 0.0),
        b_log_std(n_items, 0.0),
        theta_hyper{0, 0, 0, 0},
        b_hyper{0, 0, 0, 0} {}
};

inline VariationalState init_state(const ResponseMatrix& m) {
  VariationalState s;
  const double log_half = std::log(0.5);
  s.theta_mean.assign(m.n_subjects(), 0.0);
  s.theta_log_std.assign(m.n_subjects(), log_half);
  s.b_mean.assign(m.n_items(), 0.0);
  s.b_log_std.assign(m.n_items(), log_half);
  s.theta_hyper = {0.0, log_half, 0.0, log_half};
  s.b_hyper = {0.0, log_half, 0.0, log_half};
  return s;
}

namespace detail {

constexpr double log_2pi = 1.8378770664093455;  // ln(2*pi)
constexpr double min_log_std = -13.8;           // std just above 1e-6
constexpr double max_log_std = 6.9;             // std just below 1e3

inline void validate_prior(const PriorSpec& prior) {
  if (!(prior.theta_sigma > 0.0) || !(prior.b_sigma > 0.0) ||
      !(prior.mean_hyper_sigma > 0.0) || !(prior.gamma_shape > 0.0) ||
      !(prior.gamma_rate > 0.0))
    throw DomainError("vi: prior variance/shape hyperparameters must be positive");
}

inline void validate_state(const ResponseMatrix& m, const VariationalState& s) {
  if (s.theta_mean.size() != m.n_subjects() || s.theta_log_std.size() != m.n_subjects() ||
      s.b_mean.size() != m.n_items() || s.b_log_std.size() != m.n_items())
    throw DomainError("vi: state dimensions do not match the matrix");
  auto check = [](const std::vector<double>& v, const char* what) {
    for (double x : v)
      if (!std::isfinite(x)) throw DomainError(std::string("vi: non-finite ") + what);
  };
  check(s.theta_mean, "theta mean");
  check(s.theta_log_std, "theta log-std");
  check(s.b_mean, "b mean");
  check(s.b_log_std, "b log-std");
}

// One side (abilities or difficulties) of the hierarchical closed form:
//   sum_k E[log N(x_k; m, 1/u)] + H[q(x_k)]
// + E[log p(m)] + H[q(m)] + E[log p(log u)] + H[q(log u)]
// with q(m) Gaussian and q(log u) Gaussian, E[u] = exp(nu + s^2/2).
inline double hier_side(const std::vector<double>& means,
                        const std::vector<double>& log_stds, const HyperBlock& h,
                        double mean_prior_sigma, double gamma_shape, double gamma_rate,
                        std::vector<double>* g_mean, std::vector<double>* g_log_std,
                        HyperBlock* g_hyper) {
  const std::size_t n = means.size();
  const double m_var = std::exp(2.0 * h.m_log_std);
  const double s_logu = std::exp(h.logu_log_std);
  const double s2_logu = s_logu * s_logu;
  const double e_logu = h.logu_mean;
  const double e_u = std::exp(h.logu_mean + 0.5 * s2_logu);
  const double prior_var = mean_prior_sigma * mean_prior_sigma;

  double sum_d = 0.0, sum_dev = 0.0;
  double value = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double var_k = std::exp(2.0 * log_stds[k]);
    const double dev = means[k] - h.m_mean;
    const double d_k = dev * dev + var_k + m_var;
    sum_d += d_k;
    sum_dev += dev;
    value += 0.5 * e_logu - 0.5 * log_2pi - 0.5 * e_u * d_k;  // E[log N(x_k; m, 1/u)]
    value += log_stds[k] + 0.5 * (log_2pi + 1.0);             // H[q(x_k)]
    if (g_mean) (*g_mean)[k] += -e_u * dev;
    if (g_log_std) (*g_log_std)[k] += -e_u * var_k + 1.0;
  }
  // hyper-mean prior and entropy
  value += -0.5 * std::log(2.0 * 3.14159265358979323846 * prior_var) -
           (h.m_mean * h.m_mean + m_var) / (2.0 * prior_var);
  value += h.m_log_std + 0.5 * (log_2pi + 1.0);
  // log-precision prior (Gamma pushed forward to log space) and entropy
  value += gamma_shape * std::log(gamma_rate) + gamma_shape * e_logu -
           gamma_rate * e_u - std::lgamma(gamma_shape);
  value += h.logu_log_std + 0.5 * (log_2pi + 1.0);

  if (g_hyper) {
    g_hyper->m_mean += e_u * sum_dev - h.m_mean / prior_var;
    g_hyper->m_log_std += -e_u * static_cast<double>(n) * m_var - m_var / prior_var + 1.0;
    g_hyper->logu_mean +=
        0.5 * static_cast<double>(n) - 0.5 * e_u * sum_d + gamma_shape - gamma_rate * e_u;
    g_hyper->logu_log_std += (-0.5 * sum_d - gamma_rate) * e_u * s2_logu + 1.0;
  }
  return value;
}

// Entropy, prior and cross terms of the ELBO; everything except the
// likelihood expectation. Adds gradients when grad is non-null.
inline double closed_form_terms(const VariationalState& s, const PriorSpec& prior,
                                ViGradient* grad) {
  double value = 0.0;
  if (prior.kind == PriorKind::vague) {
    const double tv = prior.theta_sigma * prior.theta_sigma;
    const double bv = prior.b_sigma * prior.b_sigma;
    for (std::size_t j = 0; j < s.theta_mean.size(); ++j) {
      const double sd = std::exp(s.theta_log_std[j]);
      value -= kl_gaussian(s.theta_mean[j], sd, 0.0, prior.theta_sigma);
      if (grad) {
        grad->theta_mean[j] += -s.theta_mean[j] / tv;
        grad->theta_log_std[j] += 1.0 - sd * sd / tv;
      }
    }
    for (std::size_t i = 0; i < s.b_mean.size(); ++i) {
      const double sd = std::exp(s.b_log_std[i]);
      value -= kl_gaussian(s.b_mean[i], sd, 0.0, prior.b_sigma);
      if (grad) {
        grad->b_mean[i] += -s.b_mean[i] / bv;
        grad->b_log_std[i] += 1.0 - sd * sd / bv;
      }
    }
    return value;
  }
  value += hier_side(s.theta_mean, s.theta_log_std, s.theta_hyper,
                     prior.mean_hyper_sigma, prior.gamma_shape, prior.gamma_rate,
                     grad ? &grad->theta_mean : nullptr,
                     grad ? &grad->theta_log_std : nullptr,
                     grad ? &grad->theta_hyper : nullptr);
  value += hier_side(s.b_mean, s.b_log_std, s.b_hyper, prior.mean_hyper_sigma,
                     prior.gamma_shape, prior.gamma_rate,
                     grad ? &grad->b_mean : nullptr,
                     grad ? &grad->b_log_std : nullptr,
                     grad ? &grad->b_hyper : nullptr);
  return value;
}

// Monte Carlo estimate of E_q[log p(Y | theta, b)] with reparameterized
// draws; fills the likelihood part of the gradient when grad is non-null.
// Noise is keyed by (key, sample, parameter), so the estimate is a smooth,
// reproducible function of the state.
inline double mc_loglik(const ResponseMatrix& m, const VariationalState& s,
                        int n_samples, rng::Key key, ViGradient* grad,
                        unsigned threads) {
  const std::size_t nj = m.n_subjects(), ni = m.n_items();
  const std::size_t ns = static_cast<std::size_t>(n_samples);
  const double inv_s = 1.0 / static_cast<double>(n_samples);

  std::vector<double> theta_sd(nj), b_sd(ni);
  for (std::size_t j = 0; j < nj; ++j) theta_sd[j] = std::exp(s.theta_log_std[j]);
  for (std::size_t i = 0; i < ni; ++i) b_sd[i] = std::exp(s.b_log_std[i]);

  // all reparameterization noise up front: counters (sample, parameter)
  std::vector<double> eps_theta(ns * nj), eps_b(ns * ni);
  std::vector<double> theta_draw(ns * nj), b_draw(ns * ni);
  for (std::size_t t = 0; t < ns; ++t) {
    for (std::size_t j = 0; j < nj; ++j) {
      const double e = rng::normal(key, t * (nj + ni) + j);
      eps_theta[t * nj + j] = e;
      theta_draw[t * nj + j] = s.theta_mean[j] + theta_sd[j] * e;
    }
    for (std::size_t i = 0; i < ni; ++i) {
      const double e = rng::normal(key, t * (nj + ni) + nj + i);
      eps_b[t * ni + i] = e;
      b_draw[t * ni + i] = s.b_mean[i] + b_sd[i] * e;
    }
  }

  const std::size_t block = 64;
  const std::size_t n_blocks = block_count(nj, block);
  // per-block partials: log-likelihood and per-sample difficulty gradients
  std::vector<double> ll_part(n_blocks, 0.0);
  std::vector<std::vector<double>> gb_part;
  if (grad) gb_part.assign(n_blocks, std::vector<double>(ns * ni, 0.0));

  for_blocks(nj, block, threads, [&](std::size_t bi, std::size_t begin, std::size_t end) {
    double ll = 0.0;
    double* gb = grad ? gb_part[bi].data() : nullptr;
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t t = 0; t < ns; ++t) {
        const double tj = theta_draw[t * nj + j];
        const double* bd = b_draw.data() + t * ni;
        double g_theta = 0.0;
        for (std::size_t i = 0; i < ni; ++i) {
          const Cell c = m.cell(j, i);
          if (c == Cell::missing) continue;
          const double x = tj - bd[i];
          double p, lp, lq;
          if (x >= 0.0) {
            const double e = std::exp(-x);
            const double l1 = std::log1p(e);
            p = 1.0 / (1.0 + e);
            lp = -l1;
            lq = -x - l1;
          } else {
            const double e = std::exp(x);
            const double l1 = std::log1p(e);
            p = e / (1.0 + e);
            lp = x - l1;
            lq = -l1;
          }
          if (c == Cell::correct) {
            ll += lp;
            if (grad) {
              const double resid = 1.0 - p;
              g_theta += resid;
              gb[t * ni + i] -= resid;
            }
          } else {
            ll += lq;
            if (grad) {
              g_theta -= p;
              gb[t * ni + i] += p;
            }
          }
        }
        if (grad) {
          grad->theta_mean[j] += g_theta * inv_s;
          grad->theta_log_std[j] += g_theta * eps_theta[t * nj + j] * theta_sd[j] * inv_s;
        }
      }
    }
    ll_part[bi] = ll;
  });

  double total_ll = 0.0;
  for (double v : ll_part) total_ll += v;
  if (grad) {
    std::vector<double> gb_total(ns * ni, 0.0);
    for (const auto& part : gb_part)
      for (std::size_t k = 0; k < gb_total.size(); ++k) gb_total[k] += part[k];
    for (std::size_t t = 0; t < ns; ++t)
      for (std::size_t i = 0; i < ni; ++i) {
        const double g = gb_total[t * ni + i];
        grad->b_mean[i] += g * inv_s;
        grad->b_log_std[i] += g * eps_b[t * ni + i] * b_sd[i] * inv_s;
      }
  }
  return total_ll * inv_s;
}

inline double elbo_with_gradient(const ResponseMatrix& m, const VariationalState& s,
                                 const PriorSpec& prior, int n_samples, rng::Key key,
                                 ViGradient* grad, unsigned threads) {
  validate_prior(prior);
  validate_state(m, s);
  if (n_samples < 1) throw DomainError("vi: n_samples must be positive");
  const double ll = mc_loglik(m, s, n_samples, key, grad, threads);
  const double cf = closed_form_terms(s, prior, grad);
  return ll + cf;
}

}  // namespace detail

/// Reparameterized Monte Carlo estimate of the ELBO. Entropy and prior cross
/// terms are closed-form; only the likelihood expectation is sampled.
/// Deterministic given the seed.
inline double elbo_estimate(const ResponseMatrix& m, const VariationalState& state,
                            const PriorSpec& prior, int n_samples, std::uint64_t seed,
                            unsigned threads = 0) {
  const double v = detail::elbo_with_gradient(m, state, prior, n_samples,
                                              rng::key_of(seed), nullptr, threads);
  if (!std::isfinite(v)) throw NumericError("elbo_estimate: non-finite estimate");
  return v;
}

/// ELBO estimate plus its reparameterization gradient, for the same noise
/// elbo_estimate(seed) uses.
inline double elbo_gradient(const ResponseMatrix& m, const VariationalState& state,
                            const PriorSpec& prior, int n_samples, std::uint64_t seed,
                            ViGradient& grad, unsigned threads = 0) {
  grad = ViGradient(m.n_subjects(), m.n_items());
  return detail::elbo_with_gradient(m, state, prior, n_samples, rng::key_of(seed),
                                    &grad, threads);
}

/// Stochastic mean-field variational fit. Starts from zero means and std 0.5,
/// ascends the ELBO with AdaGrad steps, and stops once consecutive
/// window-averaged ELBO values change by less than rel_tol (relative) or the
/// step cap is reached. Point estimates are the posterior means.
inline ViFit fit_vi(const ResponseMatrix& m, const PriorSpec& prior, const ViConfig& cfg) {
  detail::validate_prior(prior);
  if (cfg.mc_samples < 1) throw DomainError("vi: mc_samples must be positive");
  if (cfg.max_steps < 1) throw DomainError("vi: max_steps must be positive");
  if (!(cfg.step_size > 0.0)) throw DomainError("vi: step_size must be positive");
  if (cfg.elbo_window < 1) throw DomainError("vi: elbo_window must be positive");
  if (!(cfg.rel_tol > 0.0)) throw DomainError("vi: rel_tol must be positive");
  if (!is_pruned(m))
    throw DomainError("fit_vi: matrix not pruned (a subject or item has no responses)");

  const std::size_t nj = m.n_subjects(), ni = m.n_items();
  VariationalState state = init_state(m);
  ViGradient accum(nj, ni);  // AdaGrad squared-gradient accumulators

  ViFit fit;
  fit.prior = prior.kind;
  fit.elbo_trace.reserve(static_cast<std::size_t>(cfg.max_steps));

  auto adagrad = [&](double& x, double g, double& acc, bool is_log_std) {
    acc += g * g;
    x += cfg.step_size * g / (std::sqrt(acc) + 1e-12);
    if (is_log_std) x = std::clamp(x, detail::min_log_std, detail::max_log_std);
  };

  double prev_window = 0.0;
  bool have_prev_window = false;
  for (int step = 0; step < cfg.max_steps; ++step) {
    ViGradient grad(nj, ni);
    const auto key = rng::key_of(cfg.seed, rng::tag_vi_step, static_cast<std::uint64_t>(step));
    const double elbo =
        detail::elbo_with_gradient(m, state, prior, cfg.mc_samples, key, &grad, cfg.threads);
    if (!std::isfinite(elbo))
      throw NumericError("fit_vi: ELBO diverged at step " + std::to_string(step) +
                         "; try a smaller step size");
    fit.elbo_trace.push_back(elbo);
    ++fit.steps;

    for (std::size_t j = 0; j < nj; ++j) {
      adagrad(state.theta_mean[j], grad.theta_mean[j], accum.theta_mean[j], false);
      adagrad(state.theta_log_std[j], grad.theta_log_std[j], accum.theta_log_std[j], true);
    }
    for (std::size_t i = 0; i < ni; ++i) {
      adagrad(state.b_mean[i], grad.b_mean[i], accum.b_mean[i], false);
      adagrad(state.b_log_std[i], grad.b_log_std[i], accum.b_log_std[i], true);
    }
    if (prior.kind == PriorKind::hierarchical) {
      adagrad(state.theta_hyper.m_mean, grad.theta_hyper.m_mean, accum.theta_hyper.m_mean, false);
      adagrad(state.theta_hyper.m_log_std, grad.theta_hyper.m_log_std,
              accum.theta_hyper.m_log_std, true);
      adagrad(state.theta_hyper.logu_mean, grad.theta_hyper.logu_mean,
              accum.theta_hyper.logu_mean, false);
      adagrad(state.theta_hyper.logu_log_std, grad.theta_hyper.logu_log_std,
              accum.theta_hyper.logu_log_std, true);
      adagrad(state.b_hyper.m_mean, grad.b_hyper.m_mean, accum.b_hyper.m_mean, false);
      adagrad(state.b_hyper.m_log_std, grad.b_hyper.m_log_std, accum.b_hyper.m_log_std, true);
      adagrad(state.b_hyper.logu_mean, grad.b_hyper.logu_mean, accum.b_hyper.logu_mean, false);
      adagrad(state.b_hyper.logu_log_std, grad.b_hyper.logu_log_std,
              accum.b_hyper.logu_log_std, true);
    }

    if ((step + 1) % cfg.elbo_window == 0) {
      double window_mean = 0.0;
      for (int k = step + 1 - cfg.elbo_window; k <= step; ++k)
        window_mean += fit.elbo_trace[static_cast<std::size_t>(k)];
      window_mean /= static_cast<double>(cfg.elbo_window);
      if (have_prev_window) {
        const double rel =
            std::abs(window_mean - prev_window) / (std::abs(prev_window) + 1e-12);
        if (rel < cfg.rel_tol) {
          fit.converged = true;
          break;
        }
      }
      prev_window = window_mean;
      have_prev_window = true;
    }
  }

  fit.theta_mean = state.theta_mean;
  fit.b_mean = state.b_mean;
  fit.theta_std.resize(nj);
  fit.b_std.resize(ni);
  for (std::size_t j = 0; j < nj; ++j) fit.theta_std[j] = std::exp(state.theta_log_std[j]);
  for (std::size_t i = 0; i < ni; ++i) fit.b_std[i] = std::exp(state.b_log_std[i]);
  fit.theta_hyper = state.theta_hyper;
  fit.b_hyper = state.b_hyper;
  return fit;
}

}  // namespace raschkit
