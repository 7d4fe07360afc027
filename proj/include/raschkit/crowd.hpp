#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "raschkit/error.hpp"
#include "raschkit/rasch.hpp"
#include "raschkit/response_matrix.hpp"
#include "raschkit/rng.hpp"

namespace raschkit {

struct GaussianSpec {
  double mean = 0.0;
  double std = 1.0;
};

/// Generative configuration for an artificial crowd. Abilities and
/// difficulties are drawn from the Gaussian specs unless explicit value lists
/// are given. Fully determined by the seed.
struct CrowdSpec {
  std::size_t n_subjects = 0;
  std::size_t n_items = 0;
  GaussianSpec theta_dist;
  GaussianSpec b_dist;
  std::vector<double> theta_values;  // optional explicit abilities
  std::vector<double> b_values;      // optional explicit difficulties
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
};

struct SimulatedCrowd {
  ResponseMatrix matrix;
  std::vector<double> thetas;
  std::vector<double> bs;
};

namespace detail {
inline std::string padded_id(char prefix, std::size_t index_1based, std::size_t total) {
  std::size_t width = 1, p = 10;
  while (total >= p) { ++width; p *= 10; }
  std::string digits = std::to_string(index_1based);
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') +
         digits;
}

inline void validate(const CrowdSpec& spec) {
  if (spec.n_subjects == 0 || spec.n_items == 0)
    throw DomainError("crowd: subject and item counts must be positive");
  if (!spec.theta_values.empty() && spec.theta_values.size() != spec.n_subjects)
    throw DomainError("crowd: explicit theta list length mismatch");
  if (!spec.b_values.empty() && spec.b_values.size() != spec.n_items)
    throw DomainError("crowd: explicit b list length mismatch");
  if (spec.theta_values.empty() && !(spec.theta_dist.std > 0.0))
    throw DomainError("crowd: theta std must be positive");
  if (spec.b_values.empty() && !(spec.b_dist.std > 0.0))
    throw DomainError("crowd: b std must be positive");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
    throw DomainError("crowd: missing_rate must be in [0, 1)");
}
}  // namespace detail

/// Draws ground-truth parameters, then samples each non-missing cell
/// Bernoulli(p_correct(theta_j, b_i)). Cell randomness is keyed by
/// (seed, subject, item), so the output is independent of evaluation order.
inline SimulatedCrowd simulate(const CrowdSpec& spec) {
  detail::validate(spec);
  const std::size_t nj = spec.n_subjects, ni = spec.n_items;

  SimulatedCrowd out;
  out.thetas.resize(nj);
  out.bs.resize(ni);
  const auto theta_key = rng::key_of(spec.seed, rng::tag_theta_draw);
  const auto b_key = rng::key_of(spec.seed, rng::tag_b_draw);
  for (std::size_t j = 0; j < nj; ++j)
    out.thetas[j] = spec.theta_values.empty()
                        ? spec.theta_dist.mean + spec.theta_dist.std * rng::normal(theta_key, j)
                        : spec.theta_values[j];
  for (std::size_t i = 0; i < ni; ++i)
    out.bs[i] = spec.b_values.empty()
                    ? spec.b_dist.mean + spec.b_dist.std * rng::normal(b_key, i)
                    : spec.b_values[i];

  std::vector<std::string> subject_ids(nj), item_ids(ni);
  for (std::size_t j = 0; j < nj; ++j) subject_ids[j] = detail::padded_id('s', j + 1, nj);
  for (std::size_t i = 0; i < ni; ++i) item_ids[i] = detail::padded_id('i', i + 1, ni);

  const auto bern_key = rng::key_of(spec.seed, rng::tag_bernoulli);
  const auto miss_key = rng::key_of(spec.seed, rng::tag_missing);
  std::vector<Cell> cells(nj * ni);
  for (std::size_t j = 0; j < nj; ++j)
    for (std::size_t i = 0; i < ni; ++i) {
      const std::uint64_t counter = j * ni + i;
      if (spec.missing_rate > 0.0 && rng::uniform(miss_key, counter) < spec.missing_rate) {
        cells[counter] = Cell::missing;
        continue;
      }
      const double p = sigmoid(out.thetas[j] - out.bs[i]);
      cells[counter] = rng::bernoulli(bern_key, counter, p) ? Cell::correct : Cell::incorrect;
    }
  out.matrix = ResponseMatrix(std::move(subject_ids), std::move(item_ids), std::move(cells));
  return out;
}

/// A model's training condition: fraction of the training set it saw and the
/// fraction of labels corrupted before training.
struct CompetenceProfile {
  double train_fraction = 1.0;    // in (0, 1]
  double corruption_rate = 0.0;   // in [0, 1)
};

/// Monotone link from training condition to ability:
/// theta = a*log(train_fraction) + c*log(1 - corruption_rate), clamped at -10.
inline double competence_to_theta(const CompetenceProfile& profile, double a = 1.0,
                                  double c = 2.0) {
  if (!(profile.train_fraction > 0.0 && profile.train_fraction <= 1.0))
    throw DomainError("competence_to_theta: train_fraction must be in (0, 1]");
  if (!(profile.corruption_rate >= 0.0 && profile.corruption_rate < 1.0))
    throw DomainError("competence_to_theta: corruption_rate must be in [0, 1)");
  const double theta =
      a * std::log(profile.train_fraction) + c * std::log1p(-profile.corruption_rate);
  return std::max(theta, -10.0);
}

/// Random partition of the subjects into two halves (sizes differ by at most
/// one), both over the full item set.
inline std::pair<ResponseMatrix, ResponseMatrix> split_half(const ResponseMatrix& m,
                                                            std::uint64_t seed) {
  const std::size_t n = m.n_subjects();
  if (n < 2) throw DomainError("split_half: need at least 2 subjects");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const auto key = rng::key_of(seed, rng::tag_shuffle);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng::below(key, i, i + 1)]);

  const std::size_t half = (n + 1) / 2;
  std::vector<std::size_t> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> second(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
  // keep original subject order inside each half
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {m.select_subjects(first), m.select_subjects(second)};
}

}  // namespace raschkit
