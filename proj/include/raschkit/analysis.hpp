#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "raschkit/error.hpp"

namespace raschkit {

/// Two parameter vectors matched entry-by-entry on shared identifiers.
struct AlignedPair {
  std::vector<std::string> ids;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct AlignResult {
  AlignedPair pair;
  std::vector<std::string> only_x;  // ids present only on the left
  std::vector<std::string> only_y;  // ids present only on the right
};

/// Inner join on ids, preserving the left-hand order.
inline AlignResult align(const std::vector<std::string>& ids_x,
                         const std::vector<double>& xs,
                         const std::vector<std::string>& ids_y,
                         const std::vector<double>& ys) {
  if (ids_x.size() != xs.size() || ids_y.size() != ys.size())
    throw DomainError("align: ids and values length mismatch");
  std::unordered_map<std::string, std::size_t> right;
  for (std::size_t k = 0; k < ids_y.size(); ++k)
    if (!right.emplace(ids_y[k], k).second)
      throw DomainError("align: duplicate id '" + ids_y[k] + "' on the right");
  std::unordered_map<std::string, bool> matched_right;
  AlignResult out;
  std::unordered_map<std::string, std::size_t> seen_left;
  for (std::size_t k = 0; k < ids_x.size(); ++k) {
    if (!seen_left.emplace(ids_x[k], k).second)
      throw DomainError("align: duplicate id '" + ids_x[k] + "' on the left");
    auto it = right.find(ids_x[k]);
    if (it == right.end()) {
      out.only_x.push_back(ids_x[k]);
      continue;
    }
    matched_right[ids_x[k]] = true;
    out.pair.ids.push_back(ids_x[k]);
    out.pair.xs.push_back(xs[k]);
    out.pair.ys.push_back(ys[it->second]);
  }
  for (const auto& id : ids_y)
    if (!matched_right.count(id)) out.only_y.push_back(id);
  return out;
}

/// Fractional (average) ranks, 1-based; ties get the mean of their rank range.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k;
    while (e + 1 < n && values[order[e + 1]] == values[order[k]]) ++e;
    const double mean_rank = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) ranks[order[t]] = mean_rank;
    k = e + 1;
  }
  return ranks;
}

namespace detail {
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) { mx += xs[k]; my += ys[k]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = xs[k] - mx, dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DomainError("undefined correlation for a constant vector");
  return sxy / std::sqrt(sxx * syy);
}
}  // namespace detail

/// Spearman rank-order correlation with average-rank tie handling.
inline double spearman(const AlignedPair& pair) {
  if (pair.xs.size() != pair.ys.size())
    throw DomainError("spearman: length mismatch");
  if (pair.xs.size() < 2)
    throw DomainError("spearman: need at least 2 points");
  const auto rx = average_ranks(pair.xs);
  const auto ry = average_ranks(pair.ys);
  return detail::pearson(rx, ry);
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  AlignedPair p;
  p.xs = xs;
  p.ys = ys;
  return spearman(p);
}

/// Root mean squared difference between the two vectors.
inline double rmsd(const AlignedPair& pair) {
  if (pair.xs.size() != pair.ys.size())
    throw DomainError("rmsd: length mismatch");
  if (pair.xs.empty()) throw DomainError("rmsd: need at least 1 point");
  double acc = 0.0;
  for (std::size_t k = 0; k < pair.xs.size(); ++k) {
    const double d = pair.xs[k] - pair.ys[k];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pair.xs.size()));
}

inline double rmsd(const std::vector<double>& xs, const std::vector<double>& ys) {
  AlignedPair p;
  p.xs = xs;
  p.ys = ys;
  return rmsd(p);
}

struct RankDisagreement {
  struct Entry {
    std::string id;
    double rank_x;
    double rank_y;
    double abs_diff;
  };
  std::vector<Entry> top;  // sorted by abs_diff descending, then id ascending
  double mean_abs_diff = 0.0;
};

/// Items whose rank (ascending, fractional) differs most between the two
/// vectors. mean_abs_diff covers all entries, not just the top-k.
inline RankDisagreement rank_disagreement(const AlignedPair& pair, std::size_t top_k) {
  if (pair.ids.size() != pair.xs.size() || pair.xs.size() != pair.ys.size())
    throw DomainError("rank_disagreement: length mismatch");
  if (top_k > pair.ids.size())
    throw DomainError("rank_disagreement: top_k exceeds item count");
  const auto rx = average_ranks(pair.xs);
  const auto ry = average_ranks(pair.ys);
  std::vector<RankDisagreement::Entry> entries(pair.ids.size());
  double total = 0.0;
  for (std::size_t k = 0; k < pair.ids.size(); ++k) {
    entries[k] = {pair.ids[k], rx[k], ry[k], std::abs(rx[k] - ry[k])};
    total += entries[k].abs_diff;
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.abs_diff != b.abs_diff) return a.abs_diff > b.abs_diff;
    return a.id < b.id;
  });
  RankDisagreement out;
  out.top.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(top_k));
  out.mean_abs_diff =
      entries.empty() ? 0.0 : total / static_cast<double>(entries.size());
  return out;
}

struct Histogram {
  std::vector<double> edges;       // n_bins + 1 ascending edges
  std::vector<std::size_t> counts; // bins right-open except the last
};

/// Equal-width histogram over [min, max]. A zero-width range is widened to
/// one unit around the value.
inline Histogram density_summary(std::span<const double> values, std::size_t n_bins) {
  if (n_bins < 1) throw DomainError("density_summary: n_bins must be >= 1");
  if (values.empty()) throw DomainError("density_summary: empty values");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("density_summary: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) { lo -= 0.5; hi += 0.5; }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  Histogram h;
  h.edges.resize(n_bins + 1);
  for (std::size_t k = 0; k <= n_bins; ++k)
    h.edges[k] = lo + width * static_cast<double>(k);
  h.edges[n_bins] = hi;
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    auto bin = static_cast<std::size_t>(
        std::min(static_cast<double>(n_bins - 1),
                 std::max(0.0, std::floor((v - lo) / width))));
    ++h.counts[bin];
  }
  return h;
}

}  // namespace raschkit
