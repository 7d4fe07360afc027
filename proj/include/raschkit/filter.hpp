#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "raschkit/error.hpp"
#include "raschkit/response_matrix.hpp"

namespace raschkit {

/// The six training-set subsampling strategies. AVI/AVO/UB/LB threshold the
/// learned difficulty; PCUB/PCLB threshold per-item percent-correct.
enum class StrategyKind { avi, avo, ub, lb, pcub, pclb };

inline StrategyKind strategy_from_name(const std::string& name) {
  if (name == "AVI" || name == "avi") return StrategyKind::avi;
  if (name == "AVO" || name == "avo") return StrategyKind::avo;
  if (name == "UB" || name == "ub") return StrategyKind::ub;
  if (name == "LB" || name == "lb") return StrategyKind::lb;
  if (name == "PCUB" || name == "pcub") return StrategyKind::pcub;
  if (name == "PCLB" || name == "pclb") return StrategyKind::pclb;
  throw DomainError("unknown strategy '" + name + "' (expected AVI, AVO, UB, LB, PCUB or PCLB)");
}

inline const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::avi: return "AVI";
    case StrategyKind::avo: return "AVO";
    case StrategyKind::ub: return "UB";
    case StrategyKind::lb: return "LB";
    case StrategyKind::pcub: return "PCUB";
    default: return "PCLB";
  }
}

enum class ValueKind { difficulty, percent_correct };

inline ValueKind value_kind_for(StrategyKind k) {
  return (k == StrategyKind::pcub || k == StrategyKind::pclb) ? ValueKind::percent_correct
                                                              : ValueKind::difficulty;
}

struct FilterStrategy {
  StrategyKind kind;
  double threshold = 0.0;
};

/// Per-item values tagged with what they are, so a strategy can never be
/// applied to the wrong statistic.
struct ItemValues {
  ValueKind kind = ValueKind::difficulty;
  std::vector<std::string> ids;
  std::vector<double> values;
};

struct FilterReport {
  FilterStrategy strategy;
  std::vector<std::string> retained_item_ids;  // input order
  struct Row {
    std::string id;
    double value;
    bool retained;
  };
  std::vector<Row> per_item;  // input order
  double retained_fraction = 0.0;
};

/// Strict-inequality retention predicates:
///   AVI |b| < d, AVO |b| > d, UB b < d, LB b > d, PCUB pc < d, PCLB pc > d.
inline bool retains(StrategyKind kind, double value, double threshold) {
  switch (kind) {
    case StrategyKind::avi: return std::abs(value) < threshold;
    case StrategyKind::avo: return std::abs(value) > threshold;
    case StrategyKind::ub: return value < threshold;
    case StrategyKind::lb: return value > threshold;
    case StrategyKind::pcub: return value < threshold;
    default: return value > threshold;  // pclb
  }
}

namespace detail {
inline void check_values(const ItemValues& items, StrategyKind kind) {
  if (items.ids.size() != items.values.size())
    throw DomainError("filter: ids and values length mismatch");
  if (items.ids.empty()) throw DomainError("filter: no items");
  const ValueKind expected = value_kind_for(kind);
  if (items.kind != expected)
    throw DomainError(std::string("filter: strategy ") + strategy_name(kind) +
                      (expected == ValueKind::difficulty
                           ? " expects difficulties, got percent-correct values"
                           : " expects percent-correct values, got difficulties"));
  for (double v : items.values) {
    if (!std::isfinite(v)) throw DomainError("filter: non-finite item value");
    if (items.kind == ValueKind::percent_correct && !(v >= 0.0 && v <= 1.0))
      throw DomainError("filter: percent-correct value outside [0, 1]");
  }
}
}  // namespace detail

inline FilterReport apply_filter(const ItemValues& items, FilterStrategy strategy) {
  detail::check_values(items, strategy.kind);
  if (!std::isfinite(strategy.threshold))
    throw DomainError("filter: non-finite threshold");
  if (value_kind_for(strategy.kind) == ValueKind::percent_correct &&
      !(strategy.threshold >= 0.0 && strategy.threshold <= 1.0))
    throw DomainError("filter: percent-correct threshold outside [0, 1]");

  FilterReport report;
  report.strategy = strategy;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < items.ids.size(); ++k) {
    const bool keep = retains(strategy.kind, items.values[k], strategy.threshold);
    report.per_item.push_back({items.ids[k], items.values[k], keep});
    if (keep) {
      report.retained_item_ids.push_back(items.ids[k]);
      ++kept;
    }
  }
  report.retained_fraction =
      static_cast<double>(kept) / static_cast<double>(items.ids.size());
  return report;
}

/// Fraction of non-missing responses answered correctly, per item. Every item
/// must have at least one response.
inline std::vector<double> percent_correct(const ResponseMatrix& m) {
  std::vector<double> pc(m.n_items(), 0.0);
  std::vector<std::size_t> n(m.n_items(), 0);
  for (std::size_t j = 0; j < m.n_subjects(); ++j)
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      const Cell c = m.cell(j, i);
      if (c == Cell::missing) continue;
      ++n[i];
      if (c == Cell::correct) pc[i] += 1.0;
    }
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    if (n[i] == 0)
      throw DomainError("percent_correct: item '" + m.item_ids()[i] + "' has no responses");
    pc[i] /= static_cast<double>(n[i]);
  }
  return pc;
}

inline ItemValues percent_correct_values(const ResponseMatrix& m) {
  return ItemValues{ValueKind::percent_correct, m.item_ids(), percent_correct(m)};
}

namespace detail {

// Retention counts are monotone in the threshold once values are reduced to a
// single sort key: |b| for AVI/AVO, the raw value otherwise. Lower-tail
// strategies retain keys strictly below d, upper-tail ones strictly above.
inline bool lower_tail(StrategyKind kind) {
  return kind == StrategyKind::avi || kind == StrategyKind::ub ||
         kind == StrategyKind::pcub;
}

inline std::vector<double> sort_keys(const ItemValues& items, StrategyKind kind) {
  std::vector<double> keys = items.values;
  if (kind == StrategyKind::avi || kind == StrategyKind::avo)
    for (double& v : keys) v = std::abs(v);
  std::sort(keys.begin(), keys.end());
  return keys;
}

// Threshold putting exactly the k smallest keys strictly below it, if the
// sorted keys allow one; pc thresholds must stay inside [0, 1].
inline std::optional<double> lower_cut(const std::vector<double>& keys, std::size_t k,
                                       bool is_pc) {
  const std::size_t n = keys.size();
  if (k == 0) return std::nullopt;
  if (k == n) {
    if (!is_pc) return keys[n - 1] + 1.0;
    if (keys[n - 1] < 1.0) return 0.5 * (keys[n - 1] + 1.0);
    return std::nullopt;
  }
  if (keys[k - 1] < keys[k]) return 0.5 * (keys[k - 1] + keys[k]);
  return std::nullopt;
}

// Threshold putting exactly the k largest keys strictly above it.
inline std::optional<double> upper_cut(const std::vector<double>& keys, std::size_t k,
                                       bool is_pc) {
  const std::size_t n = keys.size();
  if (k == 0) return std::nullopt;
  if (k == n) {
    if (!is_pc) return keys[0] - 1.0;
    if (keys[0] > 0.0) return 0.5 * keys[0];
    return std::nullopt;
  }
  if (keys[n - k - 1] < keys[n - k]) return 0.5 * (keys[n - k - 1] + keys[n - k]);
  return std::nullopt;
}

}  // namespace detail

/// Finds the threshold whose retained fraction is the largest not exceeding
/// target_fraction. Ties at the cut make exact counts unreachable; the search
/// then falls back to the next smaller achievable (under-full) set.
inline FilterStrategy sweep_to_fraction(const ItemValues& items, StrategyKind kind,
                                        double target_fraction) {
  detail::check_values(items, kind);
  if (!(target_fraction > 0.0 && target_fraction <= 1.0))
    throw DomainError("sweep: target_fraction must be in (0, 1]");

  const std::size_t n = items.ids.size();
  const auto keys = detail::sort_keys(items, kind);
  const bool is_pc = value_kind_for(kind) == ValueKind::percent_correct;
  const auto target_count = static_cast<std::size_t>(
      std::floor(target_fraction * static_cast<double>(n) + 1e-9));

  for (std::size_t k = std::min(target_count, n); k >= 1; --k) {
    const auto cut = detail::lower_tail(kind) ? detail::lower_cut(keys, k, is_pc)
                                              : detail::upper_cut(keys, k, is_pc);
    if (cut) return FilterStrategy{kind, *cut};
  }
  throw DomainError(std::string("sweep: no ") + strategy_name(kind) +
                    " threshold retains a nonempty set within the target fraction");
}

}  // namespace raschkit
