#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "raschkit/error.hpp"

namespace raschkit {

enum class Cell : std::int8_t { incorrect = 0, correct = 1, missing = -1 };

/// Subjects x items grid of graded binary responses with optional missing
/// cells. Immutable after construction; safe to share across threads.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  ResponseMatrix(std::vector<std::string> subject_ids,
                 std::vector<std::string> item_ids, std::vector<Cell> cells)
      : subjects_(std::move(subject_ids)),
        items_(std::move(item_ids)),
        cells_(std::move(cells)) {
    if (cells_.size() != subjects_.size() * items_.size())
      throw DomainError("response matrix: cell count does not match dimensions");
    check_unique(subjects_, "subject");
    check_unique(items_, "item");
  }

  std::size_t n_subjects() const { return subjects_.size(); }
  std::size_t n_items() const { return items_.size(); }
  const std::vector<std::string>& subject_ids() const { return subjects_; }
  const std::vector<std::string>& item_ids() const { return items_; }

  Cell cell(std::size_t subject, std::size_t item) const {
    return cells_[subject * items_.size() + item];
  }
  bool missing(std::size_t subject, std::size_t item) const {
    return cell(subject, item) == Cell::missing;
  }
  bool correct(std::size_t subject, std::size_t item) const {
    return cell(subject, item) == Cell::correct;
  }

  std::size_t n_responses() const {
    std::size_t n = 0;
    for (Cell c : cells_)
      if (c != Cell::missing) ++n;
    return n;
  }

  std::vector<std::size_t> subject_response_counts() const {
    std::vector<std::size_t> counts(n_subjects(), 0);
    for (std::size_t j = 0; j < n_subjects(); ++j)
      for (std::size_t i = 0; i < n_items(); ++i)
        if (!missing(j, i)) ++counts[j];
    return counts;
  }

  std::vector<std::size_t> item_response_counts() const {
    std::vector<std::size_t> counts(n_items(), 0);
    for (std::size_t j = 0; j < n_subjects(); ++j)
      for (std::size_t i = 0; i < n_items(); ++i)
        if (!missing(j, i)) ++counts[i];
    return counts;
  }

  /// New matrix restricted to the given subject/item indices, in the given
  /// order. Indices must be valid and duplicate-free.
  ResponseMatrix select(const std::vector<std::size_t>& subject_idx,
                        const std::vector<std::size_t>& item_idx) const {
    std::vector<std::string> subs, its;
    subs.reserve(subject_idx.size());
    its.reserve(item_idx.size());
    for (std::size_t j : subject_idx) subs.push_back(subjects_.at(j));
    for (std::size_t i : item_idx) its.push_back(items_.at(i));
    std::vector<Cell> cells;
    cells.reserve(subject_idx.size() * item_idx.size());
    for (std::size_t j : subject_idx)
      for (std::size_t i : item_idx) cells.push_back(cell(j, i));
    return ResponseMatrix(std::move(subs), std::move(its), std::move(cells));
  }

  /// All items, subjects restricted to the given indices.
  ResponseMatrix select_subjects(const std::vector<std::size_t>& subject_idx) const {
    std::vector<std::size_t> all_items(n_items());
    for (std::size_t i = 0; i < n_items(); ++i) all_items[i] = i;
    return select(subject_idx, all_items);
  }

  /// Every cell flipped: correct <-> incorrect, missing stays missing.
  ResponseMatrix flipped() const {
    std::vector<Cell> flipped_cells(cells_.size());
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      switch (cells_[k]) {
        case Cell::correct: flipped_cells[k] = Cell::incorrect; break;
        case Cell::incorrect: flipped_cells[k] = Cell::correct; break;
        default: flipped_cells[k] = Cell::missing;
      }
    }
    return ResponseMatrix(subjects_, items_, std::move(flipped_cells));
  }

  bool operator==(const ResponseMatrix&) const = default;

 private:
  static void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second)
        throw DomainError(std::string("duplicate ") + what + " id '" + id + "'");
  }

  std::vector<std::string> subjects_;
  std::vector<std::string> items_;
  std::vector<Cell> cells_;  // row-major, subjects x items
};

/// Raw labeled outputs before grading: per-item gold labels plus per
/// (subject, item) predicted label tokens.
struct LabeledOutputs {
  std::vector<std::string> item_ids;     // defines item order
  std::vector<std::string> gold_labels;  // aligned with item_ids
  struct Prediction {
    std::string subject;
    std::string item;
    std::string label;
  };
  std::vector<Prediction> predictions;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n\f\v";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}
}  // namespace detail

/// Grades predictions against gold labels. A cell is correct iff the
/// prediction token equals the gold token after whitespace trimming (no case
/// folding); (subject, item) pairs without a prediction are missing. Subjects
/// appear in order of first appearance; items keep the gold-file order.
inline ResponseMatrix grade(const LabeledOutputs& raw) {
  if (raw.item_ids.size() != raw.gold_labels.size())
    throw DomainError("grade: item_ids and gold_labels length mismatch");
  std::unordered_map<std::string, std::size_t> item_index;
  for (std::size_t i = 0; i < raw.item_ids.size(); ++i)
    if (!item_index.emplace(raw.item_ids[i], i).second)
      throw DomainError("grade: duplicate item id '" + raw.item_ids[i] + "'");

  std::vector<std::string> subjects;
  std::unordered_map<std::string, std::size_t> subject_index;
  for (const auto& p : raw.predictions) {
    if (!item_index.count(p.item))
      throw DomainError("grade: unknown item id '" + p.item + "' in predictions");
    if (subject_index.emplace(p.subject, subjects.size()).second)
      subjects.push_back(p.subject);
  }

  const std::size_t n_items = raw.item_ids.size();
  std::vector<Cell> cells(subjects.size() * n_items, Cell::missing);
  for (const auto& p : raw.predictions) {
    const std::size_t j = subject_index.at(p.subject);
    const std::size_t i = item_index.at(p.item);
    if (cells[j * n_items + i] != Cell::missing)
      throw DomainError("grade: duplicate prediction for subject '" + p.subject +
                        "', item '" + p.item + "'");
    const bool ok = detail::trim(p.label) == detail::trim(raw.gold_labels[i]);
    cells[j * n_items + i] = ok ? Cell::correct : Cell::incorrect;
  }
  return ResponseMatrix(std::move(subjects), raw.item_ids, std::move(cells));
}

struct PruneResult {
  ResponseMatrix matrix;
  std::vector<std::string> removed_subjects;
  std::vector<std::string> removed_items;
  // Degenerate but retained rows/columns; estimators handle them via priors.
  std::vector<std::string> all_correct_subjects;
  std::vector<std::string> all_incorrect_subjects;
  std::vector<std::string> all_correct_items;
  std::vector<std::string> all_incorrect_items;
};

/// Removes subjects and items with zero non-missing cells, iterating until a
/// fixed point. All-correct/all-incorrect rows and columns are reported but
/// kept. Idempotent.
inline PruneResult prune(const ResponseMatrix& m) {
  const std::size_t nj = m.n_subjects(), ni = m.n_items();
  std::vector<bool> keep_subject(nj, true), keep_item(ni, true);

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < nj; ++j) {
      if (!keep_subject[j]) continue;
      std::size_t responses = 0;
      for (std::size_t i = 0; i < ni; ++i)
        if (keep_item[i] && !m.missing(j, i)) ++responses;
      if (responses == 0) {
        keep_subject[j] = false;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < ni; ++i) {
      if (!keep_item[i]) continue;
      std::size_t responses = 0;
      for (std::size_t j = 0; j < nj; ++j)
        if (keep_subject[j] && !m.missing(j, i)) ++responses;
      if (responses == 0) {
        keep_item[i] = false;
        changed = true;
      }
    }
  }

  PruneResult out;
  std::vector<std::size_t> subject_idx, item_idx;
  for (std::size_t j = 0; j < nj; ++j) {
    if (keep_subject[j]) subject_idx.push_back(j);
    else out.removed_subjects.push_back(m.subject_ids()[j]);
  }
  for (std::size_t i = 0; i < ni; ++i) {
    if (keep_item[i]) item_idx.push_back(i);
    else out.removed_items.push_back(m.item_ids()[i]);
  }
  if (subject_idx.empty() || item_idx.empty())
    throw DomainError("prune: matrix fully pruned (no responses left)");
  out.matrix = m.select(subject_idx, item_idx);

  const auto& r = out.matrix;
  for (std::size_t j = 0; j < r.n_subjects(); ++j) {
    std::size_t n = 0, c = 0;
    for (std::size_t i = 0; i < r.n_items(); ++i)
      if (!r.missing(j, i)) { ++n; c += r.correct(j, i); }
    if (c == n) out.all_correct_subjects.push_back(r.subject_ids()[j]);
    if (c == 0) out.all_incorrect_subjects.push_back(r.subject_ids()[j]);
  }
  for (std::size_t i = 0; i < r.n_items(); ++i) {
    std::size_t n = 0, c = 0;
    for (std::size_t j = 0; j < r.n_subjects(); ++j)
      if (!r.missing(j, i)) { ++n; c += r.correct(j, i); }
    if (c == n) out.all_correct_items.push_back(r.item_ids()[i]);
    if (c == 0) out.all_incorrect_items.push_back(r.item_ids()[i]);
  }
  return out;
}

/// True when every subject and every item has at least one response — the
/// precondition both estimators require.
inline bool is_pruned(const ResponseMatrix& m) {
  if (m.n_subjects() == 0 || m.n_items() == 0) return false;
  for (std::size_t n : m.subject_response_counts())
    if (n == 0) return false;
  for (std::size_t n : m.item_response_counts())
    if (n == 0) return false;
  return true;
}

}  // namespace raschkit
