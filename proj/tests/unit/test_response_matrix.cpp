#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "raschkit/response_matrix.hpp"

using namespace raschkit;

namespace {
ResponseMatrix make(std::vector<std::string> subjects, std::vector<std::string> items,
                    std::vector<int> cells) {
  std::vector<Cell> c(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k)
    c[k] = cells[k] < 0 ? Cell::missing : (cells[k] ? Cell::correct : Cell::incorrect);
  return ResponseMatrix(std::move(subjects), std::move(items), std::move(c));
}
}  // namespace

TEST_CASE("construction rejects duplicate ids and bad shapes", "[rp]") {
  CHECK_THROWS_AS(make({"a", "a"}, {"x"}, {1, 0}), DomainError);
  CHECK_THROWS_AS(make({"a"}, {"x", "x"}, {1, 0}), DomainError);
  CHECK_THROWS_AS(make({"a"}, {"x"}, {1, 0}), DomainError);
}

TEST_CASE("grading compares trimmed tokens exactly", "[rp]") {
  LabeledOutputs raw;
  raw.item_ids = {"q1", "q2", "q3"};
  raw.gold_labels = {"entailment", "neutral", "contradiction"};
  raw.predictions = {{"s1", "q1", "entailment"},
                     {"s1", "q2", "neutral "},
                     {"s2", "q1", "neutral"}};
  const auto m = grade(raw);
  REQUIRE(m.n_subjects() == 2);
  REQUIRE(m.n_items() == 3);
  CHECK(m.cell(0, 0) == Cell::correct);    // exact match
  CHECK(m.cell(0, 1) == Cell::correct);    // match after trim
  CHECK(m.cell(1, 0) == Cell::incorrect);  // mismatch
  CHECK(m.cell(0, 2) == Cell::missing);    // no prediction
  CHECK(m.cell(1, 1) == Cell::missing);
  // case is significant
  LabeledOutputs cased = raw;
  cased.predictions = {{"s1", "q1", "Entailment"}};
  CHECK(grade(cased).cell(0, 0) == Cell::incorrect);
}

TEST_CASE("grading rejects unknown items and duplicate predictions", "[rp]") {
  LabeledOutputs raw;
  raw.item_ids = {"q1"};
  raw.gold_labels = {"yes"};
  raw.predictions = {{"s1", "q9", "yes"}};
  CHECK_THROWS_WITH(grade(raw), Catch::Matchers::ContainsSubstring("q9"));
  raw.predictions = {{"s1", "q1", "yes"}, {"s1", "q1", "no"}};
  CHECK_THROWS_AS(grade(raw), DomainError);
}

TEST_CASE("grading is independent of prediction order", "[rp]") {
  LabeledOutputs raw;
  raw.item_ids = {"q1", "q2"};
  raw.gold_labels = {"a", "b"};
  raw.predictions = {{"s1", "q1", "a"}, {"s1", "q2", "x"}, {"s2", "q1", "a"}};
  const auto m1 = grade(raw);
  std::reverse(raw.predictions.begin(), raw.predictions.end());
  const auto m2 = grade(raw);
  // subject order follows first appearance, so compare cell-by-cell via ids
  for (std::size_t j = 0; j < m1.n_subjects(); ++j) {
    const auto& id = m1.subject_ids()[j];
    const auto it = std::find(m2.subject_ids().begin(), m2.subject_ids().end(), id);
    REQUIRE(it != m2.subject_ids().end());
    const auto j2 = static_cast<std::size_t>(it - m2.subject_ids().begin());
    for (std::size_t i = 0; i < m1.n_items(); ++i) CHECK(m1.cell(j, i) == m2.cell(j2, i));
  }
}

TEST_CASE("prune removes empty rows and columns and reports extremes", "[rp]") {
  SECTION("all-missing subject row is removed") {
    const auto m = make({"a", "b"}, {"x", "y"}, {1, 0, -1, -1});
    const auto r = prune(m);
    CHECK(r.matrix.n_subjects() == 1);
    CHECK(r.removed_subjects == std::vector<std::string>{"b"});
  }
  SECTION("matrix without missing cells is untouched") {
    const auto m = make({"a", "b"}, {"x", "y"}, {1, 0, 0, 1});
    const auto r = prune(m);
    CHECK(r.matrix == m);
    CHECK(r.removed_subjects.empty());
    CHECK(r.removed_items.empty());
  }
  SECTION("empty row and empty column vanish together at the fixed point") {
    // subject c and item z have no responses at all; one sweep removes both
    const auto m = make({"a", "b", "c"}, {"x", "y", "z"},
                        {1, 0, -1,
                         0, 1, -1,
                         -1, -1, -1});
    const auto r = prune(m);
    CHECK(r.matrix.n_subjects() == 2);
    CHECK(r.matrix.n_items() == 2);
    CHECK(r.removed_subjects == std::vector<std::string>{"c"});
    CHECK(r.removed_items == std::vector<std::string>{"z"});
    // idempotent
    const auto r2 = prune(r.matrix);
    CHECK(r2.matrix == r.matrix);
    CHECK(r2.removed_subjects.empty());
  }
  SECTION("all-correct and all-incorrect lines are reported but kept") {
    const auto m = make({"a", "b"}, {"x", "y"}, {1, 1, 1, 0});
    const auto r = prune(m);
    CHECK(r.matrix == m);
    CHECK(r.all_correct_items == std::vector<std::string>{"x"});
    CHECK(r.all_correct_subjects == std::vector<std::string>{"a"});
  }
  SECTION("fully pruned matrix is an error") {
    const auto m = make({"a"}, {"x"}, {-1});
    CHECK_THROWS_WITH(prune(m), Catch::Matchers::ContainsSubstring("fully pruned"));
  }
}

TEST_CASE("prune is idempotent on random matrices", "[rp]") {
  std::mt19937 gen(1234);
  std::uniform_int_distribution<int> cell(-1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::string> subjects, items;
    for (int j = 0; j < 6; ++j) subjects.push_back("s" + std::to_string(j));
    for (int i = 0; i < 5; ++i) items.push_back("i" + std::to_string(i));
    std::vector<int> cells(30);
    for (auto& c : cells) c = cell(gen);
    ResponseMatrix m;
    try {
      m = make(subjects, items, cells);
      const auto once = prune(m);
      const auto twice = prune(once.matrix);
      CHECK(twice.matrix == once.matrix);
      CHECK(is_pruned(once.matrix));
    } catch (const DomainError&) {
      // fully pruned draw; nothing to check
    }
  }
}
