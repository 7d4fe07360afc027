#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "raschkit/analysis.hpp"
#include "raschkit/crowd.hpp"
#include "raschkit/mml.hpp"
#include "test_util.hpp"

using namespace raschkit;
using Catch::Matchers::WithinAbs;

TEST_CASE("fit_mml validates config and pruning", "[mml]") {
  const auto m = testutil::random_matrix(5, 3, 1);
  MmlConfig bad;
  bad.quadrature_points = 0;
  CHECK_THROWS_AS(fit_mml(m, bad), DomainError);
  bad = MmlConfig{};
  bad.convergence_tol = 0.0;
  CHECK_THROWS_AS(fit_mml(m, bad), DomainError);

  const ResponseMatrix unpruned({"a", "b"}, {"x"}, {Cell::correct, Cell::missing});
  CHECK_THROWS_WITH(fit_mml(unpruned), Catch::Matchers::ContainsSubstring("not pruned"));
}

TEST_CASE("identical item columns get identical difficulties", "[mml]") {
  // every item sees the same responses, so symmetry forces equal estimates
  std::mt19937 gen(3);
  std::bernoulli_distribution coin(0.6);
  const int nj = 40, ni = 4;
  std::vector<std::string> subjects, items;
  for (int j = 0; j < nj; ++j) subjects.push_back("s" + std::to_string(j));
  for (int i = 0; i < ni; ++i) items.push_back("i" + std::to_string(i));
  std::vector<Cell> cells(nj * ni);
  for (int j = 0; j < nj; ++j) {
    const Cell c = coin(gen) ? Cell::correct : Cell::incorrect;
    for (int i = 0; i < ni; ++i) cells[j * ni + i] = c;
  }
  const auto fit = fit_mml(ResponseMatrix(subjects, items, cells));
  for (int i = 1; i < ni; ++i)
    CHECK_THAT(fit.difficulties[i], WithinAbs(fit.difficulties[0], 1e-6));
}

TEST_CASE("all-correct items stay finite and rank easiest", "[mml]") {
  auto m = testutil::random_matrix(80, 5, 7);
  // rebuild with a sixth, always-correct item
  std::vector<std::string> items = m.item_ids();
  items.push_back("easy");
  std::vector<Cell> cells;
  for (std::size_t j = 0; j < m.n_subjects(); ++j) {
    for (std::size_t i = 0; i < 5; ++i) cells.push_back(m.cell(j, i));
    cells.push_back(Cell::correct);
  }
  const auto fit = fit_mml(ResponseMatrix(m.subject_ids(), items, cells));
  REQUIRE(std::isfinite(fit.difficulties[5]));
  const double min_mixed =
      *std::min_element(fit.difficulties.begin(), fit.difficulties.begin() + 5);
  CHECK(fit.difficulties[5] < min_mixed);
}

TEST_CASE("score_map fixed points", "[mml]") {
  SECTION("no responses means the prior mode") {
    const ResponseMatrix m({"a", "b"}, {"x"}, {Cell::correct, Cell::missing});
    const auto thetas = score_map(m, std::vector<double>{0.0}, 1.0);
    CHECK(thetas[1] == 0.0);
  }
  SECTION("single correct answer solves theta = 1 - sigmoid(theta)") {
    // bisection oracle for the stationarity condition
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((1.0 - sigmoid(mid) - mid) > 0.0 ? lo : hi) = mid;
    }
    const double oracle = 0.5 * (lo + hi);
    CHECK_THAT(oracle, WithinAbs(0.401058137541547, 1e-9));

    const ResponseMatrix m({"a"}, {"x"}, {Cell::correct});
    const auto thetas = score_map(m, std::vector<double>{0.0}, 1.0);
    CHECK_THAT(thetas[0], WithinAbs(oracle, 1e-7));
  }
  SECTION("identical response rows give identical abilities") {
    const ResponseMatrix m({"a", "b"}, {"x", "y", "z"},
                           {Cell::correct, Cell::incorrect, Cell::correct,
                            Cell::correct, Cell::incorrect, Cell::correct});
    const auto thetas = score_map(m, std::vector<double>{-0.5, 0.2, 1.0}, 1.0);
    CHECK(thetas[0] == thetas[1]);
  }
  SECTION("bad arguments") {
    const ResponseMatrix m({"a"}, {"x"}, {Cell::correct});
    CHECK_THROWS_AS(score_map(m, std::vector<double>{0.0, 1.0}, 1.0), DomainError);
    CHECK_THROWS_AS(score_map(m, std::vector<double>{0.0}, 0.0), DomainError);
  }
}

TEST_CASE("penalized marginal likelihood trace never decreases", "[mml]") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto sim = simulate({.n_subjects = 20, .n_items = 10, .seed = seed});
    const auto pr = prune(sim.matrix);
    const auto fit = fit_mml(pr.matrix);
    REQUIRE(fit.loglik_trace.size() >= 2);
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
      CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-8);
  }
}

TEST_CASE("flipping all responses negates the fit", "[mml]") {
  const auto sim = simulate({.n_subjects = 60, .n_items = 10, .seed = 21});
  const auto pr = prune(sim.matrix);
  const auto fit = fit_mml(pr.matrix);
  const auto flipped_fit = fit_mml(pr.matrix.flipped());
  for (std::size_t i = 0; i < fit.difficulties.size(); ++i)
    CHECK_THAT(flipped_fit.difficulties[i], WithinAbs(-fit.difficulties[i], 1e-4));
  for (std::size_t j = 0; j < fit.abilities.size(); ++j)
    CHECK_THAT(flipped_fit.abilities[j], WithinAbs(-fit.abilities[j], 1e-4));
}

TEST_CASE("permuting items permutes the fitted difficulties", "[mml]") {
  const auto sim = simulate({.n_subjects = 50, .n_items = 8, .seed = 33});
  const auto m = prune(sim.matrix).matrix;
  MmlConfig cfg;
  cfg.convergence_tol = 1e-8;
  const auto fit = fit_mml(m, cfg);

  std::vector<std::size_t> perm(m.n_items());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 gen(9);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<std::size_t> all_subjects(m.n_subjects());
  std::iota(all_subjects.begin(), all_subjects.end(), 0);
  const auto permuted = m.select(all_subjects, perm);
  const auto fit2 = fit_mml(permuted, cfg);
  for (std::size_t k = 0; k < perm.size(); ++k)
    CHECK_THAT(fit2.difficulties[k], WithinAbs(fit.difficulties[perm[k]], 1e-6));
}

TEST_CASE("difficulties recover the generating parameters", "[mml]") {
  const auto sim = simulate({.n_subjects = 300, .n_items = 30, .seed = 101});
  const auto pr = prune(sim.matrix);
  const auto fit = fit_mml(pr.matrix);
  CHECK(fit.converged);
  CHECK(spearman(sim.bs, fit.difficulties) > 0.9);
  CHECK(spearman(sim.thetas, fit.abilities) > 0.75);
}

TEST_CASE("thread cap does not change the result", "[mml]") {
  const auto sim = simulate({.n_subjects = 70, .n_items = 9, .seed = 55});
  const auto m = prune(sim.matrix).matrix;
  MmlConfig one;
  one.threads = 1;
  MmlConfig four;
  four.threads = 4;
  const auto f1 = fit_mml(m, one);
  const auto f4 = fit_mml(m, four);
  CHECK(f1.difficulties == f4.difficulties);
  CHECK(f1.abilities == f4.abilities);
  CHECK(f1.loglik_trace == f4.loglik_trace);
}
