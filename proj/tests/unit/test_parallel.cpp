#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "raschkit/parallel.hpp"
#include "raschkit/rng.hpp"

using namespace raschkit;

TEST_CASE("for_blocks covers every index exactly once", "[parallel]") {
  const std::size_t n = 1000;
  std::vector<int> hits(n, 0);
  for_blocks(n, 64, 4, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) ++hits[k];
  });
  for (std::size_t k = 0; k < n; ++k) REQUIRE(hits[k] == 1);
}

TEST_CASE("block reductions are bitwise identical across thread counts", "[parallel]") {
  const std::size_t n = 5000, block = 64;
  const auto key = rng::key_of(99, rng::tag_theta_draw);
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) values[k] = rng::normal(key, k) * 1e3;

  auto reduce = [&](unsigned threads) {
    std::vector<double> partial(block_count(n, block), 0.0);
    for_blocks(n, block, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
      double acc = 0.0;
      for (std::size_t k = begin; k < end; ++k) acc += values[k];
      partial[b] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
  };

  const double serial = reduce(1);
  CHECK(reduce(2) == serial);
  CHECK(reduce(4) == serial);
  CHECK(reduce(16) == serial);
}

TEST_CASE("for_blocks tolerates empty input", "[parallel]") {
  int calls = 0;
  for_blocks(0, 64, 4, [&](std::size_t, std::size_t, std::size_t) { ++calls; });
  CHECK(calls == 0);
}
