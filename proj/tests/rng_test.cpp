#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "osfr/rng.hpp"

using osfr::CounterRng;

TEST_CASE("same key gives the same stream") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("split streams are independent of consumption order") {
  const CounterRng root(7);
  CounterRng first = root.split(1);
  const auto x = first();
  CounterRng other = root.split(2);
  for (int i = 0; i < 10; ++i) other();
  CHECK(root.split(1)() == x);
  CHECK(root.split("img_a").key() == root.split("img_a").key());
  CHECK(root.split("img_a").key() != root.split("img_b").key());
  CHECK(root.split(1).key() != root.split(2).key());
}

TEST_CASE("uniform01 stays in [0,1) and has mean near one half") {
  CounterRng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have unit variance") {
  CounterRng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below is within range and hits every value") {
  CounterRng rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("shuffle permutes") {
  CounterRng rng(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK(!std::is_sorted(v.begin(), v.end()));
}
