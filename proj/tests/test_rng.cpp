#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ipdp/rng.hpp"

using namespace ipdp;

TEST_CASE("splitmix64 matches the reference stream") {
  // first output of the reference splitmix64 generator seeded with 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("mt19937_64 engine is the standard one") {
  Rng rng(5489);  // default mt19937_64 seed
  uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  CHECK(v == 9981545732273789042ULL);  // value pinned by the C++ standard
}

TEST_CASE("Rng determinism and bounds") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const uint64_t va = a.next_below(977);
    const uint64_t vb = b.next_below(977);
    all_equal = all_equal && va == vb;
    any_diff = any_diff || va != c.next_below(977);
    CHECK(va < 977);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("normal() sample moments") {
  Rng rng(7);
  const int n = 1000000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(stddev - 1.0) < 0.01);
}

TEST_CASE("counter_normal is order independent") {
  const uint64_t seed = 99;
  std::vector<uint64_t> idx(5000);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> forward(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) forward[i] = counter_normal(seed, idx[i]);
  Rng rng(1);
  rng.shuffle(idx);
  for (uint64_t i : idx) CHECK(counter_normal(seed, i) == forward[static_cast<size_t>(i)]);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng r1(5), r2(5);
  r1.shuffle(v);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
}
