#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "gpoid/rng.hpp"

using gpoid::rng::Stream;
using gpoid::rng::StreamKey;

TEST_CASE("streams from equal keys are identical") {
  StreamKey a(42), b(42);
  auto sa = a.stream();
  auto sb = b.stream();
  for (int i = 0; i < 100; ++i) CHECK(sa.next_u64() == sb.next_u64());
}

TEST_CASE("child keys differ from parent and from siblings") {
  StreamKey k(7);
  CHECK(k.child(0).value() != k.value());
  CHECK(k.child(0).value() != k.child(1).value());
  CHECK(k.child(0).child(1).value() != k.child(1).child(0).value());
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
  auto s = StreamKey(3).stream();
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = s.uniform_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("ranged uniform covers the interval") {
  auto s = StreamKey(4).stream();
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 20000; ++i) {
    const double u = s.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < -1.99);
  CHECK(hi > 2.99);
}

TEST_CASE("normal draws consume exactly two uniforms") {
  auto a = StreamKey(9).stream();
  auto b = StreamKey(9).stream();
  a.normal();
  b.next_u64();
  b.next_u64();
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("normal moments match N(0,1)") {
  auto s = StreamKey(11).stream();
  const int n = 200000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform output is equidistributed over bins") {
  auto s = StreamKey(13).stream();
  std::vector<int> bins(16, 0);
  const int n = 160000;
  for (int i = 0; i < n; ++i) bins[static_cast<int>(s.uniform() * 16)]++;
  for (int b : bins) {
    CHECK(b > 9500);
    CHECK(b < 10500);
  }
}
