/*
   Copyright 2026 apdgain authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#include "apdgain/rng.hpp"

#include <cmath>
#include <set>

#include "doctest.h"

#include "apdgain/errors.hpp"

using apdgain::CounterRng;

// Published known-answer vectors for the 4x32, 10-round counter generator.
TEST_CASE("counter block matches reference vectors") {
  {
    const auto r = CounterRng::block({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(r[0] == 0x6627e8d5u);
    CHECK(r[1] == 0xe169c58du);
    CHECK(r[2] == 0xbc57ac4cu);
    CHECK(r[3] == 0x9b00dbd8u);
  }
  {
    const auto r = CounterRng::block(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
        {0xffffffffu, 0xffffffffu});
    CHECK(r[0] == 0x408f276du);
    CHECK(r[1] == 0x41c83b0eu);
    CHECK(r[2] == 0xa20bc7c6u);
    CHECK(r[3] == 0x6d5451fdu);
  }
  {
    const auto r = CounterRng::block(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
        {0xa4093822u, 0x299f31d0u});
    CHECK(r[0] == 0xd16cfe09u);
    CHECK(r[1] == 0x94fdccebu);
    CHECK(r[2] == 0x5001e420u);
    CHECK(r[3] == 0x24126ea1u);
  }
}

TEST_CASE("streams are reproducible and distinct") {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  CounterRng c(42, 8);
  bool any_differ = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint32_t ua = a.next_u32();
    CHECK(ua == b.next_u32());
    if (ua != c.next_u32()) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("uniform lies strictly inside (0,1)") {
  CounterRng rng(1, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);   // the sample actually explores the interval
  CHECK(hi > 0.99);
}

TEST_CASE("uniform sample moments") {
  CounterRng rng(3, 1);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // sd(mean) = 1/sqrt(12 n) ~ 6.5e-4; allow 4 sigma
  CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("exponential matches its mean and rejects bad rates") {
  CounterRng rng(9, 0);
  const double rate = 2.5;
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(rate);
    CHECK(x >= 0.0);
    sum += x;
  }
  const double mean = sum / n;
  // sd(mean) = (1/rate)/sqrt(n)
  CHECK(std::abs(mean - 1.0 / rate) < 4.0 / (rate * std::sqrt(double(n))));
  CHECK_THROWS_AS((void)rng.exponential(0.0), apdgain::ValidationError);
  CHECK_THROWS_AS((void)rng.exponential(-1.0), apdgain::ValidationError);
}

TEST_CASE("normal sample moments") {
  CounterRng rng(11, 2);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("poisson matches mean and variance, including large means") {
  CounterRng rng(5, 3);
  for (const double mean : {0.1, 4.0, 1200.0}) {
    const int n = 50000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(mean));
      sum += x;
      sum2 += x * x;
    }
    const double m1 = sum / n;
    const double var = sum2 / n - m1 * m1;
    const double se = std::sqrt(mean / n);
    CHECK(std::abs(m1 - mean) < 5.0 * se);
    CHECK(std::abs(var - mean) < 0.05 * mean + 5.0 * se);
  }
}

TEST_CASE("distinct seeds give distinct streams") {
  CounterRng a(1, 0);
  CounterRng b(2, 0);
  std::set<std::uint32_t> seen;
  bool differ = false;
  for (int i = 0; i < 16; ++i) {
    if (a.next_u32() != b.next_u32()) differ = true;
  }
  CHECK(differ);
}
