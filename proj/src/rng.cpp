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

#include "apdgain/errors.hpp"

namespace apdgain {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden ratio fraction
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3) - 1 fraction

inline void round_once(std::array<std::uint32_t, 4>& x,
                       const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  x = {hi1 ^ x[1] ^ key[0], lo1, hi0 ^ x[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> CounterRng::block(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> x = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    round_once(x, k);
  }
  return x;
}

void CounterRng::refill() {
  block_ = block(counter_, key_);
  pos_ = 0;
  // 64-bit increment over the low two counter words; the high two hold the
  // stream id and never change.
  if (++counter_[0] == 0) ++counter_[1];
}

double CounterRng::exponential(double rate) {
  if (!(rate > 0.0)) {
    throw ValidationError("invalid-parameter", "exponential rate must be > 0");
  }
  return -std::log(uniform()) / rate;
}

double CounterRng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t CounterRng::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean)) {
    throw ValidationError("invalid-parameter", "poisson mean must be >= 0");
  }
  if (mean == 0.0) return 0;
  // Product-of-uniforms for small means; for larger means split off chunks
  // of 500 to keep the running product away from underflow.
  std::uint64_t n = 0;
  double remaining = mean;
  while (remaining > 500.0) {
    // exp(-500) per chunk.
    double product = 1.0;
    const double threshold = std::exp(-500.0);
    std::uint64_t chunk = 0;
    for (;;) {
      product *= uniform();
      if (product < threshold) break;
      ++chunk;
    }
    n += chunk;
    remaining -= 500.0;
  }
  const double threshold = std::exp(-remaining);
  double product = uniform();
  while (product >= threshold) {
    ++n;
    product *= uniform();
  }
  return n;
}

}  // namespace apdgain
