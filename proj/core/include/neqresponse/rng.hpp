#pragma once

#include <cstdint>
#include <random>

namespace neqresponse {

/// Engine behind every sampled trajectory.
using Engine = std::mt19937_64;

/// Identifies one independent random stream. The engine is seeded from a
/// seed sequence mixing both words, so (seed, stream_index) alone fixes every
/// draw and distinct indices give decorrelated streams.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  Engine engine() const;
  RngStream substream(std::uint64_t index) const { return {seed, index}; }
};

/// Uniform double in (0, 1), never exactly 0 or 1.
double uniform_open(Engine& engine);

/// Exponential variate with the given rate.
double exponential(Engine& engine, double rate);

}  // namespace neqresponse
