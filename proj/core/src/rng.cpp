#include "neqresponse/rng.hpp"

#include <cmath>

namespace neqresponse {

Engine RngStream::engine() const {
  std::seed_seq sequence{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream_index),
                         std::uint32_t(stream_index >> 32), 0x6e657172u};
  return Engine(sequence);
}

double uniform_open(Engine& engine) {
  // 53 random bits, shifted by half an ulp away from zero.
  return (double(engine() >> 11) + 0.5) * 0x1.0p-53;
}

double exponential(Engine& engine, double rate) { return -std::log(uniform_open(engine)) / rate; }

}  // namespace neqresponse
