// Deterministic random streams shared by data generation, training and sweeps.
// All draws go through hand-rolled conversions (no std::*_distribution) so the
// produced streams are identical across standard-library implementations.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace satl::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stable seed derivation: mixes the base seed with a salt sequence so that
// independent streams (model init, masking, grid cells, ...) never collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salts) noexcept {
  std::uint64_t state = base ^ 0xA5A5A5A55A5A5A5Aull;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t salt : salts) {
    state ^= salt + 0x9E3779B97F4A7C15ull + (state << 6) + (state >> 2);
    out = splitmix64(state);
  }
  return out;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform01(Engine& engine) noexcept {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1].
inline double uniform01_open_low(Engine& engine) noexcept {
  return static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller on the uniform stream above.
inline double gaussian(Engine& engine) noexcept {
  const double u1 = uniform01_open_low(engine);
  const double u2 = uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform index in [0, bound). bound must be > 0.
inline std::uint64_t uniform_index(Engine& engine, std::uint64_t bound) noexcept {
  return engine() % bound;
}

// Fisher-Yates; deterministic given the engine state.
template <typename Container>
void shuffle(Container& values, Engine& engine) {
  if (values.size() < 2) return;
  for (std::size_t i = values.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(engine, i + 1));
    std::swap(values[i], values[j]);
  }
}

}  // namespace satl::rng
