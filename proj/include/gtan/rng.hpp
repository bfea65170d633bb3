#pragma once

#include <cstdint>
#include <random>

namespace gtan {

// Every random draw derives from one run seed; each purpose gets its own
// stream so changing, say, pair sampling never perturbs initialization.
enum class Stream : std::uint64_t {
  Split = 1,
  Init = 2,
  Shuffle = 3,
  Pairs = 4,
  Synthetic = 5,
  WordEmbeddings = 6,
  Gradcheck = 7,
};

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

}  // namespace gtan
