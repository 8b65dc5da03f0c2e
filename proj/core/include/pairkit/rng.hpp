#pragma once

#include <cstdint>
#include <random>

namespace pairkit {

// SplitMix64 (Steele, Lea, Flood). Used only to derive independent substream
// seeds from one master seed, so that per-channel and per-scan-point streams
// are reproducible no matter how the work is chunked across threads.
struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

// Substream `stream_id` of master seed `seed`. The engine documents its
// stream ids (pairs = 0, darks A = 1, darks B = 2, scan point i = 16 + i).
inline std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t stream_id) {
  SplitMix64 mix{seed};
  mix.next();
  mix.state += 0xD1B54A32D192ED03ULL * (stream_id + 1);
  std::uint64_t s0 = mix.next();
  std::uint64_t s1 = mix.next();
  std::seed_seq seq{static_cast<std::uint32_t>(s0), static_cast<std::uint32_t>(s0 >> 32),
                    static_cast<std::uint32_t>(s1), static_cast<std::uint32_t>(s1 >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace pairkit
