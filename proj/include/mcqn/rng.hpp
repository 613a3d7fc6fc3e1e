#pragma once

#include <cstdint>
#include <random>

namespace mcqn {

// splitmix64 step; used only to derive independent stream seeds
[[nodiscard]] constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One engine per primitive sequence.  stream_tag enumerates the sequence
// families; (tag, index) pairs map to disjoint seeds for a fixed master seed,
// so changing one class's distribution never perturbs another's draws.
enum class stream_tag : uint64_t {
  interarrival = 1,
  service = 2,
  routing = 3,
  srbm_noise = 4,
};

[[nodiscard]] inline std::mt19937_64 make_stream(uint64_t master_seed, stream_tag tag,
                                                 uint64_t index) {
  uint64_t s = splitmix64(master_seed ^ splitmix64((static_cast<uint64_t>(tag) << 32) | index));
  // a second scramble decorrelates consecutive indices
  return std::mt19937_64(splitmix64(s));
}

}  // namespace mcqn
