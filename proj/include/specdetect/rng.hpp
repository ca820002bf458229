#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace specdetect {

// Reproducible random stream used by the contrastive sampler and the
// synthetic corpus generator. The contract is fixed so that draws can be
// replayed by an independent implementation:
//
//   engine   std::mt19937_64 seeded with one 64-bit value (its output
//            sequence is specified by the C++ standard)
//   unit()   (engine() >> 11) * 2^-53, uniform on [0, 1)
//   normal() Box-Muller: u1 = unit(), u2 = unit(),
//            sqrt(-2 ln(1 - u1)) * cos(2 pi u2); one normal per two draws
//
// Per-record streams use derive_stream_seed(seed, record_id).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double unit();
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// splitmix64(seed ^ fnv1a64(id))
std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view id) noexcept;

}  // namespace specdetect
