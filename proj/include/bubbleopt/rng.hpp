#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace bubbleopt {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit key is the master seed and the upper half of the counter is a
/// stream id, so stream `i` produces the same sequence no matter which thread
/// draws it or in which order streams are visited. Satisfies
/// UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (next_ == 4) refill();
    return buffer_[next_++];
  }

  /// Raw block function, exposed for known-answer tests.
  static Block encrypt(Block counter, Key key);

 private:
  void refill();

  Key key_;
  Block counter_;
  Block buffer_{};
  int next_ = 4;
};

}  // namespace bubbleopt
