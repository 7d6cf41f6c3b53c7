#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ticketlab {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3", SC'11). Output depends only on (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Derives a 64-bit stream identifier from a tag and up to two indices, so that
/// e.g. ("thm1", seed, trial) streams never depend on the order they are drawn in.
std::uint64_t stream_id(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0);

/// A reproducible random stream: key = seed, counter = (block index, stream id).
/// Normal deviates use Box-Muller so the sequence is identical across standard
/// libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);
  RandomStream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0)
      : RandomStream(seed, stream_id(tag, a, b)) {}

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// +1 or -1 with equal probability.
  double sign();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  std::size_t used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ticketlab
