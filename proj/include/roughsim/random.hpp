#pragma once

#include <cstdint>
#include <random>

namespace roughsim {

/// Name written into artifact headers so saved surfaces document their stream.
inline constexpr const char* kPrngName = "mt19937_64+polar";

/// One step of the splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent child seed from a master seed.
///
/// The derivation is `splitmix64(splitmix64(master ^ stream_tag) + index)`, so
/// a record can be replayed from (master, stream, index) alone.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index);

/// Platform-independent random stream.
///
/// The standard distributions are implementation-defined, so uniforms are
/// built from the top 53 bits of mt19937_64 and normals use the Marsaglia
/// polar method.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal deviate.
  double normal();

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace roughsim
