#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace mrx {

/// Seeded PRNG with a fully specified output mapping, so draws are identical
/// across standard library implementations. State round-trips through text.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream from a base seed and a stream id.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool coin(double p_true) { return uniform() < p_true; }

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mrx
