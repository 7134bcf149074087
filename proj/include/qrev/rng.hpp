#pragma once

#include <cstdint>
#include <random>

namespace qrev {

/// Reproducible random stream: identical (seed, stream) pairs give identical
/// draws. Replications use stream ids 0..R-1 under one master seed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double exponential(double rate);
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Seed from the QREV_SEED environment variable, or `fallback` when unset or invalid.
std::uint64_t default_seed(std::uint64_t fallback = 42);

}  // namespace qrev
