#include "qrev/rng.hpp"

#include <cstdlib>
#include <string>

namespace qrev {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x71726576u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double RngStream::uniform() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  double u = d(engine_);
  while (u == 0.0) u = d(engine_);
  return u;
}

double RngStream::exponential(double rate) {
  std::exponential_distribution<double> d(rate);
  return d(engine_);
}

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("QREV_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    return used == std::string(env).size() ? v : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace qrev
