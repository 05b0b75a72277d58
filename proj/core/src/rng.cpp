#include "manger/rng.hpp"

#include "manger/errors.hpp"

namespace manger {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(splitmix64(seed ^ splitmix64(stream_id ^ 0xD1B54A32D192ED03ULL))) {}

std::uint64_t RngStream::next_u64() {
  // Two rounds so that neighbouring counters decorrelate fully.
  const std::uint64_t c = counter_++;
  return splitmix64(splitmix64(key_ + c * 0x9E3779B97F4A7C15ULL) ^ key_);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw ContractError("RngStream::below requires n > 0");
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace manger
