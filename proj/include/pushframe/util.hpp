#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace pushframe {

// 64-bit FNV-1a over a byte string; stable across platforms.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: the stream is a pure function of the key, so a
// sample keyed by (seed, t, i, channel) is the same no matter which worker
// draws it or in which order. Satisfies UniformRandomBitGenerator.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  explicit KeyedRng(std::uint64_t key) noexcept : key_(splitmix64(key)) {}
  template <typename... Parts>
  static KeyedRng from(std::uint64_t seed, Parts... parts) noexcept {
    std::uint64_t k = splitmix64(seed);
    ((k = splitmix64(k ^ static_cast<std::uint64_t>(parts))), ...);
    return KeyedRng(k);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  // Uniform integer in [0, bound) by rejection, independent of the standard
  // library's distribution implementation.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t v;
    do {
      v = (*this)();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Static block partition of [0, count) over `workers` threads. fn(index) must
// only write to state owned by its index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(resolve_workers(workers), count);
  if (w <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(w);
  for (std::size_t b = 0; b < w; ++b) {
    const std::size_t lo = count * b / w;
    const std::size_t hi = count * (b + 1) / w;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t k = lo; k < hi; ++k) fn(k);
    });
  }
}

}  // namespace pushframe
