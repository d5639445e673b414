#pragma once

// Deterministic, splittable random numbers.
//
// Each RngState is a xoshiro256** generator whose 256-bit state is expanded
// from (seed, stream_id) with SplitMix64. Substreams are addressed directly by
// index, so replicate i of a Monte Carlo run never depends on how many other
// replicates ran before it or on which thread ran it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_set>
#include <vector>

#include "error.hpp"

namespace biaslab {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    // Mix the stream id through its own SplitMix64 step before combining so
    // that (seed, i) and (seed + 1, i - 1) do not collide.
    std::uint64_t sm = stream_id;
    std::uint64_t key = seed ^ splitmix64(sm);
    for (auto& word : s_) word = splitmix64(key);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double next_std_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  friend bool operator==(const RngState& a, const RngState& b) {
    return a.seed_ == b.seed_ && a.stream_id_ == b.stream_id_ && a.s_ == b.s_ &&
           a.has_spare_ == b.has_spare_ && (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// O(1), order-free stream for replicate `replicate_index` of a run keyed by
/// `master_seed`.
inline RngState derive_substream(std::uint64_t master_seed, std::uint64_t replicate_index) {
  return RngState(master_seed, replicate_index + 1);
}

inline double normal_draw(RngState& rng, double mean, double sd) {
  return mean + sd * rng.next_std_normal();
}

inline std::vector<double> normal_draws(RngState& rng, std::size_t n, double mean, double sd) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) fail(ErrorKind::Parameter, "normal_draws: sd must be finite and non-negative");
  if (n == 0) fail(ErrorKind::Parameter, "normal_draws: n must be at least 1");
  std::vector<double> out(n);
  for (auto& v : out) v = normal_draw(rng, mean, sd);
  return out;
}

inline double uniform_draw(RngState& rng, double lo, double hi) {
  if (!(lo <= hi)) fail(ErrorKind::Parameter, "uniform_draw: lo must not exceed hi");
  if (lo == hi) return lo;
  const double v = lo + (hi - lo) * rng.next_unit();
  return v < hi ? v : lo;  // guard against rounding up to hi
}

/// Uniform integer in the closed range [lo, hi].
inline long long uniform_int(RngState& rng, long long lo, long long hi) {
  if (lo > hi) fail(ErrorKind::Parameter, "uniform_int: lo must not exceed hi");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long long>(rng.next_below(span));
}

/// k indices from [0, n_total). Without replacement uses a partial
/// Fisher-Yates shuffle when k is a large share of n_total, otherwise
/// Floyd's algorithm, so drawing 1000 rows from 500000 stays O(k).
inline std::vector<std::size_t> sample_indices(RngState& rng, std::size_t n_total, std::size_t k,
                                               bool replace) {
  std::vector<std::size_t> out;
  out.reserve(k);
  if (replace) {
    if (n_total == 0 && k > 0) fail(ErrorKind::Parameter, "sample_indices: empty population");
    for (std::size_t i = 0; i < k; ++i) out.push_back(rng.next_below(n_total));
    return out;
  }
  if (k > n_total) fail(ErrorKind::Parameter, "sample_indices: k exceeds population without replacement");
  if (k * 4 >= n_total) {
    std::vector<std::size_t> pool(n_total);
    for (std::size_t i = 0; i < n_total; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.next_below(n_total - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }
  std::unordered_set<std::size_t> seen;
  seen.reserve(k * 2);
  for (std::size_t j = n_total - k; j < n_total; ++j) {
    const std::size_t t = rng.next_below(j + 1);
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace biaslab
