// Counter-based random streams.
//
// Every draw is a pure function of (master_seed, path_index, stream, draw
// index), so paths can be generated in any order on any number of threads
// and still come out bit-identical.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace azema {

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an unrelated master seed for auxiliary draws (oracles, uniforms)
/// so they never share a stream with the primary paths.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

/// Philox4x32-10 (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Sequential view over one counter-based stream. Cheap to construct; holds
/// no shared state. Block b of stream s for path p is
/// Philox(counter = {p_lo, p_hi, b_lo, (s << 16) | b_hi}, key = master_seed).
class RandomStream {
 public:
  RandomStream(SeedSpec seed, std::uint16_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed.master_seed),
             static_cast<std::uint32_t>(seed.master_seed >> 32)},
        path_lo_(static_cast<std::uint32_t>(seed.path_index)),
        path_hi_(static_cast<std::uint32_t>(seed.path_index >> 32)),
        stream_(stream) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    if (have_pair_) {
      have_pair_ = false;
      return pending_uniform_;
    }
    const auto words = next_block();
    pending_uniform_ = to_unit(words[2], words[3]);
    have_pair_ = true;
    return to_unit(words[0], words[1]);
  }

  /// Standard normal via Box-Muller; one Philox block yields two normals.
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return pending_normal_;
    }
    const auto words = next_block();
    const double u1 = to_unit(words[0], words[1]);
    const double u2 = to_unit(words[2], words[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    pending_normal_ = r * std::sin(theta);
    have_normal_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  Philox4x32::Counter next_block() {
    const Philox4x32::Counter ctr{
        path_lo_, path_hi_, static_cast<std::uint32_t>(block_),
        (static_cast<std::uint32_t>(stream_) << 16) |
            static_cast<std::uint32_t>((block_ >> 32) & 0xFFFFu)};
    ++block_;
    return Philox4x32::block(ctr, key_);
  }

  static double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
  std::uint16_t stream_;
  std::uint64_t block_ = 0;
  bool have_normal_ = false;
  double pending_normal_ = 0.0;
  bool have_pair_ = false;
  double pending_uniform_ = 0.0;
};

}  // namespace azema
