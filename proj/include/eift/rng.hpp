#pragma once
// Seed derivation and small sampling helpers shared by every generator.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace eift {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a root seed and a path of indices, e.g.
/// (global_seed, example_index, attempt). Independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

/// FNV-1a, used to turn request ids into seed material.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

/// Draws an index with probability proportional to `weights`.
inline std::size_t weighted_index(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("weighted_index: weights sum to zero");
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u a hair above the last bucket.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return 0;
}

/// Categorical draw under a sampling temperature: probabilities are
/// reshaped as p^(1/T) and renormalized. T == 0 returns the modal branch
/// (lowest index wins ties), so it consumes no randomness.
inline std::size_t tempered_choice(Rng& rng, std::span<const double> probs, double temperature) {
  if (temperature <= 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[best]) best = i;
    return best;
  }
  if (temperature == 1.0) return weighted_index(rng, probs);
  std::vector<double> reshaped(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    reshaped[i] = probs[i] > 0.0 ? std::pow(probs[i], 1.0 / temperature) : 0.0;
  return weighted_index(rng, reshaped);
}

inline bool tempered_bernoulli(Rng& rng, double p, double temperature) {
  const double probs[2] = {p, 1.0 - p};
  return tempered_choice(rng, probs, temperature) == 0;
}

}  // namespace eift
