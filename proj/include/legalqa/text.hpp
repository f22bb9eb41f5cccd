#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace legalqa {

/// Lowercases, trims, and collapses internal whitespace runs to one space.
/// This is the canonical node-id function.
std::string normalize_label(std::string_view text);

/// Lowercase alphanumeric tokens in order of appearance.
std::vector<std::string> tokenize(std::string_view text);
std::set<std::string> token_set(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Case-insensitive substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Removes every case-insensitive occurrence of `needle`.
std::string erase_ci(std::string_view text, std::string_view needle);

/// Collapses whitespace and tidies spacing before punctuation.
std::string tidy_spacing(std::string_view text);

/// FNV-1a 64-bit, with the seed folded into the offset basis.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Seeded 64-bit generator with platform-independent derived draws
/// (std::*_distribution output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform index in [0, n); n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  /// Inclusive integer range.
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace legalqa
