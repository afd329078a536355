#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace collage {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
// Lowercase hex of the low 32 bits of fnv1a64, zero padded to 8 characters.
std::string hex8(std::uint64_t h);

// Small portable generator so seeded outputs do not depend on the standard
// library's distribution implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();           // [0, 1)
  double normal();            // Box-Muller
  std::uint64_t below(std::uint64_t n);  // [0, n), unbiased

 private:
  std::uint64_t state_;
};

std::string to_lower(std::string s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
std::vector<double> normalized(std::vector<double> v);

}  // namespace collage
