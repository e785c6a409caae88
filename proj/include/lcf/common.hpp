#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcf {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Input file could not be decoded.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Decoded data or configuration violates a documented invariant.
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed ^ mix64(a));
  s = mix64(s ^ mix64(b + 0x632be59bd9b4e019ull));
  return mix64(s ^ mix64(c + 0x1571b00fd3a936a5ull));
}

// mt19937_64 plus portable draw mappings. std::uniform_* distributions and
// std::shuffle are implementation-defined, so the mappings live here and the
// bit stream is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // [0, n), rejection sampled
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace lcf
