#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slu {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AnnotationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VocabMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedOperation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StreamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used to derive child seeds and to fingerprint vocabularies.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t child_seed(std::uint64_t seed, std::string_view component) {
  std::uint64_t h = fnv1a(component);
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

// Deterministic RNG. All stochastic behaviour in the repo flows through this
// class so that runs are bit-reproducible for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return (eng_() >> 11) * 0x1.0p-53; }

  // [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw ConfigError("uniform_int: n must be positive");
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller; draws two uniforms per call, no cached spare.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Rng child(std::string_view component) { return Rng(child_seed(eng_(), component)); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace slu
