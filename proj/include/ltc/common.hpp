#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltc {

using Vec = std::vector<double>;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Minimal row-major dense matrix. The nn kernels are written directly
// against this layout so the accumulation order stays explicit.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return a.size(); }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Named sub-stream kinds hashed together with the master seed, so every
// consumer (each env, the shuffler, eval rollouts, ...) owns an independent
// generator and adding a consumer never shifts the draws of another.
enum class Stream : std::uint64_t {
  kInit = 1,
  kEnv = 2,
  kActionNoise = 3,
  kShuffle = 4,
  kShapeCorpus = 5,
  kEvalEnv = 6,
  kEvalNoise = 7,
  kDisturb = 8,
};

// mt19937_64 plus a Box-Muller cache. The engine state round-trips through
// text (the standard guarantees this), which the checkpoint format uses to
// make resumed runs continue the exact sequence.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng stream(std::uint64_t master_seed, Stream kind, std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(kind)));
    return Rng(splitmix64(s + index));
  }

  // Uniform in [0, 1). 53-bit mantissa, engine-portable.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller with the usual cached second sample.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free would bias; n is tiny everywhere we use this, so the
    // classic rejection loop terminates immediately in practice.
    std::uint64_t span = ~0ull - (~0ull % n + 1) % n;
    std::uint64_t v = eng_();
    while (v > span) v = eng_();
    return v % n;
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << std::scientific << spare_;
    return os.str();
  }

  void deserialize(const std::string& text) {
    std::istringstream is(text);
    int spare_flag = 0;
    is >> eng_ >> spare_flag >> spare_;
    check(!is.fail(), "Rng::deserialize: malformed state text");
    has_spare_ = spare_flag != 0;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates; the draw order is part of the reproducibility contract.
inline void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

constexpr double kPi = 3.14159265358979323846;

// Wrap an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace ltc
