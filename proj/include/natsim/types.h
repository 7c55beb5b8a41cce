#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace natsim {

// All simulation time is integer microseconds.
using TimeUs = std::int64_t;
using Bytes = std::int64_t;
// Rates are bits per second.
using BitsPerSec = double;

inline constexpr TimeUs kUsPerMs = 1000;
inline constexpr TimeUs kUsPerSec = 1'000'000;
inline constexpr TimeUs kUnset = -1;

inline constexpr Bytes kDefaultMtu = 1500;
inline constexpr Bytes kAckSize = 64;

// Pacing rate meaning "send as fast as the window allows".
inline constexpr BitsPerSec kUnpaced = std::numeric_limits<double>::infinity();

constexpr double to_seconds(TimeUs t) {
  return static_cast<double>(t) / static_cast<double>(kUsPerSec);
}
constexpr double to_ms(TimeUs t) {
  return static_cast<double>(t) / static_cast<double>(kUsPerMs);
}

// Time to clock `size` bytes onto a link of `rate`, rounded to the nearest
// microsecond. A rate of 0 or infinity denotes an ideal link (no delay).
TimeUs serialization_us(Bytes size, BitsPerSec rate);

// Configuration problems detected before a run starts (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A named input file does not exist or cannot be read (CLI exit code 3).
class InputFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded pseudo-random stream. The raw engine is mt19937_64, whose output is
// fixed by the standard; the floating-point mapping is done here rather than
// through <random> distributions so runs are bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace natsim
