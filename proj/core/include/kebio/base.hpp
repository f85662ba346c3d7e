#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

// All library symbols live in an inline namespace keyed on the scalar type so
// that a 64-bit build of the core can be linked next to the 32-bit one.
#if defined(KEBIO_NDMATH_F64)
#define KEBIO_PRECISION_NS f64
#else
#define KEBIO_PRECISION_NS f32
#endif

namespace kebio::inline KEBIO_PRECISION_NS {

#if defined(KEBIO_NDMATH_F64)
using real = double;
#else
using real = float;
#endif

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, inconsistent data, invalid configuration.
// The CLI maps this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Seeded random stream. Everything drawn from here is a pure function of the
/// seed: the helpers avoid std:: distributions, whose output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Standard normal (Box-Muller, no cached second draw).
  double normal();

  /// Mixes a base seed with stream keys into an independent seed.
  static std::uint64_t derive(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> keys);

 private:
  std::mt19937_64 engine_;
};

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = kFnvOffset);

}  // namespace kebio::inline KEBIO_PRECISION_NS
