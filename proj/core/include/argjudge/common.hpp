#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace argjudge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

/// A single malformed input record; `row()` is 1-based and counts the header.
class RecordError : public Error {
 public:
  RecordError(std::size_t row, const std::string& what);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

/// Raised when a required set of items is incomplete or has duplicates.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::string> gaps);
  const std::vector<std::string>& gaps() const noexcept { return gaps_; }

 private:
  std::vector<std::string> gaps_;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

/// The provider could not be reached after all retries (or a single attempt failed,
/// when raised by a backend).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The provider answered but declined the request.
class RefusalError : public Error {
 public:
  using Error::Error;
};

/// A mock backend has no scripted answer for a prompt and no default.
class MockGapError : public Error {
 public:
  using Error::Error;
};

/// Argument slot within an ArgumentPair ("argument 1" / "argument 2").
enum class Winner : int { first = 1, second = 2 };

inline int slot_number(Winner w) { return static_cast<int>(w); }
inline Winner other(Winner w) { return w == Winner::first ? Winner::second : Winner::first; }
std::optional<Winner> winner_from_int(long long v);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::size_t word_count(std::string_view text);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Lowercased word tokens with surrounding punctuation stripped. Apostrophes inside
/// a word are kept ("someone's").
std::vector<std::string> normalized_tokens(std::string_view text);

/// |a - b| / max(a, b); zero when both are zero.
double length_ratio(double a, double b);

/// splitmix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, bound) from a 64-bit engine, without relying on the
/// implementation-defined std::uniform_int_distribution.
template <class Engine>
std::uint64_t bounded_draw(Engine& engine, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v;
  do {
    v = engine();
  } while (v >= limit);
  return v % bound;
}

/// Fisher-Yates with bounded_draw, so shuffles are identical across standard libraries.
template <class Range, class Engine>
void portable_shuffle(Range& range, Engine& engine) {
  const auto n = static_cast<std::uint64_t>(range.size());
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = bounded_draw(engine, i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// UTC timestamp in ISO-8601 form.
std::string utc_timestamp();

}  // namespace argjudge
