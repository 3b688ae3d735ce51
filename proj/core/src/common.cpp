#include "argjudge/common.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>

#include <fmt/format.h>

namespace argjudge {

RecordError::RecordError(std::size_t row, const std::string& what)
    : Error(fmt::format("row {}: {}", row, what)), row_(row) {}

CoverageError::CoverageError(const std::string& what, std::vector<std::string> gaps)
    : Error(what), gaps_(std::move(gaps)) {}

std::optional<Winner> winner_from_int(long long v) {
  if (v == 1) return Winner::first;
  if (v == 2) return Winner::second;
  return std::nullopt;
}

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::size_t word_count(std::string_view text) { return split_whitespace(text).size(); }

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto raw : split_whitespace(text)) {
    std::string tok = to_lower(raw);
    auto keep = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && !keep(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && !keep(static_cast<unsigned char>(tok[e - 1]))) --e;
    if (e > b) out.push_back(tok.substr(b, e - b));
  }
  return out;
}

double length_ratio(double a, double b) {
  const double hi = std::max(a, b);
  if (hi <= 0.0) return 0.0;
  return std::abs(a - b) / hi;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

}  // namespace argjudge
