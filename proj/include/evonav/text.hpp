#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evonav::text {

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 1469598103934665603ULL);
std::string hex64(std::uint64_t v);

// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view s);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Whitespace-free encoding of arbitrary strings for line-oriented records.
std::string escape(std::string_view s);
std::string unescape(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// Signed feature hashing of tokens into `dim` buckets.
std::vector<double> hashed_features(const std::vector<std::string>& tokens, std::size_t dim);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Cosine over hashed token features of two texts.
double text_similarity(std::string_view a, std::string_view b);

// Bit-exact double round trip.
std::string format_hexfloat(double v);
double parse_double(std::string_view s);

}  // namespace evonav::text
