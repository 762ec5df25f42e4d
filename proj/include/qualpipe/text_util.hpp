#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qualpipe {

// Trims ASCII whitespace from both ends.
std::string trim(std::string_view s);

// Trims and collapses internal whitespace runs to a single space.
std::string normalize_whitespace(std::string_view s);

// Case-folded normalize_whitespace; the canonical key for attribute-name
// matching and dedup.
std::string normalized_key(std::string_view s);

std::string to_lower(std::string_view s);

// Lowercases, replaces punctuation with spaces, splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

// Escapes &, <, > (and in addition " and ' inside attribute values).
std::string escape_html(std::string_view s);
std::string escape_html_attr(std::string_view s);

// Fixed-format decimal with `decimals` digits, C locale, no exponent.
std::string format_fixed(double value, int decimals);

// FNV-1a 64-bit hash; used for seed fan-out and scripted-evaluator rules,
// never for cache keys.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace qualpipe
