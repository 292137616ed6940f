#pragma once
// Small text helpers shared by every module: label normalization,
// deterministic number formatting and stable hashing.

#include <cstdint>
#include <string>
#include <string_view>

namespace cora {

// Case-fold (ASCII), trim, and collapse internal whitespace runs to one space.
std::string normalize_label(std::string_view label);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Fixed-point rendering with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

// Ordering that compares embedded digit runs numerically ("e2" < "e10").
bool natural_less(std::string_view a, std::string_view b);

struct NaturalLess {
    bool operator()(std::string_view a, std::string_view b) const { return natural_less(a, b); }
};

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string stable_hash_hex(std::string_view data);

bool starts_with_ci(std::string_view text, std::string_view prefix);

}  // namespace cora
