#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

namespace srmcts {

/// Sign / mantissa / exponent encoding of a real, rounded to four significant
/// digits: 3.14159 -> {"+", "3142", "E-3"}. Zero encodes as {"+", "0", "E0"}.
/// Throws OverflowToken when the exponent leaves [-100, 100].
std::array<std::string, 3> encode_float(double value);

/// Inverse of encode_float. Returns nullopt when the tokens are not a triplet.
std::optional<double> decode_float(std::span<const std::string> tokens);

/// True if `token` can start a triplet ("+" or "-").
bool is_sign_token(const std::string& token) noexcept;

/// Round to the value encode_float would transmit.
double round_to_tokens(double value);

} // namespace srmcts
