#pragma once

// Token export boundary for external sequence models: states as Polish-notation
// expression tokens followed by flattened (x, y) points, actions as
// "anchor | op [| B]". All reals travel as sign/mantissa/exponent triplets.

#include "srmcts/dataset.hpp"
#include "srmcts/mutation.hpp"
#include "srmcts/rng.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace srmcts {

inline constexpr const char* kSepToken = "<sep>";
inline constexpr const char* kPointToken = "<pt>";
inline constexpr const char* kActionSep = "|";
inline constexpr std::size_t kMaxContextPoints = 100;

/// Expression tokens, "<sep>", then for each of at most `max_points` rows:
/// "<pt>", x_1..x_d triplets, y triplet. Rows beyond the cap are subsampled
/// with `rng` (none drawn when the dataset fits).
std::vector<std::string> tokenize_state(const Dataset& ds, const Expression& expr, Rng& rng,
                                        std::size_t max_points = kMaxContextPoints);

struct DecodedState {
    Expression expr;
    Matrix X;
    std::vector<double> y;
};

/// Inverse of tokenize_state up to four-significant-digit rounding. Throws ParseError.
DecodedState detokenize_state(std::span<const std::string> tokens);

std::vector<std::string> tokenize_action(const Mutation& m);
/// Throws ParseError on malformed input.
Mutation parse_action(std::span<const std::string> tokens);

/// Every token either format can emit, in a fixed order (the id is the position).
std::vector<std::string> vocabulary();
void write_vocabulary(const std::filesystem::path& path);

} // namespace srmcts
