#include "srmcts/float_tokens.hpp"

#include "srmcts/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace srmcts {

std::array<std::string, 3> encode_float(double value)
{
    if (!std::isfinite(value)) throw OverflowToken("cannot tokenize non-finite value");
    if (value == 0.0) return {"+", "0", "E0"};

    // "%.3e" rounds to four significant digits and renormalises 9.9995 -> 1.000e+01.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", std::fabs(value));
    // buf = d.ddde[+-]xx
    const std::string text(buf);
    const auto epos = text.find('e');
    const std::string mantissa = text.substr(0, 1) + text.substr(2, 3);
    const int exp10 = std::atoi(text.c_str() + epos + 1) - 3;
    if (exp10 < -100 || exp10 > 100)
        throw OverflowToken("exponent " + std::to_string(exp10) + " outside [-100, 100]");

    int m = 0;
    std::from_chars(mantissa.data(), mantissa.data() + mantissa.size(), m);
    return {value < 0.0 ? "-" : "+", std::to_string(m), "E" + std::to_string(exp10)};
}

std::optional<double> decode_float(std::span<const std::string> tokens)
{
    if (tokens.size() < 3) return std::nullopt;
    const std::string& sign = tokens[0];
    const std::string& mant = tokens[1];
    const std::string& expo = tokens[2];
    if (!is_sign_token(sign)) return std::nullopt;
    if (mant.empty() || mant.size() > 4) return std::nullopt;
    int m = 0;
    auto [p, ec] = std::from_chars(mant.data(), mant.data() + mant.size(), m);
    if (ec != std::errc{} || p != mant.data() + mant.size()) return std::nullopt;
    if (expo.size() < 2 || expo[0] != 'E') return std::nullopt;
    int e = 0;
    const char* eb = expo.data() + 1;
    auto [q, ec2] = std::from_chars(eb, expo.data() + expo.size(), e);
    if (ec2 != std::errc{} || q != expo.data() + expo.size()) return std::nullopt;
    if (e < -100 || e > 100) return std::nullopt;

    // Decimal -> binary through strtod so the result is the correctly rounded value.
    const std::string literal = mant + "e" + std::to_string(e);
    double v = std::strtod(literal.c_str(), nullptr);
    return sign == "-" ? -v : v;
}

bool is_sign_token(const std::string& token) noexcept { return token == "+" || token == "-"; }

double round_to_tokens(double value)
{
    const auto t = encode_float(value);
    return *decode_float(t);
}

} // namespace srmcts
