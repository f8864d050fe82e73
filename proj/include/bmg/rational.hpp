// Exact rational arithmetic used on every certification path.
// Floating point is confined to Monte Carlo summaries and report rendering.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bmg {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Canonical text form: "n" for integers, "a/b" otherwise (b > 0, reduced).
inline std::string rat_str(const Rat& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

// Parses "a", "a/b" or "-a/b". Whitespace is not accepted.
inline Rat parse_rat(const std::string& text) {
    auto bad = [&] { throw std::invalid_argument("not a rational: '" + text + "'"); };
    if (text.empty()) bad();
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rat(BigInt(text));
        BigInt num(text.substr(0, slash));
        BigInt den(text.substr(slash + 1));
        if (den <= 0) bad();
        return Rat(num, den);
    } catch (const std::runtime_error&) {
        bad();
    }
    return Rat();  // unreachable
}

inline Rat rat_pow(const Rat& base, std::uint64_t exp) {
    Rat acc = 1, b = base;
    while (exp > 0) {
        if (exp & 1) acc *= b;
        b *= b;
        exp >>= 1;
    }
    return acc;
}

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

// c / 2^k used for machine randomization; k == 0 means a point mass.
inline bool is_power_of_two(const BigInt& n) {
    return n > 0 && (n & (n - 1)) == 0;
}

inline bool is_dyadic(const Rat& r) { return is_power_of_two(denominator(r)); }

// log2 of the denominator of a dyadic rational.
inline unsigned dyadic_bits(const Rat& r) {
    if (!is_dyadic(r)) throw std::invalid_argument("not dyadic: " + rat_str(r));
    unsigned k = 0;
    BigInt d = denominator(r);
    while (d > 1) { d >>= 1; ++k; }
    return k;
}

inline double rat_double(const Rat& r) { return r.convert_to<double>(); }

}  // namespace bmg
