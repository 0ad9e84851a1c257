#pragma once

// Quantity parsing with SI suffixes ("0.1us", "8km") and canonical
// shortest round-trip formatting of doubles. The canonical form is what
// the network serializer, CSV writers and position keys all use, so two
// runs over the same data produce byte-identical text.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace emtrloc {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, end);
}

/// Strict double parse: the whole string must be consumed and finite.
inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

/// Parse a number with an optional SI suffix. Times: s, ms, us, ns.
/// Distances: m, km. Bare numbers pass through unscaled.
inline double parse_quantity(std::string_view s) {
    struct Suffix { std::string_view text; double scale; };
    // longest-match first so "ms" never parses as meters + stray 's'
    static constexpr Suffix suffixes[] = {
        {"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"km", 1e3},
        {"s", 1.0},   {"m", 1.0},
    };
    for (const auto& suf : suffixes) {
        if (s.size() > suf.text.size() && s.ends_with(suf.text)) {
            std::string_view num = s.substr(0, s.size() - suf.text.size());
            return parse_double(num) * suf.scale;
        }
    }
    return parse_double(s);
}

/// FNV-1a 64-bit. Used for network fingerprints (mismatch detection,
/// not security).
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fingerprint_hex(std::uint64_t fp) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[fp & 0xf];
        fp >>= 4;
    }
    return out;
}

} // namespace emtrloc
