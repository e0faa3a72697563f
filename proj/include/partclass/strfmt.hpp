#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "partclass/error.hpp"

namespace partclass {

// Shortest decimal form that round-trips the exact double. Keeps descriptors,
// sidecars and config blocks both readable and bit-exact on replay.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view err_code,
                           const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(err_code, what + ": bad number '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view err_code,
                               const std::string& what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(err_code, what + ": bad integer '" + std::string(s) + "'");
    return v;
}

}  // namespace partclass
