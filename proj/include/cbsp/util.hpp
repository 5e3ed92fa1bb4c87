#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace cbsp {

// Fixed numeric formatting used for every value we write to reports, so that
// repeated runs produce byte-identical files.
inline std::string num12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// FNV-1a, used to stamp reports with a hash of the run configuration.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline constexpr const char* kToolName = "cbsp";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cbsp
