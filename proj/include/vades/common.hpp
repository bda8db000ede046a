#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vades {

// Base error for anything that goes wrong at runtime (I/O, numerics, ...).
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad config values, malformed records, missing files.
// The CLI maps these to exit code 1, everything else to 2.
class config_error : public error {
public:
    using error::error;
};

inline double safe_div(double num, double den) {
    return den > 0.0 ? num / den : 0.0;
}

// FNV-1a, used for n-gram bucketing and content keys. Versioned: changing
// this breaks feature caches and checkpoints on purpose.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
    return h;
}

// --- little-endian binary I/O (checkpoints, feature caches) ---

template <typename T>
inline void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        v = std::bit_cast<T>(bytes);
    }
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
inline T read_le(std::istream& is) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw error("unexpected end of file while reading binary data");
    }
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        v = std::bit_cast<T>(bytes);
    }
    return v;
}

inline void write_f64s(std::ostream& os, const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        write_le<double>(os, p[i]);
    }
}

inline void read_f64s(std::istream& is, double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = read_le<double>(is);
    }
}

} // namespace vades
