#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vades/common.hpp"

namespace vades {

// Deterministic RNG used everywhere. mt19937_64 is fully specified by the
// standard, and the gaussian/uniform transforms below are hand-rolled so
// that streams are bit-identical across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // standard normal via the polar method, spare cached
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    void fill_gaussian(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = gaussian();
        }
    }

    // uniform integer in [0, n), rejection sampled (no modulo bias)
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) {
            throw error("uniform_int: n must be positive");
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

    // k distinct values from [0, n) \ {exclude}; falls back to sampling with
    // replacement when fewer than k candidates exist
    std::vector<std::uint32_t> sample_excluding(std::uint32_t n, std::uint32_t k,
                                                std::uint32_t exclude) {
        if (n < 2) {
            throw error("sample_excluding: need at least 2 candidates");
        }
        std::vector<std::uint32_t> out;
        out.reserve(k);
        if (k < n - 1) {
            std::vector<char> used(n, 0);
            used[exclude] = 1;
            while (out.size() < k) {
                auto x = static_cast<std::uint32_t>(uniform_int(n));
                if (!used[x]) {
                    used[x] = 1;
                    out.push_back(x);
                }
            }
        } else {
            while (out.size() < k) {
                auto x = static_cast<std::uint32_t>(uniform_int(n));
                if (x != exclude) {
                    out.push_back(x);
                }
            }
        }
        return out;
    }

    // engine + spare serialized as text; doubles as hexfloat so state
    // round-trips exactly
    std::string state() const {
        std::ostringstream os;
        os << eng_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%a", spare_);
        os << buf;
        return os.str();
    }

    void set_state(const std::string& s) {
        std::istringstream is(s);
        int spare_flag = 0;
        std::string hex;
        is >> eng_ >> spare_flag >> hex;
        if (!is) {
            throw error("Rng::set_state: malformed state string");
        }
        has_spare_ = spare_flag != 0;
        spare_ = std::strtod(hex.c_str(), nullptr);
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace vades
