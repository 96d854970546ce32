#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace tsadv {

/// Deterministic counter-based random stream. Every stochastic site in the
/// toolkit (weight init, dropout masks, shuffling, stochastic LPAT epsilon,
/// synthetic data noise) pulls from a stream derived from the single config
/// seed plus a stream name, so selective re-runs of any stage reproduce
/// exactly. The generator is splitmix64; value mapping is implemented here
/// rather than through std distributions so sequences are identical across
/// standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view name) : state_(mix(seed ^ hash_name(name))) {}

    /// Child stream independent of the parent's future draws.
    RngStream derive(std::string_view child) const { return RngStream(state_, child); }
    RngStream derive(std::uint64_t index) const {
        RngStream s(state_, "idx");
        s.state_ = mix(s.state_ ^ (index * 0x9e3779b97f4a7c15ULL));
        return s;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t hash_name(std::string_view name) {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t state_;
};

/// Canonical stream for a (seed, site, epoch-ish, batch-ish) tuple. Training
/// derives dropout masks from (epoch, batch) so that algorithms replaying a
/// batch (e.g. the two LPAT rounds) observe identical masks.
inline RngStream stream_for(std::uint64_t seed, std::string_view site, std::uint64_t a = 0,
                            std::uint64_t b = 0) {
    return RngStream(seed, site).derive(a).derive(b);
}

}  // namespace tsadv
