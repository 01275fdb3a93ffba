#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace repplab {

// Counter-based seed derivation: every consumer of randomness gets its own
// stream derived from (master, tag, counter). Recorded in the seed ledger so
// any single orbit or bootstrap replicate can be regenerated in isolation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t counter) {
    std::uint64_t s = master ^ hash_tag(tag);
    splitmix64(s);
    s ^= counter * 0xd1342543de82ef95ULL;
    return splitmix64(s);
}

// mt19937_64 wrapped with explicit uniform/exponential draws so the mapping
// from raw 64-bit output to doubles is pinned down (replays must be bit-exact).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // uniform in [0,1] excluding 0, for safe logs
    double uniform_pos() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace repplab
