#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixsel {

// All randomness in the library flows through streams derived from a single
// master seed via stream_seed(master, label, index). mt19937_64 output is
// specified by the standard and the double conversions below avoid
// std::uniform_real_distribution / std::normal_distribution, whose algorithms
// are implementation-defined. Streams are therefore identical across
// platforms and independent of thread scheduling.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index) {
    std::uint64_t h = splitmix64(master);
    for (char c : label) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return splitmix64(h ^ splitmix64(index + 0x51u));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform on [0,1) with 53-bit resolution
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; second deviate cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // unbiased integer in [0, n) by rejection
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return x % n;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mixsel
