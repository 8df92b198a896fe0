#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace covspec {

// xoshiro256++ with splitmix64 seeding. Chosen over std::mt19937 so that a
// 64-bit seed always produces the same stream regardless of the standard
// library in use.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on (0,1]; never returns 0 so it is safe under log().
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0,1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, one spare cached per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Complex Gaussian with independent N(0,1/2) real and imaginary parts,
    // so E|Z|^2 = 1.
    std::complex<double> complex_gaussian() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    // Deterministic per-trial seed derivation.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        std::uint64_t a = splitmix64(x);
        std::uint64_t b = splitmix64(x);
        return a ^ rotl(b, 32);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace covspec
