#pragma once

#include <cstdint>
#include <random>

namespace chiralpb {

std::uint64_t splitmix64(std::uint64_t x);

// mt19937_64 seeded from splitmix64(seed ^ splitmix64(stream)). Uniforms are
// built from the raw 64-bit output, so streams are identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next() { return eng_(); }
    double uniform();                     // [0, 1)
    double uniform(double lo, double hi); // [lo, hi)
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 eng_;
};

}  // namespace chiralpb
