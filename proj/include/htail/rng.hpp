#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace htail {

// The one generator used everywhere. Child streams are derived from the
// root seed and a stream label, so parallel workers never share state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    // Uniform on the open interval (0, 1) built from 53 random bits.
    double uniform();

    Rng split(std::uint64_t stream) const;
    Rng split(std::string_view label) const;

    static std::uint64_t mix(std::uint64_t x);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace htail
