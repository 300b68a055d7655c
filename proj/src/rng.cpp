#include "htail/rng.hpp"

namespace htail {

std::uint64_t Rng::mix(std::uint64_t x)
{
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::uniform()
{
    std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

Rng Rng::split(std::uint64_t stream) const
{
    return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
}

Rng Rng::split(std::string_view label) const
{
    // FNV-1a over the label
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return split(h);
}

} // namespace htail
