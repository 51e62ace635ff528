#include "cppo/rng.hpp"

#include <cmath>

namespace cppo {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

uint64_t hash_name(std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

Rng::Rng(uint64_t seed, std::string_view stream_name) {
    key_ = mix(mix(seed + kGolden) ^ hash_name(stream_name));
}

Rng Rng::stream(std::string_view name) const {
    Rng child;
    child.key_ = mix(key_ ^ hash_name(name));
    return child;
}

uint64_t Rng::next_u64() {
    return mix(key_ + (++counter_) * kGolden);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

int Rng::uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

}  // namespace cppo
