#pragma once

#include <cstdint>
#include <string_view>

namespace cppo {

// Counter-based generator: every draw is a hash of (seed, stream, counter),
// so independent streams can be carved off a single run seed by name and
// results do not depend on draw interleaving across consumers.
class Rng {
public:
    Rng() = default;
    Rng(uint64_t seed, std::string_view stream_name);

    // Derive an independent child stream.
    Rng stream(std::string_view name) const;

    uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // standard normal, Box-Muller
    int uniform_int(int n);                // [0, n)

    uint64_t key() const { return key_; }

private:
    uint64_t key_ = 0x9e3779b97f4a7c15ull;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cppo
