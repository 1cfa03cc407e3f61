#pragma once

#include <cmath>
#include <cstdint>

namespace laplab {

/// Counter-based 64-bit generator (SplitMix64). The output sequence is a pure
/// function of the seed, with no platform- or library-dependent state, so
/// sampled datasets are reproducible bit-for-bit across machines.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Each call consumes two uniforms; the
    /// sine branch is discarded so the stream stays a simple function of the
    /// draw count.
    double gaussian() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from (base, replica, N index, eps index)
/// by chaining SplitMix64 steps. Cells of a sweep never share a stream.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t replica,
                              std::uint64_t n_index, std::uint64_t eps_index) {
    SplitMix64 g(base);
    std::uint64_t s = g.next() ^ (replica * 0xD6E8FEB86659FD93ULL);
    SplitMix64 g2(s);
    s = g2.next() ^ (n_index * 0xA3B195354A39B70DULL);
    SplitMix64 g3(s);
    return g3.next() ^ (eps_index * 0x1B03738712FAD5C9ULL);
}

} // namespace laplab
