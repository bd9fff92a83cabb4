#pragma once

#include <cmath>
#include <cstdint>

namespace ofbmlab {

// Counter-based generator: the state advances by a fixed odd increment and
// the output is a bijective mix of the counter (splitmix64). Streams derived
// from (seed, stream_index) are independent of the order in which they are
// consumed, which keeps replicate ensembles reproducible under any schedule.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1): 53-bit mantissa, offset by half an ulp so log() is safe.
    double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Per-stream seed: hash the pair (seed, stream) through two mixing rounds.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    CounterRng h(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    h.next_u64();
    return h.next_u64();
}

// Standard normal deviates via Box-Muller on the counter stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) noexcept : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.next_unit();
        const double u2 = rng_.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    CounterRng rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ofbmlab
