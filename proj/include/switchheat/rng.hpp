#pragma once

#include <cmath>
#include <cstdint>

namespace switchheat {

/// Splittable counter-based random stream.
///
/// A stream is identified by an immutable 64-bit key derived by hashing
/// (seed, stream index); draws walk a Weyl sequence from that key through a
/// SplitMix64 finalizer. Child streams derived from distinct indices are
/// statistically independent, so a Monte Carlo batch can key one stream per
/// sample and produce bit-identical results regardless of scheduling order
/// or worker count.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive(seed, stream)), state_(key_) {}

    /// Independent child stream; deterministic in (this stream's key, idx).
    [[nodiscard]] RngStream substream(std::uint64_t idx) const {
        return RngStream(key_, idx);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return finalize(state_);
    }

    /// Uniform draw in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Exponential draw with the given rate (mean 1/rate).
    double exponential(double rate) {
        return -std::log1p(-uniform()) / rate;
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t k = finalize(seed + 0x9E3779B97F4A7C15ull);
        k = finalize(k ^ (stream + 0xD1B54A32D192ED03ull));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t state_;
};

} // namespace switchheat
