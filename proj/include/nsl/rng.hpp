#pragma once

// Counter-based 64-bit generator ("splitmix64-counter"): every draw is the
// SplitMix64 finalizer applied to an affine counter sequence, keyed by
// (seed, stream).  Draws are reproducible across platforms and runs, and
// independent substreams come from distinct stream ids.

#include <cstdint>

namespace nsl {

class CounterRng {
  public:
    static constexpr const char* kName = "splitmix64-counter";

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(mix(seed + 0x9E3779B97F4A7C15ull) ^
                    mix(stream * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull))),
          ctr_(0) {}

    std::uint64_t next_u64() { return mix(base_ + (ctr_++) * 0x9E3779B97F4A7C15ull); }

    // random access within the stream
    void set_counter(std::uint64_t c) { ctr_ = c; }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_in(double a, double b) { return a + (b - a) * next_unit(); }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

  private:
    std::uint64_t base_;
    std::uint64_t ctr_;
};

} // namespace nsl
