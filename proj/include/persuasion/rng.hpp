#pragma once

#include <cstdint>
#include <vector>

// Portable counter-based random generator.
//
// The generator is a keyed 64-bit counter: draw i of stream `key` is
// mix64(key + (i+1) * GOLDEN), where mix64 is the SplitMix64 finalizer.
// Everything is integer arithmetic on uint64_t, so sequences are
// byte-identical across platforms and compilers.
//
// Stream splitting: child streams are derived by hashing the parent key with
// a label, `split(label)`. The experiment harness fixes the label layout:
//   root(seed) -> split(replication) -> split(arm) -> split(task)
//   and within a task, split(kind) for environment vs. algorithm draws.
// Distinct labels give statistically independent streams; a stream is never
// advanced by another stream's draws.

namespace persuasion {

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key = 0) : key_(mix64(key ^ kRootSalt)) {}

    CounterRng split(std::uint64_t label) const {
        CounterRng child(0);
        child.key_ = mix64(key_ ^ mix64(label * kGolden + kSplitSalt));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in {0, ..., n-1}. n must be >= 1.
    std::uint64_t next_index(std::uint64_t n) {
        // multiply-shift map of the top 53 bits; exact for the small n used here
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    bool next_sign() { return (next_u64() & 1u) != 0; }

    // Samples an index with probability weights[i] / sum(weights).
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u <= 0.0) return i;
        }
        return weights.size() - 1;
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
    static constexpr std::uint64_t kRootSalt = 0x8C7F0AAC97C4AA2Full;
    static constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace persuasion
