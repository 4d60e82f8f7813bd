#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lungbench {

// splitmix64 step; used to derive independent RNG substreams from (seed, index)
// so bootstrap replicates are schedule-independent.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// mt19937_64 has a standard-pinned output sequence; the distribution helpers here
// avoid std::uniform_*_distribution, whose outputs are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform integer in [0, n); n must be > 0
    std::size_t next_index(std::size_t n);

    // uniform double in [0, 1)
    double next_unit();

    // standard normal via Box-Muller (one value per call, spare cached)
    double next_gaussian();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by Rng; deterministic for a given seed.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.next_index(i);
        std::swap(items[i - 1], items[j]);
    }
}

// Linear-interpolated percentile over unsorted sample values, p in [0, 1].
// Matches the common "type 7" definition: rank = p * (n - 1).
double percentile(std::vector<double> values, double p);

// Runs fn(i) for i in [0, count) across at most `threads` workers. Results must
// be written to preallocated per-index slots; the schedule never affects them.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

// Fixed-precision helper for SVG/text output.
std::string format_fixed(double v, int digits);

int default_thread_count();              // LUNGBENCH_THREADS override, else hardware
std::uint64_t default_seed();            // LUNGBENCH_SEED override, else built-in constant

inline constexpr std::uint64_t kBuiltinSeed = 12345;

}  // namespace lungbench
