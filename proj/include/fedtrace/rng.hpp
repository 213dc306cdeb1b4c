#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedtrace {

// Deterministic random source. The mt19937_64 engine is bit-exact by
// standard; all distributions here are derived from its raw output with
// fixed arithmetic because std::*_distribution is not portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform();
    double uniform(double lo, double hi);

    // standard normal, Box-Muller pair (second value cached)
    double normal();
    double normal(double mean, double stddev);

    // Gamma(shape, 1), Marsaglia-Tsang; shape > 0
    double gamma(double shape);

    // unbiased integer in [0, n), n >= 1
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates permutation of 0..n-1
    std::vector<std::size_t> permutation(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable sub-stream derivation: hash a label and indices into a fresh seed.
// Distinct labels give statistically independent child streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t a, std::uint64_t b);

} // namespace fedtrace
