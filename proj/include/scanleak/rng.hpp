#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

// Seeded RNG helpers used wherever a documented "deterministic given seed"
// guarantee exists. std::shuffle / std::sample leave the permutation
// algorithm up to the standard library, so we implement the draws ourselves
// on top of mt19937_64; the resulting streams are stable across platforms.

namespace scanleak {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform draw in [0, n) by rejection, so the distribution is exact.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

    bool bit() { return (eng_() & 1u) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t k) {
        if (k > n) throw std::invalid_argument("Rng::sample_indices: k > n");
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::uint32_t> out;
        out.reserve(k);
        for (std::uint32_t i = 0; i < k; ++i) {
            std::size_t j = static_cast<std::size_t>(below(pool.size()));
            out.push_back(pool[j]);
            pool[j] = pool.back();
            pool.pop_back();
        }
        return out;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace scanleak
