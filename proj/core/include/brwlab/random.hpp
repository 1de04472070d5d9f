#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/lattice.hpp"

namespace brwlab {

/// Derives a child seed from a parent seed and a list of integer tags.
///
/// Used for per-replica and per-stream seeding so that a run is fully
/// determined by its base seed regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t t : tags) h = mix64(h ^ (t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
}

// Thin wrapper over std::mt19937_64 with the few draws the samplers need.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    std::uint64_t bits() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        std::uint64_t low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = -n % n;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double normal() { return normal_(engine_); }

    // Uniform point on the unit sphere S^{dim-1}, written into out[0..dim).
    void unit_vector(int dim, std::span<double> out) {
        double s = 0.0;
        do {
            s = 0.0;
            for (int i = 0; i < dim; ++i) {
                out[i] = normal();
                s += out[i] * out[i];
            }
        } while (s == 0.0);
        const double inv = 1.0 / std::sqrt(s);
        for (int i = 0; i < dim; ++i) out[i] *= inv;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Walker's alias method over a finite pmf; O(1) sampling.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(std::span<const double> weights) {
        const std::size_t n = weights.size();
        if (n == 0) throw DomainError("alias table needs at least one outcome");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("alias table weights must be non-negative");
            total += w;
        }
        if (!(total > 0.0)) throw DomainError("alias table weights sum to zero");
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = weights[i] * static_cast<double>(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const auto s = small.back();
            small.pop_back();
            const auto l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) prob_[i] = 1.0;
        for (auto i : small) prob_[i] = 1.0;
    }

    std::size_t size() const noexcept { return prob_.size(); }

    std::uint32_t sample(Rng& rng) const {
        const auto col = static_cast<std::uint32_t>(rng.below(prob_.size()));
        return rng.uniform() < prob_[col] ? col : alias_[col];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

}  // namespace brwlab
