#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "brwlab/random.hpp"

namespace brwlab {

/// Critical offspring law (p_i) of the Galton-Watson tree.
///
/// The pmf is stored truncated where the remaining mass is below double
/// precision; construction enforces sum p_i = 1 and mean 1 to 1e-12.
class OffspringDistribution {
public:
    OffspringDistribution(std::vector<double> pmf, std::string preset_name);

    static OffspringDistribution geometric_half();  // p_i = 2^{-i-1}, sigma^2 = 2
    static OffspringDistribution binary();          // p_0 = p_2 = 1/2, sigma^2 = 1
    static OffspringDistribution poisson_one();     // Poisson(1) truncated at 64, sigma^2 = 1
    static OffspringDistribution preset(const std::string& name);

    const std::vector<double>& pmf() const noexcept { return pmf_; }
    double mean() const noexcept { return mean_; }
    double sigma_p_sq() const noexcept { return sigma_sq_; }
    // gcd of the support {i : p_i > 0}; #T - 1 is always a multiple of it.
    int support_gcd() const noexcept { return support_gcd_; }
    const std::string& preset_name() const noexcept { return name_; }

    double p(std::size_t i) const noexcept { return i < pmf_.size() ? pmf_[i] : 0.0; }

    // P(#T = n) > 0 for the supported presets iff (n - 1) % support_gcd == 0.
    bool admissible(std::int64_t n) const noexcept;

    std::uint32_t sample(Rng& rng) const {
        if (geometric_) return std::min<std::uint32_t>(static_cast<std::uint32_t>(std::countr_zero(rng.bits())), 60);
        return alias_.sample(rng);
    }

    // Extra spine offspring: P(D = j) = sum_{i > j} p_i.
    std::uint32_t sample_tail(Rng& rng) const {
        if (geometric_) return std::min<std::uint32_t>(static_cast<std::uint32_t>(std::countr_zero(rng.bits())), 59);
        return tail_alias_.sample(rng);
    }
    const std::vector<double>& tail_pmf() const noexcept { return tail_pmf_; }

private:
    std::vector<double> pmf_;
    std::vector<double> tail_pmf_;
    std::string name_;
    double mean_ = 0.0;
    double sigma_sq_ = 0.0;
    int support_gcd_ = 1;
    bool geometric_ = false;  // sample by trailing zeros of a uniform word
    AliasTable alias_;
    AliasTable tail_alias_;
};

}  // namespace brwlab
