#include "brwlab/offspring.hpp"

#include <cmath>
#include <numeric>

#include "brwlab/errors.hpp"

namespace brwlab {

OffspringDistribution::OffspringDistribution(std::vector<double> pmf, std::string preset_name)
    : pmf_(std::move(pmf)), name_(std::move(preset_name)) {
    while (!pmf_.empty() && pmf_.back() == 0.0) pmf_.pop_back();
    if (pmf_.size() < 2) throw DomainError("offspring distribution must have non-degenerate support");
    double total = 0.0, m1 = 0.0, m2 = 0.0;
    int g = 0;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
        if (pmf_[i] < 0.0) throw DomainError("negative offspring probability");
        total += pmf_[i];
        m1 += static_cast<double>(i) * pmf_[i];
        m2 += static_cast<double>(i * i) * pmf_[i];
        if (pmf_[i] > 0.0) g = std::gcd(g, static_cast<int>(i));
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("offspring pmf must sum to 1 (got " + std::to_string(total) + ")");
    if (std::abs(m1 - 1.0) > 1e-12) throw DomainError("offspring law must be critical (mean " + std::to_string(m1) + ")");
    mean_ = m1;
    sigma_sq_ = m2 - 1.0;
    if (!(sigma_sq_ > 0.0)) throw DomainError("offspring variance must be positive");
    support_gcd_ = g;

    alias_ = AliasTable(pmf_);
    tail_pmf_.assign(pmf_.size() - 1, 0.0);
    double tail = 0.0;
    for (std::size_t j = pmf_.size() - 1; j-- > 0;) {
        tail += pmf_[j + 1];
        tail_pmf_[j] = tail;
    }
    tail_alias_ = AliasTable(tail_pmf_);
}

OffspringDistribution OffspringDistribution::geometric_half() {
    // Truncated at i = 60: the dropped mass 2^{-61} is far below the 1e-12 contract.
    std::vector<double> pmf(61);
    for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] = std::ldexp(1.0, -static_cast<int>(i) - 1);
    pmf.back() *= 2.0;  // fold the remaining tail into the last atom so the sum is exactly 1
    OffspringDistribution dist(std::move(pmf), "geometric");
    dist.geometric_ = true;
    return dist;
}

OffspringDistribution OffspringDistribution::binary() { return {{0.5, 0.0, 0.5}, "binary"}; }

OffspringDistribution OffspringDistribution::poisson_one() {
    std::vector<double> pmf(65);
    double term = std::exp(-1.0), total = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        pmf[i] = term;
        total += term;
        term /= static_cast<double>(i + 1);
    }
    for (double& p : pmf) p /= total;
    // Re-centre the mean on 1 by moving the (tiny) excess between p_0 and p_2.
    double mean = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) mean += static_cast<double>(i) * pmf[i];
    const double shift = (mean - 1.0) / 2.0;
    pmf[2] -= shift;
    pmf[0] += shift;
    return {std::move(pmf), "poisson"};
}

OffspringDistribution OffspringDistribution::preset(const std::string& name) {
    if (name == "geometric") return geometric_half();
    if (name == "binary") return binary();
    if (name == "poisson") return poisson_one();
    throw DomainError("unknown offspring preset '" + name + "' (expected geometric, binary or poisson)");
}

bool OffspringDistribution::admissible(std::int64_t n) const noexcept {
    return n >= 1 && (n - 1) % support_gcd_ == 0;
}

}  // namespace brwlab
