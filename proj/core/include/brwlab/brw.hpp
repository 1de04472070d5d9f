#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "brwlab/gw_sampler.hpp"
#include "brwlab/lattice.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/plane_tree.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

struct StepAtom {
    Site step{};
    double prob = 0.0;
};

/// Finitely supported edge displacement law theta on Z^d.
class StepDistribution {
public:
    StepDistribution(int dim, std::vector<StepAtom> atoms, std::string preset_name);

    // Uniform on {+-e_1, ..., +-e_d}.
    static StepDistribution srw(int dim);
    // Point mass at 0; only for tests, it does not generate Z^d.
    static StepDistribution zero(int dim);
    static StepDistribution preset(const std::string& name, int dim);

    int dim() const noexcept { return dim_; }
    const std::vector<StepAtom>& atoms() const noexcept { return atoms_; }
    const std::string& preset_name() const noexcept { return name_; }
    bool symmetric() const noexcept { return symmetric_; }
    // Whether the support generates Z^d as a group.
    bool generates_lattice() const noexcept { return generates_; }
    bool is_atom(const Site& s) const noexcept;

    // Covariance of one step and its symmetric square root Sigma_theta (row-major d x d).
    const std::vector<double>& covariance() const noexcept { return covariance_; }
    const std::vector<double>& sigma_theta() const noexcept { return sigma_theta_; }

    Site sample(Rng& rng) const {
        if (srw_) {
            const auto k = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(dim_)));
            Site s{};
            s[k >> 1] = (k & 1) ? -1 : 1;
            return s;
        }
        return atoms_[alias_.sample(rng)].step;
    }

private:
    int dim_;
    std::vector<StepAtom> atoms_;
    std::string name_;
    bool symmetric_ = false;
    bool generates_ = false;
    bool srw_ = false;
    std::vector<double> covariance_;
    std::vector<double> sigma_theta_;
    AliasTable alias_;
};

// True iff the integer vectors generate Z^dim as a group (Hermite normal form).
bool generates_lattice(int dim, const std::vector<Site>& vectors);

/// Lattice positions V(u) of the vertices of a tree or spine forest.
///
/// positions[v] is indexed by vertex id; for a PlaneTree ids coincide with
/// the lexicographic order. The root sits at the origin.
struct BranchingWalk {
    int dim = 3;
    std::vector<Site> positions;
};

// One theta draw per edge, in increasing child id: exactly size - 1 draws for a tree.
BranchingWalk assign_positions(const PlaneTree& tree, const StepDistribution& theta, Rng& rng);
BranchingWalk assign_positions(const SpineForest& forest, const StepDistribution& theta, Rng& rng);

/// The set R of distinct visited sites.
class RangeSet {
public:
    explicit RangeSet(int dim) : sites_(dim) {}

    int dim() const noexcept { return sites_.dim(); }
    std::size_t count() const noexcept { return sites_.size(); }
    double max_norm() const noexcept { return std::sqrt(static_cast<double>(max_norm_sq_)); }
    const std::vector<Site>& sites() const noexcept { return sites_.sites(); }
    bool contains(const Site& s) const noexcept { return sites_.contains(s); }

    bool insert(const Site& s) {
        if (!sites_.insert(s)) return false;
        max_norm_sq_ = std::max(max_norm_sq_, norm_sq(s));
        return true;
    }

private:
    SiteSet sites_;
    std::int64_t max_norm_sq_ = 0;
};

RangeSet range(const BranchingWalk& bw);

// Binary export: "RNGE", u32 version, u32 dim, u64 count, then dim little-endian i32 per site.
void write_range(std::ostream& out, const RangeSet& r);
RangeSet read_range(std::istream& in);

using SnakePoint = std::array<double, kMaxDim>;

/// (n-1)^{-1/4} V(w_k) along the contour walk w of a tree of size n >= 2.
std::vector<SnakePoint> rescaled_snake(const PlaneTree& tree, const BranchingWalk& bw);

// CSV with header t,x1..xd; t runs over k / (2(n-1)).
void write_snake_csv(std::ostream& out, int dim, const std::vector<SnakePoint>& snake);

struct StationaritySamples {
    std::vector<double> shifted;  // |V(u*_{i+k}) - V(u*_i)|
    std::vector<double> direct;   // |V(u*_k)|
};

/// Both samples over `sample_count` independent T*_inf forests (one forest per replica).
///
/// A forest whose exploration falls short of i + k raises BudgetError; the
/// sampler always grows at least i + k + 1 explored vertices.
StationaritySamples stationarity_witness(const OffspringDistribution& dist, const StepDistribution& theta,
                                         std::int64_t k, std::int64_t i, std::int64_t sample_count, Rng& rng);

}  // namespace brwlab
