#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/cap_discrete.hpp"
#include "brwlab/green.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

using Point = std::array<double, kMaxDim>;

/// Finite point set in R^d together with a thickening radius eps > 0.
///
/// The obstacle is the closed eps-neighbourhood of the points. A multilevel
/// occupancy grid answers "distance to the obstacle" queries: exactly within
/// one eps of the surface, as a lower bound further out.
class PointCloud {
public:
    PointCloud(int dim, std::vector<Point> points, double eps);

    // n^{-1/4} times the sites of a range.
    static PointCloud rescaled_range(const RangeSet& r, double scale, double eps);

    int dim() const noexcept { return dim_; }
    double eps() const noexcept { return eps_; }
    double radius_bound() const noexcept { return radius_bound_; }
    const std::vector<Point>& points() const noexcept { return points_; }

    struct Query {
        bool inside = false;  // within eps * (1 + hit_tol) of a point
        double free_radius = 0.0;  // radius of a ball around x disjoint from the obstacle
    };
    Query query(const Point& x, double hit_tol) const;

private:
    using Cell = std::array<std::int64_t, kMaxDim>;
    std::uint64_t cell_key(const Point& x, double h) const;
    std::uint64_t cell_key(const Cell& c) const;

    int dim_;
    std::vector<Point> points_;
    double eps_;
    double radius_bound_ = 0.0;
    double base_ = 0.0;  // level-0 cell size (2 eps)
    // Level 0: points bucketed by cell (CSR layout over a sorted key array).
    std::vector<std::uint64_t> bucket_keys_;
    std::vector<std::uint32_t> bucket_start_;
    std::vector<std::uint32_t> bucket_points_;
    // Levels >= 1 (cell size base * 2^l): cells within one cell of an occupied cell.
    std::vector<FlatKeySet> blocked_;
};

struct NewtonianEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    double r = 0.0;
    double kill_radius = 0.0;
    std::int64_t reps = 0;
    double eps = 0.0;

    static constexpr const char* kCsvHeader = "value,stderr,r,kill_radius,reps,eps";
    std::string csv_row() const;
};

inline constexpr double kHitTolerance = 1e-3;  // relative to eps

/// Newtonian capacity of the eps-neighbourhood of the cloud by walk-on-spheres.
///
/// Start uniform on the r-sphere, hop to a uniform point of the largest free
/// sphere (at most r), hit within eps (1 + 1e-3); beyond kill_radius revive on
/// the r-sphere with probability (r/|x|)^{d-2}. Estimate = hit fraction times
/// (d / c1) r^{d-2}. Defaults: r = 2 (radius_bound + eps), kill_radius = 10 r.
NewtonianEstimate cap_newtonian(const PointCloud& cloud, std::int64_t reps, Rng& rng,
                                std::optional<double> r = std::nullopt,
                                std::optional<double> kill_radius = std::nullopt);

struct Theorem1Result {
    double lhs = 0.0;  // n^{-(d-2)/4} cap(R_n)
    double rhs = 0.0;  // (1/d) cap^c(n^{-1/4} R_n, eps)
    double ratio = 0.0;
    double rhs_stderr = 0.0;
    std::size_t range_count = 0;
};

/// Both sides of the capacity scaling comparison for one range of a size-n tree.
Theorem1Result theorem1_check(const RangeSet& range, std::int64_t n, const GreenTable& green, double eps,
                              std::int64_t reps, Rng& rng, std::optional<double> r = std::nullopt);

}  // namespace brwlab
