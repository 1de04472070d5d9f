#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "brwlab/lattice.hpp"

namespace brwlab {

inline constexpr int kDefaultNearRadius = 64;
inline constexpr double kDefaultQuadratureTol = 1e-9;

// d * Gamma(d/2 - 1) / (2 pi^{d/2}): the SRW Green function decays like c1 |x|^{2-d}.
double c1_constant(int dim);

// Gamma(d/2 - 1) / (2 pi^{d/2}): Brownian Green function coefficient.
double continuum_coefficient(int dim);

// Brownian Green function g(x) = coefficient * |x|^{2-d}; throws SingularityError at 0.
double g_continuum(int dim, std::span<const double> x);

/// e^{-s} I_k(s) for k = 0..out.size()-1 (modified Bessel functions, scaled).
///
/// Miller backward recurrence on the ratios I_k / I_{k-1}, normalised with
/// e^{-s} (I_0 + 2 sum_{k>=1} I_k) = 1. Stable for every s >= 0.
void scaled_bessel_i(double s, std::span<double> out);

/// Exact SRW Green function G^{(d)}(x) by direct integration; |x|_inf <= near_radius.
///
/// Uses G(x) = d * int_0^inf prod_i e^{-s} I_{x_i}(s) ds, the lattice Fourier
/// integral with the angular integrals carried out in closed form.
double green_exact(int dim, const Site& x, int near_radius = kDefaultNearRadius);

/// Coordinate-major copy of a site list for the batched Green evaluation.
struct SiteColumns {
    int dim = 3;
    std::array<std::vector<std::int32_t>, kMaxDim> coord;

    SiteColumns() = default;
    SiteColumns(int d, std::span<const Site> sites) : dim(d) {
        for (int k = 0; k < d; ++k) {
            coord[k].resize(sites.size());
            for (std::size_t j = 0; j < sites.size(); ++j) coord[k][j] = sites[j][k];
        }
    }
    std::size_t size() const noexcept { return coord[0].size(); }
};

// Canonical storage key of a site: absolute coordinates sorted descending.
using CanonicalKey = std::array<std::int32_t, kMaxDim>;

/// Near-field table of G^{(d)} plus the c1 |x|^{2-d} far field.
///
/// Values are stored once per canonical key (coordinate permutations and sign
/// flips share an entry) in lexicographic order of the descending key. The
/// table is immutable after construction and safe to read concurrently.
class GreenTable {
public:
    static GreenTable build(int dim, int near_radius = kDefaultNearRadius,
                            double quadrature_tol = kDefaultQuadratureTol);

    // Loads a cache file; throws CacheError if it is malformed or violates harmonicity.
    static GreenTable load(const std::filesystem::path& path, double quadrature_tol = kDefaultQuadratureTol);
    void save(const std::filesystem::path& path) const;

    /// Loads from `cache_dir` (or $BRWLAB_CACHE_DIR) when a valid file exists,
    /// otherwise builds and writes the cache if a directory is configured.
    static GreenTable load_or_build(int dim, int near_radius = kDefaultNearRadius,
                                    std::optional<std::filesystem::path> cache_dir = std::nullopt);

    static std::filesystem::path cache_file_name(int dim, int near_radius);

    int dim() const noexcept { return dim_; }
    int near_radius() const noexcept { return near_radius_; }
    double c1() const noexcept { return c1_; }
    double quadrature_tol() const noexcept { return quadrature_tol_; }
    std::span<const double> values() const noexcept { return values_; }

    // Largest relative gap between table and far-field branch on |x|_inf = R0.
    double handoff_error() const noexcept { return handoff_error_; }

    bool in_table(const Site& x) const noexcept { return sup_norm(x) <= near_radius_; }

    // Table value; throws OutOfTableError beyond the near radius.
    double exact(const Site& x) const;

    // G^{(d)}(x): table value inside the near radius, c1 |x|^{2-d} outside.
    double operator()(const Site& x) const noexcept {
        CanonicalKey key;
        std::int32_t top = 0;
        for (int i = 0; i < dim_; ++i) {
            key[i] = x[i] < 0 ? -x[i] : x[i];
            top = std::max(top, key[i]);
        }
        if (top <= near_radius_) return values_[rank(key)];
        return far_field(static_cast<double>(norm_sq(x)));
    }

    double far_field(double r_sq) const noexcept {
        switch (dim_) {
            case 3: return c1_ / std::sqrt(r_sq);
            case 4: return c1_ / r_sq;
            default: return c1_ / (r_sq * std::sqrt(r_sq));
        }
    }

    // Index of the canonical entry of an absolute-valued key (any order).
    std::size_t rank(CanonicalKey key) const noexcept {
        sort_descending(key);
        std::size_t r = 0;
        const std::size_t stride = static_cast<std::size_t>(near_radius_) + 1;
        for (int i = 0; i < dim_; ++i) r += place_[static_cast<std::size_t>(i) * stride + static_cast<std::size_t>(key[i])];
        return r;
    }

    // Inverse of rank: the descending key stored at position `index`.
    CanonicalKey key_at(std::size_t index) const;

    // Advances a descending key to its lexicographic successor (table order).
    void next_key(CanonicalKey& key) const noexcept;

    /// Re-checks positivity and discrete harmonicity of every stored entry.
    ///
    /// Returns the largest harmonicity residual; throws CacheError when it
    /// exceeds 10 * quadrature_tol or a value is not strictly positive.
    double validate() const;

    // out[j - begin] = G(x_i - x_j) for j in [begin, end); same values as operator().
    void evaluate_row(const SiteColumns& sites, std::size_t i, std::size_t begin, std::size_t end,
                      double* out) const;

    static std::size_t table_size(int dim, int near_radius);

private:
    GreenTable(int dim, int near_radius, double quadrature_tol, std::vector<double> values);

    static void order(std::int32_t& a, std::int32_t& b) noexcept {
        const std::int32_t hi = std::max(a, b), lo = std::min(a, b);
        a = hi;
        b = lo;
    }

    // Branch-free sorting networks for the three supported dimensions.
    void sort_descending(CanonicalKey& k) const noexcept {
        switch (dim_) {
            case 3:
                order(k[0], k[1]), order(k[1], k[2]), order(k[0], k[1]);
                break;
            case 4:
                order(k[0], k[1]), order(k[2], k[3]), order(k[0], k[2]), order(k[1], k[3]), order(k[1], k[2]);
                break;
            default:
                order(k[0], k[1]), order(k[3], k[4]), order(k[2], k[4]), order(k[2], k[3]), order(k[1], k[4]);
                order(k[0], k[3]), order(k[0], k[2]), order(k[1], k[3]), order(k[1], k[2]);
                break;
        }
    }

    void compute_handoff();

    int dim_ = 3;
    int near_radius_ = kDefaultNearRadius;
    double quadrature_tol_ = kDefaultQuadratureTol;
    double c1_ = 0.0;
    double handoff_error_ = 0.0;
    std::vector<double> values_;
    std::vector<std::size_t> binom_;  // binom_[n * (kMaxDim + 1) + k] = C(n, k)
    std::vector<std::uint32_t> place_;  // place_[i * (R0 + 1) + a] = C(a + d - 1 - i, d - i)
};

}  // namespace brwlab
