#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "brwlab/lattice.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

/// Exit law of SRW started at the centre of the cube {|y_i| <= m - 1}.
///
/// The walk leaves through a face {y_a = +-m}; face and sign are uniform by
/// symmetry and the transverse position has the law tabulated here. The face
/// weights come from the killed Green function
///   G_box(0, z) = int_0^inf prod_i b(t/d; z_i) dt,
/// with b(s; z) the kernel of the 1-D continuous-time walk killed at +-m.
class CubeExitTable {
public:
    CubeExitTable(int dim, int half_width);

    int dim() const noexcept { return dim_; }
    int half_width() const noexcept { return m_; }
    // Total exit mass before normalisation; equals 1 up to quadrature error.
    double raw_mass() const noexcept { return raw_mass_; }
    // Exit probability of one transverse cell on a fixed face (sums to 1/(2d) over a face).
    double face_probability(std::span<const std::int32_t> transverse) const;

    // Displacement from the cube centre to the exit site.
    Site sample(Rng& rng) const {
        const auto face = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(dim_)));
        std::uint32_t cell = alias_.sample(rng);
        const int side = 2 * m_ - 1;
        Site s{};
        const int axis = face >> 1;
        s[axis] = (face & 1) ? -m_ : m_;
        for (int i = 0; i < dim_; ++i) {
            if (i == axis) continue;
            s[i] = static_cast<std::int32_t>(cell % static_cast<std::uint32_t>(side)) - (m_ - 1);
            cell /= static_cast<std::uint32_t>(side);
        }
        return s;
    }

private:
    int dim_;
    int m_;
    double raw_mass_ = 0.0;
    std::vector<double> face_;  // per transverse cell, normalised to sum 1
    AliasTable alias_;
};

// Process-wide cache; tables are built once and shared read-only.
const CubeExitTable& cube_exit_table(int dim, int half_width);

// Cube half-widths used by the escape engine in each dimension (ascending).
std::span<const int> cube_levels(int dim);

/// SRW from a start site until it enters A or leaves Ball(R_kill).
///
/// Away from A the walk is advanced by exact cube-exit jumps; a jump of half
/// width m is taken only when the sup-distance to A is at least m + 1 (checked
/// through a coarse blocked-cell grid) and the whole cube lies in the ball.
class EscapeEngine {
public:
    EscapeEngine(int dim, std::span<const Site> target);

    int dim() const noexcept { return dim_; }
    bool in_target(const Site& x) const noexcept { return target_.contains(x); }
    double target_max_norm() const noexcept { return max_norm_; }

    struct Outcome {
        bool escaped = false;
        Site position{};          // hit site or first site outside the ball
        std::int64_t moves = 0;   // single steps plus cube jumps
    };

    // Time 0 counts: a start inside A is a hit.
    Outcome run(Site x, double kill_radius, Rng& rng) const;
    // tau_A^+: one forced step first, then as run().
    Outcome run_after_step(Site x, double kill_radius, Rng& rng) const;

private:
    bool safe(const Site& x, std::size_t level) const noexcept;

    int dim_;
    SiteSet target_;
    double max_norm_ = 0.0;
    std::vector<int> levels_;
    std::vector<const CubeExitTable*> tables_;
    std::vector<FlatKeySet> blocked_;  // per level, cells within one cell of A
    SitePacker packer_;
};

}  // namespace brwlab
