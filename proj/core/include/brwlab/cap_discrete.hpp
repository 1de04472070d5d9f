#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/escape.hpp"
#include "brwlab/green.hpp"
#include "brwlab/lattice.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

/// Escape probabilities v_x = P_x(tau_A^+ = inf) on A; capacity = sum v.
struct EquilibriumVector {
    std::vector<Site> sites;
    std::vector<double> v;
    double capacity = 0.0;
    double residual = 0.0;       // relative residual ||1 - G v|| / ||1|| in double precision
    std::int64_t iterations = 0; // total conjugate-gradient iterations
    std::size_t system_size = 0; // sites carried by the linear solve
};

struct CapSolverOptions {
    double rel_tol = 1e-8;
    // Solve on the sites of A with a neighbour outside A; interior sites have v = 0.
    bool reduce_to_boundary = true;
    // Bytes allowed for a packed single-precision copy of the Green matrix.
    // Larger systems fall back to fully matrix-free double-precision CG.
    std::size_t matrix_budget_bytes = std::size_t{15} << 28;  // 3.75 GiB
};

/// Solves sum_{y in A} G(x - y) v_y = 1 for x in A by conjugate gradients.
///
/// With a stored float matrix the solve is mixed precision: CG corrections on
/// the float matrix, residuals recomputed by exact double-precision streaming
/// until the relative residual meets rel_tol. Throws DomainError for empty A
/// and SolverError if 10 * N iterations do not converge.
EquilibriumVector cap_exact(std::span<const Site> sites, const GreenTable& green, const CapSolverOptions& options = {});
inline EquilibriumVector cap_exact(const RangeSet& a, const GreenTable& green, const CapSolverOptions& options = {}) {
    return cap_exact(a.sites(), green, options);
}

// Sites of A with at least one lattice neighbour outside A.
std::vector<Site> inner_boundary(int dim, std::span<const Site> sites);

enum class CapMethod { exact, mc_escape, far_point };

std::string to_string(CapMethod m);

struct CapEstimate {
    CapMethod method = CapMethod::exact;
    double value = 0.0;
    double stderr_ = 0.0;
    std::int64_t reps = 0;
    std::optional<double> bias_bound;

    static constexpr const char* kCsvHeader = "method,value,stderr,reps,bias_bound";
    std::string csv_row() const;
};

struct EscapeEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

/// Fraction of SRW paths from x that leave Ball(kill_radius) before entering A.
EscapeEstimate escape_probability_mc(const Site& x, const EscapeEngine& engine, double kill_radius,
                                     std::int64_t reps, Rng& rng);
EscapeEstimate escape_probability_mc(const Site& x, std::span<const Site> a, int dim, double kill_radius,
                                     std::int64_t reps, Rng& rng);

inline constexpr double kMinEscapeRadius = 64.0;

/// #A times the escape fraction from a uniform start in A to radius
/// R = max(64, R_factor * max_norm(A)), with a first-order re-entry correction
/// from the exit points. bias_bound = (max_norm / R) * value.
CapEstimate cap_mc_escape(std::span<const Site> a, const GreenTable& green, double r_factor, std::int64_t reps,
                          Rng& rng);

/// P_{x_far}(tau_A < inf) / G(x_far), walks killed outside Ball(8 |x_far|).
CapEstimate cap_farpoint(std::span<const Site> a, const GreenTable& green, const Site& x_far, std::int64_t reps,
                         Rng& rng);

}  // namespace brwlab
