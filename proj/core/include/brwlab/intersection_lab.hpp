#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/escape.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

struct Probe {
    Site point{};
    double escape = 0.0;
    double stderr_ = 0.0;
};

struct ProbeReport {
    std::int64_t n = 0;
    double lambda = 0.0;
    double kill_radius = 0.0;
    std::vector<Probe> probes;
    double max_escape = 0.0;
    double mean_escape = 0.0;
};

// max(64, 8 (max_norm + lambda n^{1/4})).
double default_probe_kill_radius(double max_norm, std::int64_t n, double lambda);

/// Max over random probes near the range of P_x(SRW avoids R_n before leaving
/// Ball(R_kill)). A lower bound for the supremum over the whole neighbourhood.
///
/// Probe: uniform range site plus an offset with uniform direction and radius
/// uniform in (0, lambda n^{1/4}), rounded to the lattice. Probes landing in
/// the range are redrawn with probability 1/2.
ProbeReport probe_escape_sup(const RangeSet& range, std::int64_t n, double lambda, int probe_count,
                             std::int64_t mc_reps, Rng& rng, std::optional<double> kill_radius = std::nullopt);

// Same, with a caller-built engine over the range (reused across lambdas).
ProbeReport probe_escape_sup(const RangeSet& range, const EscapeEngine& engine, std::int64_t n, double lambda,
                             int probe_count, std::int64_t mc_reps, Rng& rng,
                             std::optional<double> kill_radius = std::nullopt);

struct IntersectionRow {
    int dim = 0;
    std::int64_t n = 0;
    double lambda = 0.0;
    int replica = 0;
    std::size_t range_count = 0;
    double max_escape = 0.0;
    double mean_escape = 0.0;
    double stderr_ = 0.0;  // largest per-probe stderr
    double wall_seconds = 0.0;
};

struct IntersectionGrid {
    std::vector<std::int64_t> n_list;
    std::vector<double> lambda_list;
    int replicas = 0;
    int probes = 64;
    std::int64_t reps = 10000;
};

/// Rows for one (n, replica) cell, one per lambda in grid order.
std::vector<IntersectionRow> intersection_replica(const OffspringDistribution& dist, const StepDistribution& theta,
                                                  const IntersectionGrid& grid, std::uint64_t seed, std::int64_t n,
                                                  int replica);

/// One row per (n, lambda, replica), ordered by n, then lambda, then replica.
/// Each (n, replica) draws a fresh tree and walk from
/// derive_seed(seed, {n, replica}); the probes for each lambda use
/// derive_seed(seed, {n, replica, bits(lambda)}).
std::vector<IntersectionRow> intersection_curve(const OffspringDistribution& dist, const StepDistribution& theta,
                                                const IntersectionGrid& grid, std::uint64_t seed, int workers = 1);

}  // namespace brwlab
