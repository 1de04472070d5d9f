#include "brwlab/intersection_lab.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

#include "brwlab/cap_discrete.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/parallel.hpp"

namespace brwlab {

double default_probe_kill_radius(double max_norm, std::int64_t n, double lambda) {
    const double reach = lambda * std::pow(static_cast<double>(n), 0.25);
    return std::max(64.0, 8.0 * (max_norm + reach));
}

ProbeReport probe_escape_sup(const RangeSet& range, std::int64_t n, double lambda, int probe_count,
                             std::int64_t mc_reps, Rng& rng, std::optional<double> kill_radius) {
    if (range.count() == 0) throw DomainError("probe_escape_sup needs a nonempty range");
    const EscapeEngine engine(range.dim(), range.sites());
    return probe_escape_sup(range, engine, n, lambda, probe_count, mc_reps, rng, kill_radius);
}

ProbeReport probe_escape_sup(const RangeSet& range, const EscapeEngine& engine, std::int64_t n, double lambda,
                             int probe_count, std::int64_t mc_reps, Rng& rng, std::optional<double> kill_radius) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
    if (probe_count < 1) throw DomainError("probe_count must be at least 1");
    if (mc_reps < 1) throw DomainError("mc_reps must be at least 1");
    if (n < 1) throw DomainError("n must be positive");
    if (range.count() == 0) throw DomainError("probe_escape_sup needs a nonempty range");
    const int dim = range.dim();
    const double reach = lambda * std::pow(static_cast<double>(n), 0.25);
    const double max_norm = range.max_norm();
    const double kill = kill_radius.value_or(default_probe_kill_radius(max_norm, n, lambda));
    if (!(kill > max_norm + reach)) throw PreconditionError("R_kill must exceed max_norm(R_n) + lambda n^{1/4}");

    ProbeReport report;
    report.n = n;
    report.lambda = lambda;
    report.kill_radius = kill;
    report.probes.reserve(static_cast<std::size_t>(probe_count));
    const auto& sites = range.sites();
    std::array<double, kMaxDim> u{};
    for (int p = 0; p < probe_count; ++p) {
        Site x{};
        while (true) {
            const Site& base = sites[rng.below(sites.size())];
            rng.unit_vector(dim, u);
            const double rad = reach * rng.uniform();
            for (int i = 0; i < dim; ++i) x[i] = base[i] + static_cast<std::int32_t>(std::lround(rad * u[i]));
            if (!range.contains(x) || rng.uniform() < 0.5) break;
        }
        // The rounded offset can poke slightly past the reach; keep the kill radius valid.
        Probe probe;
        probe.point = x;
        if (norm(x) < kill) {
            const auto e = escape_probability_mc(x, engine, kill, mc_reps, rng);
            probe.escape = e.estimate;
            probe.stderr_ = e.stderr_;
        } else {
            probe.escape = 1.0;
        }
        report.probes.push_back(probe);
    }
    double sum = 0.0;
    for (const auto& p : report.probes) {
        report.max_escape = std::max(report.max_escape, p.escape);
        sum += p.escape;
    }
    report.mean_escape = sum / static_cast<double>(report.probes.size());
    return report;
}

std::vector<IntersectionRow> intersection_replica(const OffspringDistribution& dist, const StepDistribution& theta,
                                                  const IntersectionGrid& grid, std::uint64_t seed, std::int64_t n,
                                                  int replica) {
    const auto rep = static_cast<std::uint64_t>(replica);
    auto start = std::chrono::steady_clock::now();
    Rng tree_rng(derive_seed(seed, {static_cast<std::uint64_t>(n), rep}));
    const auto tree = sample_conditioned_tree(dist, n, tree_rng);
    const auto r = range(assign_positions(tree, theta, tree_rng));
    const EscapeEngine engine(r.dim(), r.sites());
    std::vector<IntersectionRow> rows;
    for (const double lambda : grid.lambda_list) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n), rep, std::bit_cast<std::uint64_t>(lambda)}));
        const auto report = probe_escape_sup(r, engine, n, lambda, grid.probes, grid.reps, rng);
        IntersectionRow row;
        row.dim = r.dim();
        row.n = n;
        row.lambda = lambda;
        row.replica = replica;
        row.range_count = r.count();
        row.max_escape = report.max_escape;
        row.mean_escape = report.mean_escape;
        for (const auto& p : report.probes) row.stderr_ = std::max(row.stderr_, p.stderr_);
        const auto stop = std::chrono::steady_clock::now();
        row.wall_seconds = std::chrono::duration<double>(stop - start).count();
        start = stop;
        rows.push_back(row);
    }
    return rows;
}

std::vector<IntersectionRow> intersection_curve(const OffspringDistribution& dist, const StepDistribution& theta,
                                                const IntersectionGrid& grid, std::uint64_t seed, int workers) {
    if (grid.n_list.empty() || grid.lambda_list.empty()) throw DomainError("intersection grid must be nonempty");
    if (grid.replicas < 0) throw DomainError("replicas must be non-negative");
    const auto reps = static_cast<std::size_t>(grid.replicas);
    const std::size_t lambdas = grid.lambda_list.size();
    std::vector<IntersectionRow> rows(grid.n_list.size() * lambdas * reps);
    parallel_for_static(grid.n_list.size() * reps, workers, [&](std::size_t unit) {
        const std::size_t ni = unit / reps, rep = unit % reps;
        auto cell = intersection_replica(dist, theta, grid, seed, grid.n_list[ni], static_cast<int>(rep));
        for (std::size_t li = 0; li < lambdas; ++li) rows[(ni * lambdas + li) * reps + rep] = cell[li];
    });
    return rows;
}

}  // namespace brwlab
