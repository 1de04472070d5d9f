#pragma once

#include <cstdint>
#include <vector>

#include "brwlab/offspring.hpp"
#include "brwlab/plane_tree.hpp"
#include "brwlab/random.hpp"

namespace brwlab {

inline constexpr std::int64_t kDefaultRetryBudget = 1'000'000;

/// Exact sampler of the Galton-Watson tree conditioned on #T = n.
///
/// Draws n i.i.d. offspring counts until their sum is n - 1 (rejection),
/// rotates the step sequence to its unique excursion shift (cycle lemma) and
/// decodes it. Throws AdmissibilityError for inadmissible n and BudgetError
/// once `retry_budget` attempts are spent.
PlaneTree sample_conditioned_tree(const OffspringDistribution& dist, std::int64_t n, Rng& rng,
                                  std::int64_t retry_budget = kDefaultRetryBudget);

// Start index of the cyclic shift of `steps` (sum -1) that is an excursion.
std::size_t cycle_lemma_shift(std::span<const std::int32_t> steps);

enum class SpineModel { T_inf, T_inf_star };

/// Finite exploration prefix of an infinite spine forest.
///
/// `parent` covers every materialised vertex, spine vertices included, with
/// parent[v] < v. `exploration` lists the explored vertices in lexicographic
/// order; for T_inf_star the spine vertices beyond the root are skipped.
/// The next spine vertex is the last child of each spine vertex, so the extra
/// subtrees hanging off spine vertex k are explored before spine vertex k+1.
struct SpineForest {
    SpineModel model = SpineModel::T_inf_star;
    std::vector<VertexId> parent;
    std::vector<VertexId> exploration;
    std::vector<VertexId> spine;                       // vertex ids of spine vertices 0, 1, ...
    std::vector<std::int32_t> spine_offspring;         // D_k (D_0 := 1 for T_inf_star)
    std::vector<std::int64_t> spine_positions_in_exploration;  // first explored index at or after spine vertex k
    std::vector<std::int64_t> Sigma;                   // Sigma_k = sum_{i<=k} D_i (= 1 + sum_{1<=i<=k} D_i for T_inf_star)
    std::vector<std::int32_t> sigma;                   // sigma_n per explored index (T_inf_star)
    std::vector<std::int32_t> heights;                 // graph distance to emp_0 per explored index
    std::vector<std::int32_t> lukasiewicz_steps;       // concatenated forest walk (T_inf_star)
};

inline constexpr std::int64_t kDefaultVertexCap = 50'000'000;

/// Grows the spine forest until at least `min_exploration_length` vertices are explored.
///
/// The final Galton-Watson tree is generated only as far as the exploration
/// needs. Throws BudgetError if more than `vertex_cap` vertices are required.
SpineForest sample_spine_forest(const OffspringDistribution& dist, SpineModel model,
                                std::int64_t min_exploration_length, Rng& rng,
                                std::int64_t vertex_cap = kDefaultVertexCap);

}  // namespace brwlab
