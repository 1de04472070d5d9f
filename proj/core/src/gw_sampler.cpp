#include "brwlab/gw_sampler.hpp"

#include <algorithm>
#include <string>

#include "brwlab/errors.hpp"

namespace brwlab {

std::size_t cycle_lemma_shift(std::span<const std::int32_t> steps) {
    // First index j in 1..n where the partial sum P_j attains its minimum;
    // the rotation starting at j (mod n) is the unique excursion.
    std::int64_t level = 0, best = 1;
    std::size_t at = steps.size();
    for (std::size_t j = 0; j < steps.size(); ++j) {
        level += steps[j];
        if (level < best) {
            best = level;
            at = j + 1;
        }
    }
    return at % steps.size();
}

PlaneTree sample_conditioned_tree(const OffspringDistribution& dist, std::int64_t n, Rng& rng,
                                  std::int64_t retry_budget) {
    if (!dist.admissible(n)) {
        throw AdmissibilityError("tree size " + std::to_string(n) + " is not admissible for offspring preset '" +
                                 dist.preset_name() + "' (n - 1 must be a multiple of " +
                                 std::to_string(dist.support_gcd()) + ")");
    }
    if (n == 1) return PlaneTree::single_vertex();
    const auto size = static_cast<std::size_t>(n);
    std::vector<std::int32_t> counts(size);
    for (std::int64_t attempt = 0; attempt < retry_budget; ++attempt) {
        std::int64_t sum = 0;
        std::size_t k = 0;
        for (; k < size && sum <= n - 1; ++k) {
            counts[k] = static_cast<std::int32_t>(dist.sample(rng));
            sum += counts[k];
        }
        if (k < size || sum != n - 1) continue;
        std::vector<std::int32_t> steps(size);
        for (std::size_t i = 0; i < size; ++i) steps[i] = counts[i] - 1;
        std::rotate(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(cycle_lemma_shift(steps)), steps.end());
        return decode(LukasiewiczPath{std::move(steps)});
    }
    throw BudgetError("conditioned tree sampler exhausted " + std::to_string(retry_budget) +
                      " attempts for n = " + std::to_string(n));
}

namespace {

struct Open {
    VertexId vertex;
    std::int32_t remaining;
    std::int32_t depth;  // depth inside its Galton-Watson tree
};

class ForestBuilder {
public:
    ForestBuilder(const OffspringDistribution& dist, Rng& rng, std::int64_t cap, SpineForest& out)
        : dist_(dist), rng_(rng), cap_(cap), f_(out) {}

    VertexId add_vertex(VertexId parent) {
        if (static_cast<std::int64_t>(f_.parent.size()) >= cap_) {
            throw BudgetError("spine forest exceeded the vertex cap of " + std::to_string(cap_));
        }
        f_.parent.push_back(parent);
        return static_cast<VertexId>(f_.parent.size() - 1);
    }

    // Explores a Galton-Watson vertex and queues its children.
    void explore(VertexId v, std::int32_t depth_in_tree, std::int32_t height) {
        f_.exploration.push_back(v);
        f_.heights.push_back(height);
        const auto c = static_cast<std::int32_t>(dist_.sample(rng_));
        f_.lukasiewicz_steps.push_back(c - 1);
        if (c > 0) stack_.push_back({v, c, depth_in_tree});
    }

    bool extend_current_tree(std::int32_t base_height) {
        if (stack_.empty()) return false;
        Open& top = stack_.back();
        const VertexId parent = top.vertex;
        const std::int32_t depth = top.depth + 1;
        if (--top.remaining == 0) stack_.pop_back();
        explore(add_vertex(parent), depth, base_height + depth);
        return true;
    }

private:
    const OffspringDistribution& dist_;
    Rng& rng_;
    std::int64_t cap_;
    SpineForest& f_;
    std::vector<Open> stack_;
};

void fill_sigma(SpineForest& f) {
    f.sigma.assign(f.exploration.size(), 0);
    std::int64_t level = 0, running_min = 0;
    std::size_t k = 0;
    for (std::size_t n = 0; n < f.exploration.size(); ++n) {
        running_min = std::min(running_min, level);
        while (f.Sigma[k] <= -running_min) ++k;
        f.sigma[n] = static_cast<std::int32_t>(k);
        level += f.lukasiewicz_steps[n];
    }
}

}  // namespace

SpineForest sample_spine_forest(const OffspringDistribution& dist, SpineModel model,
                                std::int64_t min_exploration_length, Rng& rng, std::int64_t vertex_cap) {
    if (min_exploration_length < 1) throw DomainError("spine forest needs a positive exploration length");
    SpineForest f;
    f.model = model;
    ForestBuilder b(dist, rng, vertex_cap, f);
    const auto target = static_cast<std::size_t>(min_exploration_length);

    const VertexId root = b.add_vertex(kNoParent);
    f.spine.push_back(root);
    f.spine_positions_in_exploration.push_back(0);

    if (model == SpineModel::T_inf_star) {
        // Spine vertex 0 is the root of an ordinary Galton-Watson tree (D_0 := 1).
        f.spine_offspring.push_back(1);
        f.Sigma.push_back(1);
        b.explore(root, 0, 0);
        std::int64_t tree_index = 0;
        std::int32_t level = 0;
        while (f.exploration.size() < target) {
            if (b.extend_current_tree(level == 0 ? 0 : level + 1)) continue;
            ++tree_index;
            while (tree_index >= f.Sigma.back()) {
                const VertexId s = b.add_vertex(f.spine.back());
                f.spine.push_back(s);
                f.spine_positions_in_exploration.push_back(static_cast<std::int64_t>(f.exploration.size()));
                const auto d = static_cast<std::int32_t>(dist.sample_tail(rng));
                f.spine_offspring.push_back(d);
                f.Sigma.push_back(f.Sigma.back() + d);
            }
            level = static_cast<std::int32_t>(f.spine.size() - 1);
            b.explore(b.add_vertex(f.spine.back()), 0, level + 1);
        }
        fill_sigma(f);
        return f;
    }

    // T_inf: every spine vertex is explored, then its D_k extra subtrees.
    std::int32_t level = 0;
    auto open_spine = [&](VertexId s) {
        const auto d = static_cast<std::int32_t>(dist.sample_tail(rng));
        f.spine_offspring.push_back(d);
        f.Sigma.push_back((f.Sigma.empty() ? 0 : f.Sigma.back()) + d);
        f.exploration.push_back(s);
        f.heights.push_back(level);
        f.lukasiewicz_steps.push_back(d);  // d extra children plus the next spine vertex
        return d;
    };
    std::int32_t pending = open_spine(root);
    while (f.exploration.size() < target) {
        if (b.extend_current_tree(level + 1)) continue;
        if (pending > 0) {
            --pending;
            b.explore(b.add_vertex(f.spine[level]), 0, level + 1);
            continue;
        }
        const VertexId s = b.add_vertex(f.spine.back());
        f.spine.push_back(s);
        ++level;
        f.spine_positions_in_exploration.push_back(static_cast<std::int64_t>(f.exploration.size()));
        pending = open_spine(s);
    }
    return f;
}

}  // namespace brwlab
