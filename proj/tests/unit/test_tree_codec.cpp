#include <doctest.h>

#include <set>
#include <sstream>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/plane_tree.hpp"

using namespace brwlab;

TEST_SUITE("tree_codec") {

TEST_CASE("plane tree counts are Catalan numbers") {
    const std::size_t catalan[] = {1, 1, 2, 5, 14, 42, 132, 429};
    for (std::size_t n = 1; n <= 8; ++n) {
        const auto trees = enumerate_plane_trees(n);
        CHECK(trees.size() == catalan[n - 1]);
        std::set<std::vector<std::int32_t>> paths;
        for (const auto& t : trees) {
            CHECK(t.size() == n);
            paths.insert(encode(t).steps);
        }
        CHECK(paths.size() == trees.size());
    }
}

TEST_CASE("encode and decode are inverse on enumerated trees") {
    for (const auto& t : enumerate_plane_trees(7)) {
        const auto path = encode(t);
        CHECK(is_excursion(path.steps));
        CHECK(decode(path) == t);
    }
}

TEST_CASE("a small tree by hand") {
    // Root with children 1 and 3; vertex 1 has child 2.
    const PlaneTree t({kNoParent, 0, 1, 0});
    CHECK(encode(t).steps == std::vector<std::int32_t>{1, 0, -1, -1});
    CHECK(t.depth() == std::vector<std::int32_t>{0, 1, 2, 1});
    CHECK(height_process(encode(t)) == std::vector<std::int32_t>{0, 1, 2, 1});
    CHECK(contour_walk(t) == std::vector<VertexId>{0, 1, 2, 1, 0, 3, 0});
    CHECK(t.children(0).size() == 2);
    CHECK(t.children(0)[1] == 3);
}

TEST_CASE("height process equals vertex depth and contour has 2n - 1 entries") {
    Rng rng(5);
    const auto dist = OffspringDistribution::geometric_half();
    for (int rep = 0; rep < 50; ++rep) {
        const auto t = sample_conditioned_tree(dist, 301, rng);
        CHECK(height_process(encode(t)) == t.depth());
        const auto contour = contour_walk(t);
        CHECK(contour.size() == 2 * (t.size() - 1) + 1);
        CHECK(contour.front() == 0);
        CHECK(contour.back() == 0);
        for (std::size_t k = 1; k < contour.size(); ++k) {
            const auto a = contour[k - 1], b = contour[k];
            CHECK((t.parent()[b] == a || t.parent()[a] == b));
        }
    }
}

TEST_CASE("codec errors") {
    CHECK_THROWS_AS(decode(LukasiewiczPath{}), CodecError);
    CHECK_THROWS_AS(decode(LukasiewiczPath{{-1, 0}}), CodecError);   // ends early
    CHECK_THROWS_AS(decode(LukasiewiczPath{{1, -1}}), CodecError);   // never reaches -1
    CHECK_THROWS_AS(decode(LukasiewiczPath{{2, -2, -1}}), CodecError);
    CHECK_THROWS_AS(PlaneTree(std::vector<VertexId>{}), CodecError);
    CHECK_THROWS_AS(PlaneTree(std::vector<VertexId>{0}), CodecError);
    CHECK_THROWS_AS(PlaneTree(std::vector<VertexId>{kNoParent, 0, 1, 1, 2}), CodecError);  // not depth first
    CHECK_FALSE(is_excursion(std::vector<std::int32_t>{0, -1, -1}));
    CHECK(is_excursion(std::vector<std::int32_t>{-1}));
}

TEST_CASE("tree text format round trip and parse errors") {
    Rng rng(2);
    const auto t = sample_conditioned_tree(OffspringDistribution::poisson_one(), 200, rng);
    std::stringstream ss;
    write_tree(ss, t);
    CHECK(read_tree(ss) == t);

    std::istringstream bad("2\nx\n0\n");
    CHECK_THROWS_AS(read_tree(bad), CodecError);
    std::istringstream negative("1\n-3\n");
    CHECK_THROWS_AS(read_tree(negative), CodecError);
    std::istringstream unclosed("2\n0\n");
    CHECK_THROWS_AS(read_tree(unclosed), CodecError);
}

TEST_CASE("cycle lemma picks the unique excursion rotation") {
    const std::vector<std::int32_t> steps = {-1, -1, 2, 0, -1};
    const auto s = cycle_lemma_shift(steps);
    std::vector<std::int32_t> rotated;
    for (std::size_t k = 0; k < steps.size(); ++k) rotated.push_back(steps[(s + k) % steps.size()]);
    CHECK(is_excursion(rotated));
    int excursions = 0;
    for (std::size_t r = 0; r < steps.size(); ++r) {
        std::vector<std::int32_t> rot;
        for (std::size_t k = 0; k < steps.size(); ++k) rot.push_back(steps[(r + k) % steps.size()]);
        excursions += is_excursion(rot) ? 1 : 0;
    }
    CHECK(excursions == 1);
}

}
