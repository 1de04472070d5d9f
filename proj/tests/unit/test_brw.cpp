#include <doctest.h>

#include <sstream>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/stats.hpp"
#include "common.hpp"

using namespace brwlab;
using brwlab::test::site;

TEST_SUITE("brw") {

TEST_CASE("step distributions") {
    const auto srw = StepDistribution::srw(4);
    CHECK(srw.atoms().size() == 8);
    CHECK(srw.symmetric());
    CHECK(srw.generates_lattice());
    CHECK(srw.is_atom(unit_vector(3, -1)));
    CHECK_FALSE(srw.is_atom(Site{}));
    // Covariance of SRW is I / d and Sigma_theta its square root.
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(srw.covariance()[i * 4 + j] == doctest::Approx(i == j ? 0.25 : 0.0));
            CHECK(srw.sigma_theta()[i * 4 + j] == doctest::Approx(i == j ? 0.5 : 0.0));
        }
    }
    const auto zero = StepDistribution::zero(3);
    CHECK_FALSE(zero.generates_lattice());
    CHECK(StepDistribution::preset("srw", 5).dim() == 5);
    CHECK_THROWS_AS(StepDistribution::preset("lazy", 3), DomainError);
    CHECK_THROWS_AS(StepDistribution::srw(2), UnsupportedDimensionError);
    CHECK_THROWS_AS(StepDistribution(3, {{unit_vector(0), 1.0}}, "drift"), DomainError);
    CHECK_THROWS_AS(StepDistribution(3, {{unit_vector(0), 0.5}, {unit_vector(0, -1), 0.4}}, "mass"), DomainError);
    CHECK_THROWS_AS(StepDistribution(3, {{site({0, 0, 0, 1}), 0.5}, {site({0, 0, 0, -1}), 0.5}}, "dim"), DomainError);
}

TEST_CASE("lattice generation") {
    CHECK(generates_lattice(3, {unit_vector(0), unit_vector(1), unit_vector(2)}));
    CHECK_FALSE(generates_lattice(3, {site({2}), unit_vector(1), unit_vector(2)}));
    CHECK(generates_lattice(3, {site({2}), site({3}), unit_vector(1), unit_vector(2)}));
    CHECK_FALSE(generates_lattice(3, {site({1, 1}), site({1, -1}), unit_vector(2)}));
    CHECK(generates_lattice(3, {site({1, 1}), site({1, -1}), unit_vector(0), unit_vector(2)}));
    CHECK_FALSE(generates_lattice(3, {unit_vector(0), unit_vector(1)}));
}

TEST_CASE("positions move by atoms along every edge") {
    Rng rng(3);
    const auto theta = StepDistribution::srw(3);
    const auto tree = sample_conditioned_tree(OffspringDistribution::geometric_half(), 2000, rng);
    const auto bw = assign_positions(tree, theta, rng);
    REQUIRE(bw.positions.size() == tree.size());
    CHECK(bw.positions[0] == Site{});
    for (std::size_t v = 1; v < tree.size(); ++v) CHECK(theta.is_atom(bw.positions[v] - bw.positions[tree.parent()[v]]));
    const auto r = range(bw);
    CHECK(r.count() <= tree.size());
    CHECK(r.contains(Site{}));
    for (const auto& p : bw.positions) CHECK(r.contains(p));
}

TEST_CASE("zero steps collapse the range to the origin") {
    Rng rng(1);
    const auto tree = sample_conditioned_tree(OffspringDistribution::poisson_one(), 100, rng);
    const auto r = range(assign_positions(tree, StepDistribution::zero(5), rng));
    CHECK(r.count() == 1);
    CHECK(r.max_norm() == 0.0);
}

TEST_CASE("range file round trip and errors") {
    Rng rng(6);
    const auto tree = sample_conditioned_tree(OffspringDistribution::geometric_half(), 500, rng);
    const auto r = range(assign_positions(tree, StepDistribution::srw(4), rng));
    std::stringstream ss;
    write_range(ss, r);
    const auto back = read_range(ss);
    CHECK(back.dim() == 4);
    CHECK(back.count() == r.count());
    CHECK(back.max_norm() == r.max_norm());
    for (const auto& s : r.sites()) CHECK(back.contains(s));

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_range(bad), CodecError);
    std::string bytes;
    {
        std::stringstream again;
        write_range(again, r);
        bytes = again.str();
    }
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_range(truncated), CodecError);
}

TEST_CASE("rescaled snake") {
    Rng rng(9);
    const auto tree = sample_conditioned_tree(OffspringDistribution::geometric_half(), 257, rng);
    const auto bw = assign_positions(tree, StepDistribution::srw(3), rng);
    const auto snake = rescaled_snake(tree, bw);
    CHECK(snake.size() == 2 * 256 + 1);
    CHECK(snake.front()[0] == 0.0);
    CHECK(snake.back()[2] == 0.0);
    const auto contour = contour_walk(tree);
    for (std::size_t k = 0; k < snake.size(); k += 37) CHECK(snake[k][1] == doctest::Approx(bw.positions[contour[k]][1] / 4.0));
    std::ostringstream csv;
    write_snake_csv(csv, 3, snake);
    CHECK(csv.str().rfind("t,x1,x2,x3\n0,", 0) == 0);
    CHECK_THROWS_AS(rescaled_snake(PlaneTree::single_vertex(), BranchingWalk{3, {Site{}}}), DomainError);
}

TEST_CASE("stationarity: shifted and direct displacements agree in law") {
    Rng rng(12);
    const auto s = stationarity_witness(OffspringDistribution::geometric_half(), StepDistribution::srw(3), 30, 15, 800, rng);
    CHECK(s.shifted.size() == 800);
    CHECK(s.direct.size() == 800);
    CHECK(stats::ks_two_sample(s.shifted, s.direct).p_value > 1e-3);
    CHECK_THROWS_AS(stationarity_witness(OffspringDistribution::binary(), StepDistribution::srw(3), -1, 0, 1, rng), DomainError);
}

}
