#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/green.hpp"
#include "common.hpp"

using namespace brwlab;
using brwlab::test::site;

namespace {

// Return probabilities of SRW on Z^d (Guttmann 2010), G(0) = 1 / (1 - p_d); re-checked
// by 30-digit quadrature of d int (e^{-s} I_0(s))^d ds. The often quoted 0.193206 for
// d = 4 is off in the sixth digit.
double literature_g0(int dim) {
    switch (dim) {
        case 3: return 1.0 / (1.0 - 0.340537329550999);
        case 4: return 1.0 / (1.0 - 0.193201673224984);
        default: return 1.0 / (1.0 - 0.135178609820655);
    }
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("brwlab_unit_" + name);
}

}  // namespace

TEST_SUITE("green") {

TEST_CASE("continuum constants") {
    // d = 3: c1 = 3 / (2 pi); continuum coefficient = 1 / (2 pi) (generator Delta / 2).
    CHECK(c1_constant(3) == doctest::Approx(3.0 / (2.0 * M_PI)).epsilon(1e-14));
    CHECK(continuum_coefficient(3) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
    CHECK(c1_constant(4) == doctest::Approx(2.0 / (M_PI * M_PI)).epsilon(1e-14));
    const std::vector<double> x = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(g_continuum(3, x), SingularityError);
    const std::vector<double> y = {2.0, 0.0, 0.0};
    CHECK(g_continuum(3, y) == doctest::Approx(1.0 / (4.0 * M_PI)));
    CHECK_THROWS_AS(c1_constant(2), UnsupportedDimensionError);
    CHECK_THROWS_AS(c1_constant(6), UnsupportedDimensionError);
}

TEST_CASE("scaled Bessel functions satisfy the normalisation identity") {
    for (double s : {0.0, 0.3, 5.0, 80.0, 2000.0}) {
        std::vector<double> out(400);
        scaled_bessel_i(s, out);
        double total = out[0];
        for (std::size_t k = 1; k < out.size(); ++k) total += 2.0 * out[k];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t k = 1; k < out.size(); ++k) CHECK(out[k] <= out[k - 1]);
    }
    std::vector<double> at_one(2);
    scaled_bessel_i(1.0, at_one);
    CHECK(at_one[0] == doctest::Approx(std::exp(-1.0) * 1.2660658777520082).epsilon(1e-13));
    CHECK(at_one[1] == doctest::Approx(std::exp(-1.0) * 0.5651591039924851).epsilon(1e-13));
}

TEST_CASE("origin values match the literature return probabilities") {
    for (int d : {3, 4, 5}) {
        const double g0 = green_exact(d, Site{});
        CHECK(g0 == doctest::Approx(literature_g0(d)).epsilon(1e-8));
        // G(e1) = G(0) - 1 (last-exit decomposition at the origin).
        CHECK(green_exact(d, unit_vector(0)) == doctest::Approx(g0 - 1.0).epsilon(1e-10));
    }
}

TEST_CASE("exact evaluation rejects sites beyond the near radius") {
    CHECK_THROWS_AS(green_exact(3, site({65, 0, 0})), OutOfTableError);
    CHECK_THROWS_AS(green_exact(7, Site{}), UnsupportedDimensionError);
}

TEST_CASE("full tables: symmetry, harmonicity, far field, batched rows") {
    for (int d : {3, 4, 5}) {
        CAPTURE(d);
        const auto& g = test::green(d);
        CHECK(g.near_radius() == kDefaultNearRadius);
        CHECK(g(Site{}) == doctest::Approx(literature_g0(d)).epsilon(1e-8));
        CHECK(g.validate() < 1e-8);
        CHECK(g.handoff_error() < 0.01);

        // Every coordinate permutation and sign flip shares one value.
        Site x = site({5, -2, 7, 1, -3});
        for (int i = d; i < kMaxDim; ++i) x[i] = 0;
        Site y{};
        for (int i = 0; i < d; ++i) y[i] = -x[d - 1 - i];
        CHECK(g(x) == g(y));

        // Interior harmonicity off the origin.
        Site z = site({3, 1, 0, 2, 0});
        for (int i = d; i < kMaxDim; ++i) z[i] = 0;
        double avg = 0.0;
        for (int i = 0; i < d; ++i) avg += g(z + unit_vector(i)) + g(z - unit_vector(i));
        CHECK(avg / (2.0 * d) == doctest::Approx(g(z)).epsilon(1e-9));

        // Far field: G(x) |x|^{d-2} -> c1; past the table the far branch is used.
        Site far{};
        far[0] = 40;
        far[1] = 30;
        const double r = 50.0;
        CHECK(g.exact(far) * std::pow(r, d - 2) == doctest::Approx(g.c1()).epsilon(0.01));
        Site beyond{};
        beyond[0] = 500;
        CHECK(g(beyond) == doctest::Approx(g.c1() / std::pow(500.0, d - 2)));
        CHECK_THROWS_AS(g.exact(beyond), OutOfTableError);

        // Monotone decay along an axis.
        for (int k = 0; k < 20; ++k) CHECK(g(site({k + 1})) < g(site({k})));

        // Batched rows agree with single lookups, including far-field entries.
        std::vector<Site> sites = {Site{}, site({1}), site({63, 2, 1}), site({-70, 5}), site({200, -3, 9}), site({2, 2, 2, 2, 2})};
        for (auto& s : sites) {
            for (int i = d; i < kMaxDim; ++i) s[i] = 0;
        }
        const SiteColumns cols(d, sites);
        std::vector<double> row(sites.size());
        for (std::size_t i = 0; i < sites.size(); ++i) {
            g.evaluate_row(cols, i, 0, sites.size(), row.data());
            for (std::size_t j = 0; j < sites.size(); ++j) CHECK(row[j] == doctest::Approx(g(sites[i] - sites[j])).epsilon(1e-15));
        }
    }
}

TEST_CASE("table keys enumerate every canonical site once") {
    const auto g = GreenTable::build(3, 12);
    CHECK(g.values().size() == GreenTable::table_size(3, 12));
    CHECK(GreenTable::table_size(3, 12) == 455);  // C(12 + 3, 3)
    CanonicalKey k = g.key_at(0);
    for (std::size_t i = 0; i < g.values().size(); ++i) {
        CHECK(g.rank(k) == i);
        if (i + 1 < g.values().size()) g.next_key(k);
    }
    CHECK(g(site({12, 12, 12})) == doctest::Approx(green_exact(3, site({12, 12, 12}))).epsilon(1e-12));
}

TEST_CASE("cache round trip and corruption") {
    const auto g = GreenTable::build(4, 16);
    const auto path = temp_file("green_d4.grnt");
    g.save(path);
    const auto back = GreenTable::load(path);
    REQUIRE(back.values().size() == g.values().size());
    for (std::size_t i = 0; i < g.values().size(); ++i) CHECK(back.values()[i] == g.values()[i]);

    SUBCASE("corrupted value fails harmonicity") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        const double bad = 0.5;
        f.seekp(16 + 8 * 40);
        f.write(reinterpret_cast<const char*>(&bad), sizeof bad);
        f.close();
        CHECK_THROWS_AS(GreenTable::load(path), CacheError);
    }
    SUBCASE("truncated file") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
        CHECK_THROWS_AS(GreenTable::load(path), CacheError);
    }
    SUBCASE("trailing bytes") {
        std::ofstream(path, std::ios::binary | std::ios::app) << 'x';
        CHECK_THROWS_AS(GreenTable::load(path), CacheError);
    }
    SUBCASE("bad magic") {
        std::ofstream(path, std::ios::binary | std::ios::trunc) << "JUNKJUNKJUNKJUNK";
        CHECK_THROWS_AS(GreenTable::load(path), CacheError);
    }
    CHECK_THROWS_AS(GreenTable::load(temp_file("does_not_exist")), CacheError);
    std::filesystem::remove(path);
}

TEST_CASE("load_or_build writes into an explicit cache directory") {
    const auto dir = std::filesystem::temp_directory_path() / "brwlab_unit_cache";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto a = GreenTable::load_or_build(3, 16, dir);
    CHECK(std::filesystem::exists(dir / GreenTable::cache_file_name(3, 16)));
    const auto b = GreenTable::load_or_build(3, 16, dir);
    CHECK(a.values()[7] == b.values()[7]);
    std::filesystem::remove_all(dir);
}

}
