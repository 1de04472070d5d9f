#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "brwlab/errors.hpp"
#include "brwlab/experiments.hpp"

using namespace brwlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / ("brwlab_unit_" + name)) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void check_config_error(const std::string& text, int line, int column) {
    CAPTURE(text);
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == line);
        CHECK(e.column() == column);
    }
}

ResultRow row(std::int64_t n, int replica, double cap) {
    ResultRow r;
    r.experiment = "scaling";
    r.dim = 3;
    r.n = n;
    r.replica = replica;
    r.cap_exact = cap;
    return r;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("config parsing") {
    const auto c = parse_config(
        "# scaling ladder\n"
        "experiment = scaling\n"
        "dim = 4   # trailing comment\n"
        "n_list = 2^10, 4096, 2^14\n"
        "lambda_list = 0.4,0.1\n"
        "methods = exact, mc\n"
        "seed = 99\n"
        "record_wall_seconds = true\n");
    CHECK(c.experiment == ExperimentKind::scaling);
    CHECK(c.dim == 4);
    CHECK(c.n_list == std::vector<std::int64_t>{1024, 4096, 16384});
    CHECK(c.lambda_list == std::vector<double>{0.4, 0.1});
    CHECK(c.methods == std::vector<std::string>{"exact", "mc"});
    CHECK(c.seed == 99);
    CHECK(c.record_wall_seconds);
}

TEST_CASE("config errors carry line and column") {
    check_config_error("dim = 3\n  garbage\n", 2, 3);
    check_config_error("dim = 3\ndim = 4\n", 2, 1);
    check_config_error("seed =   \n", 1, 7);
    check_config_error("\n\ncolour = red\n", 3, 1);
    check_config_error("dim = three\n", 1, 7);
    check_config_error("n_list = 2^x\n", 1, 10);
    check_config_error("experiment = bogus\n", 1, 14);
    check_config_error(" = 3\n", 1, 2);
    CHECK_THROWS_AS(load_config("/nonexistent/brwlab.cfg"), Error);
}

TEST_CASE("defaults and validation") {
    ExperimentConfig c;
    c.experiment = ExperimentKind::intersection;
    apply_defaults(c);
    CHECK(c.n_list == std::vector<std::int64_t>{1 << 14});
    CHECK(c.lambda_list.size() == 4);
    CHECK(c.replicas == 50);
    CHECK(c.out == "intersection_d3.csv");
    validate_config(c);

    auto bad = c;
    bad.dim = 6;
    CHECK_THROWS_AS(validate_config(bad), UnsupportedDimensionError);
    bad = c;
    bad.offspring = "binary";
    bad.n_list = {1024};
    CHECK_THROWS_AS(validate_config(bad), AdmissibilityError);
    bad = c;
    bad.lambda_list = {0.1, 0.1};
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.eps = 1.0;
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.workers = 0;
    CHECK_THROWS_AS(validate_config(bad), ConfigError);
    bad = c;
    bad.theta = "nope";
    CHECK_THROWS(validate_config(bad));
    CHECK(parse_experiment_kind("theorem1") == ExperimentKind::theorem1);
    CHECK(experiment_id(ExperimentKind::scaling) != experiment_id(ExperimentKind::cardinality));
}

TEST_CASE("csv rows round trip") {
    ResultRow r = row(4096, 7, 0.1 + 0.2);
    r.lambda = 0.05;
    r.range_count = 1234;
    r.max_escape = 1.0 / 3.0;
    const auto line = r.csv_row();
    CHECK(line == "scaling,3,4096,0.05,7,1234,0.30000000000000004,,,,0.3333333333333333,");
    const auto back = ResultRow::parse(line);
    CHECK(back.cap_exact == r.cap_exact);
    CHECK(back.max_escape == r.max_escape);
    CHECK(back.lambda == r.lambda);
    CHECK_FALSE(back.cap_mc.has_value());
    CHECK_THROWS_AS(ResultRow::parse("scaling,3,4096"), Error);

    std::stringstream ss;
    write_csv(ss, {r, row(8, 0, 2.5)});
    const auto rows = read_csv(ss);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].cap_exact == 2.5);
    std::stringstream wrong("a,b,c\n");
    CHECK_THROWS(read_csv(wrong));
}

TEST_CASE("exponent fit") {
    std::vector<ResultRow> rows;
    for (std::int64_t n : {256, 1024, 4096, 16384}) {
        for (int rep = 0; rep < 3; ++rep) rows.push_back(row(n, rep, 2.0 * std::pow(static_cast<double>(n), 0.75)));
    }
    const auto fit = fit_exponent(rows, "n", "cap_exact");
    CHECK(fit.slope == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(fit.points == 4);
    rows.resize(6);  // two distinct n
    CHECK_THROWS_AS(fit_exponent(rows, "n", "cap_exact"), FitError);
    std::vector<ResultRow> negative = {row(1, 0, -1.0), row(2, 0, 1.0), row(4, 0, 1.0)};
    CHECK_THROWS_AS(fit_exponent(negative, "n", "cap_exact"), FitError);
    CHECK(row_field(row(4, 0, 1.5), "cap_exact") == 1.5);
    CHECK_FALSE(row_field(row(4, 0, 1.5), "cap_mc").has_value());
}

TEST_CASE("scaling checks on synthetic rows") {
    ExperimentConfig c;
    c.experiment = ExperimentKind::scaling;
    c.dim = 4;
    std::vector<ResultRow> rows;
    for (std::int64_t n : {1024, 4096, 16384}) rows.push_back(row(n, 0, std::pow(static_cast<double>(n), 0.5)));
    for (auto& r : rows) r.dim = 4;
    auto checks = evaluate_checks(c, rows);
    REQUIRE_FALSE(checks.empty());
    CHECK(checks[0].pass);
    for (auto& r : rows) r.cap_exact = std::pow(static_cast<double>(r.n), 0.8);
    checks = evaluate_checks(c, rows);
    CHECK_FALSE(checks[0].pass);
}

TEST_CASE("runs are deterministic and resumable") {
    TempDir dir("runs");
    ExperimentConfig c;
    c.experiment = ExperimentKind::cardinality;
    c.n_list = {64, 256, 1024};
    c.replicas = 4;
    c.seed = 5;
    c.out = (dir.path / "a.csv").string();
    std::ostringstream log;
    const auto first = run_experiment(c, log);
    CHECK(first.rows.size() == 12);
    CHECK(first.new_rows == 12);
    CHECK(log.str().find("cardinality d=3") != std::string::npos);

    auto c2 = c;
    c2.out = (dir.path / "b.csv").string();
    c2.workers = 3;
    c2.checkpoint_every = 5;
    run_experiment(c2, log);
    CHECK(slurp(c.out) == slurp(c2.out));

    // Drop rows and resume: the missing units are recomputed identically.
    auto rows = read_csv(std::filesystem::path(c.out));
    rows.erase(rows.begin() + 2, rows.begin() + 7);
    write_csv_atomic(c.out, rows);
    const auto resumed = run_experiment(c, log);
    CHECK(resumed.new_rows == 5);
    CHECK(slurp(c.out) == slurp(c2.out));

    // A complete file is left alone.
    CHECK(run_experiment(c, log).new_rows == 0);

    // Rows of another experiment are refused.
    auto other = c;
    other.experiment = ExperimentKind::scaling;
    CHECK_THROWS_AS(run_experiment(other, log), IoError);
}

TEST_CASE("zero replicas writes a header-only file") {
    TempDir dir("empty");
    ExperimentConfig c;
    c.experiment = ExperimentKind::intersection;
    c.replicas = 0;
    c.out = (dir.path / "i.csv").string();
    std::ostringstream log;
    const auto r = run_experiment(c, log);
    CHECK(r.rows.empty());
    CHECK(r.exit_code == 0);
    CHECK(slurp(c.out) == std::string(ResultRow::kCsvHeader) + "\n");
}

TEST_CASE("small scaling run with all estimators") {
    TempDir dir("scaling");
    ExperimentConfig c;
    c.experiment = ExperimentKind::scaling;
    c.n_list = {64, 128, 256};
    c.replicas = 2;
    c.reps = 2000;
    c.methods = {"exact", "mc", "farpoint"};
    c.out = (dir.path / "s.csv").string();
    std::ostringstream log;
    const auto r = run_experiment(c, log);
    REQUIRE(r.rows.size() == 6);
    for (const auto& row : r.rows) {
        REQUIRE(row.cap_exact.has_value());
        REQUIRE(row.cap_mc.has_value());
        REQUIRE(row.cap_farpoint.has_value());
        CHECK(*row.cap_exact > 0.0);
        CHECK(*row.cap_exact <= static_cast<double>(*row.range_count));
        CHECK(std::abs(*row.cap_mc / *row.cap_exact - 1.0) < 0.25);
        CHECK(std::abs(*row.cap_farpoint / *row.cap_exact - 1.0) < 0.5);
        CHECK_FALSE(row.wall_seconds.has_value());
    }
}

}
