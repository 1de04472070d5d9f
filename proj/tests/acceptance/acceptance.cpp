// Acceptance criteria A1-A10. Usage: brwlab_acceptance <A1..A10> [--work DIR] [--workers N]
// Prints one "A<k> PASS|FAIL detail" line; exit 0 on PASS, 1 on FAIL or error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/cap_continuum.hpp"
#include "brwlab/cap_discrete.hpp"
#include "brwlab/experiments.hpp"
#include "brwlab/green.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/plane_tree.hpp"
#include "brwlab/stats.hpp"

namespace {

using namespace brwlab;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string num(double x, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << x;
    return os.str();
}

struct Context {
    std::filesystem::path work;
    int workers = 1;
    std::ostream& log = std::cerr;
};

// ------------------------------------------------------------------ A1
Verdict a1(const Context&) {
    Verdict v{true, ""};
    const double g0 = green_exact(3, Site{});
    const double g1 = green_exact(3, unit_vector(0));
    const bool origin = g0 >= 1.5163 && g0 <= 1.5165;
    const bool neighbour = std::abs(g1 - (g0 - 1.0)) <= 1e-8;
    v.pass = origin && neighbour;
    v.detail = "G3(0)=" + num(g0, 12) + " |G3(e1)-G3(0)+1|=" + num(std::abs(g1 - (g0 - 1.0)), 3);
    for (int d : {3, 4, 5}) {
        // Two directions at |x| = 50.
        for (const auto& coords : {std::vector<int>{50}, std::vector<int>{30, 40}}) {
            Site x{};
            std::vector<double> xr(static_cast<std::size_t>(d), 0.0);
            for (std::size_t i = 0; i < coords.size(); ++i) {
                x[i] = coords[i];
                xr[i] = coords[i];
            }
            const double ratio = green_exact(d, x) / g_continuum(d, xr);
            const bool ok = std::abs(ratio / d - 1.0) <= 0.02;
            v.pass = v.pass && ok;
            v.detail += " G/g(d=" + std::to_string(d) + (coords.size() == 1 ? ",axis" : ",diag") + ")=" + num(ratio, 6);
        }
    }
    return v;
}

// ------------------------------------------------------------------ A2
Verdict a2(const Context& ctx) {
    Verdict v{true, ""};
    for (int d : {3, 4, 5}) {
        const auto green = GreenTable::load_or_build(d);
        const double target = 1.0 / green_exact(d, Site{});
        const auto ev = cap_exact(std::vector<Site>{Site{}}, green);
        const double err = std::abs(ev.capacity - target);
        Rng rng(derive_seed(20260, {static_cast<std::uint64_t>(d)}));
        const auto mc = cap_mc_escape(std::vector<Site>{Site{}}, green, 8.0, 1000000, rng);
        const double z = (mc.value - target) / mc.stderr_;
        const bool ok = err <= 1e-8 && std::abs(z) <= 3.0;
        v.pass = v.pass && ok;
        v.detail += " d=" + std::to_string(d) + ": exact err " + num(err, 2) + ", mc " + num(mc.value, 6) + " z=" +
                    num(z, 3) + ";";
        ctx.log << "A2 d=" << d << " exact " << ev.capacity << " target " << target << " mc " << mc.value << " +- "
                << mc.stderr_ << '\n';
    }
    return v;
}

// ------------------------------------------------------------------ A3
Verdict a3(const Context& ctx) {
    Verdict v{true, ""};
    const auto dist = OffspringDistribution::geometric_half();
    for (int d : {3, 4, 5}) {
        const auto green = GreenTable::load_or_build(d);
        const auto theta = StepDistribution::srw(d);
        int agree = 0;
        for (int k = 0; k < 20; ++k) {
            // Seeded ranges of a size-512 tree, redrawn until #A <= 500.
            Rng rng(derive_seed(3003, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(k)}));
            RangeSet r(d);
            do {
                const auto tree = sample_conditioned_tree(dist, 512, rng);
                r = range(assign_positions(tree, theta, rng));
            } while (r.count() > 500);
            const double exact = cap_exact(r, green).capacity;
            Rng mc_rng(derive_seed(rng.bits(), {1}));
            const auto mc = cap_mc_escape(r.sites(), green, 8.0, 40000, mc_rng);
            Site far{};
            far[0] = static_cast<std::int32_t>(std::ceil(4.0 * r.max_norm()));
            const auto fp = cap_farpoint(r.sites(), green, far, 40000, mc_rng);
            const bool mc_ok = std::abs(exact - mc.value) <= 3.0 * mc.stderr_ + mc.bias_bound.value_or(0.0);
            const bool fp_ok = std::abs(exact - fp.value) <= 3.0 * fp.stderr_ + fp.bias_bound.value_or(0.0);
            agree += (mc_ok && fp_ok) ? 1 : 0;
            ctx.log << "A3 d=" << d << " k=" << k << " #A=" << r.count() << " exact " << exact << " mc " << mc.value
                    << " +- " << mc.stderr_ << " (bias " << *mc.bias_bound << ") far " << fp.value << " +- "
                    << fp.stderr_ << " (bias " << *fp.bias_bound << ")" << (mc_ok && fp_ok ? "" : " MISS") << '\n';
        }
        v.pass = v.pass && agree >= 18;
        v.detail += " d=" + std::to_string(d) + ": " + std::to_string(agree) + "/20;";
    }
    return v;
}

// ------------------------------------------------------------------ A4
double conditioned_p_value(const OffspringDistribution& dist, std::size_t n, int samples, Rng& rng) {
    const auto trees = enumerate_plane_trees(n);
    std::map<std::vector<std::int32_t>, std::size_t> index;
    std::vector<double> prob;
    for (const auto& t : trees) {
        double w = 1.0;
        for (auto c : t.children_counts()) w *= dist.p(static_cast<std::size_t>(c));
        index[encode(t).steps] = prob.size();
        prob.push_back(w);
    }
    double total = 0.0;
    for (double p : prob) total += p;
    for (double& p : prob) p /= total;
    std::vector<double> counts(prob.size(), 0.0);
    for (int s = 0; s < samples; ++s) {
        counts[index.at(encode(sample_conditioned_tree(dist, static_cast<std::int64_t>(n), rng)).steps)] += 1.0;
    }
    return stats::chi_square_test(counts, prob).p_value;
}

Verdict a4(const Context&) {
    Rng rng(4004);
    const auto geometric = OffspringDistribution::geometric_half();
    const OffspringDistribution presets[] = {geometric, OffspringDistribution::binary(),
                                             OffspringDistribution::poisson_one()};
    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
        // Odd sizes are admissible for every preset.
        const auto n = 1 + 2 * static_cast<std::int64_t>(rng.below(200));
        const auto t = sample_conditioned_tree(presets[i % 3], n, rng);
        const auto path = encode(t);
        if (!is_excursion(path.steps) || !(decode(path) == t)) ++failures;
    }
    const double p4 = conditioned_p_value(geometric, 4, 10000, rng);
    const double p5 = conditioned_p_value(geometric, 5, 10000, rng);
    const double p5_poisson = conditioned_p_value(OffspringDistribution::poisson_one(), 5, 10000, rng);
    Verdict v;
    v.pass = failures == 0 && p4 > 1e-3 && p5 > 1e-3 && p5_poisson > 1e-3;
    v.detail = "round trips 10000 across presets (" + std::to_string(failures) + " failures); chi-square p: n=4 " + num(p4, 4) +
               ", n=5 geometric " + num(p5, 4) + ", n=5 poisson " + num(p5_poisson, 4);
    return v;
}

// ------------------------------------------------------------------ experiments
ExperimentConfig base_config(const Context& ctx, ExperimentKind kind, int dim, const std::string& file) {
    ExperimentConfig c;
    c.experiment = kind;
    c.dim = dim;
    c.seed = 1;
    c.workers = ctx.workers;
    c.out = (ctx.work / file).string();
    return c;
}

const CheckResult* find_check(const RunResult& r, const std::string& name) {
    for (const auto& c : r.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

Verdict from_checks(const RunResult& r, const std::string& prefix) {
    Verdict v{!r.checks.empty(), ""};
    for (const auto& c : r.checks) {
        v.pass = v.pass && c.pass;
        v.detail += " " + prefix + c.name + (c.pass ? " ok" : " FAIL") + " (" + c.detail + ");";
    }
    return v;
}

// ------------------------------------------------------------------ A5
Verdict a5(const Context& ctx) {
    Verdict v{true, ""};
    for (int d : {3, 4, 5}) {
        auto c = base_config(ctx, ExperimentKind::scaling, d, "A5_scaling_d" + std::to_string(d) + ".csv");
        c.n_list = {1 << 10, 1 << 12, 1 << 14, 1 << 16};
        c.replicas = 200;
        const auto r = run_experiment(c, ctx.log);
        const auto part = from_checks(r, "d=" + std::to_string(d) + " ");
        v.pass = v.pass && part.pass;
        v.detail += part.detail;
    }
    return v;
}

// ------------------------------------------------------------------ A6
Verdict a6(const Context& ctx) {
    Verdict v{true, ""};
    for (int d : {3, 4, 5}) {
        auto c = base_config(ctx, ExperimentKind::cardinality, d, "A6_cardinality_d" + std::to_string(d) + ".csv");
        c.n_list = d == 3 ? std::vector<std::int64_t>{1 << 10, 1 << 12, 1 << 14, 1 << 16}
                          : std::vector<std::int64_t>{1 << 12, 1 << 14, 1 << 16};
        c.replicas = 200;
        const auto r = run_experiment(c, ctx.log);
        const auto part = from_checks(r, "d=" + std::to_string(d) + " ");
        v.pass = v.pass && part.pass;
        v.detail += part.detail;
    }
    return v;
}

// ------------------------------------------------------------------ A7
Verdict a7(const Context& ctx) {
    auto c = base_config(ctx, ExperimentKind::theorem1, 3, "A7_theorem1_d3.csv");
    c.n_list = {1 << 16};
    c.replicas = 50;
    c.eps = 0.05;
    return from_checks(run_experiment(c, ctx.log), "");
}

// ------------------------------------------------------------------ A8
Verdict a8(const Context& ctx) {
    auto c = base_config(ctx, ExperimentKind::intersection, 3, "A8_intersection_lambda.csv");
    c.n_list = {1 << 14};
    c.lambda_list = {0.4, 0.2, 0.1, 0.05};
    c.replicas = 50;
    c.probe_count = 64;
    c.reps = 10000;
    const auto trend = run_experiment(c, ctx.log);
    auto v = from_checks(trend, "lambda-sweep ");

    auto g = base_config(ctx, ExperimentKind::intersection, 3, "A8_intersection_n.csv");
    g.n_list = {1 << 12, 1 << 16};
    g.lambda_list = {0.1};
    g.replicas = 50;
    g.probe_count = 64;
    g.reps = 10000;
    const auto growth = run_experiment(g, ctx.log);
    const auto part = from_checks(growth, "n-growth ");
    v.pass = v.pass && part.pass;
    v.detail += part.detail;
    return v;
}

// ------------------------------------------------------------------ A9
Verdict a9(const Context&) {
    Rng rng(9009);
    const auto s = stationarity_witness(OffspringDistribution::geometric_half(), StepDistribution::srw(3), 200, 100,
                                        2000, rng);
    const auto ks = stats::ks_two_sample(s.shifted, s.direct);
    Verdict v;
    v.pass = ks.p_value > 1e-3;
    v.detail = "KS D=" + num(ks.statistic, 4) + " p=" + num(ks.p_value, 4) + " (k=200, i=100, 2000 replicas)";
    return v;
}

// ------------------------------------------------------------------ A10
std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict a10(const Context& ctx) {
    Verdict v{true, ""};
    const auto dir = ctx.work / "A10";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    std::vector<ExperimentConfig> configs;
    {
        ExperimentConfig c;
        c.experiment = ExperimentKind::scaling;
        c.dim = 4;
        c.n_list = {256, 512, 1024};
        c.replicas = 6;
        c.methods = {"exact", "mc", "farpoint"};
        c.reps = 2000;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = ExperimentKind::cardinality;
        c.dim = 5;
        c.n_list = {1024, 4096, 16384};
        c.replicas = 10;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = ExperimentKind::theorem1;
        c.dim = 3;
        c.n_list = {1024};
        c.replicas = 4;
        c.reps = 2000;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = ExperimentKind::intersection;
        c.dim = 3;
        c.n_list = {512, 2048};
        c.lambda_list = {0.4, 0.1};
        c.replicas = 4;
        c.probe_count = 8;
        c.reps = 500;
        configs.push_back(c);
    }
    std::ostringstream quiet;
    for (auto& c : configs) {
        c.seed = 10;
        const std::string name = to_string(c.experiment);
        for (int workers : {1, std::max(2, ctx.workers)}) {
            c.workers = workers;
            std::string first;
            for (int run = 0; run < 2; ++run) {
                c.out = (dir / (name + "_w" + std::to_string(workers) + "_" + std::to_string(run) + ".csv")).string();
                run_experiment(c, quiet);
                if (run == 0) {
                    first = slurp(c.out);
                } else {
                    const bool same = first == slurp(c.out) && !first.empty();
                    v.pass = v.pass && same;
                    v.detail += " " + name + "(workers=" + std::to_string(workers) + ")" + (same ? " identical" : " DIFFER") + ";";
                }
            }
        }
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"brwlab acceptance criteria"};
    std::string which;
    std::string work = "acceptance_work";
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("criterion", which, "A1 .. A10")->required();
    app.add_option("--work", work, "Directory for experiment CSVs (reused across runs)");
    app.add_option("--workers", workers, "Worker threads for experiment criteria");
    CLI11_PARSE(app, argc, argv);

    const std::map<std::string, std::function<Verdict(const Context&)>> criteria = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
        {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
    };
    const auto it = criteria.find(which);
    if (it == criteria.end()) {
        std::cerr << "unknown criterion " << which << '\n';
        return 1;
    }
    Context ctx{work, std::max(1, workers), std::cerr};
    std::filesystem::create_directories(ctx.work);
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto v = it->second(ctx);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto first = v.detail.find_first_not_of(' ');
        const std::string detail = first == std::string::npos ? "" : v.detail.substr(first);
        std::cout << which << (v.pass ? " PASS: " : " FAIL: ") << detail << " [" << num(secs, 4) << " s]" << std::endl;
        return v.pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cout << which << " FAIL: error: " << e.what() << std::endl;
        return 1;
    }
}
