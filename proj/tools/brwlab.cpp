// brwlab: experiment runner and sampling utilities.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/cap_discrete.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/experiments.hpp"
#include "brwlab/green.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/plane_tree.hpp"

namespace {

using namespace brwlab;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> dim;
    std::string out;
    std::optional<int> workers;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Experiment config file (key = value lines)");
    cmd->add_option("--seed", f.seed, "Base seed");
    cmd->add_option("--dim", f.dim, "Lattice dimension (3, 4 or 5)");
    cmd->add_option("--out", f.out, "Output CSV path");
    cmd->add_option("--workers", f.workers, "Worker threads");
    cmd->add_option("--set", f.sets, "Override any config key: KEY=VALUE (repeatable)");
}

ExperimentConfig build_config(ExperimentKind kind, const CommonFlags& f) {
    // Dimension errors surface before any file is read or work is done.
    if (f.dim) check_dimension(*f.dim);
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    if (!f.config.empty() && c.experiment != kind) {
        throw ConfigError("config file describes experiment '" + to_string(c.experiment) + "', not '" +
                          to_string(kind) + "'");
    }
    c.experiment = kind;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
        set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (f.seed) c.seed = *f.seed;
    if (f.dim) c.dim = *f.dim;
    if (!f.out.empty()) c.out = f.out;
    if (f.workers) c.workers = *f.workers;
    check_dimension(c.dim);
    return c;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + path);
    return file;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Branching random walk capacity laboratory"};
    app.require_subcommand(1);

    int exit_code = 0;

    // Experiments.
    const std::pair<const char*, ExperimentKind> kinds[] = {
        {"scaling", ExperimentKind::scaling},
        {"cardinality", ExperimentKind::cardinality},
        {"theorem1", ExperimentKind::theorem1},
        {"intersection", ExperimentKind::intersection},
    };
    const char* descriptions[] = {
        "Capacity of BRW ranges over an n ladder; fits the growth exponent",
        "Range cardinality over an n ladder",
        "Discrete capacity against the Newtonian capacity of the rescaled range",
        "Escape probabilities from probes near the range",
    };
    std::vector<CommonFlags> flags(std::size(kinds));
    for (std::size_t i = 0; i < std::size(kinds); ++i) {
        auto* cmd = app.add_subcommand(kinds[i].first, descriptions[i]);
        add_common(cmd, flags[i]);
        cmd->callback([&, i] {
            const auto config = build_config(kinds[i].second, flags[i]);
            exit_code = run_experiment(config, std::cout).exit_code;
        });
    }

    // Calibration battery.
    CommonFlags cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fast invariant checks; exit 0 iff all pass");
    calibrate_cmd->add_option("--dim", cal.dim, "Only this dimension (default: 3, 4 and 5)");
    calibrate_cmd->add_option("--seed", cal.seed, "Base seed");
    calibrate_cmd->callback([&] {
        std::vector<int> dims = {3, 4, 5};
        if (cal.dim) {
            check_dimension(*cal.dim);
            dims = {*cal.dim};
        }
        exit_code = calibrate(dims, cal.seed.value_or(1), std::cout).exit_code;
    });

    // Tree sampler.
    std::int64_t tree_n = 16;
    std::string tree_offspring = "geometric", tree_format = "children", tree_out;
    std::uint64_t tree_seed = 1;
    auto* tree_cmd = app.add_subcommand("sample-tree", "Sample a Galton-Watson tree conditioned on its size");
    tree_cmd->add_option("--n", tree_n, "Number of vertices")->required();
    tree_cmd->add_option("--offspring", tree_offspring, "Offspring preset");
    tree_cmd->add_option("--seed", tree_seed, "Seed");
    tree_cmd->add_option("--format", tree_format, "children | lukasiewicz | height | contour")
        ->check(CLI::IsMember({"children", "lukasiewicz", "height", "contour"}));
    tree_cmd->add_option("--out", tree_out, "Output path (default stdout)");
    tree_cmd->callback([&] {
        const auto dist = OffspringDistribution::preset(tree_offspring);
        Rng rng(tree_seed);
        const auto tree = sample_conditioned_tree(dist, tree_n, rng);
        std::ofstream file;
        auto& out = open_out(tree_out, file);
        if (tree_format == "children") {
            write_tree(out, tree);
        } else if (tree_format == "lukasiewicz") {
            for (auto s : encode(tree).steps) out << s << '\n';
        } else if (tree_format == "height") {
            for (auto h : height_process(encode(tree))) out << h << '\n';
        } else {
            for (auto v : contour_walk(tree)) out << v << '\n';
        }
    });

    // Branching walk sampler.
    std::int64_t brw_n = 1024;
    int brw_dim = 3;
    std::string brw_offspring = "geometric", brw_theta = "srw", brw_out, brw_snake;
    std::uint64_t brw_seed = 1;
    auto* brw_cmd = app.add_subcommand("sample-brw", "Sample a tree-indexed walk; write its range and snake");
    brw_cmd->add_option("--n", brw_n, "Number of tree vertices")->required();
    brw_cmd->add_option("--dim", brw_dim, "Lattice dimension (3, 4 or 5)");
    brw_cmd->add_option("--offspring", brw_offspring, "Offspring preset");
    brw_cmd->add_option("--theta", brw_theta, "Step distribution preset");
    brw_cmd->add_option("--seed", brw_seed, "Seed");
    brw_cmd->add_option("--out", brw_out, "Binary range file");
    brw_cmd->add_option("--snake", brw_snake, "Rescaled snake CSV");
    brw_cmd->callback([&] {
        check_dimension(brw_dim);
        const auto dist = OffspringDistribution::preset(brw_offspring);
        const auto theta = StepDistribution::preset(brw_theta, brw_dim);
        Rng rng(brw_seed);
        const auto tree = sample_conditioned_tree(dist, brw_n, rng);
        const auto bw = assign_positions(tree, theta, rng);
        const auto r = range(bw);
        if (!brw_out.empty()) {
            std::ofstream f(brw_out, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot write " + brw_out);
            write_range(f, r);
        }
        if (!brw_snake.empty()) {
            std::ofstream f(brw_snake, std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot write " + brw_snake);
            write_snake_csv(f, brw_dim, rescaled_snake(tree, bw));
        }
        std::cout << "n=" << brw_n << " range_count=" << r.count() << " max_norm=" << format_number(r.max_norm())
                  << '\n';
    });

    // Capacity of a stored range.
    std::string cap_range, cap_method = "exact";
    std::int64_t cap_reps = 100000;
    double cap_factor = 8.0;
    std::uint64_t cap_seed = 1;
    auto* cap_cmd = app.add_subcommand("cap", "Capacity of a range file written by sample-brw");
    cap_cmd->add_option("--range", cap_range, "Binary range file")->required();
    cap_cmd->add_option("--method", cap_method, "exact | mc_escape | far_point")
        ->check(CLI::IsMember({"exact", "mc_escape", "far_point"}));
    cap_cmd->add_option("--reps", cap_reps, "Monte Carlo repetitions");
    cap_cmd->add_option("--factor", cap_factor, "R_factor (mc_escape) or distance / max_norm (far_point)");
    cap_cmd->add_option("--seed", cap_seed, "Seed");
    cap_cmd->callback([&] {
        std::ifstream f(cap_range, std::ios::binary);
        if (!f) throw IoError("cannot read " + cap_range);
        const auto r = read_range(f);
        const auto green = GreenTable::load_or_build(r.dim());
        CapEstimate est;
        if (cap_method == "exact") {
            const auto ev = cap_exact(r, green);
            est.method = CapMethod::exact;
            est.value = ev.capacity;
        } else if (cap_method == "mc_escape") {
            Rng rng(cap_seed);
            est = cap_mc_escape(r.sites(), green, cap_factor, cap_reps, rng);
        } else {
            Rng rng(cap_seed);
            Site far{};
            far[0] = static_cast<std::int32_t>(std::max(1.0, std::ceil(cap_factor * r.max_norm())));
            est = cap_farpoint(r.sites(), green, far, cap_reps, rng);
        }
        std::cout << CapEstimate::kCsvHeader << '\n' << est.csv_row() << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}
