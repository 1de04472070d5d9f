#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brwlab {

enum class ExperimentKind { scaling, cardinality, theorem1, intersection, calibrate };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Flat key = value experiment description; '#' starts a comment.
///
/// Unset grids and replica counts are filled from per-experiment defaults by
/// apply_defaults(). Keys: experiment, dim, offspring, theta, n_list,
/// lambda_list, replicas, reps, probe_count, eps, r_factor, far_factor,
/// methods, seed, workers, out, record_wall_seconds, matrix_budget_mb,
/// checkpoint_every.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::scaling;
    int dim = 3;
    std::string offspring = "geometric";
    std::string theta = "srw";
    std::vector<std::int64_t> n_list;
    std::vector<double> lambda_list;
    int replicas = -1;                 // -1: experiment default
    std::int64_t reps = 10000;         // Monte Carlo repetitions per estimate
    int probe_count = 64;
    double eps = 0.05;
    double r_factor = 8.0;             // cap_mc_escape kill radius / max_norm
    double far_factor = 4.0;           // cap_farpoint distance / max_norm
    std::vector<std::string> methods;  // scaling: subset of {exact, mc, farpoint}
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out;
    bool record_wall_seconds = false;  // off by default so reruns are byte-identical
    std::int64_t matrix_budget_mb = 3840;  // shared by all workers
    int checkpoint_every = 0;          // units between CSV checkpoints; 0 = 8 per worker
};

// Throws ConfigError with the line and column of the offending token.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one key from its textual value (the same syntax as the config file).
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value, int line = 0,
                      int column = 0);

void apply_defaults(ExperimentConfig& config);

// Dimension, presets, admissibility of every n, ranges of the numeric fields.
void validate_config(const ExperimentConfig& config);

std::uint64_t experiment_id(ExperimentKind k);

struct ResultRow {
    std::string experiment;
    int dim = 0;
    std::int64_t n = 0;
    std::optional<double> lambda;
    int replica = 0;
    std::optional<std::int64_t> range_count;
    std::optional<double> cap_exact;
    std::optional<double> cap_mc;
    std::optional<double> cap_farpoint;
    std::optional<double> cap_continuum;
    std::optional<double> max_escape;
    std::optional<double> wall_seconds;

    static constexpr const char* kCsvHeader =
        "experiment,dim,n,lambda,replica,range_count,cap_exact,cap_mc,cap_farpoint,cap_continuum,max_escape,"
        "wall_seconds";
    std::string csv_row() const;
    static ResultRow parse(std::string_view line);
};

// Shortest round-trip decimal form.
std::string format_number(double x);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
// Writes to a sibling temporary and renames it over the target.
void write_csv_atomic(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

/// Least squares of log(mean y) on log(mean-group x), grouping rows by x.
/// Field names are ResultRow columns. Throws FitError with fewer than 3
/// distinct x or a non-positive group mean.
ExponentFit fit_exponent(const std::vector<ResultRow>& rows, std::string_view x_field, std::string_view y_field);
ExponentFit fit_exponent(const std::vector<ResultRow>& rows, std::string_view x_field,
                         const std::function<std::optional<double>(const ResultRow&)>& y);

std::optional<double> row_field(const ResultRow& row, std::string_view field);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<CheckResult> checks;
    std::size_t new_rows = 0;
    int exit_code = 0;  // 0 all checks pass, 2 a check failed
};

/// Runs the configured experiment, resuming from an existing CSV at
/// config.out, and prints a summary. Operational failures throw.
RunResult run_experiment(const ExperimentConfig& config, std::ostream& log);

// Acceptance-style checks for a finished set of rows.
std::vector<CheckResult> evaluate_checks(const ExperimentConfig& config, const std::vector<ResultRow>& rows);

/// Fast invariant battery for the listed dimensions; prints a table.
RunResult calibrate(const std::vector<int>& dims, std::uint64_t seed, std::ostream& log);

}  // namespace brwlab
