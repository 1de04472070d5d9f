#include "brwlab/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "brwlab/brw.hpp"
#include "brwlab/cap_continuum.hpp"
#include "brwlab/cap_discrete.hpp"
#include "brwlab/errors.hpp"
#include "brwlab/green.hpp"
#include "brwlab/gw_sampler.hpp"
#include "brwlab/intersection_lab.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/plane_tree.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::scaling: return "scaling";
        case ExperimentKind::cardinality: return "cardinality";
        case ExperimentKind::theorem1: return "theorem1";
        case ExperimentKind::intersection: return "intersection";
        case ExperimentKind::calibrate: return "calibrate";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
    for (auto k : {ExperimentKind::scaling, ExperimentKind::cardinality, ExperimentKind::theorem1,
                   ExperimentKind::intersection, ExperimentKind::calibrate}) {
        if (name == to_string(k)) return k;
    }
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::uint64_t experiment_id(ExperimentKind k) { return static_cast<std::uint64_t>(k) + 1; }

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
bool parse_integer(std::string_view s, T& out) {
    s = trim(s);
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        s.remove_prefix(2);
        base = 16;
    }
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

// Integer or 2^k.
bool parse_size(std::string_view s, std::int64_t& out) {
    s = trim(s);
    if (const auto caret = s.find('^'); caret != std::string_view::npos) {
        std::int64_t base = 0, power = 0;
        if (!parse_integer(s.substr(0, caret), base) || !parse_integer(s.substr(caret + 1), power)) return false;
        if (base < 1 || power < 0 || power > 40) return false;
        out = 1;
        for (std::int64_t i = 0; i < power; ++i) {
            if (out > (std::int64_t{1} << 50) / base) return false;
            out *= base;
        }
        return true;
    }
    return parse_integer(s, out);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, int line, int column) {
    throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'", line, column);
}

constexpr std::string_view kConfigKeys[] = {
    "experiment", "dim",     "offspring", "theta",   "n_list",              "lambda_list",      "replicas",
    "reps",       "probe_count", "eps",   "r_factor", "far_factor",         "methods",          "seed",
    "workers",    "out",     "record_wall_seconds", "matrix_budget_mb", "checkpoint_every"};

bool known_key(std::string_view key) {
    return std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) != std::end(kConfigKeys);
}

}  // namespace

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value, int line, int column) {
    value = trim(value);
    auto integer = [&](auto& field) {
        if (!parse_integer(value, field)) bad_value(key, value, line, column);
    };
    auto real = [&](double& field) {
        if (!parse_double(value, field)) bad_value(key, value, line, column);
    };
    if (key == "experiment") {
        try {
            c.experiment = parse_experiment_kind(value);
        } catch (const ConfigError&) {
            bad_value(key, value, line, column);
        }
    } else if (key == "dim") {
        integer(c.dim);
    } else if (key == "offspring") {
        c.offspring = std::string(value);
    } else if (key == "theta") {
        c.theta = std::string(value);
    } else if (key == "n_list") {
        c.n_list.clear();
        for (auto item : split(value, ',')) {
            std::int64_t n = 0;
            if (!parse_size(item, n)) bad_value(key, value, line, column);
            c.n_list.push_back(n);
        }
    } else if (key == "lambda_list") {
        c.lambda_list.clear();
        for (auto item : split(value, ',')) {
            double x = 0.0;
            if (!parse_double(item, x)) bad_value(key, value, line, column);
            c.lambda_list.push_back(x);
        }
    } else if (key == "replicas") {
        integer(c.replicas);
    } else if (key == "reps") {
        integer(c.reps);
    } else if (key == "probe_count") {
        integer(c.probe_count);
    } else if (key == "eps") {
        real(c.eps);
    } else if (key == "r_factor") {
        real(c.r_factor);
    } else if (key == "far_factor") {
        real(c.far_factor);
    } else if (key == "methods") {
        c.methods.clear();
        for (auto item : split(value, ',')) {
            const auto m = trim(item);
            if (m != "exact" && m != "mc" && m != "farpoint") bad_value(key, value, line, column);
            c.methods.emplace_back(m);
        }
    } else if (key == "seed") {
        integer(c.seed);
    } else if (key == "workers") {
        integer(c.workers);
    } else if (key == "out") {
        c.out = std::string(value);
    } else if (key == "record_wall_seconds") {
        if (value == "true" || value == "1") {
            c.record_wall_seconds = true;
        } else if (value == "false" || value == "0") {
            c.record_wall_seconds = false;
        } else {
            bad_value(key, value, line, column);
        }
    } else if (key == "matrix_budget_mb") {
        integer(c.matrix_budget_mb);
    } else if (key == "checkpoint_every") {
        integer(c.checkpoint_every);
    } else {
        throw ConfigError("unknown key '" + std::string(key) + "'", line, column);
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto first = line.find_first_not_of(" \t");
        const int key_col = static_cast<int>(first) + 1;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, key_col);
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("missing key before '='", line_no, static_cast<int>(eq) + 1);
        if (!seen.insert(std::string(key)).second) {
            throw ConfigError("duplicate key '" + std::string(key) + "'", line_no, key_col);
        }
        if (!known_key(key)) throw ConfigError("unknown key '" + std::string(key) + "'", line_no, key_col);
        const auto rest = line.substr(eq + 1);
        const auto value_off = rest.find_first_not_of(" \t");
        const int value_col = static_cast<int>(eq + 1 + (value_off == std::string_view::npos ? 0 : value_off)) + 1;
        if (trim(rest).empty()) throw ConfigError("missing value for key '" + std::string(key) + "'", line_no, value_col);
        set_config_value(c, key, rest, line_no, value_col);
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_defaults(ExperimentConfig& c) {
    const std::vector<std::int64_t> ladder = {1 << 10, 1 << 12, 1 << 14, 1 << 16};
    switch (c.experiment) {
        case ExperimentKind::scaling:
        case ExperimentKind::cardinality:
            if (c.n_list.empty()) c.n_list = ladder;
            if (c.replicas < 0) c.replicas = 200;
            break;
        case ExperimentKind::theorem1:
            if (c.n_list.empty()) c.n_list = {1 << 16};
            if (c.replicas < 0) c.replicas = 50;
            break;
        case ExperimentKind::intersection:
            if (c.n_list.empty()) c.n_list = {1 << 14};
            if (c.lambda_list.empty()) c.lambda_list = {0.4, 0.2, 0.1, 0.05};
            if (c.replicas < 0) c.replicas = 50;
            break;
        case ExperimentKind::calibrate:
            if (c.replicas < 0) c.replicas = 0;
            break;
    }
    if (c.methods.empty()) c.methods = {"exact"};
    if (c.out.empty() && c.experiment != ExperimentKind::calibrate) {
        c.out = to_string(c.experiment) + "_d" + std::to_string(c.dim) + ".csv";
    }
}

void validate_config(const ExperimentConfig& c) {
    check_dimension(c.dim);
    const auto dist = OffspringDistribution::preset(c.offspring);
    StepDistribution::preset(c.theta, c.dim);
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    if (c.replicas < 0) throw ConfigError("replicas must be non-negative");
    if (c.reps < 1) throw ConfigError("reps must be at least 1");
    if (c.probe_count < 1) throw ConfigError("probe_count must be at least 1");
    if (!(c.eps > 0.0 && c.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
    if (!(c.r_factor >= 4.0)) throw ConfigError("r_factor must be at least 4");
    if (!(c.far_factor >= 2.0)) throw ConfigError("far_factor must be at least 2");
    if (c.matrix_budget_mb < 0) throw ConfigError("matrix_budget_mb must be non-negative");
    if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
    if (c.experiment == ExperimentKind::calibrate) return;
    if (c.n_list.empty()) throw ConfigError("n_list must be nonempty");
    std::set<std::int64_t> distinct;
    for (auto n : c.n_list) {
        if (n < 1) throw ConfigError("n must be positive");
        if (!dist.admissible(n)) {
            throw AdmissibilityError("n = " + std::to_string(n) + " is not admissible for offspring preset " +
                                     c.offspring);
        }
        if (!distinct.insert(n).second) throw ConfigError("n_list repeats " + std::to_string(n));
    }
    if (c.experiment == ExperimentKind::intersection) {
        if (c.lambda_list.empty()) throw ConfigError("lambda_list must be nonempty");
        std::set<double> seen;
        for (double l : c.lambda_list) {
            if (!(l > 0.0)) throw ConfigError("lambda values must be positive");
            if (!seen.insert(l).second) throw ConfigError("lambda_list repeats a value");
        }
    }
}

// ---------------------------------------------------------------- CSV

std::string format_number(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

namespace {

void put(std::ostringstream& os, const std::optional<double>& v) {
    os << ',';
    if (v) os << format_number(*v);
}

std::optional<double> opt_double(std::string_view s, std::string_view field) {
    if (s.empty()) return std::nullopt;
    double x = 0.0;
    if (!parse_double(s, x)) throw IoError("malformed " + std::string(field) + " value '" + std::string(s) + "'");
    return x;
}

}  // namespace

std::string ResultRow::csv_row() const {
    std::ostringstream os;
    os << experiment << ',' << dim << ',' << n;
    put(os, lambda);
    os << ',' << replica << ',';
    if (range_count) os << *range_count;
    put(os, cap_exact);
    put(os, cap_mc);
    put(os, cap_farpoint);
    put(os, cap_continuum);
    put(os, max_escape);
    put(os, wall_seconds);
    return os.str();
}

ResultRow ResultRow::parse(std::string_view line) {
    const auto f = split(trim(line), ',');
    if (f.size() != 12) throw IoError("CSV row has " + std::to_string(f.size()) + " fields, expected 12");
    ResultRow r;
    r.experiment = std::string(f[0]);
    if (!parse_integer(f[1], r.dim)) throw IoError("malformed dim '" + std::string(f[1]) + "'");
    if (!parse_integer(f[2], r.n)) throw IoError("malformed n '" + std::string(f[2]) + "'");
    r.lambda = opt_double(f[3], "lambda");
    if (!parse_integer(f[4], r.replica)) throw IoError("malformed replica '" + std::string(f[4]) + "'");
    if (!f[5].empty()) {
        std::int64_t c = 0;
        if (!parse_integer(f[5], c)) throw IoError("malformed range_count '" + std::string(f[5]) + "'");
        r.range_count = c;
    }
    r.cap_exact = opt_double(f[6], "cap_exact");
    r.cap_mc = opt_double(f[7], "cap_mc");
    r.cap_farpoint = opt_double(f[8], "cap_farpoint");
    r.cap_continuum = opt_double(f[9], "cap_continuum");
    r.max_escape = opt_double(f[10], "max_escape");
    r.wall_seconds = opt_double(f[11], "wall_seconds");
    return r;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << ResultRow::kCsvHeader << '\n';
    for (const auto& r : rows) out << r.csv_row() << '\n';
}

void write_csv_atomic(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        write_csv(out, rows);
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV (missing header)");
    if (trim(line) != ResultRow::kCsvHeader) throw IoError("unexpected CSV header '" + line + "'");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(ResultRow::parse(line));
    }
    return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return read_csv(in);
}

// ---------------------------------------------------------------- fits

std::optional<double> row_field(const ResultRow& r, std::string_view field) {
    if (field == "n") return static_cast<double>(r.n);
    if (field == "dim") return static_cast<double>(r.dim);
    if (field == "lambda") return r.lambda;
    if (field == "replica") return static_cast<double>(r.replica);
    if (field == "range_count") {
        if (!r.range_count) return std::nullopt;
        return static_cast<double>(*r.range_count);
    }
    if (field == "cap_exact") return r.cap_exact;
    if (field == "cap_mc") return r.cap_mc;
    if (field == "cap_farpoint") return r.cap_farpoint;
    if (field == "cap_continuum") return r.cap_continuum;
    if (field == "max_escape") return r.max_escape;
    if (field == "wall_seconds") return r.wall_seconds;
    throw FitError("unknown field '" + std::string(field) + "'");
}

ExponentFit fit_exponent(const std::vector<ResultRow>& rows, std::string_view x_field, std::string_view y_field) {
    row_field(ResultRow{}, y_field);  // rejects unknown names up front
    return fit_exponent(rows, x_field, [&](const ResultRow& r) { return row_field(r, y_field); });
}

ExponentFit fit_exponent(const std::vector<ResultRow>& rows, std::string_view x_field,
                         const std::function<std::optional<double>(const ResultRow&)>& y) {
    std::map<double, std::pair<double, std::size_t>> groups;
    for (const auto& r : rows) {
        const auto x = row_field(r, x_field);
        const auto v = y(r);
        if (!x || !v) continue;
        auto& g = groups[*x];
        g.first += *v;
        ++g.second;
    }
    if (groups.size() < 3) throw FitError("fit needs at least 3 distinct x values, got " + std::to_string(groups.size()));
    std::vector<double> lx, ly;
    for (const auto& [x, g] : groups) {
        const double mean = g.first / static_cast<double>(g.second);
        if (!(x > 0.0) || !(mean > 0.0)) throw FitError("fit needs positive x and positive group means");
        lx.push_back(std::log(x));
        ly.push_back(std::log(mean));
    }
    const auto fit = stats::least_squares(lx, ly);
    return {fit.slope, fit.intercept, fit.r_squared, groups.size()};
}

// ---------------------------------------------------------------- checks

namespace {

std::string fixed(double x, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

stats::MeanStderr group_stat(const std::vector<ResultRow>& rows, std::int64_t n, std::optional<double> lambda,
                             const std::function<std::optional<double>(const ResultRow&)>& y) {
    std::vector<double> xs;
    for (const auto& r : rows) {
        if (r.n != n) continue;
        if (lambda && (!r.lambda || *r.lambda != *lambda)) continue;
        if (const auto v = y(r)) xs.push_back(*v);
    }
    return stats::mean_stderr(xs);
}

std::vector<std::int64_t> distinct_n(const std::vector<ResultRow>& rows) {
    std::set<std::int64_t> s;
    for (const auto& r : rows) s.insert(r.n);
    return {s.begin(), s.end()};
}

}  // namespace

std::vector<CheckResult> evaluate_checks(const ExperimentConfig& c, const std::vector<ResultRow>& rows) {
    std::vector<CheckResult> out;
    if (rows.empty()) return out;
    const auto ns = distinct_n(rows);
    switch (c.experiment) {
        case ExperimentKind::scaling: {
            if (ns.size() < 3) break;
            const auto fit = fit_exponent(rows, "n", "cap_exact");
            const double target = (c.dim - 2) / 4.0;
            out.push_back({"cap_exponent", std::abs(fit.slope - target) <= 0.08,
                           "slope " + fixed(fit.slope) + " target " + fixed(target, 2) + " +- 0.08 (r^2 " +
                               fixed(fit.r_squared) + ")"});
            break;
        }
        case ExperimentKind::cardinality: {
            auto count = [](const ResultRow& r) -> std::optional<double> {
                if (!r.range_count) return std::nullopt;
                return static_cast<double>(*r.range_count);
            };
            if (c.dim == 3) {
                if (ns.size() < 3) break;
                const auto fit = fit_exponent(rows, "n", count);
                out.push_back({"cardinality_slope", fit.slope >= 0.70 && fit.slope <= 0.80,
                               "slope " + fixed(fit.slope) + " window [0.70, 0.80]"});
            } else {
                if (ns.size() < 2) break;
                const bool d4 = c.dim == 4;
                std::vector<double> q;
                for (auto n : ns) {
                    const double nd = static_cast<double>(n);
                    const double m = group_stat(rows, n, std::nullopt, count).mean;
                    q.push_back(d4 ? m * std::log(nd) / nd : m / nd);
                }
                const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
                const double variation = *hi / *lo - 1.0;
                const double limit = d4 ? 0.20 : 0.15;
                out.push_back({d4 ? "cardinality_log_corrected" : "cardinality_linear", variation < limit,
                               std::string(d4 ? "(log n / n) mean #R" : "mean #R / n") + " varies " +
                                   fixed(100.0 * variation, 2) + "% (limit " + fixed(100.0 * limit, 0) + "%)"});
            }
            break;
        }
        case ExperimentKind::theorem1: {
            for (auto n : ns) {
                const double nd = static_cast<double>(n);
                auto ratio = [&](const ResultRow& r) -> std::optional<double> {
                    if (!r.cap_exact || !r.cap_continuum || !(*r.cap_continuum > 0.0)) return std::nullopt;
                    return std::pow(nd, -(c.dim - 2) / 4.0) * *r.cap_exact / (*r.cap_continuum / c.dim);
                };
                const auto s = group_stat(rows, n, std::nullopt, ratio);
                out.push_back({"theorem1_ratio n=" + std::to_string(n), s.mean >= 0.75 && s.mean <= 1.30,
                               "mean ratio " + fixed(s.mean) + " +- " + fixed(s.stderr_) + " window [0.75, 1.30]"});
            }
            break;
        }
        case ExperimentKind::intersection: {
            auto esc = [](const ResultRow& r) { return r.max_escape; };
            std::vector<double> lambdas = c.lambda_list;
            std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
            if (lambdas.size() >= 2) {
                for (auto n : ns) {
                    int inversions = 0;
                    bool large = false;
                    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
                        const auto a = group_stat(rows, n, lambdas[i], esc);
                        const auto b = group_stat(rows, n, lambdas[i + 1], esc);
                        if (b.mean > a.mean) {
                            ++inversions;
                            if (b.mean - a.mean > 2.0 * std::hypot(a.stderr_, b.stderr_)) large = true;
                        }
                    }
                    out.push_back({"escape_trend_lambda n=" + std::to_string(n), inversions <= 1 && !large,
                                   std::to_string(inversions) + " inversion(s)" +
                                       (large ? ", one beyond 2 stderr" : "")});
                }
            }
            if (ns.size() >= 2) {
                for (double l : lambdas) {
                    const auto a = group_stat(rows, ns.front(), l, esc);
                    const auto b = group_stat(rows, ns.back(), l, esc);
                    if (a.count == 0 || b.count == 0) continue;
                    const double slack = 2.0 * std::hypot(a.stderr_, b.stderr_);
                    out.push_back({"escape_trend_n lambda=" + format_number(l), b.mean <= a.mean + slack,
                                   "n=" + std::to_string(ns.back()) + ": " + fixed(b.mean) + " vs n=" +
                                       std::to_string(ns.front()) + ": " + fixed(a.mean) + " + " + fixed(slack)});
                }
            }
            break;
        }
        case ExperimentKind::calibrate: break;
    }
    return out;
}

// ---------------------------------------------------------------- runner

namespace {

using RowKey = std::tuple<std::int64_t, double, int>;

RowKey key_of(const ResultRow& r) { return {r.n, r.lambda.value_or(-1.0), r.replica}; }

struct Unit {
    std::int64_t n;
    int replica;
};

std::vector<ResultRow> run_unit(const ExperimentConfig& c, const OffspringDistribution& dist,
                                const StepDistribution& theta, const GreenTable* green, const Unit& u) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t id = experiment_id(c.experiment);
    const auto finish = [&](ResultRow& row) {
        if (c.record_wall_seconds) {
            row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    if (c.experiment == ExperimentKind::intersection) {
        IntersectionGrid grid;
        grid.n_list = {u.n};
        grid.lambda_list = c.lambda_list;
        grid.replicas = 1;
        grid.probes = c.probe_count;
        grid.reps = c.reps;
        std::vector<ResultRow> rows;
        for (const auto& ir : intersection_replica(dist, theta, grid, derive_seed(c.seed, {id}), u.n, u.replica)) {
            ResultRow row;
            row.experiment = to_string(c.experiment);
            row.dim = c.dim;
            row.n = u.n;
            row.lambda = ir.lambda;
            row.replica = u.replica;
            row.range_count = static_cast<std::int64_t>(ir.range_count);
            row.max_escape = ir.max_escape;
            if (c.record_wall_seconds) row.wall_seconds = ir.wall_seconds;
            rows.push_back(row);
        }
        return rows;
    }

    const std::uint64_t unit_seed =
        derive_seed(c.seed, {id, static_cast<std::uint64_t>(u.n), 0, static_cast<std::uint64_t>(u.replica)});
    Rng rng(unit_seed);
    const auto tree = sample_conditioned_tree(dist, u.n, rng);
    const auto r = range(assign_positions(tree, theta, rng));
    ResultRow row;
    row.experiment = to_string(c.experiment);
    row.dim = c.dim;
    row.n = u.n;
    row.replica = u.replica;
    row.range_count = static_cast<std::int64_t>(r.count());

    CapSolverOptions opts;
    opts.matrix_budget_bytes =
        static_cast<std::size_t>(c.matrix_budget_mb) * (std::size_t{1} << 20) / static_cast<std::size_t>(c.workers);
    auto has = [&](std::string_view m) { return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end(); };

    if (c.experiment == ExperimentKind::scaling) {
        if (has("exact")) row.cap_exact = cap_exact(r, *green, opts).capacity;
        if (has("mc")) {
            Rng mc(derive_seed(unit_seed, {1}));
            row.cap_mc = cap_mc_escape(r.sites(), *green, c.r_factor, c.reps, mc).value;
        }
        if (has("farpoint")) {
            Rng fp(derive_seed(unit_seed, {2}));
            Site far{};
            far[0] = static_cast<std::int32_t>(std::max(1.0, std::ceil(c.far_factor * r.max_norm())));
            row.cap_farpoint = cap_farpoint(r.sites(), *green, far, c.reps, fp).value;
        }
    } else if (c.experiment == ExperimentKind::theorem1) {
        row.cap_exact = cap_exact(r, *green, opts).capacity;
        Rng wos(derive_seed(unit_seed, {3}));
        const auto cloud = PointCloud::rescaled_range(r, std::pow(static_cast<double>(u.n), -0.25), c.eps);
        row.cap_continuum = cap_newtonian(cloud, c.reps, wos).value;
    }
    finish(row);
    return {row};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
    ExperimentConfig c = config;
    apply_defaults(c);
    validate_config(c);
    if (c.experiment == ExperimentKind::calibrate) return calibrate({c.dim}, c.seed, log);

    const auto dist = OffspringDistribution::preset(c.offspring);
    const auto theta = StepDistribution::preset(c.theta, c.dim);
    const std::filesystem::path out_path(c.out);
    const std::string name = to_string(c.experiment);

    RunResult result;
    if (std::filesystem::exists(out_path)) {
        result.rows = read_csv(out_path);
        for (const auto& r : result.rows) {
            if (r.experiment != name || r.dim != c.dim) {
                throw IoError("existing " + out_path.string() + " holds rows of a different experiment or dimension");
            }
        }
    }
    std::set<RowKey> done;
    for (const auto& r : result.rows) {
        if (!done.insert(key_of(r)).second) throw IoError("duplicate row key in " + out_path.string());
    }

    std::vector<Unit> units;
    for (auto n : c.n_list) {
        for (int rep = 0; rep < c.replicas; ++rep) {
            bool complete = true;
            if (c.experiment == ExperimentKind::intersection) {
                for (double l : c.lambda_list) complete = complete && done.count({n, l, rep}) > 0;
            } else {
                complete = done.count({n, -1.0, rep}) > 0;
            }
            if (!complete) units.push_back({n, rep});
        }
    }

    std::optional<GreenTable> green;
    if (!units.empty() && (c.experiment == ExperimentKind::scaling || c.experiment == ExperimentKind::theorem1)) {
        green = GreenTable::load_or_build(c.dim);
    }

    auto merge = [&](std::vector<std::vector<ResultRow>>& produced) {
        for (auto& rows : produced) {
            for (auto& r : rows) {
                if (done.insert(key_of(r)).second) {
                    result.rows.push_back(std::move(r));
                    ++result.new_rows;
                }
            }
            rows.clear();
        }
        std::sort(result.rows.begin(), result.rows.end(),
                  [](const ResultRow& a, const ResultRow& b) { return key_of(a) < key_of(b); });
    };

    const std::size_t chunk = c.checkpoint_every > 0 ? static_cast<std::size_t>(c.checkpoint_every)
                                                     : static_cast<std::size_t>(8 * c.workers);
    for (std::size_t begin = 0; begin < units.size(); begin += chunk) {
        const std::size_t end = std::min(units.size(), begin + chunk);
        std::vector<std::vector<ResultRow>> produced(end - begin);
        try {
            parallel_for_static(end - begin, c.workers, [&](std::size_t k) {
                produced[k] = run_unit(c, dist, theta, green ? &*green : nullptr, units[begin + k]);
            });
        } catch (...) {
            merge(produced);
            write_csv_atomic(out_path, result.rows);
            throw;
        }
        merge(produced);
        write_csv_atomic(out_path, result.rows);
    }
    if (units.empty()) write_csv_atomic(out_path, result.rows);

    log << name << " d=" << c.dim << ": " << result.rows.size() << " rows (" << result.new_rows << " new) -> "
        << out_path.string() << '\n';
    if (c.replicas > 0) {
        try {
            result.checks = evaluate_checks(c, result.rows);
        } catch (const FitError& e) {
            result.checks.push_back({"fit", false, e.what()});
        }
    }
    for (const auto& ch : result.checks) {
        log << (ch.pass ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << '\n';
    }
    result.exit_code = std::all_of(result.checks.begin(), result.checks.end(), [](const auto& ch) { return ch.pass; })
                           ? 0
                           : 2;
    return result;
}

// ---------------------------------------------------------------- calibrate

RunResult calibrate(const std::vector<int>& dims, std::uint64_t seed, std::ostream& log) {
    for (int d : dims) check_dimension(d);
    RunResult result;
    auto record = [&](std::string name, const std::function<std::pair<bool, std::string>()>& fn) {
        CheckResult ch;
        ch.name = std::move(name);
        try {
            std::tie(ch.pass, ch.detail) = fn();
        } catch (const std::exception& e) {
            ch.pass = false;
            ch.detail = e.what();
        }
        log << std::left << std::setw(24) << ch.name << (ch.pass ? "PASS  " : "FAIL  ") << ch.detail << '\n';
        result.checks.push_back(std::move(ch));
    };
    auto sci = [](double x) {
        std::ostringstream os;
        os << std::scientific << std::setprecision(2) << x;
        return os.str();
    };

    for (int d : dims) {
        const std::string tag = " d=" + std::to_string(d);
        std::optional<GreenTable> table;
        record("green_cache" + tag, [&] {
            table = GreenTable::load_or_build(d);
            const double res = table->validate();
            return std::pair{res <= 1e-10, "harmonicity residual " + sci(res)};
        });
        if (!table) continue;
        const Site zero{};
        const double g0 = (*table)(zero);
        record("green_origin" + tag, [&] {
            const double exact = green_exact(d, zero);
            bool ok = std::abs(exact - g0) <= 1e-10;
            if (d == 3) ok = ok && exact >= 1.5163 && exact <= 1.5165;
            return std::pair{ok, "G(0) = " + format_number(g0)};
        });
        record("green_far_field" + tag, [&] {
            Site x{};
            x[0] = 50;
            const double p[kMaxDim] = {50.0, 0.0, 0.0, 0.0, 0.0};
            const double ratio = green_exact(d, x) / g_continuum(d, std::span<const double>(p, d));
            return std::pair{std::abs(ratio / d - 1.0) <= 0.02, "G/g at |x|=50: " + fixed(ratio) + " (d = " +
                                                                   std::to_string(d) + ")"};
        });
        record("single_site_cap" + tag, [&] {
            const auto ev = cap_exact(std::vector<Site>{zero}, *table);
            const double err = std::abs(ev.capacity - 1.0 / g0);
            return std::pair{err <= 1e-8, "|cap({0}) - 1/G(0)| = " + sci(err)};
        });
        record("ball_newtonian" + tag, [&] {
            Rng rng(derive_seed(seed, {0xba11, static_cast<std::uint64_t>(d)}));
            const PointCloud ball(d, {Point{}}, 1.0);
            const auto est = cap_newtonian(ball, 20000, rng, 4.0);
            const double target = d / c1_constant(d);
            const double z = (est.value - target) / est.stderr_;
            return std::pair{std::abs(z) <= 3.0, fixed(est.value) + " vs " + fixed(target) + " (z " + fixed(z, 2) + ")"};
        });
    }

    record("codec_roundtrip", [&] {
        Rng rng(derive_seed(seed, {0xc0de}));
        const auto dist = OffspringDistribution::geometric_half();
        for (int i = 0; i < 1000; ++i) {
            const auto t = sample_conditioned_tree(dist, 1 + static_cast<std::int64_t>(rng.below(200)), rng);
            if (!(decode(encode(t)) == t)) return std::pair{false, std::string("round trip mismatch")};
        }
        return std::pair{true, std::string("1000 trees")};
    });
    record("codec_chi_square_n4", [&] {
        Rng rng(derive_seed(seed, {0xc41}));
        const auto dist = OffspringDistribution::geometric_half();
        const auto all = enumerate_plane_trees(4);
        std::vector<double> counts(all.size(), 0.0), probs(all.size(), 1.0 / static_cast<double>(all.size()));
        for (int i = 0; i < 10000; ++i) {
            const auto t = sample_conditioned_tree(dist, 4, rng);
            const auto it = std::find(all.begin(), all.end(), t);
            if (it == all.end()) return std::pair{false, std::string("sampled tree outside the enumeration")};
            counts[static_cast<std::size_t>(it - all.begin())] += 1.0;
        }
        const auto chi = stats::chi_square_test(counts, probs);
        return std::pair{chi.p_value > 1e-3, "p = " + fixed(chi.p_value)};
    });

    result.exit_code =
        std::all_of(result.checks.begin(), result.checks.end(), [](const auto& ch) { return ch.pass; }) ? 0 : 2;
    return result;
}

}  // namespace brwlab
