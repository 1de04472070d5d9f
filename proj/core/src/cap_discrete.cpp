#include "brwlab/cap_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "brwlab/errors.hpp"

namespace brwlab {

std::vector<Site> inner_boundary(int dim, std::span<const Site> sites) {
    SiteSet set(dim);
    set.reserve(sites.size());
    for (const auto& s : sites) set.insert(s);
    std::vector<Site> out;
    for (const auto& s : set.sites()) {
        bool boundary = false;
        for (int i = 0; i < dim && !boundary; ++i) {
            for (int sign = -1; sign <= 1 && !boundary; sign += 2) {
                if (!set.contains(s + unit_vector(i, sign))) boundary = true;
            }
        }
        if (boundary) out.push_back(s);
    }
    return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Row i of a symmetric product: returns sum_j g_j x_j and adds g_j x_0 to y_j
// for j >= 1. Eight independent partial sums let the loop vectorize.
template <class T>
double symmetric_row(const T* g, std::size_t len, const double* x, double* y) {
    const double x0 = x[0];
    double lanes[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t j = 1;
    for (; j + 8 <= len; j += 8) {
#pragma GCC unroll 8
        for (int l = 0; l < 8; ++l) {
            const double gj = static_cast<double>(g[j + l]);
            lanes[l] += gj * x[j + l];
            y[j + l] += gj * x0;
        }
    }
    double acc = static_cast<double>(g[0]) * x0;
    for (; j < len; ++j) {
        const double gj = static_cast<double>(g[j]);
        acc += gj * x[j];
        y[j] += gj * x0;
    }
    for (double l : lanes) acc += l;
    return acc;
}

// Upper triangle, row by row: row i holds columns i..n-1.
template <class T>
class PackedSymmetric {
public:
    PackedSymmetric(const SiteColumns& s, const GreenTable& green) : n_(s.size()) {
        data_.resize(n_ * (n_ + 1) / 2);
        std::vector<double> row(n_);
        T* dst = data_.data();
        for (std::size_t i = 0; i < n_; ++i) {
            green.evaluate_row(s, i, i, n_, row.data());
            for (std::size_t j = 0; j < n_ - i; ++j) dst[j] = static_cast<T>(row[j]);
            dst += n_ - i;
        }
    }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        std::fill(y.begin(), y.end(), 0.0);
        const T* row = data_.data();
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t len = n_ - i;
            y[i] += symmetric_row(row, len, x.data() + i, y.data() + i);
            row += len;
        }
    }

    static std::size_t bytes(std::size_t n) { return n * (n + 1) / 2 * sizeof(T); }

private:
    std::size_t n_;
    std::vector<T> data_;
};

// y = G x evaluating every Green value on the fly.
void apply_streaming(const SiteColumns& s, const GreenTable& green, const std::vector<double>& x,
                     std::vector<double>& y) {
    const std::size_t n = s.size();
    std::fill(y.begin(), y.end(), 0.0);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        green.evaluate_row(s, i, i, n, row.data());
        const double acc = symmetric_row(row.data(), n - i, x.data() + i, y.data() + i);
        y[i] += acc;
    }
}

// Restriction of I - P to the system sites: z_i = r_i - (1/2d) sum of r over
// lattice neighbours of i in the system. Its inverse dominates G restricted to
// the same sites, which makes it a cheap preconditioner.
class LaplacianPreconditioner {
public:
    LaplacianPreconditioner(int dim, std::span<const Site> sites) : weight_(1.0 / (2.0 * dim)) {
        SitePacker packer(dim);
        std::vector<std::pair<std::uint64_t, std::uint32_t>> keys(sites.size());
        for (std::size_t i = 0; i < sites.size(); ++i) keys[i] = {packer.pack(sites[i]), static_cast<std::uint32_t>(i)};
        std::sort(keys.begin(), keys.end());
        start_.reserve(sites.size() + 1);
        start_.push_back(0);
        for (const auto& s : sites) {
            for (int i = 0; i < dim; ++i) {
                for (int sign = -1; sign <= 1; sign += 2) {
                    const auto key = packer.pack(s + unit_vector(i, sign));
                    auto it = std::lower_bound(keys.begin(), keys.end(), std::make_pair(key, std::uint32_t{0}));
                    if (it != keys.end() && it->first == key) neighbours_.push_back(it->second);
                }
            }
            start_.push_back(static_cast<std::uint32_t>(neighbours_.size()));
        }
    }

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        for (std::size_t i = 0; i + 1 < start_.size(); ++i) {
            double s = 0.0;
            for (auto k = start_[i]; k < start_[i + 1]; ++k) s += r[neighbours_[k]];
            z[i] = r[i] - weight_ * s;
        }
    }

private:
    double weight_;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> neighbours_;
};

// Preconditioned CG from x = 0 until ||r|| <= tol_abs; returns iterations used.
template <class Apply>
std::int64_t conjugate_gradient(const Apply& apply, const LaplacianPreconditioner& pre, const std::vector<double>& b,
                                std::vector<double>& x, double tol_abs, std::int64_t max_iter, double& final_norm) {
    const std::size_t n = b.size();
    x.assign(n, 0.0);
    std::vector<double> r = b, z(n), q(n);
    pre.apply(r, z);
    std::vector<double> p = z;
    double rz = dot(r, z);
    double rr = dot(r, r);
    std::int64_t it = 0;
    while (std::sqrt(rr) > tol_abs && it < max_iter) {
        apply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        pre.apply(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        rr = dot(r, r);
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        ++it;
    }
    final_norm = std::sqrt(rr);
    return it;
}

}  // namespace

EquilibriumVector cap_exact(std::span<const Site> sites, const GreenTable& green, const CapSolverOptions& options) {
    if (sites.empty()) throw DomainError("capacity of the empty set is not defined here (empty A)");
    const int dim = green.dim();
    EquilibriumVector out;
    out.sites.assign(sites.begin(), sites.end());
    out.v.assign(sites.size(), 0.0);

    {
        SiteSet check(dim);
        for (const auto& s : sites) {
            if (!check.insert(s)) throw DomainError("capacity input contains a repeated site");
        }
    }
    std::vector<Site> sys = options.reduce_to_boundary ? inner_boundary(dim, sites) : out.sites;
    const std::size_t n = sys.size();
    out.system_size = n;
    const SiteColumns cols(dim, sys);
    const LaplacianPreconditioner pre(dim, sys);
    const std::vector<double> b(n, 1.0);
    const double b_norm = std::sqrt(static_cast<double>(n));
    const double tol_abs = options.rel_tol * b_norm;
    const auto max_iter = static_cast<std::int64_t>(10 * n);

    std::vector<double> v(n, 0.0);
    double res_norm = 0.0;
    std::int64_t iterations = 0;

    if (PackedSymmetric<double>::bytes(n) <= options.matrix_budget_bytes) {
        const PackedSymmetric<double> m(cols, green);
        iterations = conjugate_gradient([&](const auto& x, auto& y) { m.apply(x, y); }, pre, b, v, tol_abs, max_iter,
                                        res_norm);
    } else if (PackedSymmetric<float>::bytes(n) <= options.matrix_budget_bytes) {
        const PackedSymmetric<float> m(cols, green);
        std::vector<double> r = b, delta, gv(n);
        res_norm = b_norm;
        for (int outer = 0; outer < 8 && res_norm > tol_abs && iterations < max_iter; ++outer) {
            double inner_norm = 0.0;
            // Float rounding of the matrix costs far less than 0.3 tol, so one pass usually suffices.
            const double inner_tol = 0.3 * tol_abs;
            iterations += conjugate_gradient([&](const auto& x, auto& y) { m.apply(x, y); }, pre, r, delta, inner_tol,
                                             max_iter - iterations, inner_norm);
            for (std::size_t i = 0; i < n; ++i) v[i] += delta[i];
            apply_streaming(cols, green, v, gv);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - gv[i];
            res_norm = std::sqrt(dot(r, r));
        }
    } else {
        iterations = conjugate_gradient([&](const auto& x, auto& y) { apply_streaming(cols, green, x, y); }, pre, b, v,
                                        tol_abs, max_iter, res_norm);
    }
    out.iterations = iterations;
    out.residual = res_norm / b_norm;
    if (!(out.residual <= options.rel_tol)) {
        throw SolverError("conjugate gradients did not reach relative residual " + std::to_string(options.rel_tol) +
                              " within " + std::to_string(max_iter) + " iterations",
                          out.residual);
    }

    // Map system values back onto the caller's site order.
    SitePacker packer(dim);
    std::vector<std::pair<std::uint64_t, double>> by_key(n);
    for (std::size_t i = 0; i < n; ++i) by_key[i] = {packer.pack(sys[i]), v[i]};
    std::sort(by_key.begin(), by_key.end());
    for (std::size_t i = 0; i < out.sites.size(); ++i) {
        const auto key = packer.pack(out.sites[i]);
        auto it = std::lower_bound(by_key.begin(), by_key.end(), std::make_pair(key, -1e300));
        if (it != by_key.end() && it->first == key) out.v[i] = it->second;
    }
    out.capacity = std::accumulate(v.begin(), v.end(), 0.0);
    return out;
}

std::string to_string(CapMethod m) {
    switch (m) {
        case CapMethod::exact: return "exact";
        case CapMethod::mc_escape: return "mc_escape";
        case CapMethod::far_point: return "far_point";
    }
    return "unknown";
}

std::string CapEstimate::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(method) << ',' << value << ',' << stderr_ << ',' << reps << ',';
    if (bias_bound) os << *bias_bound;
    return os.str();
}

EscapeEstimate escape_probability_mc(const Site& x, const EscapeEngine& engine, double kill_radius,
                                     std::int64_t reps, Rng& rng) {
    if (reps < 1) throw DomainError("escape probability needs reps >= 1");
    if (!(kill_radius > std::max(norm(x), engine.target_max_norm()))) {
        throw PreconditionError("kill radius must exceed both |x| and max_norm(A)");
    }
    if (engine.in_target(x)) return {0.0, 0.0};
    std::int64_t escaped = 0;
    for (std::int64_t r = 0; r < reps; ++r) escaped += engine.run(x, kill_radius, rng).escaped ? 1 : 0;
    const double p = static_cast<double>(escaped) / static_cast<double>(reps);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(reps))};
}

EscapeEstimate escape_probability_mc(const Site& x, std::span<const Site> a, int dim, double kill_radius,
                                     std::int64_t reps, Rng& rng) {
    if (a.empty()) {
        if (reps < 1) throw DomainError("escape probability needs reps >= 1");
        if (!(kill_radius > norm(x))) throw PreconditionError("kill radius must exceed |x|");
        return {1.0, 0.0};
    }
    const EscapeEngine engine(dim, a);
    return escape_probability_mc(x, engine, kill_radius, reps, rng);
}

CapEstimate cap_mc_escape(std::span<const Site> a, const GreenTable& green, double r_factor, std::int64_t reps,
                          Rng& rng) {
    if (a.empty()) throw DomainError("cap_mc_escape needs a nonempty set");
    if (reps < 1) throw DomainError("cap_mc_escape needs reps >= 1");
    if (!(r_factor >= 4.0)) throw PreconditionError("cap_mc_escape needs R_factor >= 4");
    const int dim = green.dim();
    const EscapeEngine engine(dim, a);
    const double max_norm = engine.target_max_norm();
    const double radius = std::max(kMinEscapeRadius, r_factor * max_norm);
    const std::vector<Site> sites(a.begin(), a.end());
    const auto count = static_cast<double>(sites.size());

    // s1: escape indicator; s2: escape indicator times G(exit point), whose
    // mean times cap is the chance of coming back after the exit.
    double s1 = 0.0, s2 = 0.0, s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (std::int64_t r = 0; r < reps; ++r) {
        const Site& x = sites[rng.below(sites.size())];
        const auto o = engine.run_after_step(x, radius, rng);
        if (!o.escaped) continue;
        const double g = green(o.position);
        s1 += 1.0;
        s2 += g;
        s11 += 1.0;
        s22 += g * g;
        s12 += g;
    }
    const auto n = static_cast<double>(reps);
    const double m1 = s1 / n, m2 = s2 / n;
    const double denom = 1.0 + count * m2;
    CapEstimate est;
    est.method = CapMethod::mc_escape;
    est.reps = reps;
    est.value = count * m1 / denom;
    // Delta method for f(m1, m2) = #A m1 / (1 + #A m2).
    const double v11 = s11 / n - m1 * m1, v22 = s22 / n - m2 * m2, v12 = s12 / n - m1 * m2;
    const double d1 = count / denom, d2 = -count * count * m1 / (denom * denom);
    const double var = (d1 * d1 * v11 + 2.0 * d1 * d2 * v12 + d2 * d2 * v22) / n;
    est.stderr_ = std::sqrt(std::max(var, 0.0));
    est.bias_bound = max_norm / radius * est.value;
    return est;
}

CapEstimate cap_farpoint(std::span<const Site> a, const GreenTable& green, const Site& x_far, std::int64_t reps,
                         Rng& rng) {
    if (a.empty()) throw DomainError("cap_farpoint needs a nonempty set");
    if (reps < 1) throw DomainError("cap_farpoint needs reps >= 1");
    const int dim = green.dim();
    const EscapeEngine engine(dim, a);
    const double max_norm = engine.target_max_norm();
    const double dist = norm(x_far);
    if (dist < 2.0 * max_norm || dist < 1.0) {
        throw PreconditionError("cap_farpoint needs |x_far| >= 2 max_norm(A) and x_far != 0");
    }
    const double kill = 8.0 * dist;
    std::int64_t hits = 0;
    for (std::int64_t r = 0; r < reps; ++r) hits += engine.run(x_far, kill, rng).escaped ? 0 : 1;
    const double p = static_cast<double>(hits) / static_cast<double>(reps);
    const double g = green(x_far);
    CapEstimate est;
    est.method = CapMethod::far_point;
    est.reps = reps;
    est.value = p / g;
    est.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(reps)) / g;
    est.bias_bound = est.value * max_norm / dist + est.value * std::pow(1.0 / 8.0, dim - 2);
    return est;
}

}  // namespace brwlab
