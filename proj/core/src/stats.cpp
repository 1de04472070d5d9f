#include "brwlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "brwlab/errors.hpp"

namespace brwlab::stats {

MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr out;
    out.count = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return out;
}

double chi_square_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob) {
    if (observed.size() != expected_prob.size() || observed.size() < 2) {
        throw DomainError("chi-square test needs matching cell arrays with at least two cells");
    }
    double total = 0.0;
    for (double o : observed) total += o;
    ChiSquareResult r;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_prob[i] * total;
        if (e <= 0.0) {
            if (observed[i] > 0.0) {
                r.statistic = INFINITY;
                r.p_value = 0.0;
                return r;
            }
            continue;
        }
        r.statistic += (observed[i] - e) * (observed[i] - e) / e;
        ++cells;
    }
    r.dof = cells - 1;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

double kolmogorov_sf(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sq = std::sqrt(ne);
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    return r;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw FitError("least squares needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw FitError("least squares needs distinct abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace brwlab::stats
