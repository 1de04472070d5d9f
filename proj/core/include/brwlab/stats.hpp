#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace brwlab::stats {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

MeanStderr mean_stderr(std::span<const double> xs);

// Upper tail P(X >= x) of the chi-square distribution with `dof` degrees.
double chi_square_sf(double x, double dof);

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 0.0;
};

// Pearson goodness of fit; cells with expected count 0 must have observed 0.
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob);

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares y = slope * x + intercept; needs >= 2 distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace brwlab::stats
