#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <vector>

namespace brwlab::detail {

// Full set of N-point Gauss-Legendre nodes and weights on [-1, 1].
template <unsigned N>
void gauss_legendre(std::vector<double>& x, std::vector<double>& w) {
    using rule = boost::math::quadrature::gauss<double, N>;
    const auto& a = rule::abscissa();
    const auto& wt = rule::weights();
    x.clear();
    w.clear();
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] == 0.0) continue;
        x.push_back(-a[i]);
        w.push_back(wt[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        x.push_back(a[i]);
        w.push_back(wt[i]);
    }
}

}  // namespace brwlab::detail
