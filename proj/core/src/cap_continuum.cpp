#include "brwlab/cap_continuum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "brwlab/errors.hpp"

namespace brwlab {

namespace {

int key_bits(int dim) { return 64 / dim; }

double norm(const Point& x, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

}  // namespace

PointCloud::PointCloud(int dim, std::vector<Point> points, double eps)
    : dim_(dim), points_(std::move(points)), eps_(eps) {
    check_dimension(dim);
    if (points_.empty()) throw DomainError("point cloud must be nonempty");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("thickening eps must be positive");
    for (auto& p : points_) {
        for (int i = dim; i < kMaxDim; ++i) p[i] = 0.0;
        const double r = norm(p, dim);
        if (!std::isfinite(r)) throw DomainError("point cloud coordinates must be finite");
        radius_bound_ = std::max(radius_bound_, r);
    }
    // Cells of size >= 2 eps; wider when the cloud would not fit the packed key.
    const double half_span = static_cast<double>((std::int64_t{1} << (key_bits(dim) - 1)) - 8);
    base_ = std::max(2.0 * eps_, (radius_bound_ + 2.0 * eps_) / half_span);

    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) keyed[i] = {cell_key(points_[i], base_), static_cast<std::uint32_t>(i)};
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (i == 0 || keyed[i].first != keyed[i - 1].first) {
            bucket_keys_.push_back(keyed[i].first);
            bucket_start_.push_back(static_cast<std::uint32_t>(i));
        }
        bucket_points_.push_back(keyed[i].second);
    }
    bucket_start_.push_back(static_cast<std::uint32_t>(keyed.size()));

    int neighbours = 1;
    for (int i = 0; i < dim; ++i) neighbours *= 3;
    for (double h = 2.0 * base_; h <= 2.0 * (radius_bound_ + base_); h *= 2.0) {
        FlatKeySet occupied, blocked;
        std::vector<Cell> cells;
        for (const auto& p : points_) {
            Cell c{};
            for (int i = 0; i < dim; ++i) c[i] = static_cast<std::int64_t>(std::floor(p[i] / h));
            if (occupied.insert(cell_key(c))) cells.push_back(c);
        }
        for (const auto& c : cells) {
            for (int code = 0; code < neighbours; ++code) {
                Cell n = c;
                int rest = code;
                for (int i = 0; i < dim; ++i) {
                    n[i] += rest % 3 - 1;
                    rest /= 3;
                }
                blocked.insert(cell_key(n));
            }
        }
        blocked_.push_back(std::move(blocked));
    }
}

PointCloud PointCloud::rescaled_range(const RangeSet& r, double scale, double eps) {
    if (!(scale > 0.0)) throw DomainError("rescaling factor must be positive");
    std::vector<Point> pts;
    pts.reserve(r.count());
    for (const auto& s : r.sites()) {
        Point p{};
        for (int i = 0; i < r.dim(); ++i) p[i] = scale * s[i];
        pts.push_back(p);
    }
    return PointCloud(r.dim(), std::move(pts), eps);
}

std::uint64_t PointCloud::cell_key(const Cell& c) const {
    const int bits = key_bits(dim_);
    const std::int64_t offset = std::int64_t{1} << (bits - 1);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    std::uint64_t key = 0;
    for (int i = 0; i < dim_; ++i) key = (key << bits) | (static_cast<std::uint64_t>(c[i] + offset) & mask);
    return key;
}

std::uint64_t PointCloud::cell_key(const Point& x, double h) const {
    Cell c{};
    for (int i = 0; i < dim_; ++i) c[i] = static_cast<std::int64_t>(std::floor(x[i] / h));
    return cell_key(c);
}

PointCloud::Query PointCloud::query(const Point& x, double hit_tol) const {
    Query q;
    const double global = norm(x, dim_) - radius_bound_ - eps_;
    if (global >= base_ - eps_) {
        q.free_radius = global;
        return q;
    }
    // Largest level whose cell around x has no occupied neighbour.
    double h = base_ * static_cast<double>(std::size_t{1} << blocked_.size());
    for (std::size_t l = blocked_.size(); l-- > 0;) {
        if (!blocked_[l].contains(cell_key(x, h))) {
            q.free_radius = std::max(global, h - eps_);
            return q;
        }
        h *= 0.5;
    }
    // Level 0: exact scan of the 3^d cells around x.
    Cell c{};
    for (int i = 0; i < dim_; ++i) c[i] = static_cast<std::int64_t>(std::floor(x[i] / base_));
    int neighbours = 1;
    for (int i = 0; i < dim_; ++i) neighbours *= 3;
    double best2 = base_ * base_;
    for (int code = 0; code < neighbours; ++code) {
        Cell n = c;
        int rest = code;
        for (int i = 0; i < dim_; ++i) {
            n[i] += rest % 3 - 1;
            rest /= 3;
        }
        const auto key = cell_key(n);
        const auto it = std::lower_bound(bucket_keys_.begin(), bucket_keys_.end(), key);
        if (it == bucket_keys_.end() || *it != key) continue;
        const auto b = static_cast<std::size_t>(it - bucket_keys_.begin());
        for (auto k = bucket_start_[b]; k < bucket_start_[b + 1]; ++k) {
            const Point& p = points_[bucket_points_[k]];
            double d2 = 0.0;
            for (int i = 0; i < dim_; ++i) d2 += (x[i] - p[i]) * (x[i] - p[i]);
            best2 = std::min(best2, d2);
        }
    }
    const double dist = std::sqrt(best2);
    q.inside = dist <= eps_ * (1.0 + hit_tol);
    q.free_radius = std::max(global, dist - eps_);
    return q;
}

std::string NewtonianEstimate::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << value << ',' << stderr_ << ',' << r << ',' << kill_radius << ',' << reps << ',' << eps;
    return os.str();
}

NewtonianEstimate cap_newtonian(const PointCloud& cloud, std::int64_t reps, Rng& rng, std::optional<double> r,
                                std::optional<double> kill_radius) {
    if (reps < 1) throw DomainError("cap_newtonian needs reps >= 1");
    const int dim = cloud.dim();
    const double eps = cloud.eps();
    const double radius = r.value_or(2.0 * (cloud.radius_bound() + eps));
    if (!(radius > cloud.radius_bound() + eps)) {
        throw PreconditionError("thickened cloud must lie inside the start sphere (r > radius_bound + eps)");
    }
    const double kill = kill_radius.value_or(10.0 * radius);
    if (!(kill >= 10.0 * radius)) throw PreconditionError("kill radius must be at least 10 r");

    std::array<double, kMaxDim> u{};
    auto on_sphere = [&](double rad) {
        rng.unit_vector(dim, u);
        Point x{};
        for (int i = 0; i < dim; ++i) x[i] = rad * u[i];
        return x;
    };

    std::int64_t hits = 0;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
        Point x = on_sphere(radius);
        while (true) {
            const auto q = cloud.query(x, kHitTolerance);
            if (q.inside) {
                ++hits;
                break;
            }
            const double hop = std::min(q.free_radius, radius);
            rng.unit_vector(dim, u);
            for (int i = 0; i < dim; ++i) x[i] += hop * u[i];
            const double nx = norm(x, dim);
            if (nx > kill) {
                // Brownian motion from |x| reaches the r-sphere with probability (r/|x|)^{d-2}.
                if (rng.uniform() < std::pow(radius / nx, dim - 2)) {
                    x = on_sphere(radius);
                } else {
                    break;
                }
            }
        }
    }
    const double p = static_cast<double>(hits) / static_cast<double>(reps);
    const double total = dim / c1_constant(dim) * std::pow(radius, dim - 2);
    NewtonianEstimate est;
    est.value = p * total;
    est.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(reps)) * total;
    est.r = radius;
    est.kill_radius = kill;
    est.reps = reps;
    est.eps = eps;
    return est;
}

Theorem1Result theorem1_check(const RangeSet& range, std::int64_t n, const GreenTable& green, double eps,
                              std::int64_t reps, Rng& rng, std::optional<double> r) {
    if (n < 1) throw DomainError("theorem1_check needs n >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("theorem1_check needs eps in (0, 1)");
    if (range.dim() != green.dim()) throw DomainError("range and Green table dimensions differ");
    const int dim = green.dim();
    const double nd = static_cast<double>(n);
    const auto exact = cap_exact(range, green);
    const auto cloud = PointCloud::rescaled_range(range, std::pow(nd, -0.25), eps);
    const auto est = cap_newtonian(cloud, reps, rng, r);
    Theorem1Result out;
    out.lhs = std::pow(nd, -(dim - 2) / 4.0) * exact.capacity;
    out.rhs = est.value / dim;
    out.rhs_stderr = est.stderr_ / dim;
    out.ratio = out.lhs / out.rhs;
    out.range_count = range.count();
    return out;
}

}  // namespace brwlab
