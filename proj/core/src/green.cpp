#include "brwlab/green.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "quadrature.hpp"

namespace brwlab {

namespace {

constexpr double kPi = std::numbers::pi;

struct Node {
    double s;
    double w;  // includes the ds Jacobian and the leading factor d
};

// Integration grid for d * int_0^S f(s) ds: one Gauss-Legendre panel on [0, 1]
// and log-spaced panels on [1, S]. The remainder [S, inf) is added analytically.
constexpr double kTailStart = 1e8;

std::vector<Node> integration_nodes(int dim) {
    std::vector<double> gx, gw;
    std::vector<Node> nodes;
    detail::gauss_legendre<24>(gx, gw);
    for (std::size_t i = 0; i < gx.size(); ++i) nodes.push_back({0.5 * (gx[i] + 1.0), 0.5 * gw[i] * dim});
    detail::gauss_legendre<16>(gx, gw);
    const double t_end = std::log(kTailStart);
    const int panels = static_cast<int>(std::ceil(t_end / 0.5));
    const double h = t_end / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = p * h;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double t = a + 0.5 * h * (gx[i] + 1.0);
            const double s = std::exp(t);
            nodes.push_back({s, 0.5 * h * gw[i] * s * dim});
        }
    }
    return nodes;
}

// d * int_S^inf (2 pi s)^{-d/2} (1 - A/s + B/s^2) ds from the large-s expansion
// e^{-s} I_k(s) ~ (2 pi s)^{-1/2} (1 - a_k/s + b_k/s^2).
double tail_integral(int dim, std::span<const std::int32_t> key) {
    double a_sum = 0.0, b_sum = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double mu = 4.0 * key[i] * key[i];
        const double a = (mu - 1.0) / 8.0;
        const double b = (mu - 1.0) * (mu - 9.0) / 128.0;
        b_sum += b + a_sum * a;
        a_sum += a;
    }
    const double half = dim / 2.0;
    const double S = kTailStart;
    const double pref = dim * std::pow(2.0 * kPi, -half);
    return pref * (std::pow(S, 1.0 - half) / (half - 1.0) - a_sum * std::pow(S, -half) / half +
                   b_sum * std::pow(S, -half - 1.0) / (half + 1.0));
}

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

double c1_constant(int dim) {
    check_dimension(dim);
    return dim * std::tgamma(dim / 2.0 - 1.0) / (2.0 * std::pow(kPi, dim / 2.0));
}

double continuum_coefficient(int dim) {
    check_dimension(dim);
    return std::tgamma(dim / 2.0 - 1.0) / (2.0 * std::pow(kPi, dim / 2.0));
}

double g_continuum(int dim, std::span<const double> x) {
    check_dimension(dim);
    double r2 = 0.0;
    for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
    if (r2 == 0.0) throw SingularityError("continuum Green function is singular at the origin");
    return continuum_coefficient(dim) * std::pow(r2, (2.0 - dim) / 2.0);
}

void scaled_bessel_i(double s, std::span<double> out) {
    if (out.empty()) return;
    if (s <= 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = 1.0;
        return;
    }
    const std::size_t kmax = out.size() - 1;
    const auto top = static_cast<std::size_t>(kmax + 10.0 * std::sqrt(s) + 40.0);
    thread_local std::vector<double> ratio;
    ratio.assign(top + 2, 0.0);
    double r = 0.0;
    for (std::size_t k = top; k >= 1; --k) {
        r = s / (2.0 * static_cast<double>(k) + s * r);
        ratio[k] = r;
    }
    double sum = 0.0, prod = 1.0;
    for (std::size_t k = 1; k <= top; ++k) {
        prod *= ratio[k];
        sum += prod;
        if (prod < 1e-300) break;
    }
    out[0] = 1.0 / (1.0 + 2.0 * sum);
    for (std::size_t k = 1; k <= kmax; ++k) out[k] = out[k - 1] * ratio[k];
}

double green_exact(int dim, const Site& x, int near_radius) {
    check_dimension(dim);
    std::array<std::int32_t, kMaxDim> key{};
    std::int32_t top = 0;
    for (int i = 0; i < dim; ++i) {
        key[i] = std::abs(x[i]);
        top = std::max(top, key[i]);
    }
    if (top > near_radius) {
        throw OutOfTableError("green_exact: |x|_inf = " + std::to_string(top) + " exceeds near radius " +
                              std::to_string(near_radius) + "; use the far-field table lookup");
    }
    std::vector<double> f(static_cast<std::size_t>(top) + 1);
    double sum = 0.0;
    for (const Node& node : integration_nodes(dim)) {
        scaled_bessel_i(node.s, f);
        double p = node.w;
        for (int i = 0; i < dim; ++i) p *= f[key[i]];
        sum += p;
    }
    return sum + tail_integral(dim, key);
}

std::size_t GreenTable::table_size(int dim, int near_radius) {
    return binomial(static_cast<std::size_t>(near_radius + dim), static_cast<std::size_t>(dim));
}

GreenTable::GreenTable(int dim, int near_radius, double quadrature_tol, std::vector<double> values)
    : dim_(dim), near_radius_(near_radius), quadrature_tol_(quadrature_tol), c1_(c1_constant(dim)),
      values_(std::move(values)) {
    const std::size_t rows = static_cast<std::size_t>(near_radius + kMaxDim + 1);
    binom_.assign(rows * (kMaxDim + 1), 0);
    for (std::size_t n = 0; n < rows; ++n) {
        for (std::size_t k = 0; k <= kMaxDim; ++k) binom_[n * (kMaxDim + 1) + k] = binomial(n, k);
    }
    const auto stride = static_cast<std::size_t>(near_radius) + 1;
    place_.assign(static_cast<std::size_t>(dim) * stride, 0);
    for (int i = 0; i < dim; ++i) {
        for (std::size_t a = 0; a < stride; ++a) {
            place_[static_cast<std::size_t>(i) * stride + a] = static_cast<std::uint32_t>(
                binomial(a + static_cast<std::size_t>(dim - 1 - i), static_cast<std::size_t>(dim - i)));
        }
    }
    compute_handoff();
}

CanonicalKey GreenTable::key_at(std::size_t index) const {
    CanonicalKey key{};
    std::int32_t upper = near_radius_;
    for (int i = 0; i < dim_; ++i) {
        const int m = dim_ - i;
        // Largest a <= upper with C(a + m - 1, m) <= index.
        std::int32_t a = upper;
        while (a > 0 && binom_[(a + m - 1) * (kMaxDim + 1) + m] > index) --a;
        index -= binom_[(a + m - 1) * (kMaxDim + 1) + m];
        key[i] = a;
        upper = a;
    }
    return key;
}

GreenTable GreenTable::build(int dim, int near_radius, double quadrature_tol) {
    check_dimension(dim);
    if (near_radius < 2) throw DomainError("near radius must be at least 2");
    const std::size_t size = table_size(dim, near_radius);
    std::vector<double> values(size, 0.0);

    const std::vector<Node> nodes = integration_nodes(dim);
    const std::size_t width = static_cast<std::size_t>(near_radius) + 1;
    std::vector<double> bessel(nodes.size() * width);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        scaled_bessel_i(nodes[j].s, std::span<double>(bessel.data() + j * width, width));
    }

    // Entries sharing the first d-1 key coordinates are contiguous (last
    // coordinate 0..key[d-2]); accumulate them together, all nodes at a time.
    CanonicalKey prefix{};
    std::size_t base = 0;
    std::vector<double> segment(width);
    auto visit = [&](auto&& self, int depth, std::int32_t upper) -> void {
        if (depth == dim - 1) {
            const std::size_t len = static_cast<std::size_t>(upper) + 1;
            std::fill(segment.begin(), segment.begin() + len, 0.0);
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                const double* f = bessel.data() + j * width;
                double p = nodes[j].w;
                for (int i = 0; i < dim - 1; ++i) p *= f[prefix[i]];
                for (std::size_t a = 0; a < len; ++a) segment[a] += p * f[a];
            }
            for (std::size_t a = 0; a < len; ++a) {
                prefix[dim - 1] = static_cast<std::int32_t>(a);
                values[base + a] = segment[a] + tail_integral(dim, prefix);
            }
            base += len;
            return;
        }
        for (std::int32_t a = 0; a <= upper; ++a) {
            prefix[depth] = a;
            self(self, depth + 1, a);
        }
    };
    visit(visit, 0, near_radius);

    GreenTable table(dim, near_radius, quadrature_tol, std::move(values));
    if (table.handoff_error() >= 0.01) {
        throw CacheError("near/far hand-off gap " + std::to_string(table.handoff_error()) +
                         " exceeds 1%; increase the near radius");
    }
    return table;
}

void GreenTable::compute_handoff() {
    handoff_error_ = 0.0;
    // Keys with leading coordinate R0 are exactly the last block of the table.
    const std::size_t first = binomial(static_cast<std::size_t>(near_radius_ + dim_ - 1), dim_);
    CanonicalKey k = key_at(first);
    for (std::size_t i = first; i < values_.size(); ++i, next_key(k)) {
        double r2 = 0.0;
        for (int j = 0; j < dim_; ++j) r2 += static_cast<double>(k[j]) * k[j];
        handoff_error_ = std::max(handoff_error_, std::abs(far_field(r2) - values_[i]) / values_[i]);
    }
}

void GreenTable::next_key(CanonicalKey& key) const noexcept {
    for (int i = dim_ - 1; i >= 0; --i) {
        const std::int32_t upper = i == 0 ? near_radius_ : key[i - 1];
        if (key[i] < upper) {
            ++key[i];
            for (int j = i + 1; j < dim_; ++j) key[j] = 0;
            return;
        }
    }
}

double GreenTable::exact(const Site& x) const {
    if (!in_table(x)) {
        throw OutOfTableError("site outside the near-field table (|x|_inf = " + std::to_string(sup_norm(x)) +
                              " > " + std::to_string(near_radius_) + ")");
    }
    return (*this)(x);
}

double GreenTable::validate() const {
    double worst = 0.0;
    const double inv = 1.0 / (2.0 * dim_);
    CanonicalKey k{};
    for (std::size_t i = 0; i < values_.size(); ++i, next_key(k)) {
        if (!(values_[i] > 0.0)) throw CacheError("non-positive Green value at index " + std::to_string(i));
        if (k[0] >= near_radius_) continue;
        double mean = 0.0;
        bool origin = true;
        for (int a = 0; a < dim_; ++a) {
            if (k[a] != 0) origin = false;
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                CanonicalKey nb = k;
                nb[a] = std::abs(nb[a] + sgn);
                mean += values_[rank(nb)];
            }
        }
        mean *= inv;
        const double residual = std::abs(values_[i] - mean - (origin ? 1.0 : 0.0));
        worst = std::max(worst, residual);
    }
    if (worst > 10.0 * quadrature_tol_) {
        throw CacheError("Green table violates discrete harmonicity (residual " + std::to_string(worst) + ")");
    }
    return worst;
}

std::filesystem::path GreenTable::cache_file_name(int dim, int near_radius) {
    return "green_d" + std::to_string(dim) + "_r" + std::to_string(near_radius) + ".grnt";
}

namespace {

static_assert(std::endian::native == std::endian::little, "cache files are written in native little-endian");

constexpr char kMagic[4] = {'G', 'R', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void GreenTable::save(const std::filesystem::path& path) const {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CacheError("cannot open " + tmp + " for writing");
        const std::uint32_t header[3] = {kVersion, static_cast<std::uint32_t>(dim_),
                                         static_cast<std::uint32_t>(near_radius_)};
        out.write(kMagic, 4);
        out.write(reinterpret_cast<const char*>(header), sizeof header);
        out.write(reinterpret_cast<const char*>(values_.data()),
                  static_cast<std::streamsize>(values_.size() * sizeof(double)));
        if (!out) throw CacheError("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

GreenTable GreenTable::load(const std::filesystem::path& path, double quadrature_tol) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CacheError("cannot open Green cache " + path.string());
    char magic[4];
    std::uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw CacheError("bad magic in " + path.string());
    if (header[0] != kVersion) throw CacheError("unsupported Green cache version " + std::to_string(header[0]));
    const int dim = static_cast<int>(header[1]);
    const int radius = static_cast<int>(header[2]);
    if (dim < 3 || dim > 5 || radius < 2 || radius > 4096) throw CacheError("bad header in " + path.string());
    std::vector<double> values(table_size(dim, radius));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw CacheError("truncated Green cache " + path.string());
    in.peek();
    if (!in.eof()) throw CacheError("trailing bytes in Green cache " + path.string());
    GreenTable table(dim, radius, quadrature_tol, std::move(values));
    table.validate();
    return table;
}

GreenTable GreenTable::load_or_build(int dim, int near_radius, std::optional<std::filesystem::path> cache_dir) {
    check_dimension(dim);
    if (!cache_dir) {
        if (const char* env = std::getenv("BRWLAB_CACHE_DIR"); env != nullptr && *env != '\0') cache_dir = env;
    }
    if (cache_dir) {
        const auto file = *cache_dir / cache_file_name(dim, near_radius);
        if (std::filesystem::exists(file)) return load(file);
        GreenTable table = build(dim, near_radius);
        std::filesystem::create_directories(*cache_dir);
        table.save(file);
        return table;
    }
    return build(dim, near_radius);
}

namespace {

inline void order_pair(std::int32_t& a, std::int32_t& b) {
    const std::int32_t hi = a > b ? a : b;
    const std::int32_t lo = a > b ? b : a;
    a = hi;
    b = lo;
}

template <int D>
void row_kernel(const SiteColumns& s, std::size_t i, std::size_t begin, std::size_t end, const double* values,
                const std::uint32_t* place, std::int32_t radius, double c1, double* out) {
    const auto stride = static_cast<std::size_t>(radius) + 1;
    std::int32_t xi[D];
    const std::int32_t* col[D];
    for (int k = 0; k < D; ++k) {
        xi[k] = s.coord[k][i];
        col[k] = s.coord[k].data();
    }
    for (std::size_t j = begin; j < end; ++j) {
        std::int32_t a[D];
        std::int64_t r2 = 0;
#pragma GCC unroll 5
        for (int k = 0; k < D; ++k) {
            const std::int32_t diff = col[k][j] - xi[k];
            a[k] = diff < 0 ? -diff : diff;
            r2 += static_cast<std::int64_t>(diff) * diff;
        }
        if constexpr (D == 3) {
            order_pair(a[0], a[1]), order_pair(a[1], a[2]), order_pair(a[0], a[1]);
        } else if constexpr (D == 4) {
            order_pair(a[0], a[1]), order_pair(a[2], a[3]), order_pair(a[0], a[2]), order_pair(a[1], a[3]);
            order_pair(a[1], a[2]);
        } else {
            order_pair(a[0], a[1]), order_pair(a[3], a[4]), order_pair(a[2], a[4]), order_pair(a[2], a[3]);
            order_pair(a[1], a[4]), order_pair(a[0], a[3]), order_pair(a[0], a[2]), order_pair(a[1], a[3]);
            order_pair(a[1], a[2]);
        }
        // Both branches are evaluated so the loop stays branch-free.
        const bool near = a[0] <= radius;
        std::uint32_t r = 0;
#pragma GCC unroll 5
        for (int k = 0; k < D; ++k) {
            const std::int32_t ak = near ? a[k] : 0;
            r += place[static_cast<std::size_t>(k) * stride + static_cast<std::size_t>(ak)];
        }
        const double d2 = static_cast<double>(r2);
        double far;
        if constexpr (D == 3) {
            far = c1 / std::sqrt(d2);
        } else if constexpr (D == 4) {
            far = c1 / d2;
        } else {
            far = c1 / (d2 * std::sqrt(d2));
        }
        const double tabulated = values[r];
        out[j - begin] = near ? tabulated : far;
    }
}

}  // namespace

void GreenTable::evaluate_row(const SiteColumns& sites, std::size_t i, std::size_t begin, std::size_t end,
                              double* out) const {
    if (sites.dim != dim_) throw DomainError("site columns and Green table differ in dimension");
    switch (dim_) {
        case 3: row_kernel<3>(sites, i, begin, end, values_.data(), place_.data(), near_radius_, c1_, out); break;
        case 4: row_kernel<4>(sites, i, begin, end, values_.data(), place_.data(), near_radius_, c1_, out); break;
        default: row_kernel<5>(sites, i, begin, end, values_.data(), place_.data(), near_radius_, c1_, out); break;
    }
}

}  // namespace brwlab
