#include "brwlab/escape.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "brwlab/errors.hpp"
#include "quadrature.hpp"

namespace brwlab {

namespace {

// b(s; z) for z = -(m-1)..(m-1) at one time s, by the sine eigenbasis.
void killed_kernel(int m, double s, std::span<const double> psi0_psi, std::span<const double> rate,
                   std::vector<double>& out) {
    const int side = 2 * m - 1;
    out.assign(static_cast<std::size_t>(side), 0.0);
    for (int k = 1; k <= side; ++k) {
        const double e = std::exp(-s * rate[static_cast<std::size_t>(k - 1)]);
        if (e == 0.0) continue;
        const double* row = psi0_psi.data() + static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(side);
        for (int z = 0; z < side; ++z) out[static_cast<std::size_t>(z)] += e * row[z];
    }
}

void accumulate(std::vector<double>& face, const std::vector<double>& b, int depth, std::size_t base,
                std::size_t stride, double weight) {
    const auto side = b.size();
    if (depth == 0) {
        for (std::size_t z = 0; z < side; ++z) face[base + z * stride] += weight * b[z];
        return;
    }
    for (std::size_t z = 0; z < side; ++z) {
        const double w = weight * b[z];
        if (w != 0.0) accumulate(face, b, depth - 1, base + z * stride, stride * side, w);
    }
}

}  // namespace

CubeExitTable::CubeExitTable(int dim, int half_width) : dim_(dim), m_(half_width) {
    check_dimension(dim);
    if (half_width < 1) throw DomainError("cube half-width must be positive");
    const int side = 2 * m_ - 1;
    const double pi = std::numbers::pi;

    std::vector<double> rate(static_cast<std::size_t>(side));
    std::vector<double> psi0_psi(static_cast<std::size_t>(side * side));
    for (int k = 1; k <= side; ++k) {
        const double theta = pi * k / (2.0 * m_);
        rate[static_cast<std::size_t>(k - 1)] = (1.0 - std::cos(theta)) / dim;
        const double at0 = std::sin(theta * m_) / std::sqrt(static_cast<double>(m_));
        for (int z = 0; z < side; ++z) {
            const double at_z = std::sin(theta * (z + 1)) / std::sqrt(static_cast<double>(m_));
            psi0_psi[static_cast<std::size_t>((k - 1) * side + z)] = at0 * at_z;
        }
    }

    std::size_t cells = 1;
    for (int i = 1; i < dim_; ++i) cells *= static_cast<std::size_t>(side);
    face_.assign(cells, 0.0);

    // Log-spaced Gauss-Legendre panels in t over [1e-12, t_max]; the slowest
    // mode decays like exp(-t (1 - cos(pi / 2m))).
    std::vector<double> gx, gw;
    detail::gauss_legendre<12>(gx, gw);
    const double t_max = 45.0 / (1.0 - std::cos(pi / (2.0 * m_)));
    const double u0 = std::log(1e-12), u1 = std::log(t_max);
    const int panels = static_cast<int>(std::ceil((u1 - u0) / 0.5));
    const double h = (u1 - u0) / panels;
    std::vector<double> b;
    for (int p = 0; p < panels; ++p) {
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double u = u0 + h * (p + 0.5 * (gx[q] + 1.0));
            const double t = std::exp(u);
            const double w = 0.5 * h * gw[q] * t;
            killed_kernel(m_, t, psi0_psi, rate, b);
            // Face x_0 = m is entered from x_0 = m - 1 (index side - 1).
            const double lead = w * b[static_cast<std::size_t>(side - 1)];
            if (lead == 0.0) continue;
            if (dim_ == 1) continue;
            accumulate(face_, b, dim_ - 2, 0, 1, lead);
        }
    }
    double face_mass = 0.0;
    for (double& f : face_) {
        f = std::max(f, 0.0);
        face_mass += f;
    }
    // Exit probability through one face is (1/2d) G_box summed over the face.
    raw_mass_ = face_mass;
    for (double& f : face_) f /= face_mass;
    alias_ = AliasTable(face_);
}

double CubeExitTable::face_probability(std::span<const std::int32_t> transverse) const {
    const int side = 2 * m_ - 1;
    std::size_t idx = 0, stride = 1;
    for (std::int32_t z : transverse) {
        if (z < -(m_ - 1) || z > m_ - 1) return 0.0;
        idx += static_cast<std::size_t>(z + m_ - 1) * stride;
        stride *= static_cast<std::size_t>(side);
    }
    return face_[idx] / (2.0 * dim_);
}

const CubeExitTable& cube_exit_table(int dim, int half_width) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<CubeExitTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{dim, half_width}];
    if (!slot) slot = std::make_unique<CubeExitTable>(dim, half_width);
    return *slot;
}

std::span<const int> cube_levels(int dim) {
    static constexpr int d3[] = {2, 4, 8, 16, 32, 64, 128};
    static constexpr int d4[] = {2, 4, 8, 16, 32};
    static constexpr int d5[] = {2, 4, 8, 16};
    switch (dim) {
        case 3: return d3;
        case 4: return d4;
        case 5: return d5;
        default: throw UnsupportedDimensionError(dim);
    }
}

namespace {

std::int32_t floor_div(std::int32_t a, std::int32_t b) {
    std::int32_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

Site cell_of(const Site& x, int dim, std::int32_t m) {
    Site c{};
    for (int i = 0; i < dim; ++i) c[i] = floor_div(x[i], m);
    return c;
}

}  // namespace

EscapeEngine::EscapeEngine(int dim, std::span<const Site> target) : dim_(dim), target_(dim), packer_(dim) {
    check_dimension(dim);
    target_.reserve(target.size());
    for (const auto& s : target) target_.insert(s);
    max_norm_ = brwlab::max_norm(target);
    for (int m : cube_levels(dim)) {
        levels_.push_back(m);
        tables_.push_back(&cube_exit_table(dim, m));
        FlatKeySet occupied;
        std::vector<Site> cells;
        for (const auto& s : target_.sites()) {
            const Site c = cell_of(s, dim, m);
            if (occupied.insert(packer_.pack(c))) cells.push_back(c);
        }
        FlatKeySet blocked;
        blocked.reserve(cells.size() * 8);
        int neighbours = 1;
        for (int i = 0; i < dim; ++i) neighbours *= 3;
        for (const auto& c : cells) {
            for (int code = 0; code < neighbours; ++code) {
                Site n = c;
                int rest = code;
                for (int i = 0; i < dim; ++i) {
                    n[i] += rest % 3 - 1;
                    rest /= 3;
                }
                blocked.insert(packer_.pack(n));
            }
        }
        blocked_.push_back(std::move(blocked));
    }
}

bool EscapeEngine::safe(const Site& x, std::size_t level) const noexcept {
    const Site c = cell_of(x, dim_, levels_[level]);
    return !blocked_[level].contains(packer_.pack(c));
}

EscapeEngine::Outcome EscapeEngine::run(Site x, double kill_radius, Rng& rng) const {
    Outcome out;
    const double r2 = kill_radius * kill_radius;
    const double root_d = std::sqrt(static_cast<double>(dim_));
    while (true) {
        if (target_.contains(x)) {
            out.position = x;
            return out;
        }
        const double nx2 = static_cast<double>(norm_sq(x));
        if (nx2 > r2) {
            out.escaped = true;
            out.position = x;
            return out;
        }
        const double nx = std::sqrt(nx2);
        bool jumped = false;
        for (std::size_t l = levels_.size(); l-- > 0;) {
            if (nx + levels_[l] * root_d > kill_radius) continue;
            if (!safe(x, l)) continue;
            x = x + tables_[l]->sample(rng);
            jumped = true;
            break;
        }
        if (!jumped) {
            const auto k = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(dim_)));
            x[k >> 1] += (k & 1) ? -1 : 1;
        }
        ++out.moves;
    }
}

EscapeEngine::Outcome EscapeEngine::run_after_step(Site x, double kill_radius, Rng& rng) const {
    const auto k = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(dim_)));
    x[k >> 1] += (k & 1) ? -1 : 1;
    Outcome out = run(x, kill_radius, rng);
    ++out.moves;
    return out;
}

}  // namespace brwlab
