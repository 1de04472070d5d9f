#include "brwlab/brw.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "brwlab/errors.hpp"

namespace brwlab {

bool generates_lattice(int dim, const std::vector<Site>& vectors) {
    std::vector<std::array<std::int64_t, kMaxDim>> rows;
    for (const auto& v : vectors) {
        std::array<std::int64_t, kMaxDim> r{};
        for (int i = 0; i < dim; ++i) r[i] = v[i];
        rows.push_back(r);
    }
    // Row-reduce column by column with the Euclidean algorithm; the pivots
    // of the resulting echelon basis all have to be +-1.
    std::size_t top = 0;
    for (int c = 0; c < dim; ++c) {
        while (true) {
            std::size_t best = rows.size();
            for (std::size_t r = top; r < rows.size(); ++r) {
                if (rows[r][c] != 0 && (best == rows.size() || std::abs(rows[r][c]) < std::abs(rows[best][c]))) best = r;
            }
            if (best == rows.size()) return false;
            std::swap(rows[top], rows[best]);
            bool reduced = true;
            for (std::size_t r = top + 1; r < rows.size(); ++r) {
                if (rows[r][c] == 0) continue;
                const std::int64_t q = rows[r][c] / rows[top][c];
                for (int i = 0; i < dim; ++i) rows[r][i] -= q * rows[top][i];
                if (rows[r][c] != 0) reduced = false;
            }
            if (reduced) break;
        }
        if (std::abs(rows[top][c]) != 1) return false;
        ++top;
    }
    return true;
}

StepDistribution::StepDistribution(int dim, std::vector<StepAtom> atoms, std::string preset_name)
    : dim_(dim), atoms_(std::move(atoms)), name_(std::move(preset_name)) {
    check_dimension(dim);
    if (atoms_.empty()) throw DomainError("step distribution needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
        if (!(a.prob > 0.0)) throw DomainError("step atoms must have positive probability");
        for (int i = dim; i < kMaxDim; ++i) {
            if (a.step[i] != 0) throw DomainError("step atom has coordinates beyond the dimension");
        }
        total += a.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("step probabilities must sum to 1");

    symmetric_ = true;
    for (const auto& a : atoms_) {
        double mirror = 0.0;
        for (const auto& b : atoms_) {
            if (b.step == -a.step) mirror += b.prob;
        }
        if (std::abs(mirror - a.prob) > 1e-12) symmetric_ = false;
    }
    if (!symmetric_) throw DomainError("step distribution '" + name_ + "' is not symmetric");

    std::vector<Site> support;
    for (const auto& a : atoms_) support.push_back(a.step);
    generates_ = brwlab::generates_lattice(dim, support);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& a : atoms_) {
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) cov(i, j) += a.prob * a.step[i] * a.step[j];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd sq = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    covariance_.resize(static_cast<std::size_t>(dim * dim));
    sigma_theta_.resize(covariance_.size());
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            covariance_[static_cast<std::size_t>(i * dim + j)] = cov(i, j);
            sigma_theta_[static_cast<std::size_t>(i * dim + j)] = sq(i, j);
        }
    }

    std::vector<double> w;
    for (const auto& a : atoms_) w.push_back(a.prob);
    alias_ = AliasTable(w);
}

StepDistribution StepDistribution::srw(int dim) {
    check_dimension(dim);
    std::vector<StepAtom> atoms;
    for (int k = 0; k < 2 * dim; ++k) atoms.push_back({unit_vector(k >> 1, (k & 1) ? -1 : 1), 1.0 / (2 * dim)});
    StepDistribution theta(dim, std::move(atoms), "srw");
    theta.srw_ = true;
    return theta;
}

StepDistribution StepDistribution::zero(int dim) { return {dim, {{Site{}, 1.0}}, "zero"}; }

StepDistribution StepDistribution::preset(const std::string& name, int dim) {
    if (name == "srw") return srw(dim);
    if (name == "zero") return zero(dim);
    throw DomainError("unknown step preset '" + name + "' (expected srw or zero)");
}

bool StepDistribution::is_atom(const Site& s) const noexcept {
    return std::any_of(atoms_.begin(), atoms_.end(), [&](const StepAtom& a) { return a.step == s; });
}

namespace {

BranchingWalk walk_parents(const std::vector<VertexId>& parent, const StepDistribution& theta, Rng& rng) {
    BranchingWalk bw;
    bw.dim = theta.dim();
    bw.positions.resize(parent.size());
    for (std::size_t v = 1; v < parent.size(); ++v) {
        bw.positions[v] = bw.positions[static_cast<std::size_t>(parent[v])] + theta.sample(rng);
    }
    return bw;
}

}  // namespace

BranchingWalk assign_positions(const PlaneTree& tree, const StepDistribution& theta, Rng& rng) {
    return walk_parents(tree.parent(), theta, rng);
}

BranchingWalk assign_positions(const SpineForest& forest, const StepDistribution& theta, Rng& rng) {
    return walk_parents(forest.parent, theta, rng);
}

RangeSet range(const BranchingWalk& bw) {
    RangeSet r(bw.dim);
    for (const auto& p : bw.positions) r.insert(p);
    return r;
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw CodecError("truncated range file");
    return value;
}

constexpr std::uint32_t kRangeVersion = 1;

}  // namespace

void write_range(std::ostream& out, const RangeSet& r) {
    out.write("RNGE", 4);
    put<std::uint32_t>(out, kRangeVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.dim()));
    put<std::uint64_t>(out, r.count());
    for (const auto& s : r.sites()) {
        for (int i = 0; i < r.dim(); ++i) put<std::int32_t>(out, s[i]);
    }
    if (!out) throw Error("failed to write range file");
}

RangeSet read_range(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "RNGE", 4) != 0) throw CodecError("not a range file (bad magic)");
    if (get<std::uint32_t>(in) != kRangeVersion) throw CodecError("unsupported range file version");
    const auto dim = static_cast<int>(get<std::uint32_t>(in));
    check_dimension(dim);
    const auto count = get<std::uint64_t>(in);
    RangeSet r(dim);
    for (std::uint64_t k = 0; k < count; ++k) {
        Site s{};
        for (int i = 0; i < dim; ++i) s[i] = get<std::int32_t>(in);
        if (!r.insert(s)) throw CodecError("duplicate site in range file");
    }
    return r;
}

std::vector<SnakePoint> rescaled_snake(const PlaneTree& tree, const BranchingWalk& bw) {
    if (tree.size() < 2) throw DomainError("rescaled snake needs a tree with at least two vertices");
    const double scale = std::pow(static_cast<double>(tree.size() - 1), -0.25);
    std::vector<SnakePoint> out;
    const auto walk = contour_walk(tree);
    out.reserve(walk.size());
    for (VertexId v : walk) {
        SnakePoint p{};
        for (int i = 0; i < bw.dim; ++i) p[i] = scale * bw.positions[static_cast<std::size_t>(v)][i];
        out.push_back(p);
    }
    return out;
}

void write_snake_csv(std::ostream& out, int dim, const std::vector<SnakePoint>& snake) {
    out << 't';
    for (int i = 1; i <= dim; ++i) out << ",x" << i;
    out << '\n';
    const double denom = snake.size() > 1 ? static_cast<double>(snake.size() - 1) : 1.0;
    for (std::size_t k = 0; k < snake.size(); ++k) {
        out << static_cast<double>(k) / denom;
        for (int i = 0; i < dim; ++i) out << ',' << snake[k][i];
        out << '\n';
    }
}

StationaritySamples stationarity_witness(const OffspringDistribution& dist, const StepDistribution& theta,
                                         std::int64_t k, std::int64_t i, std::int64_t sample_count, Rng& rng) {
    if (k < 0 || i < 0 || sample_count < 1) throw DomainError("stationarity witness needs k, i >= 0 and samples >= 1");
    StationaritySamples out;
    out.shifted.reserve(static_cast<std::size_t>(sample_count));
    out.direct.reserve(static_cast<std::size_t>(sample_count));
    for (std::int64_t r = 0; r < sample_count; ++r) {
        const auto forest = sample_spine_forest(dist, SpineModel::T_inf_star, i + k + 1, rng);
        if (static_cast<std::int64_t>(forest.exploration.size()) <= i + k) {
            throw BudgetError("spine forest exploration is shorter than i + k; regenerate with a larger length");
        }
        const auto bw = assign_positions(forest, theta, rng);
        auto at = [&](std::int64_t n) { return bw.positions[static_cast<std::size_t>(forest.exploration[static_cast<std::size_t>(n)])]; };
        out.shifted.push_back(norm(at(i + k) - at(i)));
        out.direct.push_back(norm(at(k)));
    }
    return out;
}

}  // namespace brwlab
