#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "brwlab/errors.hpp"

namespace brwlab {

inline constexpr int kMaxDim = 5;

// A point of Z^d with d <= kMaxDim. Coordinates at index >= d are always zero,
// which lets norms, sums and hashes ignore the active dimension.
using Site = std::array<std::int32_t, kMaxDim>;

inline void check_dimension(int dim) {
    if (dim < 3 || dim > 5) throw UnsupportedDimensionError(dim);
}

inline Site operator+(const Site& a, const Site& b) {
    Site r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
    return r;
}

inline Site operator-(const Site& a, const Site& b) {
    Site r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
    return r;
}

inline Site operator-(const Site& a) {
    Site r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = -a[i];
    return r;
}

inline std::int64_t norm_sq(const Site& a) {
    std::int64_t s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += static_cast<std::int64_t>(a[i]) * a[i];
    return s;
}

inline double norm(const Site& a) { return std::sqrt(static_cast<double>(norm_sq(a))); }

inline std::int32_t sup_norm(const Site& a) {
    std::int32_t m = 0;
    for (int i = 0; i < kMaxDim; ++i) m = std::max(m, a[i] < 0 ? -a[i] : a[i]);
    return m;
}

inline Site unit_vector(int axis, std::int32_t sign = 1) {
    Site e{};
    e[axis] = sign;
    return e;
}

// Largest Euclidean norm over a set of sites (0 for an empty set).
inline double max_norm(std::span<const Site> sites) {
    std::int64_t m = 0;
    for (const auto& s : sites) m = std::max(m, norm_sq(s));
    return std::sqrt(static_cast<double>(m));
}

/// Bit-packs a site into 64 bits, floor(64/dim) bits per coordinate.
///
/// Packing is injective on the box |x_i| < 2^(bits-1) - 1; callers check
/// `packable` before inserting into a SiteSet.
class SitePacker {
public:
    explicit SitePacker(int dim) : dim_(dim), bits_(64 / dim), offset_(std::int64_t{1} << (bits_ - 1)) {}

    int dim() const noexcept { return dim_; }
    std::int64_t limit() const noexcept { return offset_ - 1; }

    bool packable(const Site& s) const noexcept {
        for (int i = 0; i < dim_; ++i) {
            if (s[i] >= limit() || s[i] <= -limit()) return false;
        }
        return true;
    }

    std::uint64_t pack(const Site& s) const noexcept {
        std::uint64_t key = 0;
        for (int i = 0; i < dim_; ++i) {
            key = (key << bits_) | static_cast<std::uint64_t>(s[i] + offset_);
        }
        return key;
    }

    Site unpack(std::uint64_t key) const noexcept {
        Site s{};
        const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
        for (int i = dim_ - 1; i >= 0; --i) {
            s[i] = static_cast<std::int32_t>(static_cast<std::int64_t>(key & mask) - offset_);
            key >>= bits_;
        }
        return s;
    }

private:
    int dim_;
    int bits_;
    std::int64_t offset_;
};

inline std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Open-addressed (linear probing) hash set of packed 64-bit keys.
class FlatKeySet {
public:
    static constexpr std::uint64_t kEmpty = ~std::uint64_t{0};

    FlatKeySet() { rehash(16); }

    std::size_t size() const noexcept { return size_; }

    bool insert(std::uint64_t key) {
        if ((size_ + 1) * 2 > slots_.size()) rehash(slots_.size() * 2);
        std::size_t i = mix64(key) & mask_;
        while (slots_[i] != kEmpty) {
            if (slots_[i] == key) return false;
            i = (i + 1) & mask_;
        }
        slots_[i] = key;
        ++size_;
        return true;
    }

    bool contains(std::uint64_t key) const noexcept {
        std::size_t i = mix64(key) & mask_;
        while (true) {
            const std::uint64_t s = slots_[i];
            if (s == key) return true;
            if (s == kEmpty) return false;
            i = (i + 1) & mask_;
        }
    }

    void reserve(std::size_t n) {
        std::size_t cap = 16;
        while (cap < 2 * n) cap *= 2;
        if (cap > slots_.size()) rehash(cap);
    }

private:
    void rehash(std::size_t capacity) {
        std::vector<std::uint64_t> old(capacity, kEmpty);
        old.swap(slots_);
        mask_ = capacity - 1;
        size_ = 0;
        for (std::uint64_t k : old) {
            if (k != kEmpty) insert(k);
        }
    }

    std::vector<std::uint64_t> slots_;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

/// Deduplicated set of lattice sites; iteration follows first-insertion order.
class SiteSet {
public:
    explicit SiteSet(int dim) : packer_(dim) {}

    int dim() const noexcept { return packer_.dim(); }
    std::size_t size() const noexcept { return sites_.size(); }
    bool empty() const noexcept { return sites_.empty(); }
    const std::vector<Site>& sites() const noexcept { return sites_; }

    bool insert(const Site& s) {
        if (!packer_.packable(s)) throw DomainError("site coordinate exceeds the packable range");
        if (!keys_.insert(packer_.pack(s))) return false;
        sites_.push_back(s);
        return true;
    }

    bool contains(const Site& s) const noexcept {
        return packer_.packable(s) && keys_.contains(packer_.pack(s));
    }

    void reserve(std::size_t n) {
        keys_.reserve(n);
        sites_.reserve(n);
    }

private:
    SitePacker packer_;
    FlatKeySet keys_;
    std::vector<Site> sites_;
};

}  // namespace brwlab
