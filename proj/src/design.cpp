#include "mcgp/design.hpp"

#include <array>
#include <bit>
#include <numeric>
#include <string>
#include <vector>

namespace mcgp {

namespace {

constexpr int kBits = 32;

struct Primitive {
    int s;
    unsigned a;
    std::array<std::uint32_t, 6> m;
};

// Joe & Kuo (new-joe-kuo-6.21201) initial direction numbers for dimensions 2..16.
constexpr std::array<Primitive, kSobolMaxDim - 1> kPrimitives{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
}};

using Directions = std::array<std::uint32_t, kBits>;

Directions direction_numbers(int dim)
{
    Directions v{};
    if (dim == 0) {
        for (int k = 0; k < kBits; ++k)
            v[k] = 1u << (kBits - 1 - k);
        return v;
    }
    const Primitive& p = kPrimitives[static_cast<std::size_t>(dim - 1)];
    for (int k = 0; k < p.s; ++k)
        v[k] = p.m[static_cast<std::size_t>(k)] << (kBits - 1 - k);
    for (int k = p.s; k < kBits; ++k) {
        std::uint32_t val = v[k - p.s] ^ (v[k - p.s] >> p.s);
        for (int j = 1; j < p.s; ++j) {
            if ((p.a >> (p.s - 1 - j)) & 1u)
                val ^= v[k - j];
        }
        v[k] = val;
    }
    return v;
}

/// Applies a random unit-lower-triangular binary matrix (digit 1 is the most
/// significant bit) to every direction number.
void linear_scramble(Directions& v, RngStream& rng)
{
    std::array<std::uint32_t, kBits> rows{};
    for (int r = 0; r < kBits; ++r) {
        const std::uint32_t diag = 1u << (kBits - 1 - r);
        // Bits more significant than the diagonal are random.
        const std::uint32_t above = r == 0 ? 0u : ~((diag << 1) - 1u);
        rows[r] = diag | (static_cast<std::uint32_t>(rng() >> 32) & above);
    }
    for (auto& dir : v) {
        std::uint32_t out = 0;
        for (int r = 0; r < kBits; ++r) {
            if (std::popcount(rows[r] & dir) & 1)
                out |= 1u << (kBits - 1 - r);
        }
        dir = out;
    }
}

} // namespace

DomainBox::DomainBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi))
{
    validate();
}

DomainBox DomainBox::cube(int d, double lo, double hi)
{
    return DomainBox(Vector::Constant(d, lo), Vector::Constant(d, hi));
}

void DomainBox::validate() const
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw ArgumentError("DomainBox: bounds must be nonempty and of equal length");
    for (Eigen::Index j = 0; j < lower.size(); ++j) {
        if (!(lower[j] < upper[j]))
            throw ArgumentError("DomainBox: lower bound must be below upper bound in dimension " + std::to_string(j));
    }
}

Matrix DomainBox::from_unit(const Matrix& unit) const
{
    if (unit.cols() != dim())
        throw ArgumentError("DomainBox::from_unit: dimension mismatch");
    Matrix out = unit;
    for (int j = 0; j < dim(); ++j)
        out.col(j) = (lower[j] + (upper[j] - lower[j]) * unit.col(j).array()).matrix();
    return out;
}

bool DomainBox::contains(const Eigen::Ref<const Vector>& x) const
{
    return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Matrix sobol_points(Eigen::Index m, const DomainBox& box, std::optional<std::uint64_t> scramble_seed)
{
    box.validate();
    const int d = box.dim();
    if (d > kSobolMaxDim)
        throw ArgumentError("sobol_points: dimension " + std::to_string(d) + " exceeds the supported maximum of "
                            + std::to_string(kSobolMaxDim));
    if (m < 0 || m >= (Eigen::Index{1} << kBits))
        throw ArgumentError("sobol_points: point count out of range");

    std::vector<Directions> dirs(static_cast<std::size_t>(d));
    std::vector<std::uint32_t> state(static_cast<std::size_t>(d), 0u);
    for (int j = 0; j < d; ++j) {
        dirs[j] = direction_numbers(j);
        if (scramble_seed) {
            RngStream rng(*scramble_seed, static_cast<std::uint64_t>(j));
            linear_scramble(dirs[j], rng);
            state[j] = static_cast<std::uint32_t>(rng() >> 32); // digital shift
        }
    }

    constexpr double kScale = 1.0 / 4294967296.0;
    Matrix unit(m, d);
    for (Eigen::Index i = 1; i <= m; ++i) {
        // Gray-code update: flip the direction of the lowest zero bit of i-1.
        const int c = std::countr_one(static_cast<std::uint64_t>(i - 1));
        for (int j = 0; j < d; ++j) {
            state[j] ^= dirs[j][static_cast<std::size_t>(c)];
            unit(i - 1, j) = static_cast<double>(state[j]) * kScale;
        }
    }
    return box.from_unit(unit);
}

Matrix latin_hypercube(Eigen::Index n, const DomainBox& box, RngStream& rng)
{
    box.validate();
    if (n < 1)
        throw ArgumentError("latin_hypercube: need at least one point");
    const int d = box.dim();
    Matrix unit(n, d);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double stratum = static_cast<double>(perm[static_cast<std::size_t>(i)]);
            unit(i, j) = (stratum + rng.uniform()) / static_cast<double>(n);
        }
    }
    return box.from_unit(unit);
}

Matrix grid_points(const DomainBox& box, int per_dim)
{
    box.validate();
    if (per_dim < 2)
        throw ArgumentError("grid_points: need at least two points per axis");
    const int d = box.dim();
    Eigen::Index total = 1;
    for (int j = 0; j < d; ++j)
        total *= per_dim;
    Matrix out(total, d);
    for (Eigen::Index i = 0; i < total; ++i) {
        Eigen::Index rem = i;
        for (int j = d - 1; j >= 0; --j) {
            const auto idx = static_cast<double>(rem % per_dim);
            rem /= per_dim;
            out(i, j) = box.lower[j] + (box.upper[j] - box.lower[j]) * idx / (per_dim - 1);
        }
    }
    return out;
}

} // namespace mcgp
