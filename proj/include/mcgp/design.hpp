#ifndef MCGP_DESIGN_HPP
#define MCGP_DESIGN_HPP

#include "mcgp/rng.hpp"
#include "mcgp/types.hpp"

#include <cstdint>
#include <optional>

namespace mcgp {

struct DomainBox {
    Vector lower;
    Vector upper;

    DomainBox() = default;
    DomainBox(Vector lo, Vector hi);

    /// The hypercube [lo, hi]^d.
    static DomainBox cube(int d, double lo, double hi);

    int dim() const { return static_cast<int>(lower.size()); }
    void validate() const;

    /// Maps points of the unit cube (one per row) affinely into the box.
    Matrix from_unit(const Matrix& unit) const;

    bool contains(const Eigen::Ref<const Vector>& x) const;
};

/// Largest dimension with shipped direction numbers.
inline constexpr int kSobolMaxDim = 16;

/// Sobol points with indices 1..m (the origin is skipped), mapped into `box`.
///
/// With a scramble seed the sequence is randomized by a random lower-triangular
/// linear scramble plus a digital shift, both fixed per dimension by the seed.
/// Points are generated in Gray-code order, so the first m points of any
/// longer request are identical.
Matrix sobol_points(Eigen::Index m, const DomainBox& box, std::optional<std::uint64_t> scramble_seed = std::nullopt);

/// One point per stratum in every dimension, uniformly jittered within its
/// stratum, with independent stratum permutations per dimension.
Matrix latin_hypercube(Eigen::Index n, const DomainBox& box, RngStream& rng);

/// Tensor grid with `per_dim` equally spaced points per axis including the
/// endpoints. The first coordinate varies slowest.
Matrix grid_points(const DomainBox& box, int per_dim);

} // namespace mcgp

#endif
