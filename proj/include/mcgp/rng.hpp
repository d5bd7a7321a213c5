#ifndef MCGP_RNG_HPP
#define MCGP_RNG_HPP

#include <cstdint>
#include <limits>

namespace mcgp {

/// xoshiro256** generator keyed by (seed, stream).
///
/// The 256-bit state is filled by SplitMix64 from a mix of both keys, so any
/// (seed, stream) pair can be constructed directly without advancing another
/// generator. Streams with different ids are used for independent draws
/// (e.g. per-sample RLRTO perturbations or per-stage pipeline randomness).
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// A generator on stream `id` of the same seed.
    RngStream substream(std::uint64_t id) const { return RngStream(seed_, id); }

    result_type operator()();

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal (Marsaglia polar method).
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mcgp

#endif
