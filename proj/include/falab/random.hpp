#pragma once

// Seedable, label-addressed random streams.
//
// Every stream is a xoshiro256++ generator whose state is expanded with
// SplitMix64 from a hash of (master seed, label). Gaussians come from the
// Box-Muller transform over 53-bit uniforms, both outputs of each pair used
// in order, so the draw sequence is fully specified and portable.

#include "falab/linalg.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace falab {

std::uint64_t splitmix64(std::uint64_t& state);

/// 64-bit FNV-1a of the label bytes.
std::uint64_t label_hash(std::string_view label);

class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view label);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double standard_normal();
    /// Same sequence as repeated standard_normal() calls.
    void fill_normal(std::span<double> out);

    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t stream_id_ = 0;
    std::optional<double> spare_;
};

RngStream derive_stream(std::uint64_t master_seed, std::string_view label);

/// n i.i.d. draws from N(0, std²). Throws ContractViolation unless std > 0.
Vector gaussian(RngStream& stream, std::size_t count, double std);

/// rows×cols matrix with i.i.d. N(0, std²) entries, filled row-major.
Matrix gaussian_matrix(RngStream& stream, std::size_t rows, std::size_t cols, double std);

} // namespace falab
