#include "falab/random.hpp"

#include "falab/errors.hpp"

#include <cmath>
#include <numbers>

namespace falab {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t label_hash(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : stream_id_(label_hash(label)) {
    std::uint64_t sm = master_seed;
    // Mix the seed first so that nearby seeds and nearby labels do not
    // produce correlated SplitMix64 starting points.
    std::uint64_t seed_mix = splitmix64(sm);
    std::uint64_t state = seed_mix ^ stream_id_;
    for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::standard_normal() {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z;
    }
    // 1 - u lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
}

void RngStream::fill_normal(std::span<double> out) {
    std::size_t i = 0;
    if (spare_ && !out.empty()) {
        out[i++] = *spare_;
        spare_.reset();
    }
    for (; i + 1 < out.size(); i += 2) {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(theta);
        out[i + 1] = r * std::sin(theta);
    }
    if (i < out.size()) out[i] = standard_normal();
}

RngStream derive_stream(std::uint64_t master_seed, std::string_view label) {
    return RngStream(master_seed, label);
}

Vector gaussian(RngStream& stream, std::size_t count, double std) {
    if (!(std > 0.0)) throw ContractViolation("gaussian: std must be positive");
    Vector out(count);
    stream.fill_normal(out);
    if (std != 1.0)
        for (auto& x : out) x *= std;
    return out;
}

Matrix gaussian_matrix(RngStream& stream, std::size_t rows, std::size_t cols, double std) {
    return Matrix(rows, cols, gaussian(stream, rows * cols, std));
}

} // namespace falab
