#pragma once

#include "falab/network.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace falab {

/// Random network f₀ that labels the synthetic inputs.
struct TeacherSpec {
    std::size_t d = 0;
    std::size_t p_teacher = 1;
    Activation act = Activation::tanh;
    /// Streams are "<label>_W" and "<label>_beta".
    std::string label = "teacher";
};

/// X with N(0, 1/d) entries from stream "X<suffix>"; y = f₀(x_i) with
/// N(0,1) teacher weights.
Dataset gen_synthetic(std::size_t n, std::size_t d, const TeacherSpec& teacher,
                      std::uint64_t seed, std::string_view suffix = "");

/// Orthogonal projection of y onto the column space of X. Throws
/// ContractViolation when XᵀX is numerically singular.
Vector project_y(const Matrix& X, std::span<const double> y);

/// Header `x0,...,x{d-1},y`, one sample per line.
void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

} // namespace falab
