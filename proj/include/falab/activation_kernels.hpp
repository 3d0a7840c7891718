#pragma once

// Branch-free tanh and sigmoid that GCC/Clang vectorize (given
// -fno-trapping-math). They agree with the libm functions to a few ulp and
// run an order of magnitude faster, which dominates nonlinear training cost.

#include <bit>
#include <cmath>
#include <cstdint>

namespace falab::kernels {

/// e^x = scale·(1 + em), for |x| ≤ 700.
struct ExpParts {
    double scale;
    double em;
};

inline ExpParts exp_parts(double x) {
    constexpr double shifter = 0x1.8p52;
    constexpr double log2e = 1.4426950408889634;
    constexpr double ln2_hi = 6.93147180369123816490e-01;
    constexpr double ln2_lo = 1.90821492927058770002e-10;
    const double tt = x * log2e + shifter;  // k in the low mantissa bits
    const double k = tt - shifter;
    const double r = (x - k * ln2_hi) - k * ln2_lo;  // |r| ≤ ln2/2
    // Taylor series of (e^r − 1 − r)/r² to degree 11
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    const double scale = std::bit_cast<double>((std::bit_cast<std::uint64_t>(tt) + 1023) << 52);
    return {scale, r + r * r * p};
}

inline double tanh(double u) {
    double a = std::fabs(u);
    a = a < 22.0 ? a : 22.0;  // tanh(22) rounds to 1
    const ExpParts e = exp_parts(2.0 * a);
    const double em1 = e.scale * e.em + (e.scale - 1.0);  // e^{2a} − 1
    return std::copysign(em1 / (em1 + 2.0), u);
}

inline double sigmoid(double u) {
    double a = std::fabs(u);
    a = a < 700.0 ? a : 700.0;
    const ExpParts e = exp_parts(-a);
    const double m = e.scale + e.scale * e.em;  // e^{−|u|}
    const double num = u >= 0.0 ? 1.0 : m;
    return num / (1.0 + m);
}

} // namespace falab::kernels
