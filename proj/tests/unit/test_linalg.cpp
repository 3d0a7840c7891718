#include "doctest.h"

#include "falab/errors.hpp"
#include "falab/linalg.hpp"
#include "falab/random.hpp"

#include <cmath>

using namespace falab;

namespace {

Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

Matrix random_matrix(std::uint64_t seed, std::size_t r, std::size_t c, double std = 1.0) {
    auto s = derive_stream(seed, "test");
    return gaussian_matrix(s, r, c, std);
}

Matrix random_symmetric(std::uint64_t seed, std::size_t n) {
    Matrix a = random_matrix(seed, n, n);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

} // namespace

TEST_CASE("matmul examples") {
    const Matrix m{{1, 2}, {3, 4}};
    CHECK(matmul(Matrix::identity(2), m) == m);
    const Matrix v = matmul(m, Matrix{{1}, {1}});
    CHECK(v == Matrix{{3}, {7}});
    CHECK_THROWS_AS(matmul(m, Matrix(3, 1)), ContractViolation);
}

TEST_CASE("matmul agrees with the triple loop") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Matrix a = random_matrix(seed, 5, 7), b = random_matrix(seed + 100, 7, 3);
        const Matrix ref = naive_product(a, b);
        CHECK(max_abs_diff(matmul(a, b), ref) <= 1e-12 * std::max(1.0, frobenius_norm(ref)));
    }
}

TEST_CASE("gemm_acc accumulates with row scaling") {
    const Matrix a = random_matrix(9, 11, 6), b = random_matrix(10, 6, 13);
    Matrix c = random_matrix(11, 11, 13);
    const Matrix c0 = c;
    Vector scale(11);
    for (std::size_t i = 0; i < 11; ++i) scale[i] = 0.5 + double(i);
    gemm_acc(a, b, c, scale);
    const Matrix ab = naive_product(a, b);
    double worst = 0.0;
    for (std::size_t i = 0; i < 11; ++i)
        for (std::size_t j = 0; j < 13; ++j)
            worst = std::max(worst, std::abs(c(i, j) - c0(i, j) - scale[i] * ab(i, j)));
    CHECK(worst < 1e-12 * frobenius_norm(ab) * 12);
    CHECK_THROWS_AS(gemm_acc(a, a, c), ContractViolation);
}

TEST_CASE("gram examples and symmetry") {
    CHECK(gram(Matrix::identity(3)) == Matrix::identity(3));
    CHECK(gram(Matrix{{1, 1}}) == Matrix{{2}});
    const Matrix x = random_matrix(3, 10, 30, 1.0 / std::sqrt(30.0));
    const Matrix g = gram(x);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) CHECK(g(i, j) == g(j, i));
    CHECK(lambda_min(g) > 0.0);
}

TEST_CASE("sym_eig examples") {
    const Vector d{1, 2, 3};
    const auto e = sym_eig(Matrix::diagonal(d));
    for (std::size_t i = 0; i < 3; ++i) CHECK(e.values[i] == doctest::Approx(d[i]));
    const auto f = sym_eig(Matrix{{0, 1}, {1, 0}});
    CHECK(f.values[0] == doctest::Approx(-1.0));
    CHECK(f.values[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(sym_eig(Matrix{{0, 1}, {2, 0}}), ContractViolation);
    CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), ContractViolation);
}

TEST_CASE("sym_eig reconstruction, orthonormality and trace") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const std::size_t n = 8;
        const Matrix m = random_symmetric(seed, n);
        const auto e = sym_eig(m);
        for (std::size_t k = 1; k < n; ++k) CHECK(e.values[k - 1] <= e.values[k]);
        Matrix rebuilt(n, n);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    rebuilt(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
        CHECK(max_abs_diff(rebuilt, m) < 1e-9);
        const Matrix vtv = matmul(transpose(e.vectors), e.vectors);
        CHECK(max_abs_diff(vtv, Matrix::identity(n)) < 1e-8);
        double trace = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            trace += m(i, i);
            sum += e.values[i];
        }
        CHECK(std::abs(trace - sum) <= 1e-9 * std::max(1.0, std::abs(trace)));
        // eigen-equation on each pair
        for (std::size_t k = 0; k < n; ++k) {
            Vector v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = e.vectors(i, k);
            const Vector mv = matvec(m, v);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(std::abs(mv[i] - e.values[k] * v[i]) < 1e-8 * std::max(1.0, std::abs(e.values[k])));
        }
    }
}

TEST_CASE("spectral_norm examples and oracle") {
    CHECK(spectral_norm(Matrix(3, 3)) == 0.0);
    CHECK(spectral_norm(Matrix::diagonal(Vector{3, 1})) == doctest::Approx(3.0).epsilon(1e-8));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Matrix m = random_matrix(seed, 6, 6);
        const double ref = std::sqrt(lambda_max(matmul(transpose(m), m)));
        CHECK(std::abs(spectral_norm(m) - ref) <= 1e-7 * ref);
    }
}

TEST_CASE("spectral_norm dominates random probes") {
    const Matrix m = random_matrix(77, 9, 5);
    const double s = spectral_norm(m);
    auto probes = derive_stream(78, "probe");
    for (int k = 0; k < 200; ++k) {
        const Vector v = gaussian(probes, 5, 1.0);
        CHECK(norm2(matvec(m, v)) / norm2(v) <= s * (1.0 + 1e-10));
    }
}

TEST_CASE("vector helpers") {
    CHECK(norm2(Vector{3, 4}) == 5.0);
    CHECK(dot(Vector{1, 0}, Vector{0, 1}) == 0.0);
    auto s = derive_stream(5, "v");
    const Vector v = gaussian(s, 37, 1.0);
    CHECK(dot(v, v) == doctest::Approx(norm2(v) * norm2(v)).epsilon(1e-14));
    CHECK_THROWS_AS(dot(Vector{1, 2}, Vector{1}), ContractViolation);
    Vector y{1, 1};
    axpy(2.0, Vector{1, 2}, y);
    CHECK(y == Vector{3, 5});
    CHECK(subtract(Vector{3, 5}, Vector{1, 1}) == Vector{2, 4});
    CHECK(scaled(Vector{1, -2}, 3.0) == Vector{3, -6});
    CHECK(all_finite(Vector{1, 2}));
    CHECK_FALSE(all_finite(Vector{1, std::nan("")}));
}

TEST_CASE("matvec and matvec_t agree with matmul") {
    const Matrix a = random_matrix(4, 7, 5);
    auto s = derive_stream(4, "mv");
    const Vector v = gaussian(s, 5, 1.0), w = gaussian(s, 7, 1.0);
    const Vector av = matvec(a, v);
    const Vector atw = matvec_t(a, w);
    const Matrix at = transpose(a);
    for (std::size_t i = 0; i < 7; ++i) CHECK(av[i] == doctest::Approx(dot(a.row(i), v)));
    for (std::size_t j = 0; j < 5; ++j) CHECK(atw[j] == doctest::Approx(dot(at.row(j), w)));
}
