#include "doctest.h"

#include "falab/diagnostics.hpp"
#include "falab/errors.hpp"
#include "falab/random.hpp"

#include <cmath>
#include <numbers>

using namespace falab;

TEST_CASE("cosine examples") {
    CHECK(cos_alignment(Vector{1, 0}, Vector{1, 0}) == 1.0);
    CHECK(cos_alignment(Vector{1, 0}, Vector{0, 1}) == 0.0);
    CHECK(cos_alignment(Vector{1, 1}, Vector{1, 0}) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(cos_alignment(Vector{0, 0}, Vector{1, 0}), UndefinedAlignment);
    CHECK_THROWS_AS(cos_alignment(Vector{1, 0}, Vector{0, 0}), UndefinedAlignment);
}

TEST_CASE("cosine is invariant to positive scaling and flips sign under negation") {
    auto s = derive_stream(3, "cos");
    for (int k = 0; k < 50; ++k) {
        const Vector b = gaussian(s, 7, 1.0), beta = gaussian(s, 7, 1.0);
        const double c = cos_alignment(b, beta);
        CHECK(std::abs(c) <= 1.0);
        CHECK(cos_alignment(scaled(b, 4.0), beta) == doctest::Approx(c).epsilon(1e-14));
        CHECK(cos_alignment(scaled(b, -0.5), beta) == doctest::Approx(-c).epsilon(1e-14));
    }
    // parallel vectors clamp to exactly one
    const Vector v{0.1, 0.2, 0.3};
    CHECK(cos_alignment(v, scaled(v, 3.0)) <= 1.0);
}

TEST_CASE("error decomposition") {
    const Vector y{3, 4};
    auto d = decompose_error(Vector{-0.6, -0.8}, y);
    CHECK(d.a == doctest::Approx(1.0));
    CHECK(norm2(d.xi) < 1e-15);
    d = decompose_error(Vector{4, -3}, y);
    CHECK(d.a == doctest::Approx(0.0));
    CHECK(max_abs_diff(d.xi, Vector{4, -3}) < 1e-15);
    CHECK_THROWS_AS(decompose_error(Vector{1, 1}, Vector{0, 0}), ContractViolation);

    auto s = derive_stream(4, "dec");
    for (int k = 0; k < 20; ++k) {
        const Vector e = gaussian(s, 6, 1.0), yy = gaussian(s, 6, 1.0);
        const auto r = decompose_error(e, yy);
        CHECK(std::abs(dot(r.xi, yy)) < 1e-12);
        CHECK(r.a * r.a + dot(r.xi, r.xi) == doctest::Approx(dot(e, e)).epsilon(1e-12));
    }
}

TEST_CASE("gram pair for the identity activation") {
    auto xs = derive_stream(5, "X");
    const Matrix X = gaussian_matrix(xs, 6, 4, 0.5);
    const auto net = gaussian_init(9, 4, Activation::identity, 5);
    const auto gp = gram_pair(net, X);

    const Matrix XW = matmul(X, transpose(net.W));
    Matrix G = matmul(XW, transpose(XW));
    const double bb = dot(net.b(), net.beta);
    const Matrix K = gram(X);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(gp.G(i, j) == doctest::Approx(G(i, j) / 9.0).epsilon(1e-12));
            CHECK(gp.H(i, j) == doctest::Approx(bb / 9.0 * K(i, j)).epsilon(1e-12));
        }
    CHECK(gp.lambda_min_G == doctest::Approx(lambda_min(gp.G)));
    CHECK(gp.norm_H == doctest::Approx(spectral_norm(gp.H)).epsilon(1e-8));
}

TEST_CASE("gram pair: G is PSD and H symmetric") {
    for (Activation act : {Activation::tanh, Activation::sigmoid, Activation::relu}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto xs = derive_stream(seed, "X");
            const Matrix X = gaussian_matrix(xs, 8, 3, 1.0);  // n > d: G is rank deficient for identity
            const auto net = gaussian_init(5, 3, act, seed);
            const auto gp = gram_pair(net, X);
            CHECK(gp.lambda_min_G >= -1e-10);
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j) CHECK(gp.H(i, j) == gp.H(j, i));
        }
    }
}

TEST_CASE("Gauss-Hermite rule") {
    const auto gh = gauss_hermite(64);
    REQUIRE(gh.nodes.size() == 64);
    double w = 0.0;
    for (double v : gh.weights) w += v;
    CHECK(w == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
    CHECK(gaussian_expectation([](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_expectation([](double z) { return z * z * z * z; }) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(gaussian_expectation([](double z) { return std::cos(z); }) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("activation moments") {
    const auto id = activation_moments(Activation::identity);
    CHECK(id.mean_deriv == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(id.mean_square == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(activation_moments(Activation::relu), ContractViolation);

    // Monte-Carlo oracle with 1e7 draws; agreement to three significant digits
    for (Activation act : {Activation::tanh, Activation::sigmoid}) {
        auto s = derive_stream(99, "mc");
        const std::size_t N = 10'000'000, chunk = 100'000;
        double sd = 0.0, sq = 0.0;
        for (std::size_t done = 0; done < N; done += chunk) {
            const Vector z = gaussian(s, chunk, 1.0);
            for (double u : z) {
                sd += activate_deriv(act, u);
                const double v = activate(act, u);
                sq += v * v;
            }
        }
        const auto m = activation_moments(act);
        CHECK(m.mean_deriv == doctest::Approx(sd / N).epsilon(5e-4));
        CHECK(m.mean_square == doctest::Approx(sq / N).epsilon(5e-4));
    }
    // sigmoid: E σ(Z)² has E σ(Z) = 1/2 by symmetry, so it exceeds 1/4
    CHECK(activation_moments(Activation::sigmoid).mean_square > 0.25);
}

TEST_CASE("G reference for the identity is the cosine matrix") {
    auto xs = derive_stream(6, "X");
    const Matrix X = gaussian_matrix(xs, 5, 8, 1.0);
    const Matrix g = gbar_reference(X, Activation::identity);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double c = dot(X.row(i), X.row(j)) / (norm2(X.row(i)) * norm2(X.row(j)));
            CHECK(g(i, j) == doctest::Approx(c).epsilon(1e-10));
        }
    CHECK_THROWS_AS(gbar_reference(X, Activation::relu), ContractViolation);
}

TEST_CASE("exact infinite-width G on unit rows") {
    // identity: E (wᵀx_i)(wᵀx_j) = x_iᵀx_j
    Matrix X{{1, 0}, {0.6, 0.8}};
    const Matrix g = gbar_exact(X, Activation::identity);
    CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(g(0, 1) == doctest::Approx(0.6).epsilon(1e-10));
    // tanh diagonal on a unit vector is E tanh(Z)²
    const Matrix gt = gbar_exact(X, Activation::tanh);
    CHECK(gt(0, 0) == doctest::Approx(activation_moments(Activation::tanh).mean_square).epsilon(1e-8));
    CHECK(gt(0, 1) == gt(1, 0));
}

TEST_CASE("weight drift") {
    const auto a = gaussian_init(4, 2, Activation::tanh, 1);
    auto d = weight_drift(a, a);
    CHECK(d.max_w == 0.0);
    CHECK(d.max_beta == 0.0);
    auto b = a;
    b.W(2, 0) += 3;
    b.W(2, 1) += 4;
    b.beta[1] -= 0.25;
    d = weight_drift(b, a);
    CHECK(d.max_w == doctest::Approx(5.0));
    CHECK(d.max_beta == doctest::Approx(0.25));
}

TEST_CASE("alignment report") {
    const auto r = alignment_report(Vector{1, 0}, Vector{1, 1}, 2.0, 4.0);
    CHECK(r.cos_b_beta == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(r.S_hat_over_s_hat == doctest::Approx(0.5));
    CHECK(r.component_norms[0] == 0.0);
}
