#pragma once

// Small dense linear algebra kernel. Row-major, 64-bit floats throughout.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace falab {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

/// a·b. Throws ContractViolation when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

/// c += diag(row_scale)·a·b, with row_scale empty meaning all ones.
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c, std::span<const double> row_scale = {});

/// a·v
Vector matvec(const Matrix& a, std::span<const double> v);
/// aᵀ·v
Vector matvec_t(const Matrix& a, std::span<const double> v);

/// x·xᵀ, filled symmetrically from the upper triangle.
Matrix gram(const Matrix& x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// y += alpha·x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> v, double alpha);

struct SymEig {
    Vector values;   ///< ascending
    Matrix vectors;  ///< column k is the eigenvector for values[k]
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Stops once the off-diagonal Frobenius norm drops below 1e-12·‖m‖_F or
/// after 100 sweeps. Rejects input that is not symmetric to 1e-10 relative.
SymEig sym_eig(const Matrix& m);

double lambda_min(const Matrix& sym);
double lambda_max(const Matrix& sym);

/// Largest singular value by power iteration on mᵀm.
double spectral_norm(const Matrix& m);

bool all_finite(std::span<const double> v);

} // namespace falab
