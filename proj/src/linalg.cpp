#include "falab/linalg.hpp"

#include "falab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace falab {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ContractViolation(what);
}

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, "Matrix: data length does not match rows*cols");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        require(r.size() == cols_, "Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ContractViolation("matmul: dimension mismatch " + shape(a) + " * " + shape(b));
    Matrix c(a.rows(), b.cols());
    // i-k-j order keeps the inner loop contiguous in both b and c.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < crow.size(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c, std::span<const double> row_scale) {
    if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols())
        throw ContractViolation("gemm_acc: dimension mismatch " + shape(a) + " * " + shape(b) +
                                " -> " + shape(c));
    require(row_scale.empty() || row_scale.size() == a.rows(), "gemm_acc: scale length mismatch");
    const std::size_t K = a.cols(), n = b.cols();
    const double* bp = b.data().data();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double s = row_scale.empty() ? 1.0 : row_scale[i];
        double* __restrict cr = c.row(i).data();
        const double* ar = a.row(i).data();
        // four rows of b per pass over the c row
        std::size_t k = 0;
        for (; k + 4 <= K; k += 4) {
            const double s0 = s * ar[k], s1 = s * ar[k + 1], s2 = s * ar[k + 2], s3 = s * ar[k + 3];
            const double* b0 = bp + k * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            for (std::size_t j = 0; j < n; ++j) cr[j] += s0 * b0[j] + s1 * b1[j] + s2 * b2[j] + s3 * b3[j];
        }
        for (; k < K; ++k) axpy(s * ar[k], b.row(k), c.row(i));
    }
}

Vector matvec(const Matrix& a, std::span<const double> v) {
    require(a.cols() == v.size(), "matvec: dimension mismatch");
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
    return out;
}

Vector matvec_t(const Matrix& a, std::span<const double> v) {
    require(a.rows() == v.size(), "matvec_t: dimension mismatch");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(v[i], a.row(i), out);
    return out;
}

Matrix gram(const Matrix& x) {
    require(!x.empty(), "gram: empty matrix");
    const std::size_t n = x.rows();
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = dot(x.row(i), x.row(j));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: length mismatch");
    // Four independent accumulators let the compiler vectorize without
    // reassociating a single running sum.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    const std::size_t n = a.size();
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double norm2(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double frobenius_norm(const Matrix& m) {
    return norm2(m.data());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
    return max_abs_diff(a.data(), b.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "subtract: length mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector scaled(std::span<const double> v, double alpha) {
    Vector out(v.begin(), v.end());
    for (auto& x : out) x *= alpha;
    return out;
}

SymEig sym_eig(const Matrix& m) {
    require(m.square(), "sym_eig: matrix is not square");
    const std::size_t n = m.rows();
    const double fro = frobenius_norm(m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * fro)
                throw ContractViolation("sym_eig: matrix is not symmetric");

    Matrix a = m;
    Matrix v = Matrix::identity(n);
    const double tol = 1e-12 * fro;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= tol) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymEig out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

double lambda_min(const Matrix& sym) {
    return sym_eig(sym).values.front();
}

double lambda_max(const Matrix& sym) {
    return sym_eig(sym).values.back();
}

double spectral_norm(const Matrix& m) {
    const std::size_t n = m.cols();
    if (n == 0 || m.rows() == 0) return 0.0;
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + (i % 2 == 0 ? 1e-6 : -1e-6);
    double nv = norm2(v);
    for (auto& x : v) x /= nv;

    double rq_prev = -1.0;
    double rq = 0.0;
    for (int it = 0; it < 1000; ++it) {
        const Vector w = matvec_t(m, matvec(m, v));
        rq = dot(v, w);
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
        if (std::abs(rq - rq_prev) < 1e-10 * std::abs(rq)) break;
        rq_prev = rq;
    }
    return std::sqrt(std::max(rq, 0.0));
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace falab
