#include "fedni/matrix.hpp"

#include <cmath>
#include <cstring>

#include "fedni/errors.hpp"

namespace fedni {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(const std::vector<double>& v) {
    Matrix m(1, v.size());
    m.data_ = v;
    return m;
}

Matrix Matrix::col_vector(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    m.data_ = v;
    return m;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::row(std::size_t i) const {
    Matrix r(1, cols_);
    std::memcpy(r.data(), data_.data() + i * cols_, cols_ * sizeof(double));
    return r;
}

void Matrix::fill(double v) {
    for (auto& x : data_) x = v;
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw dimension_error("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    // ikj order keeps the inner loop contiguous for both b and c
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * k;
        double* ci = c.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw dimension_error("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] += b.raw()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw dimension_error("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] -= b.raw()[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw dimension_error("hadamard: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] *= b.raw()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (auto& x : c.raw()) x *= s;
    return c;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != a.cols())
        throw dimension_error("add_row_broadcast: bias must be 1x" + std::to_string(a.cols()));
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            c(i, j) += row(0, j);
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double x : a.raw()) s += x * x;
    return std::sqrt(s);
}

double sum_all(const Matrix& a) {
    double s = 0.0;
    for (double x : a.raw()) s += x;
    return s;
}

Matrix col_means(const Matrix& a) {
    Matrix m(1, a.cols());
    if (a.rows() == 0) return m;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m(0, j) += a(i, j);
    for (std::size_t j = 0; j < a.cols(); ++j) m(0, j) /= double(a.rows());
    return m;
}

Matrix col_vars(const Matrix& a, const Matrix& means, bool unbiased) {
    Matrix v(1, a.cols());
    const std::size_t n = a.rows();
    if (n == 0) return v;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = a(i, j) - means(0, j);
            v(0, j) += d * d;
        }
    const double denom = unbiased ? double(n - 1) : double(n);
    for (std::size_t j = 0; j < a.cols(); ++j) v(0, j) /= denom;
    return v;
}

double row_sqdist(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    if (a.cols() != b.cols()) throw dimension_error("row_sqdist: column mismatch");
    double s = 0.0;
    const double* pa = a.data() + i * a.cols();
    const double* pb = b.data() + j * b.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = pa[c] - pb[c];
        s += d * d;
    }
    return s;
}

void require_finite(const Matrix& a, const std::string& what) {
    if (!a.all_finite()) throw numeric_error(what + ": non-finite values");
}

} // namespace fedni
