#ifndef FEDNI_MATRIX_HPP
#define FEDNI_MATRIX_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace fedni {

/// Dense row-major matrix of doubles. Row or column vectors are just
/// matrices with one row/column.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static Matrix identity(std::size_t n);
    static Matrix row_vector(const std::vector<double>& v);
    static Matrix col_vector(const std::vector<double>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    Matrix transpose() const;
    Matrix row(std::size_t i) const;

    void fill(double v);
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// C = A * B. Throws dimension_error on shape mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

/// Adds a 1 x d row vector to every row of an n x d matrix.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);

double frobenius_norm(const Matrix& a);
double sum_all(const Matrix& a);

/// Column means / variances (1 x d). Variance is biased (divides by n)
/// unless `unbiased` is set.
Matrix col_means(const Matrix& a);
Matrix col_vars(const Matrix& a, const Matrix& means, bool unbiased = false);

/// Squared Euclidean distance between row i of `a` and row j of `b`.
double row_sqdist(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j);

void require_finite(const Matrix& a, const std::string& what);

} // namespace fedni

#endif
