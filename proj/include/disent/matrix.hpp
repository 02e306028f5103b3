#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "disent/errors.hpp"

namespace disent {

// Dense row-major matrix of doubles. Sizes in this library are tiny
// (factors x code dims) or tall-skinny (samples x dims); no BLAS needed.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw argument_error("Matrix: negative extent");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

    const double* row(int r) const { return v_.data() + static_cast<std::size_t>(r) * cols_; }
    double* row(int r) { return v_.data() + static_cast<std::size_t>(r) * cols_; }

    std::vector<double> col(int c) const {
        std::vector<double> out(rows_);
        for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (int r = 0; r < rows_; ++r)
            for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    std::vector<double> matvec(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != cols_) throw argument_error("matvec: size mismatch");
        std::vector<double> y(rows_, 0.0);
        for (int r = 0; r < rows_; ++r) {
            double s = 0.0;
            const double* p = row(r);
            for (int c = 0; c < cols_; ++c) s += p[c] * x[c];
            y[r] = s;
        }
        return y;
    }

    Matrix matmul(const Matrix& b) const {
        if (cols_ != b.rows_) throw argument_error("matmul: size mismatch");
        Matrix out(rows_, b.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (int j = 0; j < b.cols_; ++j) out(i, j) += a * b(k, j);
            }
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::fabs(x));
        return m;
    }

    double max_entry() const {
        double m = -HUGE_VAL;
        for (double x : v_) m = std::max(m, x);
        return m;
    }

    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> v_;
};

// Integer matrix with the same layout; holds factor values and bin indices.
class IntMatrix {
  public:
    IntMatrix() = default;
    IntMatrix(int rows, int cols, int fill = 0)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw argument_error("IntMatrix: negative extent");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    int& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
    int operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::vector<int> col(int c) const {
        std::vector<int> out(rows_);
        for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    const std::vector<int>& data() const { return v_; }
    std::vector<int>& data() { return v_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> v_;
};

// max-norm of A^T A - I; zero for orthogonal A.
inline double orthogonality_defect(const Matrix& a) {
    Matrix g = a.transposed().matmul(a);
    for (int i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    return g.max_abs();
}

} // namespace disent
