#pragma once

// Small dense linear algebra. Every system in this project has d <= ~64,
// so the kernels favour accuracy and simplicity over blocking/vectorization.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace affpcl {

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
    Vector(std::initializer_list<double> values) : data_(values) {}
    explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

    static Vector zeros(std::size_t dim) { return Vector(dim); }
    static Vector unit(std::size_t dim, std::size_t k);

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& raw() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    Vector& operator+=(const Vector& o);
    Vector& operator-=(const Vector& o);
    Vector& operator*=(double s);
    // this += s * o
    Vector& axpy(double s, const Vector& o);

    double dot(const Vector& o) const;
    double squared_norm() const { return dot(*this); }
    double norm() const;
    bool all_finite() const;

    bool operator==(const Vector&) const = default;

private:
    std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector v);

// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(const Vector& diag);
    static Matrix outer(const Vector& a, const Vector& b);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    Matrix transpose() const;
    Vector diag() const;
    Vector column(std::size_t c) const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);
    // this += s * o
    Matrix& axpy(double s, const Matrix& o);

    double max_abs() const;
    double frobenius_norm() const;
    bool all_finite() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix m);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& m, const Vector& v);

// (M + M^T) / 2
Matrix sym(const Matrix& m);

// Solves M x = v with partial-pivot LU. Throws SingularMatrix when a pivot
// falls below 1e-12 * max|M_ij|.
Vector solve_linear(const Matrix& m, const Vector& v);
Matrix inverse(const Matrix& m);

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // column k pairs with values[k]
};

// Cyclic Jacobi eigen-decomposition. Only the symmetric part of `m` is used.
SymmetricEigen symmetric_eigen(const Matrix& m);

// Smallest eigenvalue of sym(M).
double sym_min_eig(const Matrix& m);

// Principal square root of a symmetric PSD matrix. Eigenvalues in
// [-1e-9 * scale, 0) are clamped; throws NotSymmetric when |M - M^T| exceeds
// 1e-9 * (1 + max|M|).
Matrix psd_sqrt(const Matrix& m);

// Largest singular value.
double operator_norm(const Matrix& m);

// Orthogonal factor of a Householder QR decomposition of a square matrix,
// with signs fixed so that R has a nonnegative diagonal.
Matrix qr_orthogonal(const Matrix& m);

}  // namespace affpcl
