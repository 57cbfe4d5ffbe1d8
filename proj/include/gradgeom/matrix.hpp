#pragma once

#include <span>
#include <vector>

namespace gradgeom {

using Vec = std::vector<double>;

// Dense row-major matrix. Weight matrices W^(l) live here.
struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec data;  // rows * cols entries, row-major

    Matrix() = default;
    Matrix(int r, int c);

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    static Matrix identity(int n);
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    // Throws if the shape is inconsistent or any entry is non-finite.
    void validate() const;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double c);

// y = A x
void matvec(const Matrix& a, std::span<const double> x, Vec& y);
// y = A^T x
void matvec_transposed(const Matrix& a, std::span<const double> x, Vec& y);
// A += c * u v^T
void add_outer(Matrix& a, double c, std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm2_squared(std::span<const double> a);
// y += c * x
void axpy(double c, std::span<const double> x, Vec& y);
void scale_in_place(Vec& v, double c);
Vec normalized(std::span<const double> v);

}  // namespace gradgeom
