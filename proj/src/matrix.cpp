#include "gradgeom/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace gradgeom {

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
    if (r <= 0 || c <= 0) throw std::invalid_argument("Matrix: dimensions must be positive");
    data.assign(static_cast<size_t>(r) * c, 0.0);
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

void Matrix::validate() const {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("Matrix: dimensions must be positive");
    if (data.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("Matrix: entry count does not match rows*cols");
    for (double x : data)
        if (!std::isfinite(x)) throw std::invalid_argument("Matrix: non-finite entry");
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("matrix subtraction: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("matrix addition: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix scaled(const Matrix& a, double c) {
    Matrix r = a;
    for (double& x : r.data) x *= c;
    return r;
}

void matvec(const Matrix& a, std::span<const double> x, Vec& y) {
    if (static_cast<int>(x.size()) != a.cols) throw std::invalid_argument("matvec: shape mismatch");
    y.assign(a.rows, 0.0);
    const double* row = a.data.data();
    for (int i = 0; i < a.rows; ++i, row += a.cols) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void matvec_transposed(const Matrix& a, std::span<const double> x, Vec& y) {
    if (static_cast<int>(x.size()) != a.rows) throw std::invalid_argument("matvec_transposed: shape mismatch");
    y.assign(a.cols, 0.0);
    const double* row = a.data.data();
    for (int i = 0; i < a.rows; ++i, row += a.cols) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int j = 0; j < a.cols; ++j) y[j] += row[j] * xi;
    }
}

void add_outer(Matrix& a, double c, std::span<const double> u, std::span<const double> v) {
    if (static_cast<int>(u.size()) != a.rows || static_cast<int>(v.size()) != a.cols)
        throw std::invalid_argument("add_outer: shape mismatch");
    for (int i = 0; i < a.rows; ++i) {
        const double cu = c * u[i];
        if (cu == 0.0) continue;
        double* row = a.data.data() + static_cast<size_t>(i) * a.cols;
        for (int j = 0; j < a.cols; ++j) row[j] += cu * v[j];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2_squared(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(norm2_squared(a)); }

void axpy(double c, std::span<const double> x, Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

void scale_in_place(Vec& v, double c) {
    for (double& x : v) x *= c;
}

Vec normalized(std::span<const double> v) {
    const double n = norm2(v);
    Vec r(v.begin(), v.end());
    if (n > 0.0)
        for (double& x : r) x /= n;
    return r;
}

}  // namespace gradgeom
