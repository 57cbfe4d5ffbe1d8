#include "gradgeom/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gradgeom {

SvdResult jacobi_svd(const Matrix& a) {
    if (a.rows <= 0 || a.cols <= 0) throw std::invalid_argument("jacobi_svd: empty matrix");
    const bool transposed = a.rows < a.cols;
    Matrix w = transposed ? transpose(a) : a;  // rows >= cols
    const int n = w.cols;
    Matrix v = Matrix::identity(n);

    // One-sided Jacobi: orthogonalize column pairs of w until the Gram matrix
    // is numerically diagonal.
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < w.rows; ++i) {
                    const double xp = w.at(i, p), xq = w.at(i, q);
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                if (apq == 0.0) continue;
                if (std::fabs(apq) <= 1e-15 * std::sqrt(app * aqq)) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int i = 0; i < w.rows; ++i) {
                    const double xp = w.at(i, p), xq = w.at(i, q);
                    w.at(i, p) = cs * xp - sn * xq;
                    w.at(i, q) = sn * xp + cs * xq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vp = v.at(i, p), vq = v.at(i, q);
                    v.at(i, p) = cs * vp - sn * vq;
                    v.at(i, q) = sn * vp + cs * vq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    Vec sigma(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < w.rows; ++i) s += w.at(i, j) * w.at(i, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return sigma[i] > sigma[j]; });

    Matrix u(w.rows, n);
    Matrix vperm(n, n);
    Vec sorted(n);
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        sorted[j] = sigma[src];
        if (sigma[src] > 0.0)
            for (int i = 0; i < w.rows; ++i) u.at(i, j) = w.at(i, src) / sigma[src];
        for (int i = 0; i < n; ++i) vperm.at(i, j) = v.at(i, src);
    }

    if (transposed) return {vperm, sorted, u};
    return {u, sorted, vperm};
}

double spectral_norm(const Matrix& m, double tol, int max_iters) {
    if (m.rows <= 0 || m.cols <= 0) throw std::invalid_argument("spectral_norm: empty matrix");
    if (tol <= 0.0) throw std::invalid_argument("spectral_norm: tol must be positive");
    if (m.rows == 1 || m.cols == 1) return norm2(m.data);

    const bool gram_cols = m.cols <= m.rows;  // iterate in the smaller space
    const int dim = gram_cols ? m.cols : m.rows;
    Vec v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    Vec tmp, w;
    double lambda_prev = -1.0, delta_prev = -1.0;
    for (int it = 0; it < max_iters; ++it) {
        if (gram_cols) {
            matvec(m, v, tmp);
            matvec_transposed(m, tmp, w);
        } else {
            matvec_transposed(m, v, tmp);
            matvec(m, tmp, w);
        }
        const double wn = norm2(w);
        if (wn == 0.0) break;  // start vector in the null space; let the SVD decide
        const double lambda = dot(v, w);
        for (int i = 0; i < dim; ++i) v[i] = w[i] / wn;
        if (lambda_prev >= 0.0) {
            const double delta = std::fabs(lambda - lambda_prev);
            if (delta == 0.0) return std::sqrt(std::max(lambda, 0.0));
            // Geometric-tail estimate of the remaining error: delta * q / (1 - q)
            // with contraction ratio q from consecutive differences.
            if (delta_prev > 0.0) {
                const double q = delta / delta_prev;
                if (q < 1.0) {
                    const double err = delta * q / (1.0 - q);
                    if (err <= 0.1 * tol * std::max(lambda, 1e-300))
                        return std::sqrt(std::max(lambda, 0.0));
                }
            }
            delta_prev = delta;
        }
        lambda_prev = lambda;
    }

    // Stalled (tiny spectral gap or adversarial start vector): exact fallback.
    const SvdResult svd = jacobi_svd(m);
    return svd.sigma.empty() ? 0.0 : svd.sigma.front();
}

namespace {

// Largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
double tridiag_max_eigenvalue(const Vec& alpha, const Vec& beta) {
    const int k = static_cast<int>(alpha.size());
    double lo = alpha[0], hi = alpha[0];
    for (int i = 0; i < k; ++i) {
        const double bl = i > 0 ? std::fabs(beta[static_cast<size_t>(i) - 1]) : 0.0;
        const double br = i + 1 < k ? std::fabs(beta[static_cast<size_t>(i)]) : 0.0;
        lo = std::min(lo, alpha[static_cast<size_t>(i)] - bl - br);
        hi = std::max(hi, alpha[static_cast<size_t>(i)] + bl + br);
    }
    // count of eigenvalues below x via the Sturm sequence
    const auto count_below = [&](double x) {
        int count = 0;
        double d = 1.0;
        for (int i = 0; i < k; ++i) {
            const double b2 = i > 0 ? beta[static_cast<size_t>(i) - 1] * beta[static_cast<size_t>(i) - 1] : 0.0;
            d = alpha[static_cast<size_t>(i)] - x - (d != 0.0 ? b2 / d : b2 / 1e-300);
            if (d < 0.0) ++count;
        }
        return count;
    };
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= k)
            hi = mid;  // all eigenvalues below mid
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double top_singular_value_lanczos(const Matrix& m, double tol) {
    if (m.rows <= 0 || m.cols <= 0) throw std::invalid_argument("top_singular_value_lanczos: empty matrix");
    if (m.rows == 1 || m.cols == 1) return norm2(m.data);
    const bool gram_cols = m.cols <= m.rows;
    const int dim = gram_cols ? m.cols : m.rows;
    const int max_k = std::min(dim, 160);

    std::vector<Vec> basis;
    Vec alpha, beta;
    Vec v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    Vec tmp, w;
    double prev = -1.0;
    int stable = 0;
    for (int k = 0; k < max_k; ++k) {
        basis.push_back(v);
        if (gram_cols) {
            matvec(m, v, tmp);
            matvec_transposed(m, tmp, w);
        } else {
            matvec_transposed(m, v, tmp);
            matvec(m, tmp, w);
        }
        const double a = dot(v, w);
        alpha.push_back(a);
        // full reorthogonalization keeps the basis clean at these sizes
        for (const Vec& b : basis) axpy(-dot(w, b), b, w);
        for (const Vec& b : basis) axpy(-dot(w, b), b, w);
        const double bnorm = norm2(w);
        const double lambda = tridiag_max_eigenvalue(alpha, beta);
        if (prev >= 0.0 && std::fabs(lambda - prev) <= tol * std::max(lambda, 1e-300)) {
            if (++stable >= 2) return std::sqrt(std::max(lambda, 0.0));
        } else {
            stable = 0;
        }
        prev = lambda;
        if (bnorm <= 1e-13 * std::sqrt(std::max(lambda, 1e-300)))
            return std::sqrt(std::max(lambda, 0.0));  // invariant subspace found
        beta.push_back(bnorm);
        for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] / bnorm;
    }
    return std::sqrt(std::max(tridiag_max_eigenvalue(alpha, beta), 0.0));
}

double expected_gaussian_norm(int dim) {
    if (dim < 1) throw std::invalid_argument("expected_gaussian_norm: dim must be >= 1");
    const double d = static_cast<double>(dim);
    return std::exp(0.5 * std::log(2.0) + std::lgamma(0.5 * (d + 1.0)) - std::lgamma(0.5 * d));
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ls_slope: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ls_slope: degenerate x values");
    return sxy / sxx;
}

}  // namespace gradgeom
