#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "persuasion/common.hpp"

// Small dense vector/matrix helpers. Everything here operates on tiny
// problems (K <= 8 geometry, LPs with a few hundred cells), so plain
// O(n^3) routines with partial pivoting are all we need.

namespace persuasion {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(const Vec& a) { return dot(a, a); }

inline double norm2(const Vec& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::fabs(v));
    return s;
}

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double s, Vec a) {
    for (double& v : a) v *= s;
    return a;
}

inline void axpy(double s, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

// Row-major dense matrix, dimensions fixed at construction.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n, double scale = 1.0) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Vec mul(const Vec& x) const {
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

    Matrix& add_outer(double s, const Vec& v) {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) += s * v[i] * v[j];
        return *this;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec data_;
};

// Solves A x = b by Gaussian elimination with partial pivoting.
// Returns nullopt when the pivot falls below `singular_tol`.
inline std::optional<Vec> gauss_solve(Matrix a, Vec b, double singular_tol = 1e-13) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        if (std::fabs(a(piv, col)) < singular_tol) return std::nullopt;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

struct EigenDecomposition {
    Vec values;               // ascending
    std::vector<Vec> vectors; // vectors[j] pairs with values[j], unit norm
};

// Cyclic Jacobi for symmetric matrices. Deterministic sweep order, hard cap
// of 100 sweeps, off-diagonal tolerance 1e-12 relative to the diagonal scale.
inline EigenDecomposition jacobi_eigen(Matrix a, int max_sweeps = 100, double tol = 1e-12) {
    const std::size_t n = a.rows();
    Matrix v = Matrix::identity(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a(i, i)));
    scale = std::max(scale, 1.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a(p, q)));
        if (off <= tol * scale) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) <= tol * scale * 1e-3) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
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
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.assign(n, Vec(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors[j][i] = v(i, order[j]);
        // fix sign so the first nonzero component is positive (determinism)
        for (std::size_t i = 0; i < n; ++i) {
            if (std::fabs(out.vectors[j][i]) > 1e-12) {
                if (out.vectors[j][i] < 0)
                    for (double& c : out.vectors[j]) c = -c;
                break;
            }
        }
    }
    return out;
}

}  // namespace persuasion
