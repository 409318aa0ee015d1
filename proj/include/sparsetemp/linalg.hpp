#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sparsetemp {

using Vec = std::vector<double>;

// Dense row-major matrix, small sizes only (M x M Jacobians, dim x dim op weights).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    bool empty() const { return a.empty(); }
};

inline double dot(const Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec matvec(const Mat& m, const Vec& x) {
    assert(m.cols == x.size());
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        const double* row = &m.a[i * m.cols];
        for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// y = m^T x  (used for backprop through linear maps)
inline Vec matvec_t(const Mat& m, const Vec& x) {
    assert(m.rows == x.size());
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = &m.a[i * m.cols];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * x[i];
    }
    return y;
}

// m += alpha * u v^T
inline void add_outer(Mat& m, double alpha, const Vec& u, const Vec& v) {
    assert(m.rows == u.size() && m.cols == v.size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = &m.a[i * m.cols];
        const double ui = alpha * u[i];
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += ui * v[j];
    }
}

}  // namespace sparsetemp
