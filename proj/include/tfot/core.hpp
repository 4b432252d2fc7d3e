#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfot {

// ---- Errors ----

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A covariance or normal matrix that cannot be inverted reliably.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

/// Too few distinct sample times to determine the polynomial.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Scans fed out of order, misaligned series and similar caller mistakes.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Arguments outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// ---- Time ----

/// Scan number. The sampling period is 1 s, so a scan index doubles as the
/// polynomial abscissa in seconds.
using ScanIndex = std::int64_t;

// ---- Small vectors ----

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;

    [[nodiscard]] double norm() const { return std::hypot(x, y); }
    [[nodiscard]] constexpr double squared_norm() const { return x * x + y * y; }
};

/// Planar position in meters.
using Position2 = Vec2;

[[nodiscard]] inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// ---- 2x2 covariance ----

/// 2x2 covariance in m^2, stored row-major.
struct Cov2 {
    double xx = 0.0;
    double xy = 0.0;
    double yx = 0.0;
    double yy = 0.0;

    [[nodiscard]] static constexpr Cov2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }
    [[nodiscard]] static constexpr Cov2 identity() { return diag(1.0, 1.0); }
    [[nodiscard]] static constexpr Cov2 symmetric(double a, double off, double b) {
        return {a, off, off, b};
    }

    [[nodiscard]] constexpr double determinant() const { return xx * yy - xy * yx; }
    [[nodiscard]] constexpr double trace() const { return xx + yy; }
    [[nodiscard]] double inf_norm() const {
        return std::max(std::abs(xx) + std::abs(xy), std::abs(yx) + std::abs(yy));
    }

    [[nodiscard]] bool is_symmetric() const {
        return std::abs(xy - yx) <= 1e-9 * inf_norm();
    }

    /// Eigenvalues of the symmetric part, largest first.
    [[nodiscard]] std::array<double, 2> eigenvalues() const {
        const double off = 0.5 * (xy + yx);
        const double mean = 0.5 * (xx + yy);
        const double rad = std::hypot(0.5 * (xx - yy), off);
        return {mean + rad, mean - rad};
    }

    friend constexpr Cov2 operator+(const Cov2& a, const Cov2& b) {
        return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy};
    }
    friend constexpr Cov2 operator*(double s, const Cov2& a) {
        return {s * a.xx, s * a.xy, s * a.yx, s * a.yy};
    }
    friend constexpr bool operator==(const Cov2&, const Cov2&) = default;
};

inline constexpr double kMaxCondition = 1e12;

/// Inverse of a symmetric positive definite 2x2 matrix. Throws
/// IllConditionedError when the matrix is asymmetric, not PD, or has a
/// condition number above kMaxCondition.
[[nodiscard]] inline Cov2 inverse(const Cov2& s) {
    if (!s.is_symmetric())
        throw IllConditionedError("covariance is not symmetric");
    const auto [hi, lo] = s.eigenvalues();
    if (!(lo > 0.0) || hi / lo > kMaxCondition)
        throw IllConditionedError("covariance is singular or ill-conditioned");
    const double det = s.determinant();
    return {s.yy / det, -s.xy / det, -s.yx / det, s.xx / det};
}

/// Squared Mahalanobis distance (a-b)^T sigma^-1 (a-b).
[[nodiscard]] inline double mahalanobis_sq(Position2 a, Position2 b, const Cov2& sigma) {
    const Cov2 inv = inverse(sigma);
    const Vec2 d = a - b;
    const double q = d.x * (inv.xx * d.x + inv.xy * d.y) + d.y * (inv.yx * d.x + inv.yy * d.y);
    return std::max(q, 0.0);
}

// ---- Measurements ----

/// A position measurement with its scan and noise covariance.
struct Detection {
    ScanIndex k = 0;
    Position2 position;
    Cov2 cov;
};

/// Everything received at one scan. Target returns and clutter are not
/// distinguishable. The covariance list holds either one shared entry or one
/// entry per point.
struct MeasurementFrame {
    ScanIndex k = 0;
    std::vector<Position2> points;
    std::vector<Cov2> covs;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }

    [[nodiscard]] const Cov2& cov(std::size_t i) const {
        if (covs.empty()) throw ProtocolError("frame has points but no covariance");
        return covs.size() == 1 ? covs.front() : covs.at(i);
    }

    [[nodiscard]] Detection detection(std::size_t i) const { return {k, points.at(i), cov(i)}; }

    /// Throws ProtocolError unless the covariance layout matches the points.
    void validate() const {
        if (k < 1) throw ProtocolError("scan index must be >= 1");
        if (!points.empty() && covs.size() != 1 && covs.size() != points.size())
            throw ProtocolError("frame covariance count must be 1 or one per point");
        for (const auto& p : points)
            if (!is_finite(p)) throw ProtocolError("non-finite measurement");
    }
};

// ---- Small dense matrices ----

/// Row-major dense matrix for the small systems in polynomial fitting.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix dimension mismatch");
        Matrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    friend Matrix operator*(double s, Matrix m) {
        for (double& v : m.data_) v *= s;
        return m;
    }

    [[nodiscard]] std::vector<double> apply(std::span<const double> v) const {
        if (v.size() != cols_) throw std::invalid_argument("matrix dimension mismatch");
        std::vector<double> out(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out[r] += (*this)(r, c) * v[c];
        return out;
    }

    /// Largest absolute column sum.
    [[nodiscard]] double one_norm() const {
        double best = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < rows_; ++r) s += std::abs((*this)(r, c));
            best = std::max(best, s);
        }
        return best;
    }

    [[nodiscard]] double max_abs() const {
        double best = 0.0;
        for (double v : data_) best = std::max(best, std::abs(v));
        return best;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline constexpr std::size_t kMaxSmallDim = 4;

namespace detail {

// In-place lower Cholesky factor; returns false if a pivot is not positive.
inline bool cholesky(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) return false;
        const double l = std::sqrt(d);
        a(j, j) = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / l;
        }
        for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return true;
}

inline std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
        x[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) x[i] -= l(k, i) * x[k];
        x[i] /= l(i, i);
    }
    return x;
}

inline void check_spd_shape(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0 || a.rows() > kMaxSmallDim)
        throw std::invalid_argument("expected a square matrix of dimension 1.." +
                                    std::to_string(kMaxSmallDim));
    const double tol = 1e-9 * std::max(a.max_abs(), 1e-300);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol)
                throw IllConditionedError("matrix is not symmetric");
}

}  // namespace detail

/// Inverse of a small SPD matrix via Cholesky. The 1-norm condition number
/// must not exceed kMaxCondition.
[[nodiscard]] inline Matrix inverse_spd(const Matrix& a) {
    detail::check_spd_shape(a);
    Matrix l = a;
    if (!detail::cholesky(l)) throw IllConditionedError("matrix is not positive definite");
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0.0);
        e[c] = 1.0;
        const auto col = detail::cholesky_solve(l, e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    if (a.one_norm() * inv.one_norm() > kMaxCondition)
        throw IllConditionedError("matrix condition number exceeds 1e12");
    // symmetrize round-off
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) inv(i, j) = inv(j, i) = 0.5 * (inv(i, j) + inv(j, i));
    return inv;
}

/// Solves A x = b for a small SPD matrix A (dimension at most 4).
[[nodiscard]] inline std::vector<double> solve_small_spd(const Matrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) throw std::invalid_argument("right-hand side size mismatch");
    detail::check_spd_shape(a);
    Matrix l = a;
    if (!detail::cholesky(l)) throw IllConditionedError("matrix is not positive definite");
    // condition check shares the inverse path
    (void)inverse_spd(a);
    return detail::cholesky_solve(l, b);
}

}  // namespace tfot
