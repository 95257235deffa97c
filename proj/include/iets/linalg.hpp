#pragma once

// Dense complex matrices and a one-sided Jacobi SVD sized for MIMO work
// (dimensions up to a few dozen).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "iets/error.hpp"

namespace iets
{

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

namespace detail
{
inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(Complex const& z)
{
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}
inline double conj(double x) { return x; }
inline Complex conj(Complex const& z) { return std::conj(z); }
}  // namespace detail

// Row-major dense matrix. Construction from data rejects non-finite entries.
template <typename T>
class Matrix
{
public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols)
    {
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows_ * cols_)
        {
            throw DimensionError("matrix data has " +
                                 std::to_string(data_.size()) +
                                 " entries, expected " +
                                 std::to_string(rows_ * cols_));
        }
        check_finite();
    }

    Matrix(std::initializer_list<std::initializer_list<T>> rows)
        : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0)
    {
        data_.reserve(rows_ * cols_);
        for (auto const& row : rows)
        {
            if (row.size() != cols_)
            {
                throw DimensionError("ragged matrix initializer");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
        check_finite();
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
        {
            m(i, i) = T(1);
        }
        return m;
    }

    static Matrix diagonal(std::span<double const> values)
    {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            m(i, i) = T(values[i]);
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    T const& operator()(std::size_t r, std::size_t c) const
    {
        return data_[r * cols_ + c];
    }

    std::span<T> data() noexcept { return data_; }
    std::span<T const> data() const noexcept { return data_; }

    std::vector<T> column(std::size_t c) const
    {
        std::vector<T> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
        {
            out[r] = (*this)(r, c);
        }
        return out;
    }

    void set_column(std::size_t c, std::span<T const> values)
    {
        for (std::size_t r = 0; r < rows_; ++r)
        {
            (*this)(r, c) = values[r];
        }
    }

    void swap_columns(std::size_t a, std::size_t b)
    {
        for (std::size_t r = 0; r < rows_; ++r)
        {
            std::swap((*this)(r, a), (*this)(r, b));
        }
    }

    void swap_rows(std::size_t a, std::size_t b)
    {
        for (std::size_t c = 0; c < cols_; ++c)
        {
            std::swap((*this)(a, c), (*this)(b, c));
        }
    }

    // Leading columns [0, count).
    Matrix leading_columns(std::size_t count) const
    {
        Matrix out(rows_, count);
        for (std::size_t r = 0; r < rows_; ++r)
        {
            for (std::size_t c = 0; c < count; ++c)
            {
                out(r, c) = (*this)(r, c);
            }
        }
        return out;
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(),
                           [](T const& v) { return detail::is_finite(v); });
    }

    friend bool operator==(Matrix const&, Matrix const&) = default;

private:
    void check_finite() const
    {
        if (!all_finite())
        {
            throw NonFiniteError("matrix contains a NaN or Inf entry");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using ComplexMatrix = Matrix<Complex>;
using RealMatrix = Matrix<double>;

inline ComplexMatrix to_complex(RealMatrix const& a)
{
    ComplexMatrix out(a.rows(), a.cols());
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    return out;
}

template <typename T>
Matrix<T> matmul(Matrix<T> const& a, Matrix<T> const& b)
{
    if (a.cols() != b.rows())
    {
        throw DimensionError("matmul", a.rows(), a.cols(), b.rows(),
                             b.cols());
    }
    Matrix<T> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        for (std::size_t k = 0; k < a.cols(); ++k)
        {
            T const aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
            {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

template <typename T>
std::vector<T> matvec(Matrix<T> const& a, std::span<T const> x)
{
    if (a.cols() != x.size())
    {
        throw DimensionError("matvec", a.rows(), a.cols(), x.size(), 1);
    }
    std::vector<T> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        T acc{};
        for (std::size_t j = 0; j < a.cols(); ++j)
        {
            acc += a(i, j) * x[j];
        }
        out[i] = acc;
    }
    return out;
}

// a^H x without forming a^H.
template <typename T>
std::vector<T> hermitian_matvec(Matrix<T> const& a, std::span<T const> x)
{
    if (a.rows() != x.size())
    {
        throw DimensionError("hermitian_matvec", a.cols(), a.rows(), x.size(),
                             1);
    }
    std::vector<T> out(a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        for (std::size_t j = 0; j < a.cols(); ++j)
        {
            out[j] += detail::conj(a(i, j)) * x[i];
        }
    }
    return out;
}

template <typename T>
Matrix<T> hermitian(Matrix<T> const& a)
{
    Matrix<T> out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        for (std::size_t j = 0; j < a.cols(); ++j)
        {
            out(j, i) = detail::conj(a(i, j));
        }
    }
    return out;
}

template <typename T>
Matrix<T> operator-(Matrix<T> const& a, Matrix<T> const& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
    {
        throw DimensionError("subtract", a.rows(), a.cols(), b.rows(),
                             b.cols());
    }
    Matrix<T> out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        out.data()[i] -= b.data()[i];
    }
    return out;
}

template <typename T>
Matrix<T> operator*(double scale, Matrix<T> a)
{
    for (auto& v : a.data())
    {
        v *= scale;
    }
    return a;
}

template <typename T>
double frobenius_norm(Matrix<T> const& a)
{
    double sum = 0.0;
    for (auto const& v : a.data())
    {
        sum += std::norm(v);
    }
    return std::sqrt(sum);
}

template <typename T>
double vector_norm(std::span<T const> x)
{
    double sum = 0.0;
    for (auto const& v : x)
    {
        sum += std::norm(v);
    }
    return std::sqrt(sum);
}

// ‖a^H a − I‖_F: zero for a matrix with orthonormal columns.
template <typename T>
double semi_unitarity_defect(Matrix<T> const& a)
{
    return frobenius_norm(matmul(hermitian(a), a) -
                          Matrix<T>::identity(a.cols()));
}

//---------------------------------------------------------------------------//
// Singular value decomposition
//---------------------------------------------------------------------------//

// Thin SVD a = u · diag(sigma) · v^H with K = min(rows, cols).
// sigma_i are the square roots of the eigenvalues of the Wishart matrix a^H a.
struct SvdResult
{
    ComplexMatrix u;            // M x K
    std::vector<double> sigma;  // K, descending, zeros kept
    ComplexMatrix v;            // N x K
};

inline constexpr int kSvdMaxSweeps = 60;
inline constexpr double kSvdTolerance = 1e-14;

namespace detail
{

struct JacobiColumns
{
    std::vector<ComplexVector> w;  // a · v, columns mutually orthogonal
    std::vector<ComplexVector> v;  // accumulated unitary rotations
};

inline Complex dot(ComplexVector const& a, ComplexVector const& b)
{
    Complex acc{};
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        acc += std::conj(a[i]) * b[i];
    }
    return acc;
}

inline double squared_norm(ComplexVector const& a)
{
    double acc = 0.0;
    for (auto const& z : a)
    {
        acc += std::norm(z);
    }
    return acc;
}

// Cyclic one-sided Jacobi on a tall matrix (rows >= cols).
inline JacobiColumns jacobi_orthogonalize(ComplexMatrix const& a)
{
    std::size_t const m = a.rows();
    std::size_t const n = a.cols();
    JacobiColumns out;
    out.w.resize(n);
    out.v.assign(n, ComplexVector(n));
    for (std::size_t j = 0; j < n; ++j)
    {
        out.w[j] = a.column(j);
        out.v[j][j] = 1.0;
    }

    for (int sweep = 0;; ++sweep)
    {
        double worst = 0.0;
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p)
        {
            for (std::size_t q = p + 1; q < n; ++q)
            {
                auto& wp = out.w[p];
                auto& wq = out.w[q];
                double const alpha = squared_norm(wp);
                double const beta = squared_norm(wq);
                Complex const gamma = dot(wp, wq);
                double const g = std::abs(gamma);
                if (alpha == 0.0 || beta == 0.0 || g == 0.0)
                {
                    continue;
                }
                double const off = g / std::sqrt(alpha * beta);
                if (off <= kSvdTolerance)
                {
                    continue;
                }
                worst = std::max(worst, off);
                if (sweep >= kSvdMaxSweeps)
                {
                    continue;
                }
                rotated = true;

                // Rotate (wp, e^{-i phi} wq) by a real Jacobi rotation.
                Complex const phase = gamma / g;
                double const zeta = (beta - alpha) / (2.0 * g);
                double const t = std::copysign(1.0, zeta) /
                                 (std::abs(zeta) + std::hypot(1.0, zeta));
                double const c = 1.0 / std::hypot(1.0, t);
                double const s = c * t;
                Complex const sp = s * std::conj(phase);
                Complex const cp = c * std::conj(phase);
                for (std::size_t i = 0; i < m; ++i)
                {
                    Complex const xp = wp[i];
                    Complex const xq = wq[i];
                    wp[i] = c * xp - sp * xq;
                    wq[i] = s * xp + cp * xq;
                }
                auto& vp = out.v[p];
                auto& vq = out.v[q];
                for (std::size_t i = 0; i < n; ++i)
                {
                    Complex const xp = vp[i];
                    Complex const xq = vq[i];
                    vp[i] = c * xp - sp * xq;
                    vq[i] = s * xp + cp * xq;
                }
            }
        }
        if (!rotated)
        {
            if (worst > kSvdTolerance)
            {
                throw ConvergenceError(kSvdMaxSweeps, worst);
            }
            return out;
        }
    }
}

// Fill columns flagged in `missing` with an orthonormal completion of the
// others, drawn deterministically from the standard basis.
inline void complete_orthonormal(std::vector<ComplexVector>& cols,
                                 std::vector<bool> const& missing,
                                 std::size_t dim)
{
    std::size_t next_basis = 0;
    for (std::size_t j = 0; j < cols.size(); ++j)
    {
        if (!missing[j])
        {
            continue;
        }
        for (; next_basis < dim; ++next_basis)
        {
            ComplexVector e(dim);
            e[next_basis] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
            {
                for (std::size_t k = 0; k < cols.size(); ++k)
                {
                    if (k == j || (missing[k] && k > j))
                    {
                        continue;
                    }
                    Complex const proj = dot(cols[k], e);
                    for (std::size_t i = 0; i < dim; ++i)
                    {
                        e[i] -= proj * cols[k][i];
                    }
                }
            }
            double const norm = std::sqrt(squared_norm(e));
            if (norm > 0.5)
            {
                for (auto& z : e)
                {
                    z /= norm;
                }
                cols[j] = std::move(e);
                ++next_basis;
                break;
            }
        }
    }
}

// SVD of a tall matrix; v is square.
inline SvdResult svd_tall(ComplexMatrix const& a)
{
    std::size_t const m = a.rows();
    std::size_t const n = a.cols();
    auto jc = jacobi_orthogonalize(a);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j)
    {
        norms[j] = std::sqrt(squared_norm(jc.w[j]));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto lhs, auto rhs) {
        return norms[lhs] > norms[rhs];
    });

    std::vector<ComplexVector> ucols(n);
    std::vector<bool> missing(n, false);
    SvdResult out;
    out.sigma.resize(n);
    out.v = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k)
    {
        std::size_t const j = order[k];
        double const sigma = norms[j];
        out.sigma[k] = sigma;
        out.v.set_column(k, jc.v[j]);
        double const inv = 1.0 / sigma;
        if (sigma == 0.0 || !std::isfinite(inv))
        {
            missing[k] = true;
            ucols[k] = ComplexVector(m);
            continue;
        }
        ucols[k] = jc.w[j];
        for (auto& z : ucols[k])
        {
            z *= inv;
        }
    }
    complete_orthonormal(ucols, missing, m);
    out.u = ComplexMatrix(m, n);
    for (std::size_t k = 0; k < n; ++k)
    {
        out.u.set_column(k, ucols[k]);
    }
    return out;
}

inline constexpr double kPhaseReferenceMagnitude = 1e-12;

// Make the first non-negligible entry of each right singular vector real and
// nonnegative, rotating the paired left vector by the same phase.
inline void normalize_phase(SvdResult& s)
{
    for (std::size_t k = 0; k < s.sigma.size(); ++k)
    {
        for (std::size_t i = 0; i < s.v.rows(); ++i)
        {
            Complex const ref = s.v(i, k);
            double const mag = std::abs(ref);
            if (mag <= kPhaseReferenceMagnitude)
            {
                continue;
            }
            Complex const rot = std::conj(ref) / mag;
            for (std::size_t r = 0; r < s.v.rows(); ++r)
            {
                s.v(r, k) *= rot;
            }
            for (std::size_t r = 0; r < s.u.rows(); ++r)
            {
                s.u(r, k) *= rot;
            }
            s.v(i, k) = mag;
            break;
        }
    }
}

}  // namespace detail

inline SvdResult svd(ComplexMatrix const& a)
{
    if (a.empty())
    {
        throw DimensionError("svd of an empty matrix");
    }
    if (!a.all_finite())
    {
        throw NonFiniteError("svd input contains a NaN or Inf entry");
    }
    SvdResult out;
    if (a.rows() >= a.cols())
    {
        out = detail::svd_tall(a);
    }
    else
    {
        // a = (a^H)^H = v' Σ u'^H
        auto t = detail::svd_tall(hermitian(a));
        out.u = std::move(t.v);
        out.sigma = std::move(t.sigma);
        out.v = std::move(t.u);
    }
    detail::normalize_phase(out);
    return out;
}

inline std::vector<double> singular_values(ComplexMatrix const& a)
{
    return svd(a).sigma;
}

// σ_max / σ_min, +inf when the matrix is numerically rank deficient.
inline double condition_number(ComplexMatrix const& a)
{
    auto const sigma = singular_values(a);
    double const smax = sigma.front();
    double const smin = sigma.back();
    double const floor = smax * std::numeric_limits<double>::epsilon() *
                         static_cast<double>(std::max(a.rows(), a.cols()));
    if (smax == 0.0 || smin <= floor)
    {
        return std::numeric_limits<double>::infinity();
    }
    return smax / smin;
}

}  // namespace iets
