#pragma once

// Geometric mean decomposition h = q · r · p^H.
//
// r is real upper triangular with every diagonal entry equal to the geometric
// mean of the nonzero singular values of h; q and p have orthonormal columns.
// The construction starts from the SVD and walks down the diagonal, pairing an
// entry above the geometric mean with one below it and equalizing the leading
// entry of the pair with a left/right pair of real plane rotations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "iets/error.hpp"
#include "iets/linalg.hpp"

namespace iets
{

struct GmdResult
{
    ComplexMatrix q;  // M x K, receive steering
    RealMatrix r;     // K x K, upper triangular
    ComplexMatrix p;  // N x K, transmit steering
    double sigma_bar = 0.0;

    std::size_t streams() const noexcept { return r.rows(); }
};

// σ below kGmdRankThreshold · σ_max is treated as zero.
inline constexpr double kGmdRankThreshold = 1e-12;

// Slack allowed on the interval check in two_by_two_step for values that sit
// on an interval end up to rounding.
inline constexpr double kOrderingSlack = 1e-12;

// Geometric mean computed in the log domain.
inline double geometric_mean(std::span<double const> values)
{
    if (values.empty())
    {
        throw DimensionError("geometric mean of an empty list");
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (!(values[i] > 0.0))
        {
            throw RankDeficientError(
                "geometric mean needs strictly positive values", i);
        }
        log_sum += std::log(values[i]);
    }
    if (values.size() == 1)
    {
        return values[0];
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

// One equalizing step on diag(delta1, delta2).
//
// left()^T · diag(delta1, delta2) · right() == r2, with r2(0,0) equal to
// sigma_bar and r2(1,1) = delta1 · delta2 / sigma_bar.
struct RotationStep
{
    double c = 1.0;
    double s = 0.0;
    RealMatrix r2;

    double delta1 = 0.0;
    double delta2 = 0.0;
    // Normalizer of the left rotation; equals sigma_bar up to rounding.
    double rho = 0.0;

    // G2 = [[c, -s], [s, c]]
    RealMatrix right() const { return RealMatrix{{c, -s}, {s, c}}; }

    // G1 = (1/rho) [[c·δ1, -s·δ2], [s·δ2, c·δ1]]
    RealMatrix left() const
    {
        return RealMatrix{{c * delta1 / rho, -s * delta2 / rho},
                          {s * delta2 / rho, c * delta1 / rho}};
    }
};

inline RotationStep two_by_two_step(double delta1, double delta2,
                                    double sigma_bar)
{
    if (!(delta1 > 0.0) || !(delta2 > 0.0) || !(sigma_bar > 0.0))
    {
        throw OrderingError("two_by_two_step needs positive arguments");
    }
    double const lo = std::min(delta1, delta2);
    double const hi = std::max(delta1, delta2);
    if (sigma_bar < lo * (1.0 - kOrderingSlack) ||
        sigma_bar > hi * (1.0 + kOrderingSlack))
    {
        std::ostringstream msg;
        msg << "sigma_bar " << sigma_bar << " lies outside [" << lo << ", "
            << hi << "]";
        throw OrderingError(msg.str());
    }

    RotationStep step;
    step.delta1 = delta1;
    step.delta2 = delta2;
    if (delta1 == delta2)
    {
        step.rho = delta1;
        step.r2 = RealMatrix{{delta1, 0.0}, {0.0, delta2}};
        return step;
    }

    double const d1sq = delta1 * delta1;
    double const d2sq = delta2 * delta2;
    double c2 = (sigma_bar * sigma_bar - d2sq) / (d1sq - d2sq);
    c2 = std::clamp(c2, 0.0, 1.0);
    step.c = std::sqrt(c2);
    step.s = std::sqrt(1.0 - c2);
    // Normalizing by the exact column norm keeps G1 orthogonal to rounding.
    step.rho = std::sqrt(c2 * d1sq + (1.0 - c2) * d2sq);
    step.r2 = RealMatrix{
        {step.rho, -step.c * step.s * (d1sq - d2sq) / step.rho},
        {0.0, delta1 * delta2 / step.rho}};
    return step;
}

namespace detail
{

inline void gmd_symmetric_swap(GmdResult& g, std::size_t a, std::size_t b)
{
    if (a == b)
    {
        return;
    }
    g.r.swap_rows(a, b);
    g.r.swap_columns(a, b);
    g.q.swap_columns(a, b);
    g.p.swap_columns(a, b);
}

// Rotate columns (k, k+1) of m by the real 2x2 matrix rot.
template <typename T>
void rotate_columns(Matrix<T>& m, std::size_t k, RealMatrix const& rot)
{
    for (std::size_t i = 0; i < m.rows(); ++i)
    {
        T const a = m(i, k);
        T const b = m(i, k + 1);
        m(i, k) = a * rot(0, 0) + b * rot(1, 0);
        m(i, k + 1) = a * rot(0, 1) + b * rot(1, 1);
    }
}

}  // namespace detail

// GMD from a precomputed SVD of h.
inline GmdResult gmd(SvdResult const& svd_of_h)
{
    auto const& sigma = svd_of_h.sigma;
    std::size_t const k_streams = sigma.size();
    double const smax = sigma.front();
    for (std::size_t i = 0; i < k_streams; ++i)
    {
        if (!(sigma[i] > kGmdRankThreshold * smax))
        {
            std::ostringstream msg;
            msg << "GMD needs a full-rank channel; singular value " << sigma[i]
                << " is below " << kGmdRankThreshold << " x " << smax;
            throw RankDeficientError(msg.str(), i);
        }
    }

    GmdResult g;
    g.sigma_bar = geometric_mean(sigma);
    g.q = svd_of_h.u;
    g.p = svd_of_h.v;
    g.r = RealMatrix::diagonal(sigma);

    double const target = g.sigma_bar;
    for (std::size_t k = 0; k + 1 < k_streams; ++k)
    {
        // Position k takes an entry >= target, position k+1 one <= target.
        auto pick = [&](auto accept, std::size_t skip) {
            for (std::size_t i = k; i < k_streams; ++i)
            {
                if (i != skip && accept(g.r(i, i)))
                {
                    return i;
                }
            }
            // Rounding can leave every remaining entry a hair on one side.
            std::size_t best = (skip == k) ? k + 1 : k;
            for (std::size_t i = k; i < k_streams; ++i)
            {
                if (i != skip && accept.better(g.r(i, i), g.r(best, best)))
                {
                    best = i;
                }
            }
            return best;
        };
        struct AtLeast
        {
            double t;
            bool operator()(double d) const { return d >= t; }
            bool better(double a, double b) const { return a > b; }
        };
        struct AtMost
        {
            double t;
            bool operator()(double d) const { return d <= t; }
            bool better(double a, double b) const { return a < b; }
        };

        std::size_t const big = pick(AtLeast{target}, k_streams);
        detail::gmd_symmetric_swap(g, k, big);
        std::size_t const small = pick(AtMost{target}, k);
        detail::gmd_symmetric_swap(g, k + 1, small);

        double const d1 = g.r(k, k);
        double const d2 = g.r(k + 1, k + 1);
        double const bar = std::clamp(target, std::min(d1, d2),
                                      std::max(d1, d2));
        RotationStep const step = two_by_two_step(d1, d2, bar);
        RealMatrix const left = step.left();
        RealMatrix const right = step.right();

        for (std::size_t i = 0; i < k; ++i)
        {
            double const a = g.r(i, k);
            double const b = g.r(i, k + 1);
            g.r(i, k) = a * right(0, 0) + b * right(1, 0);
            g.r(i, k + 1) = a * right(0, 1) + b * right(1, 1);
        }
        g.r(k, k) = step.r2(0, 0);
        g.r(k, k + 1) = step.r2(0, 1);
        g.r(k + 1, k) = 0.0;
        g.r(k + 1, k + 1) = step.r2(1, 1);

        detail::rotate_columns(g.q, k, left);
        detail::rotate_columns(g.p, k, right);
    }
    return g;
}

inline GmdResult gmd(ComplexMatrix const& h) { return gmd(svd(h)); }

}  // namespace iets
