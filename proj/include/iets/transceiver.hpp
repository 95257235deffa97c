#pragma once

// Transmit and detect chains for the three link schemes.
//
// Every scheme sends K = min(M, N) symbols per frame with total transmit power
// one: the symbol vector is scaled by 1/sqrt(K) before it reaches the antennas,
// and detectors divide the scale back out so decision statistics live on the
// constellation grid.
//
//   gmd-sic        s = P x / sqrt(K);  x~ = Q^H y, back-substitution on R
//   svd-eigenmode  s = V x / sqrt(K);  r = U^H y, per-eigenmode slicing
//   zf-vblast      s = x / sqrt(K);    ordered ZF nulling and cancellation

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iets/error.hpp"
#include "iets/gmd.hpp"
#include "iets/linalg.hpp"
#include "iets/modem.hpp"

namespace iets
{

enum class SchemeKind
{
    gmd_sic,
    svd_eigenmode,
    zf_vblast,
};

inline std::string_view to_string(SchemeKind kind)
{
    switch (kind)
    {
    case SchemeKind::gmd_sic: return "gmd-sic";
    case SchemeKind::svd_eigenmode: return "svd-eigenmode";
    case SchemeKind::zf_vblast: return "zf-vblast";
    }
    return "unknown";
}

inline SchemeKind scheme_from_string(std::string_view name)
{
    for (auto kind : {SchemeKind::gmd_sic, SchemeKind::svd_eigenmode,
                      SchemeKind::zf_vblast})
    {
        if (name == to_string(kind))
        {
            return kind;
        }
    }
    throw ConfigError("unknown scheme '" + std::string(name) +
                      "' (expected gmd-sic, svd-eigenmode or zf-vblast)");
}

struct TxFrame
{
    ComplexVector x;  // K data symbols
    ComplexVector s;  // N antenna samples
    double power_scale = 1.0;
};

struct DetectionResult
{
    ComplexVector x_hat;  // per-layer decision statistics, layer order
    BitVector bits_hat;   // layer 0 first
    std::vector<double> per_layer_gain;
};

inline double power_scale_for(std::size_t streams)
{
    return 1.0 / std::sqrt(static_cast<double>(streams));
}

namespace detail
{

inline void require_length(std::span<Complex const> v, std::size_t expected,
                           char const* what)
{
    if (v.size() != expected)
    {
        throw DimensionError(std::string(what) + ": vector length " +
                             std::to_string(v.size()) + ", expected " +
                             std::to_string(expected));
    }
}

inline TxFrame precode(std::span<Complex const> x, ComplexMatrix const& f)
{
    require_length(x, f.cols(), "transmit");
    TxFrame tx;
    tx.power_scale = power_scale_for(f.cols());
    tx.x.assign(x.begin(), x.end());
    tx.s = matvec<Complex>(f, x);
    for (auto& z : tx.s)
    {
        z *= tx.power_scale;
    }
    return tx;
}

}  // namespace detail

//---------------------------------------------------------------------------//
// GMD precoding with successive interference cancellation
//---------------------------------------------------------------------------//

inline TxFrame gmd_transmit(std::span<Complex const> x, GmdResult const& g)
{
    return detail::precode(x, g.p);
}

inline constexpr double kSingularLayerThreshold = 1e-12;

// Back-substitution from the last layer up. When genie symbols are given the
// true symbols are cancelled instead of the decisions.
inline DetectionResult gmd_sic_detect(std::span<Complex const> y,
                                      GmdResult const& g,
                                      Constellation const& c,
                                      std::span<Complex const> genie = {})
{
    std::size_t const k = g.streams();
    detail::require_length(y, g.q.rows(), "gmd_sic_detect");
    if (!genie.empty())
    {
        detail::require_length(genie, k, "gmd_sic_detect genie symbols");
    }
    double const scale = power_scale_for(k);
    unsigned const bps = c.bits_per_symbol();

    ComplexVector const filtered = hermitian_matvec(g.q, y);
    DetectionResult out;
    out.x_hat.resize(k);
    out.bits_hat.resize(k * bps);
    out.per_layer_gain.resize(k);
    ComplexVector decided(k);
    for (std::size_t i = k; i-- > 0;)
    {
        double const rii = g.r(i, i);
        if (!(std::abs(rii) > kSingularLayerThreshold))
        {
            throw RankDeficientError("singular SIC layer", i);
        }
        Complex v = filtered[i];
        for (std::size_t j = i + 1; j < k; ++j)
        {
            Complex const fed = genie.empty() ? decided[j] : genie[j];
            v -= g.r(i, j) * scale * fed;
        }
        double const gain = rii * scale;
        out.per_layer_gain[i] = gain;
        out.x_hat[i] = v / gain;
        auto const decision = slice(out.x_hat[i], c);
        decided[i] = decision.point;
        c.bits_of(decision.label,
                  std::span<Bit>(out.bits_hat).subspan(i * bps, bps));
    }
    return out;
}

//---------------------------------------------------------------------------//
// SVD eigenmode transmission, equal power on every eigenmode
//---------------------------------------------------------------------------//

inline TxFrame svd_transmit(std::span<Complex const> x, SvdResult const& s)
{
    return detail::precode(x, s.v);
}

inline DetectionResult svd_detect(std::span<Complex const> y,
                                  SvdResult const& s, Constellation const& c)
{
    std::size_t const k = s.sigma.size();
    detail::require_length(y, s.u.rows(), "svd_detect");
    double const scale = power_scale_for(k);
    unsigned const bps = c.bits_per_symbol();

    ComplexVector const r = hermitian_matvec(s.u, y);
    DetectionResult out;
    out.x_hat.resize(k);
    out.bits_hat.resize(k * bps);
    out.per_layer_gain.resize(k);
    for (std::size_t i = 0; i < k; ++i)
    {
        double const gain = s.sigma[i] * scale;
        out.per_layer_gain[i] = gain;
        // A dead eigenmode still carries a (meaningless) decision.
        out.x_hat[i] = gain > 0.0 ? r[i] / gain : Complex{};
        auto const decision = slice(out.x_hat[i], c);
        c.bits_of(decision.label,
                  std::span<Bit>(out.bits_hat).subspan(i * bps, bps));
    }
    return out;
}

//---------------------------------------------------------------------------//
// Classic ZF V-BLAST
//---------------------------------------------------------------------------//

// Moore-Penrose pseudoinverse of a full-column-rank matrix.
inline ComplexMatrix pseudoinverse(ComplexMatrix const& a)
{
    auto const s = svd(a);
    std::size_t const k = s.sigma.size();
    for (std::size_t i = 0; i < k; ++i)
    {
        if (!(s.sigma[i] > kSingularLayerThreshold * s.sigma.front()))
        {
            throw RankDeficientError("pseudoinverse of a singular matrix", i);
        }
    }
    // V Σ^{-1} U^H
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.cols(); ++r)
    {
        for (std::size_t c = 0; c < a.rows(); ++c)
        {
            Complex acc{};
            for (std::size_t i = 0; i < k; ++i)
            {
                acc += s.v(r, i) * std::conj(s.u(c, i)) / s.sigma[i];
            }
            out(r, c) = acc;
        }
    }
    return out;
}

// Detection order and nulling vectors for one channel. They depend on the
// channel only, so one plan serves every frame sent over it.
struct ZfVblastPlan
{
    struct Step
    {
        std::size_t stream;
        ComplexVector nulling;  // row of the deflated pseudoinverse
        ComplexVector column;   // channel column of the stream
    };

    std::size_t receive = 0;
    std::size_t streams = 0;
    std::vector<Step> steps;  // detection order
};

inline ZfVblastPlan plan_zf_vblast(ComplexMatrix const& h)
{
    if (h.cols() > h.rows())
    {
        throw DimensionError("zf-vblast needs at least as many receive as "
                             "transmit antennas",
                             h.rows(), h.cols(), h.rows(), h.cols());
    }
    ZfVblastPlan plan;
    plan.receive = h.rows();
    plan.streams = h.cols();
    std::vector<std::size_t> remaining(h.cols());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});

    while (!remaining.empty())
    {
        ComplexMatrix deflated(h.rows(), remaining.size());
        for (std::size_t c = 0; c < remaining.size(); ++c)
        {
            for (std::size_t r = 0; r < h.rows(); ++r)
            {
                deflated(r, c) = h(r, remaining[c]);
            }
        }
        ComplexMatrix const pinv = pseudoinverse(deflated);

        // Minimum nulling-row norm is maximum post-detection SNR.
        std::size_t best = 0;
        double best_norm = std::numeric_limits<double>::infinity();
        for (std::size_t row = 0; row < remaining.size(); ++row)
        {
            double norm = 0.0;
            for (std::size_t c = 0; c < pinv.cols(); ++c)
            {
                norm += std::norm(pinv(row, c));
            }
            if (norm < best_norm)
            {
                best = row;
                best_norm = norm;
            }
        }
        ZfVblastPlan::Step step;
        step.stream = remaining[best];
        step.nulling.resize(pinv.cols());
        for (std::size_t c = 0; c < pinv.cols(); ++c)
        {
            step.nulling[c] = pinv(best, c);
        }
        step.column = h.column(step.stream);
        plan.steps.push_back(std::move(step));
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return plan;
}

// Streams map one-to-one onto the transmit antennas.
inline TxFrame direct_transmit(std::span<Complex const> x)
{
    TxFrame tx;
    tx.power_scale = power_scale_for(x.size());
    tx.x.assign(x.begin(), x.end());
    tx.s = tx.x;
    for (auto& z : tx.s)
    {
        z *= tx.power_scale;
    }
    return tx;
}

inline DetectionResult zf_vblast_detect(std::span<Complex const> y,
                                        ZfVblastPlan const& plan,
                                        Constellation const& c)
{
    detail::require_length(y, plan.receive, "zf_vblast_detect");
    std::size_t const k = plan.streams;
    double const scale = power_scale_for(k);
    unsigned const bps = c.bits_per_symbol();

    ComplexVector residual(y.begin(), y.end());
    DetectionResult out;
    out.x_hat.resize(k);
    out.bits_hat.resize(k * bps);
    out.per_layer_gain.resize(k);
    for (auto const& step : plan.steps)
    {
        Complex acc{};
        double wnorm = 0.0;
        for (std::size_t r = 0; r < residual.size(); ++r)
        {
            acc += step.nulling[r] * residual[r];
            wnorm += std::norm(step.nulling[r]);
        }
        out.x_hat[step.stream] = acc / scale;
        out.per_layer_gain[step.stream] = scale / std::sqrt(wnorm);
        auto const decision = slice(out.x_hat[step.stream], c);
        c.bits_of(decision.label, std::span<Bit>(out.bits_hat)
                                      .subspan(step.stream * bps, bps));
        for (std::size_t r = 0; r < residual.size(); ++r)
        {
            residual[r] -= step.column[r] * (scale * decision.point);
        }
    }
    return out;
}

inline DetectionResult zf_vblast_detect(std::span<Complex const> y,
                                        ComplexMatrix const& h,
                                        Constellation const& c)
{
    return zf_vblast_detect(y, plan_zf_vblast(h), c);
}

}  // namespace iets
