#pragma once

// Deterministic Monte Carlo BER campaigns.
//
// Each channel trial is an independent work unit: it draws its channel (with
// up to kMaxRedraws redraws for rank-deficient draws), decomposes it once, and
// sends symbol_vectors_per_trial frames at every SNR point. Every random draw
// comes from a stream keyed by (master seed, trial, role, attempt) and the
// per-trial error counts are integers, so the reduced curve does not depend on
// how trials are spread over threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "iets/channel.hpp"
#include "iets/error.hpp"
#include "iets/gmd.hpp"
#include "iets/linalg.hpp"
#include "iets/modem.hpp"
#include "iets/transceiver.hpp"

namespace iets
{

inline constexpr std::size_t kMaxAntennas = 64;
inline constexpr std::uint32_t kMaxRedraws = 10;

struct ScenarioConfig
{
    std::size_t tx_antennas = 1;  // N
    std::size_t rx_antennas = 1;  // M
    SchemeKind scheme = SchemeKind::gmd_sic;
    std::string constellation = "qpsk";
    std::vector<double> snr_db_points;
    std::uint64_t channel_trials = 5000;
    std::uint64_t symbol_vectors_per_trial = 100;
    std::uint64_t master_seed = 1;

    std::size_t streams() const
    {
        return std::min(tx_antennas, rx_antennas);
    }

    void validate() const
    {
        auto check_antennas = [](std::size_t n, char const* side) {
            if (n < 1 || n > kMaxAntennas)
            {
                throw ConfigError(std::string(side) + " antenna count " +
                                  std::to_string(n) + " outside [1, " +
                                  std::to_string(kMaxAntennas) + "]");
            }
        };
        check_antennas(tx_antennas, "transmit");
        check_antennas(rx_antennas, "receive");
        if (scheme == SchemeKind::zf_vblast && tx_antennas > rx_antennas)
        {
            throw ConfigError("zf-vblast sends one stream per transmit "
                              "antenna and needs tx <= rx (got tx=" +
                              std::to_string(tx_antennas) +
                              ", rx=" + std::to_string(rx_antennas) + ")");
        }
        Constellation::by_name(constellation);
        if (snr_db_points.empty())
        {
            throw ConfigError("at least one SNR point is required");
        }
        for (std::size_t i = 0; i < snr_db_points.size(); ++i)
        {
            if (!std::isfinite(snr_db_points[i]))
            {
                throw ConfigError("SNR points must be finite");
            }
            if (i > 0 && !(snr_db_points[i] > snr_db_points[i - 1]))
            {
                throw ConfigError("SNR points must be strictly increasing");
            }
        }
        if (channel_trials < 1 || symbol_vectors_per_trial < 1)
        {
            throw ConfigError("trial and frame counts must be at least 1");
        }
    }

    friend bool operator==(ScenarioConfig const&,
                           ScenarioConfig const&) = default;
};

struct BerPoint
{
    double snr_db = 0.0;
    std::uint64_t bits_total = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<std::uint64_t> layer_errors;

    friend bool operator==(BerPoint const&, BerPoint const&) = default;
};

struct BerCurve
{
    std::vector<BerPoint> points;
    std::uint64_t redraws = 0;  // rank-deficient channel draws replaced

    friend bool operator==(BerCurve const&, BerCurve const&) = default;
};

struct Interval
{
    double low;
    double high;
};

// 95% Wilson score interval for errors out of total.
inline Interval binomial_ci(std::uint64_t errors, std::uint64_t total)
{
    if (total == 0 || errors > total)
    {
        throw ConfigError("binomial_ci needs 0 <= errors <= total, total >= 1");
    }
    constexpr double z = 1.959963984540054;
    double const n = static_cast<double>(total);
    double const p = static_cast<double>(errors) / n;
    double const z2n = z * z / n;
    double const denom = 1.0 + z2n;
    double const center = (p + z2n / 2.0) / denom;
    double const half =
        z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / denom;
    Interval ci{std::clamp(center - half, 0.0, 1.0),
                std::clamp(center + half, 0.0, 1.0)};
    if (errors == 0)
    {
        ci.low = 0.0;
    }
    if (errors == total)
    {
        ci.high = 1.0;
    }
    ci.low = std::min(ci.low, p);
    ci.high = std::max(ci.high, p);
    return ci;
}

struct RunOptions
{
    unsigned threads = 1;
};

namespace detail
{

// Per-channel transmit/detect state, prepared once per trial.
class Link
{
public:
    // Throws RankDeficientError for a rank-deficient channel.
    Link(SchemeKind scheme, ComplexMatrix h) : scheme_(scheme), h_(std::move(h))
    {
        auto s = svd(h_);
        for (std::size_t i = 0; i < s.sigma.size(); ++i)
        {
            if (!(s.sigma[i] > kGmdRankThreshold * s.sigma.front()))
            {
                throw RankDeficientError("rank-deficient channel draw", i);
            }
        }
        switch (scheme_)
        {
        case SchemeKind::gmd_sic: gmd_ = gmd(s); break;
        case SchemeKind::svd_eigenmode: svd_ = std::move(s); break;
        case SchemeKind::zf_vblast: zf_ = plan_zf_vblast(h_); break;
        }
    }

    std::size_t streams() const { return std::min(h_.rows(), h_.cols()); }
    ComplexMatrix const& channel() const { return h_; }

    TxFrame transmit(std::span<Complex const> x) const
    {
        switch (scheme_)
        {
        case SchemeKind::gmd_sic: return gmd_transmit(x, *gmd_);
        case SchemeKind::svd_eigenmode: return svd_transmit(x, *svd_);
        case SchemeKind::zf_vblast: break;
        }
        return direct_transmit(x);
    }

    DetectionResult detect(std::span<Complex const> y,
                           Constellation const& c) const
    {
        switch (scheme_)
        {
        case SchemeKind::gmd_sic: return gmd_sic_detect(y, *gmd_, c);
        case SchemeKind::svd_eigenmode: return svd_detect(y, *svd_, c);
        case SchemeKind::zf_vblast: break;
        }
        return zf_vblast_detect(y, *zf_, c);
    }

private:
    SchemeKind scheme_;
    ComplexMatrix h_;
    std::optional<GmdResult> gmd_;
    std::optional<SvdResult> svd_;
    std::optional<ZfVblastPlan> zf_;
};

struct TrialCounts
{
    // errors[point * streams + layer]
    std::vector<std::uint64_t> errors;
    std::uint64_t redraws = 0;
};

inline Link prepare_link(ScenarioConfig const& cfg, std::uint64_t trial,
                         std::uint64_t& redraws)
{
    for (std::uint32_t attempt = 0;; ++attempt)
    {
        RandomStream stream(cfg.master_seed, trial, StreamRole::channel,
                            attempt);
        auto draw = draw_channel(cfg.rx_antennas, cfg.tx_antennas, stream,
                                 trial);
        try
        {
            return Link(cfg.scheme, std::move(draw.h));
        }
        catch (RankDeficientError const&)
        {
            if (attempt >= kMaxRedraws)
            {
                throw;
            }
            ++redraws;
        }
    }
}

inline void run_trial(ScenarioConfig const& cfg, Constellation const& c,
                      std::uint64_t trial, TrialCounts& counts)
{
    Link const link = prepare_link(cfg, trial, counts.redraws);
    std::size_t const k = link.streams();
    unsigned const bps = c.bits_per_symbol();
    RandomStream noise(cfg.master_seed, trial, StreamRole::noise);
    RandomStream bit_source(cfg.master_seed, trial, StreamRole::bits);

    BitVector bits(k * bps);
    for (std::size_t point = 0; point < cfg.snr_db_points.size(); ++point)
    {
        auto const spec = NoiseSpec::from_snr_db(cfg.snr_db_points[point]);
        std::uint64_t* layer_errors = counts.errors.data() + point * k;
        for (std::uint64_t frame = 0; frame < cfg.symbol_vectors_per_trial;
             ++frame)
        {
            std::uint64_t word = 0;
            for (std::size_t b = 0; b < bits.size(); ++b)
            {
                if (b % 64 == 0)
                {
                    word = bit_source.next_u64();
                }
                bits[b] = static_cast<Bit>((word >> (b % 64)) & 1u);
            }
            auto const x = modulate(bits, c);
            auto const tx = link.transmit(x);
            auto y = matvec<Complex>(link.channel(), tx.s);
            add_noise_in_place(y, spec, noise);
            auto const det = link.detect(y, c);
            for (std::size_t b = 0; b < bits.size(); ++b)
            {
                layer_errors[b / bps] += det.bits_hat[b] != bits[b];
            }
        }
    }
}

}  // namespace detail

inline BerCurve run_scenario(ScenarioConfig const& cfg,
                             RunOptions const& options = {})
{
    cfg.validate();
    Constellation const& c = Constellation::by_name(cfg.constellation);
    std::size_t const k = cfg.streams();
    std::size_t const slots = cfg.snr_db_points.size() * k;

    unsigned const threads = std::max(
        1u, static_cast<unsigned>(std::min<std::uint64_t>(
                options.threads, cfg.channel_trials)));
    std::vector<detail::TrialCounts> partial(threads);
    for (auto& p : partial)
    {
        p.errors.assign(slots, 0);
    }

    std::atomic<std::uint64_t> next{0};
    std::mutex failure_mutex;
    std::uint64_t failed_trial = std::numeric_limits<std::uint64_t>::max();
    std::exception_ptr failure;

    auto worker = [&](detail::TrialCounts& counts) {
        for (;;)
        {
            std::uint64_t const trial = next.fetch_add(1);
            if (trial >= cfg.channel_trials)
            {
                return;
            }
            try
            {
                detail::run_trial(cfg, c, trial, counts);
            }
            catch (...)
            {
                // Report the lowest failing trial regardless of scheduling.
                std::lock_guard lock(failure_mutex);
                if (trial < failed_trial)
                {
                    failed_trial = trial;
                    failure = std::current_exception();
                }
            }
        }
    };

    if (threads == 1)
    {
        worker(partial[0]);
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
        {
            pool.emplace_back(worker, std::ref(partial[t]));
        }
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }

    BerCurve curve;
    std::uint64_t const bits_per_point = cfg.channel_trials *
                                         cfg.symbol_vectors_per_trial * k *
                                         c.bits_per_symbol();
    for (std::size_t point = 0; point < cfg.snr_db_points.size(); ++point)
    {
        BerPoint bp;
        bp.snr_db = cfg.snr_db_points[point];
        bp.bits_total = bits_per_point;
        bp.layer_errors.assign(k, 0);
        for (auto const& p : partial)
        {
            for (std::size_t layer = 0; layer < k; ++layer)
            {
                bp.layer_errors[layer] += p.errors[point * k + layer];
            }
        }
        for (auto e : bp.layer_errors)
        {
            bp.bit_errors += e;
        }
        bp.ber = static_cast<double>(bp.bit_errors) /
                 static_cast<double>(bp.bits_total);
        auto const ci = binomial_ci(bp.bit_errors, bp.bits_total);
        bp.ci_low = ci.low;
        bp.ci_high = ci.high;
        curve.points.push_back(std::move(bp));
    }
    for (auto const& p : partial)
    {
        curve.redraws += p.redraws;
    }
    return curve;
}

// Binomial standard error of a BER estimate.
inline double standard_error(BerPoint const& p)
{
    return std::sqrt(p.ber * (1.0 - p.ber) /
                     static_cast<double>(p.bits_total));
}

}  // namespace iets
