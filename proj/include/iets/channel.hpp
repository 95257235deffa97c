#pragma once

// Rayleigh flat-fading channel draws and complex AWGN under a seeding
// contract that makes every draw a pure function of
// (master seed, trial, role, attempt).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "iets/error.hpp"
#include "iets/linalg.hpp"

namespace iets
{

enum class StreamRole : std::uint32_t
{
    channel = 1,
    noise = 2,
    bits = 3,
};

// One independent random stream. Not shared between threads.
//
// The engine state is seeded from std::seed_seq over the 32-bit words
// (seed lo, seed hi, trial lo, trial hi, role, attempt), so distinct
// (trial, role, attempt) identifiers give distinct streams.
class RandomStream
{
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t trial,
                 StreamRole role, std::uint32_t attempt = 0)
    {
        auto lo = [](std::uint64_t v) {
            return static_cast<std::uint32_t>(v & 0xffffffffu);
        };
        auto hi = [](std::uint64_t v) {
            return static_cast<std::uint32_t>(v >> 32);
        };
        std::seed_seq seq{lo(master_seed), hi(master_seed),
                          lo(trial),       hi(trial),
                          static_cast<std::uint32_t>(role), attempt};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    double standard_normal() { return normal_(engine_); }

    // CN(0, variance): real and imaginary parts each N(0, variance / 2).
    Complex complex_gaussian(double variance)
    {
        double const sd = std::sqrt(variance / 2.0);
        double const re = normal_(engine_);
        double const im = normal_(engine_);
        return {sd * re, sd * im};
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

struct ChannelRealization
{
    ComplexMatrix h;  // M x N
    std::uint64_t trial_index = 0;
};

// M x N matrix of i.i.d. CN(0, 1) fading coefficients.
inline ChannelRealization draw_channel(std::size_t m, std::size_t n,
                                       RandomStream& stream,
                                       std::uint64_t trial_index = 0)
{
    if (m == 0 || n == 0)
    {
        throw DimensionError("channel needs at least one antenna per side");
    }
    ChannelRealization out{ComplexMatrix(m, n), trial_index};
    for (auto& z : out.h.data())
    {
        z = stream.complex_gaussian(1.0);
    }
    return out;
}

// Noise variance per receive antenna for unit total transmit power.
inline double snr_to_n0(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

struct NoiseSpec
{
    double n0 = 1.0;
    double snr_db = 0.0;

    static NoiseSpec from_snr_db(double snr_db)
    {
        return {snr_to_n0(snr_db), snr_db};
    }
};

inline void add_noise_in_place(std::span<Complex> y, NoiseSpec const& spec,
                               RandomStream& stream)
{
    if (!(spec.n0 > 0.0) || !std::isfinite(spec.n0))
    {
        throw ConfigError("noise variance must be positive and finite");
    }
    for (auto& z : y)
    {
        z += stream.complex_gaussian(spec.n0);
    }
}

inline ComplexVector add_noise(std::span<Complex const> y,
                               NoiseSpec const& spec, RandomStream& stream)
{
    for (auto const& z : y)
    {
        if (!detail::is_finite(z))
        {
            throw NonFiniteError("received vector contains a non-finite entry");
        }
    }
    ComplexVector out(y.begin(), y.end());
    add_noise_in_place(out, spec, stream);
    return out;
}

}  // namespace iets
