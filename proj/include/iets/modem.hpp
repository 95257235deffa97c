#pragma once

// Gray-mapped square constellations (QPSK, QAM-16) with unit average energy.
//
// A label is the integer formed by a symbol's bits, first bit most
// significant. The high half of the label selects the in-phase level and the
// low half the quadrature level, each through a per-axis Gray table:
//
//   QPSK   axis: 0 -> +1, 1 -> -1,                    scale 1/sqrt(2)
//   QAM-16 axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, scale 1/sqrt(10)

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iets/error.hpp"
#include "iets/linalg.hpp"

namespace iets
{

using Bit = std::uint8_t;
using BitVector = std::vector<Bit>;

struct AxisLevel
{
    double amplitude;  // integer-valued PAM level before scaling
    unsigned label;
};

class Constellation
{
public:
    Constellation(std::string name, unsigned bits_per_axis,
                  std::vector<AxisLevel> axis, double scale)
        : name_(std::move(name)),
          bits_per_axis_(bits_per_axis),
          axis_(std::move(axis)),
          scale_(scale)
    {
        unsigned const per_axis = 1u << bits_per_axis_;
        coords_.resize(per_axis);
        for (auto const& level : axis_)
        {
            coords_[level.label] = level.amplitude * scale_;
        }
        points_.resize(std::size_t{1} << bits_per_symbol());
        for (unsigned label = 0; label < points_.size(); ++label)
        {
            points_[label] = Complex(coords_[label >> bits_per_axis_],
                                     coords_[label & (per_axis - 1)]);
        }
    }

    static Constellation const& qpsk()
    {
        static Constellation const c(
            "qpsk", 1, {{+1.0, 0b0}, {-1.0, 0b1}}, 1.0 / std::sqrt(2.0));
        return c;
    }

    static Constellation const& qam16()
    {
        static Constellation const c(
            "qam16", 2,
            {{-3.0, 0b00}, {-1.0, 0b01}, {+1.0, 0b11}, {+3.0, 0b10}},
            1.0 / std::sqrt(10.0));
        return c;
    }

    static Constellation const& by_name(std::string_view name)
    {
        if (name == "qpsk")
        {
            return qpsk();
        }
        if (name == "qam16")
        {
            return qam16();
        }
        throw ConfigError("unknown constellation '" + std::string(name) +
                          "' (expected qpsk or qam16)");
    }

    // Same labelling with every point multiplied by factor.
    Constellation scaled(double factor) const
    {
        return Constellation(name_, bits_per_axis_, axis_, scale_ * factor);
    }

    std::string const& name() const noexcept { return name_; }
    unsigned bits_per_symbol() const noexcept { return 2 * bits_per_axis_; }
    std::size_t size() const noexcept { return points_.size(); }
    double scale() const noexcept { return scale_; }
    std::span<AxisLevel const> axis() const noexcept { return axis_; }

    // Indexed by label.
    std::span<Complex const> points() const noexcept { return points_; }
    Complex point(unsigned label) const { return points_.at(label); }

    unsigned label_of(std::span<Bit const> bits) const
    {
        unsigned label = 0;
        for (Bit b : bits)
        {
            if (b > 1)
            {
                throw ConfigError("bit value " + std::to_string(b) +
                                  " is not 0 or 1");
            }
            label = (label << 1) | b;
        }
        return label;
    }

    void bits_of(unsigned label, std::span<Bit> out) const
    {
        unsigned const n = bits_per_symbol();
        for (unsigned i = 0; i < n; ++i)
        {
            out[i] = static_cast<Bit>((label >> (n - 1 - i)) & 1u);
        }
    }

    // Nearest axis label to coordinate x; ties go to the lower label.
    unsigned slice_axis(double x) const
    {
        unsigned best = 0;
        double best_dist = std::abs(x - coords_[0]);
        for (unsigned label = 1; label < coords_.size(); ++label)
        {
            double const d = std::abs(x - coords_[label]);
            if (d < best_dist)
            {
                best = label;
                best_dist = d;
            }
        }
        return best;
    }

    unsigned bits_per_axis() const noexcept { return bits_per_axis_; }

private:
    std::string name_;
    unsigned bits_per_axis_;
    std::vector<AxisLevel> axis_;
    double scale_;
    std::vector<double> coords_;  // indexed by axis label
    std::vector<Complex> points_;
};

struct SliceResult
{
    Complex point;
    unsigned label;
};

inline ComplexVector modulate(std::span<Bit const> bits, Constellation const& c)
{
    unsigned const bps = c.bits_per_symbol();
    if (bits.size() % bps != 0)
    {
        throw DimensionError("bit sequence of length " +
                             std::to_string(bits.size()) +
                             " is not a multiple of " + std::to_string(bps) +
                             " bits per symbol");
    }
    ComplexVector out(bits.size() / bps);
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        out[i] = c.point(c.label_of(bits.subspan(i * bps, bps)));
    }
    return out;
}

// Minimum-distance decision; ties go to the lowest label.
inline SliceResult slice(Complex y, Constellation const& c)
{
    if (!detail::is_finite(y))
    {
        throw NonFiniteError("cannot slice a non-finite sample");
    }
    unsigned const label = (c.slice_axis(y.real()) << c.bits_per_axis()) |
                           c.slice_axis(y.imag());
    return {c.point(label), label};
}

inline double average_energy(Constellation const& c)
{
    double sum = 0.0;
    for (auto const& p : c.points())
    {
        sum += std::norm(p);
    }
    return sum / static_cast<double>(c.size());
}

}  // namespace iets
