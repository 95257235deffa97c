#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace iets
{

// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
    DimensionError(std::string const& what, std::size_t lhs_rows,
                   std::size_t lhs_cols, std::size_t rhs_rows,
                   std::size_t rhs_cols)
        : Error(format(what, lhs_rows, lhs_cols, rhs_rows, rhs_cols))
    {
    }

    explicit DimensionError(std::string const& what) : Error(what) {}

private:
    static std::string format(std::string const& what, std::size_t lr,
                              std::size_t lc, std::size_t rr, std::size_t rc)
    {
        std::ostringstream msg;
        msg << what << ": shapes " << lr << "x" << lc << " and " << rr << "x"
            << rc << " are incompatible";
        return msg.str();
    }
};

class NonFiniteError : public Error
{
public:
    using Error::Error;
};

class ConvergenceError : public Error
{
public:
    ConvergenceError(int sweeps, double residual)
        : Error(format(sweeps, residual)), sweeps_(sweeps), residual_(residual)
    {
    }

    int sweeps() const noexcept { return sweeps_; }
    double residual() const noexcept { return residual_; }

private:
    static std::string format(int sweeps, double residual)
    {
        std::ostringstream msg;
        msg << "Jacobi SVD did not converge within " << sweeps
            << " sweeps (max relative off-diagonal Gram term " << residual
            << ")";
        return msg.str();
    }

    int sweeps_;
    double residual_;
};

// A singular value (or a triangular diagonal entry) is too small to use.
class RankDeficientError : public Error
{
public:
    RankDeficientError(std::string const& what, std::size_t index)
        : Error(what + " (index " + std::to_string(index) + ")"),
          index_(index)
    {
    }

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class OrderingError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    IoError(std::string const& what, std::string path)
        : Error(what + ": " + path), path_(std::move(path))
    {
    }

    std::string const& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace iets
