#pragma once

// Shared helpers for the unit tests: random inputs and implementation-
// independent reference computations.

#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "iets/linalg.hpp"

namespace iets::test
{

inline ComplexMatrix random_matrix(std::size_t m, std::size_t n,
                                   std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    ComplexMatrix a(m, n);
    for (auto& z : a.data())
    {
        double const re = normal(rng);
        double const im = normal(rng);
        z = {re, im};
    }
    return a;
}

inline ComplexMatrix random_unitary(std::size_t n, std::mt19937_64& rng)
{
    // Q factor of a complex Gaussian matrix via Eigen's Householder QR.
    auto const a = random_matrix(n, n, rng);
    Eigen::MatrixXcd e(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            e(i, j) = a(i, j);
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(e)
                             .householderQ() *
                         Eigen::MatrixXcd::Identity(n, n);
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = q(i, j);
    return out;
}

// Textbook triple loop, kept separate from the library kernel.
inline ComplexMatrix naive_product(ComplexMatrix const& a,
                                   ComplexMatrix const& b)
{
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
        {
            Complex acc{};
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

inline Eigen::MatrixXcd to_eigen(ComplexMatrix const& a)
{
    Eigen::MatrixXcd e(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            e(i, j) = a(i, j);
    return e;
}

// Singular values from Eigen's two-sided Jacobi SVD, descending.
inline std::vector<double> reference_singular_values(ComplexMatrix const& a)
{
    Eigen::JacobiSVD<Eigen::MatrixXcd> solver(to_eigen(a));
    auto const sv = solver.singularValues();
    return std::vector<double>(sv.data(), sv.data() + sv.size());
}

inline ComplexMatrix reconstruct(SvdResult const& s)
{
    ComplexMatrix us = s.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j)
            us(i, j) *= s.sigma[j];
    return naive_product(us, hermitian(s.v));
}

}  // namespace iets::test
