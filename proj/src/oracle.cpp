#include "fsht/oracle.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fsht {

DenseAltMatrix dense_alt_build(const AltMatrixSpec & spec, bool allow_large)
{
    if ( spec.N > dense_alt_max_N && !allow_large )
        throw std::length_error("dense_alt_build: N = " + std::to_string(spec.N) + " exceeds the dense guard of "
                                + std::to_string(dense_alt_max_N));

    const auto      t0 = std::chrono::steady_clock::now();
    DenseAltMatrix  out;

    out.spec = spec;
    out.data.resize(spec.N, spec.num_cols);

    if ( spec.num_cols > 0 )
    {
        const int  top = spec.degree(spec.num_cols - 1);

        for ( Index i = 0; i < spec.N; ++i )
        {
            const auto  col = legendre_normalized_column(spec.m, top, spec.x(i));

            for ( Index j = 0; j < spec.num_cols; ++j )
                out.data(i, j) = col[static_cast<std::size_t>(spec.degree(j) - spec.m)];
        }
    }

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    return out;
}

Vector dense_matvec(const Matrix & A, const Vector & v)
{
    if ( v.size() != A.cols() )
        throw std::invalid_argument("dense_matvec: dimension mismatch");

    Vector  y(A.rows());

    for ( Index i = 0; i < A.rows(); ++i )
    {
        double  s = 0.0;

        for ( Index j = 0; j < A.cols(); ++j )
            s += A(i, j) * v(j);

        y(i) = s;
    }

    return y;
}

Vector dense_matvec_transpose(const Matrix & A, const Vector & v)
{
    if ( v.size() != A.rows() )
        throw std::invalid_argument("dense_matvec_transpose: dimension mismatch");

    Vector  y(A.cols());

    for ( Index j = 0; j < A.cols(); ++j )
    {
        double  s = 0.0;

        for ( Index i = 0; i < A.rows(); ++i )
            s += A(i, j) * v(i);

        y(j) = s;
    }

    return y;
}

Matrix dense_alt_full(int N, int m, bool allow_large)
{
    if ( N < 1 || m < 0 || m > 2 * N - 1 )
        throw std::invalid_argument("dense_alt_full: need N >= 1 and 0 <= m <= 2N - 1");
    if ( N > dense_alt_max_N && !allow_large )
        throw std::length_error("dense_alt_full: N exceeds the dense guard");

    const auto  rule = gauss_legendre(2 * static_cast<std::size_t>(N));
    Matrix      A(2 * N, 2 * N - m);

    for ( Index l = 0; l < 2 * N; ++l )
    {
        const auto  col = legendre_normalized_column(m, 2 * N - 1, rule.nodes[static_cast<std::size_t>(l)]);

        for ( Index t = 0; t < A.cols(); ++t )
            A(l, t) = col[static_cast<std::size_t>(t)];
    }

    return A;
}

namespace {

void check_sht_size(int N)
{
    if ( N < 1 || N > dense_sht_max_N )
        throw std::invalid_argument("dense sht: N must lie in [1, " + std::to_string(dense_sht_max_N) + "]");
}

// P[|m|](l, k - |m|)
std::vector<Matrix> legendre_tables(int N, const QuadratureRule & rule)
{
    std::vector<Matrix>  P(static_cast<std::size_t>(2 * N));

    for ( int m = 0; m < 2 * N; ++m )
    {
        auto &  T = P[static_cast<std::size_t>(m)];

        T.resize(2 * N, 2 * N - m);

        for ( Index l = 0; l < 2 * N; ++l )
        {
            const auto  col = legendre_normalized_column(m, 2 * N - 1, rule.nodes[static_cast<std::size_t>(l)]);

            for ( Index t = 0; t < T.cols(); ++t )
                T(l, t) = col[static_cast<std::size_t>(t)];
        }
    }

    return P;
}

} // namespace

ComplexMatrix dense_sht_forward(int N, const CoeffTable & coeffs)
{
    check_sht_size(N);

    const int  M = 4 * N - 1;

    if ( coeffs.size() != static_cast<std::size_t>(M) )
        throw std::invalid_argument("dense_sht_forward: expected 4N - 1 orders");

    const auto  rule = gauss_legendre(2 * static_cast<std::size_t>(N));
    const auto  P    = legendre_tables(N, rule);

    ComplexMatrix  f = ComplexMatrix::Zero(2 * N, M);

    for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
    {
        const auto &  beta = coeffs[static_cast<std::size_t>(m + 2 * N - 1)];
        const auto &  T    = P[static_cast<std::size_t>(std::abs(m))];

        if ( beta.size() != T.cols() )
            throw std::invalid_argument("dense_sht_forward: wrong length for order " + std::to_string(m));

        for ( Index l = 0; l < 2 * N; ++l )
        {
            std::complex<double>  g = 0.0;

            for ( Index t = 0; t < T.cols(); ++t )
                g += beta(t) * T(l, t);

            for ( int j = 0; j < M; ++j )
            {
                const double  phi = 2.0 * std::numbers::pi * (j + 0.5) / M;

                f(l, j) += g * std::polar(1.0, m * phi);
            }
        }
    }

    return f;
}

CoeffTable dense_sht_inverse(int N, const ComplexMatrix & values)
{
    check_sht_size(N);

    const int  M = 4 * N - 1;

    if ( values.rows() != 2 * N || values.cols() != M )
        throw std::invalid_argument("dense_sht_inverse: expected a 2N x (4N - 1) grid");

    const auto  rule = gauss_legendre(2 * static_cast<std::size_t>(N));
    const auto  P    = legendre_tables(N, rule);
    CoeffTable  out(static_cast<std::size_t>(M));

    for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
    {
        const auto &     T    = P[static_cast<std::size_t>(std::abs(m))];
        Eigen::VectorXcd  beta = Eigen::VectorXcd::Zero(T.cols());

        for ( Index l = 0; l < 2 * N; ++l )
        {
            std::complex<double>  g = 0.0;

            for ( int j = 0; j < M; ++j )
            {
                const double  phi = 2.0 * std::numbers::pi * (j + 0.5) / M;

                g += values(l, j) * std::polar(1.0, -m * phi);
            }

            g *= rule.weights[static_cast<std::size_t>(l)] / M;

            for ( Index t = 0; t < T.cols(); ++t )
                beta(t) += g * T(l, t);
        }

        out[static_cast<std::size_t>(m + 2 * N - 1)] = std::move(beta);
    }

    return out;
}

} // namespace fsht
