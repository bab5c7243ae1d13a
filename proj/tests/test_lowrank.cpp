#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "fsht/lowrank.hpp"

using namespace fsht;

namespace {

Matrix gaussian(Index m, Index n, std::uint64_t seed)
{
    std::mt19937_64                   gen(seed);
    std::normal_distribution<double>  dist;
    Matrix                            out(m, n);

    for ( Index j = 0; j < n; ++j )
        for ( Index i = 0; i < m; ++i )
            out(i, j) = dist(gen);

    return out;
}

Matrix orthonormal(Index m, Index n, std::uint64_t seed)
{
    Eigen::HouseholderQR<Matrix>  qr(gaussian(m, n, seed));

    return qr.householderQ() * Matrix::Identity(m, n);
}

double spectral_norm(const Matrix & A)
{
    if ( A.size() == 0 )
        return 0.0;

    Eigen::JacobiSVD<Matrix>  svd(A);

    return svd.singularValues()(0);
}

// A = U diag(s) V^T with s_i = 10^(-decay * i)
Matrix planted(Index n, double decay, std::uint64_t seed)
{
    const Matrix  U = orthonormal(n, n, seed);
    const Matrix  V = orthonormal(n, n, seed + 1);
    Vector        s(n);

    for ( Index i = 0; i < n; ++i )
        s(i) = std::pow(10.0, -decay * static_cast<double>(i));

    return U * s.asDiagonal() * V.transpose();
}

Matrix column_reconstruction(const Matrix & A, const InterpDecomp & id)
{
    Matrix  C(A.rows(), id.rank());

    for ( Index i = 0; i < id.rank(); ++i )
        C.col(i) = A.col(id.skeleton[i]);

    return C * id.interp;
}

Matrix row_reconstruction(const Matrix & A, const InterpDecomp & id)
{
    Matrix  R(id.rank(), A.cols());

    for ( Index i = 0; i < id.rank(); ++i )
        R.row(i) = A.row(id.skeleton[i]);

    return id.interp * R;
}

} // namespace

TEST_CASE("sample_indices")
{
    Rng  rng(7);

    for ( auto mode : { SamplingMode::mock_chebyshev, SamplingMode::random } )
    {
        auto  s = sample_indices(5, 5, mode, rng);

        std::sort(s.begin(), s.end());
        CHECK(s == IndexList{ 0, 1, 2, 3, 4 });
    }

    CHECK(sample_indices(3, 100, SamplingMode::mock_chebyshev, rng) == IndexList{ 7, 50, 92 });

    Rng   a(42);
    Rng   b(42);
    auto  ra = sample_indices(10, 1000, SamplingMode::random, a);
    auto  rb = sample_indices(10, 1000, SamplingMode::random, b);

    CHECK(ra == rb);
    CHECK(std::set<Index>(ra.begin(), ra.end()).size() == 10);
    for ( Index i : ra )
        CHECK((i >= 0 && i < 1000));

    // dense Chebyshev sampling collides after rounding and must still be distinct
    const auto  dense = sample_indices(60, 64, SamplingMode::mock_chebyshev, rng);

    CHECK(std::set<Index>(dense.begin(), dense.end()).size() == 60);

    CHECK_THROWS_AS(sample_indices(0, 10, SamplingMode::random, rng), std::invalid_argument);
}

TEST_CASE("rng streams")
{
    Rng  root(3);
    Rng  s1 = root.derive(1);
    Rng  s1b = root.derive(1);
    Rng  s2 = root.derive(2);

    CHECK(s1.engine()() == s1b.engine()());
    CHECK(s1.engine()() != s2.engine()());
}

TEST_CASE("pivoted_qr")
{
    SUBCASE("identity")
    {
        const auto  qr = pivoted_qr(Matrix::Identity(3, 3));

        CHECK(qr.rank == 3);
        for ( Index i = 0; i < 3; ++i )
            CHECK(std::abs(qr.R(i, i)) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK((qr.R - Matrix(qr.R.diagonal().asDiagonal())).norm() == 0.0);
    }

    SUBCASE("norm-forced pivot order")
    {
        Matrix  M(2, 2);

        M << 2, 0, 0, 1;

        const auto  qr = pivoted_qr(M);

        CHECK(qr.perm[0] == 0);
        CHECK(std::abs(qr.R(0, 0)) == doctest::Approx(2.0));
        CHECK(std::abs(qr.R(1, 1)) == doctest::Approx(1.0));
    }

    SUBCASE("random reconstruction")
    {
        const Matrix  M  = gaussian(20, 10, 11);
        const auto    qr = pivoted_qr(M);
        Matrix        P(20, 10);

        for ( Index j = 0; j < 10; ++j )
            P.col(j) = M.col(qr.perm[j]);

        CHECK((P - qr.Q * qr.R).norm() / M.norm() <= 1e-12);
        CHECK((qr.Q.transpose() * qr.Q - Matrix::Identity(10, 10)).norm() <= 1e-13);

        for ( Index i = 1; i < 10; ++i )
            CHECK(std::abs(qr.R(i, i)) <= std::abs(qr.R(i - 1, i - 1)) * (1.0 + 1e-12));
        for ( Index j = 0; j < 10; ++j )
            for ( Index i = j + 1; i < 10; ++i )
                CHECK(qr.R(i, j) == 0.0);
    }

    SUBCASE("wide matrix is upper trapezoidal")
    {
        const Matrix  M  = gaussian(6, 15, 12);
        const auto    qr = pivoted_qr(M);
        Matrix        P(6, 15);

        for ( Index j = 0; j < 15; ++j )
            P.col(j) = M.col(qr.perm[j]);

        CHECK(qr.R.rows() == 6);
        CHECK((P - qr.Q * qr.R).norm() / M.norm() <= 1e-12);
    }

    SUBCASE("truncation by tolerance")
    {
        const Matrix  M  = gaussian(30, 3, 13) * gaussian(3, 25, 14);
        QrOptions     opts;

        opts.rel_tol = 1e-10;

        const auto  qr = pivoted_qr(M, opts);

        CHECK(qr.rank == 3);
        CHECK(qr.residual_ratio <= 1e-10);
    }
}

TEST_CASE("cid and rid on exact structures")
{
    SamplingConfig  cfg;
    Rng             rng(1);

    SUBCASE("rank one")
    {
        const Vector        a = gaussian(40, 1, 21).col(0);
        const Vector        b = gaussian(30, 1, 22).col(0);
        const MatrixOracle  A(a * b.transpose());

        const auto  c = cid(A, cfg, rng);
        const auto  r = rid(A, cfg, rng);

        CHECK(c.rank() == 1);
        CHECK(r.rank() == 1);
        CHECK((A.matrix() - column_reconstruction(A.matrix(), c)).norm() / A.matrix().norm() <= 1e-12);
        CHECK((A.matrix() - row_reconstruction(A.matrix(), r)).norm() / A.matrix().norm() <= 1e-12);
        CHECK(c.interp.cols() == 30);
        CHECK(r.interp.rows() == 40);
    }

    SUBCASE("identity")
    {
        cfg.adaptive_rank = 8;

        const MatrixOracle  I(Matrix::Identity(8, 8));
        const auto          c = cid(I, cfg, rng);
        const auto          r = rid(I, cfg, rng);

        CHECK(c.rank() == 8);
        CHECK(r.rank() == 8);

        // interp is a permutation of I
        CHECK((c.interp * c.interp.transpose() - Matrix::Identity(8, 8)).norm() == 0.0);
        CHECK((r.interp.transpose() * r.interp - Matrix::Identity(8, 8)).norm() == 0.0);
        CHECK(c.interp.cwiseAbs().sum() == 8.0);
    }

    SUBCASE("zero matrix has rank zero")
    {
        const MatrixOracle  Z(Matrix::Zero(10, 12));
        const auto          c = cid(Z, cfg, rng);

        CHECK(c.rank() == 0);
        CHECK(c.converged);
    }

    SUBCASE("empty oracle")
    {
        const MatrixOracle  E(Matrix(0, 5));

        CHECK_THROWS_AS(cid(E, cfg, rng), std::invalid_argument);
    }
}

TEST_CASE("skeleton identity holds exactly")
{
    SamplingConfig  cfg;
    Rng             rng(5);
    const Matrix    A = planted(60, 0.5, 31);
    const auto      c = cid(MatrixOracle(A), cfg, rng);

    for ( Index i = 0; i < c.rank(); ++i )
        for ( Index r = 0; r < c.rank(); ++r )
            CHECK(c.interp(r, c.skeleton[i]) == (r == i ? 1.0 : 0.0));
}

TEST_CASE("smooth kernel ID against dense oracle")
{
    const Index         n = 256;
    const FunctionOracle  K(n, n, [](Index i, Index j) {
        const double  d = static_cast<double>(i - j) / 256.0;

        return 1.0 / (1.0 + d * d);
    });
    const Matrix        A = K.dense();
    SamplingConfig      cfg;
    Rng                 rng(9);

    const auto  c = cid(K, cfg, rng);
    const auto  r = rid(K, cfg, rng);

    CHECK(c.converged);
    CHECK(spectral_norm(A - column_reconstruction(A, c)) / spectral_norm(A) <= 10 * cfg.tolerance);
    CHECK(spectral_norm(A - row_reconstruction(A, r)) / spectral_norm(A) <= 10 * cfg.tolerance);
}

TEST_CASE("planted spectrum rank window")
{
    SamplingConfig  cfg;

    cfg.adaptive_rank = 40;

    for ( std::uint64_t seed : { 1u, 2u, 3u } )
    {
        const Matrix  A = planted(128, 0.25, 100 + seed);
        Rng           rng(seed);
        const auto    c = cid(MatrixOracle(A), cfg, rng);

        // singular values 10^(-i/4): numerical rank at 1e-10 is 41
        const Index  k_eps = 41;

        CHECK(c.rank() >= k_eps - 1);
        CHECK(c.rank() <= cfg.oversampling * cfg.adaptive_rank);
        CHECK(spectral_norm(A - column_reconstruction(A, c)) / spectral_norm(A) <= 10 * cfg.tolerance);
    }
}

TEST_CASE("rank cap retries and reports")
{
    SamplingConfig  cfg;

    cfg.adaptive_rank = 2;
    cfg.oversampling  = 1;

    Rng  rng(4);

    // rank 40 with a cap that starts at 2: doublings reach 32 and stop short
    const Matrix  A = gaussian(100, 40, 41) * gaussian(40, 100, 42);
    const auto    c = cid(MatrixOracle(A), cfg, rng);

    CHECK_FALSE(c.converged);

    cfg.adaptive_rank = 3;   // 3 * 16 = 48 >= 40 after four doublings
    const auto  d = cid(MatrixOracle(A), cfg, rng);

    CHECK(d.converged);
    CHECK(d.rank() == 40);
}

TEST_CASE("rank above r_k triggers a retry")
{
    SamplingConfig  cfg;

    cfg.adaptive_rank = 30;   // samples 60 rows, true rank 40
    cfg.oversampling  = 2;

    Rng           rng(9);
    const Matrix  A = gaussian(200, 40, 51) * gaussian(40, 200, 52);
    const auto    c = cid(MatrixOracle(A), cfg, rng);

    CHECK(c.converged);
    CHECK(c.rank() == 40);
    CHECK(spectral_norm(A - column_reconstruction(A, c)) / spectral_norm(A) <= 1e-9);
}

TEST_CASE("determinism")
{
    SamplingConfig  cfg;

    cfg.mode = SamplingMode::random;

    const Matrix  A = planted(90, 0.3, 77);
    Rng           r1(12);
    Rng           r2(12);
    const auto    a = cid(MatrixOracle(A), cfg, r1);
    const auto    b = cid(MatrixOracle(A), cfg, r2);

    CHECK(a.skeleton == b.skeleton);
    CHECK(a.interp == b.interp);

    Rng         r3(8);
    Rng         r4(8);
    const auto  f = rsvd(MatrixOracle(A), cfg, r3);
    const auto  g = rsvd(MatrixOracle(A), cfg, r4);

    CHECK(f.U == g.U);
    CHECK(f.sigma == g.sigma);
    CHECK(f.V == g.V);
}

TEST_CASE("rsvd")
{
    SUBCASE("dominant triple")
    {
        const Index  n = 50;
        Matrix       D = Matrix::Zero(n, n);

        D(0, 0) = 1.0;
        for ( Index i = 1; i < n; ++i )
            D(i, i) = 1e-12;

        // Algorithm 1 only sees the dominant entry if it is sampled, so the
        // sample sets cover every index here
        const IndexList  all = iota_indices(0, n);
        Rng              rng(2);
        const auto       f = rsvd(MatrixOracle(D), all, all, 1, rng);

        REQUIRE(f.rank() == 1);
        CHECK(std::abs(f.sigma(0) - 1.0) <= 1e-10);
        CHECK(std::abs(std::abs(f.U(0, 0)) - 1.0) <= 1e-10);
        CHECK(std::abs(std::abs(f.V(0, 0)) - 1.0) <= 1e-10);
    }

    SUBCASE("exact rank five")
    {
        const Matrix  A = gaussian(200, 5, 51) * gaussian(300, 5, 52).transpose();
        int           good = 0;

        for ( std::uint64_t seed = 0; seed < 20; ++seed )
        {
            SamplingConfig  cfg;

            cfg.rsvd_rank = 5;

            Rng         rng(seed);
            const auto  f   = rsvd(MatrixOracle(A), cfg, rng);
            const double  err = (A - f.U * f.sigma.asDiagonal() * f.V.transpose()).norm() / A.norm();

            good += err <= 1e-9;

            CHECK((f.U.transpose() * f.U - Matrix::Identity(5, 5)).norm() <= 1e-12);
            CHECK((f.V.transpose() * f.V - Matrix::Identity(5, 5)).norm() <= 1e-12);
            for ( Index i = 1; i < 5; ++i )
                CHECK(f.sigma(i) <= f.sigma(i - 1));
        }

        CHECK(good >= 19);
    }

    SUBCASE("zero matrix")
    {
        SamplingConfig  cfg;

        cfg.rsvd_rank = 1;

        Rng         rng(1);
        const auto  f = rsvd(MatrixOracle(Matrix::Zero(20, 20)), cfg, rng);

        REQUIRE(f.rank() == 1);
        CHECK(f.sigma(0) == 0.0);
    }

    SUBCASE("sample count precondition")
    {
        const MatrixOracle  A(gaussian(20, 20, 3));
        Rng                 rng(1);
        const IndexList     few{ 0, 1 };

        CHECK_THROWS_AS(rsvd(A, few, few, 5, rng), std::invalid_argument);
    }
}

TEST_CASE("low-rank factor apply")
{
    const Matrix  A = gaussian(30, 4, 61) * gaussian(4, 20, 62);
    SamplingConfig  cfg;

    cfg.rsvd_rank = 4;

    Rng           rng(3);
    const auto    f = rsvd(MatrixOracle(A), cfg, rng);
    const Matrix  x = gaussian(20, 2, 63);
    const Matrix  y = gaussian(30, 2, 64);
    Matrix        ax = Matrix::Zero(30, 2);
    Matrix        aty = Matrix::Zero(20, 2);

    f.apply_add(x, ax);
    f.apply_transpose_add(y, aty);

    CHECK((ax - A * x).norm() <= 1e-10 * (A * x).norm());
    CHECK((aty - A.transpose() * y).norm() <= 1e-10 * (A.transpose() * y).norm());
}

TEST_CASE("sampling config validation")
{
    SamplingConfig  cfg;

    CHECK_NOTHROW(cfg.validate());

    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = {};
    cfg.rsvd_oversampling = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = {};
    cfg.oversampling = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
