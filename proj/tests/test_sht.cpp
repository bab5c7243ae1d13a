#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fsht/oracle.hpp"
#include "fsht/sht.hpp"

using namespace fsht;

namespace {

AltParams params_for(int N)
{
    AltParams  p;

    p.n0 = default_n0(N);

    return p;
}

ShtCoeffs from_table(int N, const CoeffTable & t)
{
    ShtCoeffs  c;

    c.N    = N;
    c.beta = t;

    return c;
}

double grid_rel_err(const ComplexMatrix & a, const ComplexMatrix & b)
{
    return (a - b).norm() / b.norm();
}

} // namespace

TEST_CASE("grid")
{
    const auto  g = make_sht_grid(8);

    CHECK(g.thetas.size() == 16);
    CHECK(g.phis.size() == 31);

    for ( std::size_t j = 1; j < g.phis.size(); ++j )
        CHECK(g.phis[j] - g.phis[j - 1] == doctest::Approx(2.0 * M_PI / 31).epsilon(1e-14));

    CHECK(g.phis.front() > 0.0);
    CHECK(g.phis.back() < 2.0 * M_PI);
}

TEST_CASE("plan_sht")
{
    CHECK(plan_sht(4, params_for(4)).alt_plans.size() == 8);

    AltParams  bad = params_for(8);

    bad.sampling.tolerance = -1.0;
    CHECK_THROWS_AS(plan_sht(8, bad), std::invalid_argument);
    CHECK_THROWS_AS(plan_sht(0, params_for(8)), std::invalid_argument);
}

TEST_CASE("fourier stage is exactly invertible and separates modes")
{
    const int   N    = 8;
    const auto  plan = plan_sht(N, params_for(N));
    const int   M    = 4 * N - 1;

    std::mt19937_64                   gen(3);
    std::normal_distribution<double>  dist;
    ComplexMatrix                     modes(2 * N, M);

    for ( Index j = 0; j < M; ++j )
        for ( Index l = 0; l < 2 * N; ++l )
            modes(l, j) = { dist(gen), dist(gen) };

    CHECK(grid_rel_err(plan.analyze(plan.synthesize(modes)), modes) <= 1e-12);

    // single mode m = -(2N - 1) against direct evaluation
    ComplexMatrix  one = ComplexMatrix::Zero(2 * N, M);

    one(3, 0) = 1.0;

    const auto  f = plan.synthesize(one);

    for ( int j = 0; j < M; ++j )
        CHECK(std::abs(f(3, j) - std::polar(1.0, -(2 * N - 1) * plan.grid.phis[static_cast<std::size_t>(j)])) <= 1e-12);

    const auto  back = plan.analyze(f);

    CHECK(std::abs(back(3, 0) - 1.0) <= 1e-12);
    CHECK((back.cwiseAbs().sum() - 1.0) <= 1e-10);
}

TEST_CASE("constant mode")
{
    const int   N    = 8;
    const auto  plan = plan_sht(N, params_for(N));
    auto        c    = ShtCoeffs::zeros(N);

    c.order(0)(0) = 1.0;

    const auto  f = sht_forward(plan, c);

    CHECK((f.values.array() - Complex(0.7071067811865476, 0.0)).abs().maxCoeff() <= 1e-10);

    auto  back = sht_inverse(plan, f);

    CHECK(std::abs(back.order(0)(0) - 1.0) <= 1e-10);
    back.order(0)(0) = 0.0;
    for ( const auto & v : back.beta )
        CHECK(v.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("degree one mode")
{
    const int   N    = 16;
    const auto  plan = plan_sht(N, params_for(N));
    auto        c    = ShtCoeffs::zeros(N);

    c.order(1)(0) = 1.0;

    const auto  f = sht_forward(plan, c);
    const auto  rule = gauss_legendre(2 * N);

    for ( Index l = 0; l < 2 * N; ++l )
        for ( Index j = 0; j < 4 * N - 1; ++j )
        {
            const Complex  ref = legendre_normalized({ 1, 1 }, rule.nodes[static_cast<std::size_t>(l)])
                               * std::polar(1.0, plan.grid.phis[static_cast<std::size_t>(j)]);

            CHECK(std::abs(f.values(l, j) - ref) <= 1e-10);
        }
}

TEST_CASE("forward against the triple sum")
{
    for ( int N : { 16, 32 } )
    {
        const auto  plan = plan_sht(N, params_for(N));
        const auto  c    = ShtCoeffs::random(N, 10 + N);
        const auto  f    = sht_forward(plan, c);
        const auto  ref  = dense_sht_forward(N, c.beta);

        CHECK(grid_rel_err(f.values, ref) <= 1e-6);
    }
}

TEST_CASE("round trip, zeros, Parseval and real data")
{
    const int   N    = 32;
    const auto  plan = plan_sht(N, params_for(N));
    const auto  c    = ShtCoeffs::random(N, 5);
    const auto  f    = sht_forward(plan, c);

    CHECK(relative_error(sht_inverse(plan, f), c) <= 1e-6);

    // Parseval with exact quadrature: sum |beta|^2 = (1 / M) sum_l w_l sum_j |f|^2
    const auto  rule = gauss_legendre(2 * N);
    double      s    = 0.0;

    for ( Index l = 0; l < 2 * N; ++l )
        s += rule.weights[static_cast<std::size_t>(l)] * f.values.row(l).squaredNorm();
    s /= 4 * N - 1;

    CHECK(std::abs(s - c.squared_norm()) <= 1e-8 * c.squared_norm());

    ShtGridValues  zero{ N, ComplexMatrix::Zero(2 * N, 4 * N - 1) };

    CHECK(sht_inverse(plan, zero).squared_norm() == 0.0);
    CHECK(sht_forward(plan, ShtCoeffs::zeros(N)).values.norm() == 0.0);

    // real band-limited data: beta_{k,-m} = conj(beta_{k,m})
    ShtGridValues  real_f{ N, f.values.real().cast<Complex>() };
    const auto     b = sht_inverse(plan, real_f);

    for ( int m = 1; m <= 2 * N - 1; ++m )
        CHECK((b.order(-m) - b.order(m).conjugate()).norm() <= 1e-10 * b.order(m).norm() + 1e-14);

    CHECK(relative_error(sht_inverse(plan, sht_forward(plan, b)), b) <= 1e-6);

    ShtGridValues  wrong{ N, ComplexMatrix::Zero(2 * N, 4 * N) };

    CHECK_THROWS_AS(sht_inverse(plan, wrong), std::invalid_argument);
}

TEST_CASE("build time grows near quadratically")
{
    using clock = std::chrono::steady_clock;

    auto  timed = [](int N) {
        double  best = 1e300;

        for ( int r = 0; r < 3; ++r )
        {
            const auto  t0 = clock::now();

            plan_sht(N, params_for(N));
            best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
        }

        return best;
    };

    const double  t32 = timed(32);
    const double  t64 = timed(64);

    CHECK(t64 < 10.0 * t32);
}

TEST_CASE("file formats")
{
    const int   N = 4;
    const auto  c = ShtCoeffs::random(N, 1);

    std::stringstream  ss;

    write_coeffs(ss, c);
    CHECK(peek_magic(ss) == "FSHTCOEF");
    CHECK(relative_error(read_coeffs(ss), c) == 0.0);

    std::stringstream  s8;

    write_coeffs(s8, c, 8);
    CHECK(relative_error(read_coeffs(s8), c) <= 1e-6);

    ShtGridValues      g{ N, ComplexMatrix::Random(2 * N, 4 * N - 1) };
    std::stringstream  sg;

    write_grid(sg, g);
    CHECK(read_grid(sg).values == g.values);

    std::stringstream  bad("FSHTGRIDxxxxxxxxxxxxxxxx");

    try
    {
        read_coeffs(bad);
        FAIL("expected a format error");
    }
    catch ( const FormatError & e )
    {
        CHECK(e.offset() == 0);
    }

    std::stringstream  full;

    write_coeffs(full, c);

    std::stringstream  tr(full.str().substr(0, 40));

    try
    {
        read_coeffs(tr);
        FAIL("expected a format error");
    }
    catch ( const FormatError & e )
    {
        CHECK(e.offset() == 40);
    }
}
