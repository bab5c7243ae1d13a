#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <json.hpp>

#include "fsht/partition.hpp"

using namespace fsht;

namespace {

// Every cell covered exactly once.
bool tiles_exactly(const BlockTreeResult & res)
{
    const Index        R = res.spec.N;
    const Index        C = res.spec.num_cols;
    std::vector<int>   hits(static_cast<std::size_t>(R * C), 0);

    for ( const auto & b : res.blocks )
        for ( Index i = b.range.rows.begin; i < b.range.rows.end; ++i )
            for ( Index j = b.range.cols.begin; j < b.range.cols.end; ++j )
                ++hits[static_cast<std::size_t>(i * C + j)];

    for ( int h : hits )
        if ( h != 1 )
            return false;

    return true;
}

// Column solving turning_point(degree(j), m) = theta_i, by bisection.
double bisect_curve(const AltMatrixSpec & spec, Index row)
{
    const double  theta = std::acos(spec.x(row));
    const double  off   = spec.parity == Parity::odd ? 1.0 : 0.0;
    auto          tp    = [&](double j) {
        const double  k = spec.m + 2.0 * j + off;
        return std::asin(std::sqrt(spec.m * spec.m - 0.25) / (k + 0.5));
    };

    double  lo = -0.5 * (spec.m + off) + 1e-9;
    double  hi = 1e7;

    for ( int it = 0; it < 200; ++it )
    {
        const double  mid = 0.5 * (lo + hi);

        if ( tp(mid) > theta )
            lo = mid;
        else
            hi = mid;
    }

    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("alt matrix shapes")
{
    const auto  odd  = make_alt_spec(8, 3, Parity::odd);
    const auto  even = make_alt_spec(8, 3, Parity::even);

    CHECK(odd.num_cols == 8 - 2);
    CHECK(even.num_cols == 8 - 1);
    CHECK(odd.degree(odd.num_cols - 1) <= 15);
    CHECK(even.degree(even.num_cols - 1) <= 15);
    CHECK(odd.degree(odd.num_cols - 1) + 2 > 15);
    CHECK(even.degree(even.num_cols - 1) + 2 > 15);

    CHECK(make_alt_spec(4, 7, Parity::odd).num_cols == 0);
    CHECK(make_alt_spec(4, 7, Parity::even).num_cols == 1);
    CHECK_THROWS_AS(make_alt_spec(4, 8, Parity::odd), std::invalid_argument);
}

TEST_CASE("entry oracle matches pointwise evaluation")
{
    for ( auto parity : { Parity::even, Parity::odd } )
    {
        const auto  spec   = make_alt_spec(2, 0, parity);
        const auto  oracle = entry_oracle(spec);

        REQUIRE(oracle->rows() == 2);
        REQUIRE(oracle->cols() == 2);

        for ( Index i = 0; i < 2; ++i )
            for ( Index j = 0; j < 2; ++j )
            {
                const int  k = parity == Parity::even ? 2 * static_cast<int>(j) : 2 * static_cast<int>(j) + 1;

                CHECK(oracle->entry(i, j) == doctest::Approx(legendre_normalized({ k, 0 }, spec.x(i))).epsilon(1e-14));
            }

        CHECK_THROWS_AS(oracle->entry(2, 0), std::invalid_argument);
    }

    // rows ascend in x
    const auto  spec = make_alt_spec(16, 4, Parity::odd);

    for ( Index i = 1; i < 16; ++i )
        CHECK(spec.x(i) > spec.x(i - 1));
}

TEST_CASE("checkpointed table equals the full recurrence")
{
    const auto  spec   = make_alt_spec(100, 37, Parity::even);
    const auto  oracle = entry_oracle(spec);

    for ( Index i : { 0, 13, 50, 99 } )
    {
        const auto  col = legendre_normalized_column(spec.m, 2 * spec.N - 1, spec.x(i));

        for ( Index j = 0; j < spec.num_cols; ++j )
            CHECK(oracle->entry(i, j) == col[static_cast<std::size_t>(spec.degree(j) - spec.m)]);
    }

    // batched access in arbitrary column order agrees with single entries
    const IndexList  rows{ 7, 3, 99 };
    const IndexList  cols{ 80, 2, 41, 40, 2, 0 };
    const Matrix     sub = oracle->submatrix(rows, cols);

    for ( std::size_t a = 0; a < rows.size(); ++a )
        for ( std::size_t b = 0; b < cols.size(); ++b )
            CHECK(sub(static_cast<Index>(a), static_cast<Index>(b)) == oracle->entry(rows[a], cols[b]));
}

TEST_CASE("curve column")
{
    const auto  spec = make_alt_spec(512, 512, Parity::odd);

    CHECK(std::abs(curve_column(spec, 256) - bisect_curve(spec, 256)) <= 1.0);

    // monotone in the row
    for ( Index i = 1; i < spec.N; ++i )
        CHECK(curve_column(spec, i) >= curve_column(spec, i - 1));

    // first row sits at the equator side: whole row oscillatory for a small order
    const auto  low = make_alt_spec(64, 2, Parity::even);

    CHECK(curve_column(low, 0) <= 0.0);

    // last row near the pole: whole row non-oscillatory for a large order
    const auto  high = make_alt_spec(64, 100, Parity::even);

    CHECK(curve_column(high, high.N - 1) >= static_cast<double>(high.num_cols));

    CHECK_THROWS_AS(curve_column(make_alt_spec(8, 0, Parity::odd), 0), std::invalid_argument);
}

TEST_CASE("partition: m = 0 is a single oscillatory block")
{
    const auto  spec = make_alt_spec(64, 0, Parity::odd);
    const auto  res  = partition(spec, 16);

    REQUIRE(res.blocks.size() == 1);
    CHECK(res.blocks[0].cls == BlockClass::oscillatory);
    CHECK(res.blocks[0].range == Rect{ { 0, 64 }, { 0, 64 } });
}

TEST_CASE("partition: band count")
{
    const auto  spec = make_alt_spec(8192, 8192, Parity::odd);

    CHECK(spec.num_cols == 4096);
    CHECK(initial_bands(spec) == 2);
}

TEST_CASE("partition structure")
{
    for ( int N : { 256, 2048 } )
        for ( int m : { N / 2, N, 3 * N / 2 } )
            for ( auto parity : { Parity::odd, Parity::even } )
            {
                const auto   spec = make_alt_spec(N, m, parity);
                const Index  n0   = N == 2048 ? 512 : 32;
                const auto   res  = partition(spec, n0);

                CHECK(tiles_exactly(res));

                for ( const auto & b : res.blocks )
                {
                    if ( b.cls == BlockClass::turning )
                        CHECK((b.range.rows.size() < n0 || b.range.cols.size() < n0));

                    // corner soundness
                    const double  j_top = curve_column(spec, b.range.rows.begin);
                    const double  j_bot = curve_column(spec, b.range.rows.end - 1);

                    if ( b.cls == BlockClass::oscillatory )
                        CHECK(static_cast<double>(b.range.cols.begin) > j_bot);
                    if ( b.cls == BlockClass::non_oscillatory )
                        CHECK(static_cast<double>(b.range.cols.end - 1) < j_top);
                }

                for ( std::size_t l = 0; l < res.intersecting_per_level.size(); ++l )
                {
                    CHECK(res.intersecting_per_level[l] <= (Index(1) << l) - 1);
                    CHECK(res.turning_per_level[l] <= res.intersecting_per_level[l]);
                }

                CHECK(static_cast<Index>(res.blocks.size()) <= 4 * (2 * N / n0) + res.initial_band_rows + 4);

                // deterministic
                const auto  again = partition(spec, n0);

                REQUIRE(again.blocks.size() == res.blocks.size());
                for ( std::size_t i = 0; i < res.blocks.size(); ++i )
                    CHECK(again.blocks[i].range == res.blocks[i].range);
            }

    CHECK_THROWS_AS(partition(make_alt_spec(16, 4, Parity::odd), 1), std::invalid_argument);
}

TEST_CASE("trimming")
{
    const auto  spec   = make_alt_spec(512, 256, Parity::odd);
    const auto  oracle = entry_oracle(spec);
    const auto  res    = partition(spec, 64);
    const Matrix  A    = oracle->dense();
    const double  tau  = default_trim_threshold;
    bool          shrunk = false;

    for ( const auto & blk : res.blocks )
    {
        const auto  t = trim_block(*oracle, blk, tau);

        REQUIRE(t.trim.has_value());

        if ( blk.cls == BlockClass::oscillatory )
        {
            CHECK(*t.trim == blk.range);
            continue;
        }

        const Rect &  r = *t.trim;

        // every entry outside the trim is negligible
        for ( Index i = blk.range.rows.begin; i < blk.range.rows.end; ++i )
            for ( Index j = blk.range.cols.begin; j < blk.range.cols.end; ++j )
            {
                const bool  inside = !r.empty() && i >= r.rows.begin && i < r.rows.end && j >= r.cols.begin && j < r.cols.end;

                if ( !inside )
                    CHECK(std::abs(A(i, j)) < tau);
            }

        if ( !r.empty() )
        {
            CHECK(r.rows.begin >= blk.range.rows.begin);
            CHECK(r.rows.end <= blk.range.rows.end);
            CHECK(r.cols.begin >= blk.range.cols.begin);
            CHECK(r.cols.end <= blk.range.cols.end);

            // retained boundary entries are above tau
            CHECK(std::abs(A(r.rows.end - 1, r.cols.end - 1)) >= tau);
            CHECK(std::abs(A(r.rows.begin, r.cols.begin)) >= tau);
        }

        shrunk = shrunk || r.area() < blk.range.area();
    }

    CHECK(shrunk);
}

TEST_CASE("deep non-oscillatory block is trimmed")
{
    const auto   spec   = make_alt_spec(8192, 4096, Parity::odd);
    const auto   oracle = entry_oracle(spec);
    Block        blk;

    // bottom-left corner: near the pole with low degrees
    blk.range = { { 6144, 8192 }, { 0, 1024 } };
    blk.cls   = BlockClass::non_oscillatory;

    REQUIRE(curve_column(spec, 6144) > 1024.0);

    const auto  t = trim_block(*oracle, blk);

    REQUIRE(t.trim.has_value());
    CHECK(t.trim->area() < blk.range.area());

    if ( !t.trim->empty() )
    {
        const auto &  r = *t.trim;

        CHECK(std::abs(oracle->entry(r.rows.begin, r.cols.end - 1)) >= default_trim_threshold);
        CHECK(std::abs(oracle->entry(r.rows.end - 1, r.cols.end - 1)) >= default_trim_threshold);
        CHECK(std::abs(oracle->entry(r.rows.begin, r.cols.begin)) >= default_trim_threshold);
    }

    // a block deep in the underflow region is dropped
    Block  dead;

    dead.range = { { 8000, 8192 }, { 0, 16 } };
    dead.cls   = BlockClass::non_oscillatory;

    CHECK(trim_block(*oracle, dead).trim->empty());
}

TEST_CASE("json export")
{
    const auto  spec = make_alt_spec(128, 128, Parity::even);
    const auto  res  = partition(spec, 16);
    const auto  doc  = nlohmann::json::parse(blocks_to_json(res));

    CHECK(doc["blocks"].size() == res.blocks.size());
    CHECK(doc["blocks"][0].contains("row0"));
    CHECK(doc["blocks"][0].contains("class"));
}
