#include "fsht/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fsht {

const char * to_string(Parity p)
{
    return p == Parity::odd ? "odd" : "even";
}

const char * to_string(BlockClass c)
{
    switch ( c )
    {
    case BlockClass::oscillatory:     return "oscillatory";
    case BlockClass::non_oscillatory: return "non_oscillatory";
    case BlockClass::turning:         return "turning";
    }

    return "unknown";
}

AltMatrixSpec make_alt_spec(int N, int m, Parity parity, std::shared_ptr<const QuadratureRule> quadrature)
{
    if ( N < 1 )
        throw std::invalid_argument("make_alt_spec: N must be positive");
    if ( m < 0 || m > 2 * N - 1 )
        throw std::invalid_argument("make_alt_spec: order " + std::to_string(m) + " outside [0, " + std::to_string(2 * N - 1) + "]");
    if ( !quadrature || quadrature->order != static_cast<std::size_t>(2 * N) )
        throw std::invalid_argument("make_alt_spec: quadrature must have order 2N");

    AltMatrixSpec  s;

    s.N          = N;
    s.m          = m;
    s.parity     = parity;
    s.num_cols   = parity == Parity::odd ? N - (m + 1) / 2 : N - m / 2;
    s.quadrature = std::move(quadrature);

    return s;
}

AltMatrixSpec make_alt_spec(int N, int m, Parity parity)
{
    if ( N < 1 )
        throw std::invalid_argument("make_alt_spec: N must be positive");

    return make_alt_spec(N, m, parity, std::make_shared<const QuadratureRule>(gauss_legendre(2 * static_cast<std::size_t>(N))));
}

//
// LegendreTable
//

LegendreTable::LegendreTable(int N, int m, std::shared_ptr<const QuadratureRule> quadrature)
    : N_(N), m_(m), quadrature_(std::move(quadrature))
{
    if ( m < 0 || m > 2 * N - 1 )
        throw std::invalid_argument("LegendreTable: order out of range");

    const int  kmax = 2 * N - 1;

    per_row_ = (kmax - m) / checkpoint_stride + 1;

    coeffs_.resize(static_cast<std::size_t>(kmax - m + 1), { 0.0, 0.0 });
    for ( int k = m + 1; k <= kmax; ++k )
        coeffs_[k - m] = detail::recurrence_coeffs(k, m);

    checkpoints_.resize(static_cast<std::size_t>(N) * per_row_);

    const double  c_m = detail::sectoral_constant(m);

    for ( int i = 0; i < N; ++i )
    {
        const double  x    = quadrature_->nodes[static_cast<std::size_t>(N + i)];
        auto          s    = detail::sectoral_start(c_m, m, x);
        auto *        dest = &checkpoints_[static_cast<std::size_t>(i) * per_row_];

        dest[0] = s;

        for ( int k = m + 1; k <= kmax; ++k )
        {
            detail::recurrence_step(s, coeffs_[k - m], x);

            if ( (k - m) % checkpoint_stride == 0 )
                dest[(k - m) / checkpoint_stride] = s;
        }
    }
}

double LegendreTable::value(Index row, int degree) const
{
    const int     c = (degree - m_) / checkpoint_stride;
    auto          s = checkpoints_[static_cast<std::size_t>(row) * per_row_ + c];
    const double  x = quadrature_->nodes[static_cast<std::size_t>(N_ + row)];

    for ( int k = m_ + c * checkpoint_stride + 1; k <= degree; ++k )
        detail::recurrence_step(s, coeffs_[k - m_], x);

    return detail::scaled_value(s.cur, s.exponent);
}

void LegendreTable::values(Index row, std::span<const int> degrees, double * out, Index stride) const
{
    const double  x    = quadrature_->nodes[static_cast<std::size_t>(N_ + row)];
    const auto *  base = &checkpoints_[static_cast<std::size_t>(row) * per_row_];

    detail::ScaledPair  s;
    int                 d = -1;

    for ( std::size_t a = 0; a < degrees.size(); ++a )
    {
        const int  deg = degrees[a];
        const int  c   = (deg - m_) / checkpoint_stride;
        const int  cd  = m_ + c * checkpoint_stride;

        if ( d < cd || d > deg )
        {
            s = base[c];
            d = cd;
        }

        for ( ; d < deg; ++d )
            detail::recurrence_step(s, coeffs_[d + 1 - m_], x);

        out[static_cast<Index>(a) * stride] = detail::scaled_value(s.cur, s.exponent);
    }
}

//
// Entry oracle
//

AltEntryOracle::AltEntryOracle(AltMatrixSpec spec, std::shared_ptr<const LegendreTable> table)
    : spec_(std::move(spec)), table_(std::move(table))
{
    if ( !table_ || table_->N() != spec_.N || table_->m() != spec_.m )
        throw std::invalid_argument("AltEntryOracle: table does not match the matrix");
}

double AltEntryOracle::entry(Index i, Index j) const
{
    if ( i < 0 || i >= rows() || j < 0 || j >= cols() )
        throw std::invalid_argument("AltEntryOracle: index out of range");

    return table_->value(i, spec_.degree(j));
}

Matrix AltEntryOracle::submatrix(std::span<const Index> rows, std::span<const Index> cols) const
{
    const Index  nr = static_cast<Index>(rows.size());
    const Index  nc = static_cast<Index>(cols.size());

    for ( Index j : cols )
        if ( j < 0 || j >= this->cols() )
            throw std::invalid_argument("AltEntryOracle: column out of range");
    for ( Index i : rows )
        if ( i < 0 || i >= this->rows() )
            throw std::invalid_argument("AltEntryOracle: row out of range");

    std::vector<Index>  order(static_cast<std::size_t>(nc));

    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return cols[a] < cols[b]; });

    std::vector<int>  degrees(static_cast<std::size_t>(nc));

    for ( Index b = 0; b < nc; ++b )
        degrees[b] = spec_.degree(cols[order[b]]);

    Matrix  sorted(nc, nr);

    for ( Index a = 0; a < nr; ++a )
        table_->values(rows[a], degrees, sorted.col(a).data(), 1);

    Matrix  out(nr, nc);

    for ( Index b = 0; b < nc; ++b )
        out.col(order[b]) = sorted.row(b).transpose();

    return out;
}

std::unique_ptr<AltEntryOracle> entry_oracle(const AltMatrixSpec & spec)
{
    auto  table = std::make_shared<const LegendreTable>(spec.N, spec.m, spec.quadrature);

    return std::make_unique<AltEntryOracle>(spec, std::move(table));
}

double curve_column(const AltMatrixSpec & spec, Index row)
{
    if ( spec.m < 1 )
        throw std::invalid_argument("curve_column: order must be at least 1");

    const double  x      = spec.x(row);
    const double  sin_t  = std::sqrt((1.0 - x) * (1.0 + x));
    const double  md     = spec.m;
    const double  kstar  = std::sqrt(md * md - 0.25) / sin_t - 0.5;
    const double  offset = spec.parity == Parity::odd ? 1.0 : 0.0;

    return (kstar - md - offset) / 2.0;
}

//
// Partition
//

Index initial_bands(const AltMatrixSpec & spec)
{
    if ( spec.num_cols < 1 )
        return 1;

    const Index  b = std::lround(static_cast<double>(spec.N) / static_cast<double>(spec.num_cols));

    return std::clamp<Index>(b, 1, spec.N);
}

namespace {

void count_at(std::vector<Index> & v, int level)
{
    if ( static_cast<int>(v.size()) <= level )
        v.resize(static_cast<std::size_t>(level) + 1, 0);
    ++v[level];
}

} // namespace

BlockTreeResult partition(const AltMatrixSpec & spec, Index n0)
{
    if ( n0 < 2 )
        throw std::invalid_argument("partition: n0 must be at least 2");

    BlockTreeResult  res;

    res.spec = spec;
    res.n0   = n0;

    const Index  N = spec.N;
    const Index  C = spec.num_cols;

    if ( C < 1 )
        return res;

    if ( spec.m == 0 )
    {
        Block  blk;

        blk.range = { { 0, N }, { 0, C } };
        blk.cls   = BlockClass::oscillatory;
        res.blocks.push_back(std::move(blk));

        return res;
    }

    const Index  b          = initial_bands(spec);
    const int    base_level = 1 + static_cast<int>(std::ceil(std::log2(static_cast<double>(b))));

    res.initial_band_rows = b;

    std::vector<double>  jstar(static_cast<std::size_t>(N));

    for ( Index i = 0; i < N; ++i )
        jstar[i] = curve_column(spec, i);

    struct Pending
    {
        Rect  r;
        int   level;
    };

    std::vector<Pending>  stack;

    for ( Index band = b - 1; band >= 0; --band )
        stack.push_back({ { { band * N / b, (band + 1) * N / b }, { 0, C } }, base_level });

    while ( !stack.empty() )
    {
        const auto  p = stack.back();

        stack.pop_back();

        const auto &  r  = p.r;
        Block         blk;

        blk.range = r;
        blk.level = p.level;
        res.levels_used = std::max(res.levels_used, p.level);

        if ( static_cast<double>(r.cols.begin) > jstar[r.rows.end - 1] )
            blk.cls = BlockClass::oscillatory;
        else if ( static_cast<double>(r.cols.end - 1) < jstar[r.rows.begin] )
            blk.cls = BlockClass::non_oscillatory;
        else
        {
            count_at(res.intersecting_per_level, p.level);

            if ( r.rows.size() >= n0 && r.cols.size() >= n0 )
            {
                const Index  rm = r.rows.begin + r.rows.size() / 2;
                const Index  cm = r.cols.begin + r.cols.size() / 2;

                stack.push_back({ { { rm, r.rows.end }, { cm, r.cols.end } }, p.level + 1 });
                stack.push_back({ { { rm, r.rows.end }, { r.cols.begin, cm } }, p.level + 1 });
                stack.push_back({ { { r.rows.begin, rm }, { cm, r.cols.end } }, p.level + 1 });
                stack.push_back({ { { r.rows.begin, rm }, { r.cols.begin, cm } }, p.level + 1 });
                continue;
            }

            blk.cls = BlockClass::turning;
            count_at(res.turning_per_level, p.level);
        }

        res.blocks.push_back(std::move(blk));
    }

    res.intersecting_per_level.resize(static_cast<std::size_t>(res.levels_used) + 1, 0);
    res.turning_per_level.resize(static_cast<std::size_t>(res.levels_used) + 1, 0);

    return res;
}

Block trim_block(const EntryOracle & oracle, Block block, double tau)
{
    if ( block.cls == BlockClass::oscillatory )
    {
        block.trim = block.range;
        return block;
    }

    const Index  r0 = block.range.rows.begin;
    const Index  r1 = block.range.rows.end;
    const Index  c0 = block.range.cols.begin;
    const Index  cl = block.range.cols.end - 1;

    if ( !(std::abs(oracle.entry(r0, cl)) >= tau) )
    {
        block.trim = Rect{ { r0, r0 }, { cl + 1, cl + 1 } };
        return block;
    }

    // last row of the right edge above tau
    Index  lo = r0;
    Index  hi = r1;

    while ( hi - lo > 1 )
    {
        const Index  mid = lo + (hi - lo) / 2;

        if ( std::abs(oracle.entry(mid, cl)) >= tau )
            lo = mid;
        else
            hi = mid;
    }

    const Index  row_end = lo + 1;

    // first column of the top edge above tau
    lo = c0 - 1;
    hi = cl;

    while ( hi - lo > 1 )
    {
        const Index  mid = lo + (hi - lo) / 2;

        if ( std::abs(oracle.entry(r0, mid)) >= tau )
            hi = mid;
        else
            lo = mid;
    }

    block.trim = Rect{ { r0, row_end }, { hi, cl + 1 } };

    return block;
}

std::string blocks_to_json(const BlockTreeResult & result)
{
    nlohmann::json  blocks = nlohmann::json::array();

    for ( const auto & b : result.blocks )
    {
        nlohmann::json  rec;

        rec["row0"]  = b.range.rows.begin;
        rec["row1"]  = b.range.rows.end;
        rec["col0"]  = b.range.cols.begin;
        rec["col1"]  = b.range.cols.end;
        rec["class"] = to_string(b.cls);
        rec["level"] = b.level;

        if ( b.trim )
        {
            const auto &  t = *b.trim;

            if ( t.empty() )
                rec["trim"] = nullptr;
            else
                rec["trim"] = { { "row0", t.rows.begin }, { "row1", t.rows.end }, { "col0", t.cols.begin }, { "col1", t.cols.end } };
        }

        blocks.push_back(std::move(rec));
    }

    nlohmann::json  doc;

    doc["N"]        = result.spec.N;
    doc["m"]        = result.spec.m;
    doc["parity"]   = to_string(result.spec.parity);
    doc["num_cols"] = result.spec.num_cols;
    doc["n0"]       = result.n0;
    doc["bands"]    = result.initial_band_rows;
    doc["blocks"]   = std::move(blocks);

    return doc.dump(2);
}

} // namespace fsht
