#include "fsht/alt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace fsht {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

} // namespace

Index default_n0(int N)
{
    return N >= 1024 ? 512 : std::max<Index>(32, N / 8);
}

Index AltParams::effective_leaf_max() const
{
    return leaf_max > 0 ? leaf_max : std::max<Index>(1, sampling.adaptive_rank / 2);
}

void AltParams::validate() const
{
    sampling.validate();

    if ( n0 < 2 )
        throw std::invalid_argument("alt params: n0 must be at least 2");
    if ( leaf_max < 0 )
        throw std::invalid_argument("alt params: leaf_max must be nonnegative");
    if ( !(trim_tau >= 0.0) )
        throw std::invalid_argument("alt params: trim threshold must be nonnegative");
}

namespace {

Index payload_rank(const BlockPayload & p)
{
    if ( const auto * f = std::get_if<ButterflyFactorization>(&p) )
        return f->max_rank;
    if ( const auto * f = std::get_if<LowRankFactor>(&p) )
        return f->rank();

    return 0;
}

Index payload_nnz(const BlockPayload & p)
{
    if ( const auto * f = std::get_if<ButterflyFactorization>(&p) )
        return f->nnz();
    if ( const auto * f = std::get_if<LowRankFactor>(&p) )
        return f->U.size() + f->sigma.size() + f->V.size();
    if ( const auto * d = std::get_if<Matrix>(&p) )
        return d->size();

    return 0;
}

BlockPayload compress_block(const AltEntryOracle & oracle, const Block & blk, const AltParams & params, Rng & rng)
{
    const Rect       a = blk.active();
    const SubOracle  sub(oracle, iota_indices(a.rows.begin, a.rows.end), iota_indices(a.cols.begin, a.cols.end));

    switch ( blk.cls )
    {
    case BlockClass::oscillatory:
        return idbf_factor(sub, params.sampling, params.effective_leaf_max(), rng);

    case BlockClass::non_oscillatory:
    {
        const Index  rows = a.rows.size();
        const Index  cols = a.cols.size();
        const Index  r    = std::min({ params.sampling.rsvd_rank, rows, cols });

        // a factor that would not be smaller than the block itself stays dense
        if ( rows * cols <= r * (rows + cols + 1) )
            return sub.dense();

        SamplingConfig  cfg = params.sampling;

        cfg.rsvd_rank = r;

        return rsvd(sub, cfg, rng);
    }

    case BlockClass::turning:
        return sub.dense();
    }

    return std::monostate{};
}

AltHalf build_half(const AltMatrixSpec &                      spec,
                   const std::shared_ptr<const LegendreTable> & table,
                   const AltParams &                          params,
                   const Rng &                                root)
{
    AltHalf  half;

    half.spec = spec;

    if ( spec.num_cols < 1 )
        return half;

    const AltEntryOracle  oracle(spec, table);
    const std::uint64_t   parity_tag = spec.parity == Parity::odd ? 1 : 2;

    if ( params.mode == PlanMode::dense )
    {
        const auto  t0 = clock_type::now();
        Block       blk;

        blk.range   = { { 0, spec.N }, { 0, spec.num_cols } };
        blk.cls     = BlockClass::oscillatory;
        blk.trim    = blk.range;
        blk.payload = oracle.dense();

        half.stats.push_back({ blk.range, blk.range, blk.cls, 0, payload_nnz(blk.payload), seconds_since(t0) });
        half.blocks.push_back(std::move(blk));
        half.partition_blocks = 1;

        return half;
    }

    auto  tree = partition(spec, params.n0);

    half.partition_blocks = static_cast<Index>(tree.blocks.size());
    half.stats.resize(tree.blocks.size());

    std::vector<Block>  blocks(tree.blocks.size());

    auto  work = [&](std::size_t idx) {
        const auto  t0  = clock_type::now();
        Block       blk = trim_block(oracle, std::move(tree.blocks[idx]), params.trim_tau);

        if ( !blk.trim->empty() )
        {
            Rng  rng = root.derive((parity_tag << 40) | idx);

            try
            {
                blk.payload = compress_block(oracle, blk, params, rng);
            }
            catch ( const RankOverflowError & e )
            {
                const Rect  a = blk.active();

                throw std::runtime_error(std::string(e.what()) + " in block rows [" + std::to_string(a.rows.begin) + ","
                                         + std::to_string(a.rows.end) + ") cols [" + std::to_string(a.cols.begin) + ","
                                         + std::to_string(a.cols.end) + ") of the " + to_string(spec.parity)
                                         + " matrix for m=" + std::to_string(spec.m));
            }
        }

        half.stats[idx] = { blk.range, blk.active(), blk.cls, payload_rank(blk.payload), payload_nnz(blk.payload), seconds_since(t0) };
        blocks[idx]     = std::move(blk);
    };

    if ( params.parallel && blocks.size() > 1 )
    {
        const unsigned              nthreads = std::max(1u, std::thread::hardware_concurrency());
        std::atomic<std::size_t>    next{ 0 };
        std::exception_ptr          failure;
        std::mutex                  failure_mutex;
        std::vector<std::jthread>   pool;

        for ( unsigned t = 0; t < nthreads; ++t )
        {
            pool.emplace_back([&] {
                for ( std::size_t i = next++; i < blocks.size(); i = next++ )
                {
                    try
                    {
                        work(i);
                    }
                    catch ( ... )
                    {
                        std::lock_guard  lock(failure_mutex);

                        if ( !failure )
                            failure = std::current_exception();
                    }
                }
            });
        }

        pool.clear();

        if ( failure )
            std::rethrow_exception(failure);
    }
    else
    {
        for ( std::size_t i = 0; i < blocks.size(); ++i )
            work(i);
    }

    for ( auto & blk : blocks )
    {
        if ( blk.trim->empty() )
            ++half.dropped;
        else
            half.blocks.push_back(std::move(blk));
    }

    return half;
}

} // namespace

AltPlan plan_alt(int N, int m, const AltParams & params, std::shared_ptr<const QuadratureRule> quadrature)
{
    params.validate();

    if ( N < 1 )
        throw std::invalid_argument("plan_alt: N must be positive");
    if ( m < 0 || m > 2 * N - 1 )
        throw std::invalid_argument("plan_alt: order " + std::to_string(m) + " outside [0, " + std::to_string(2 * N - 1) + "]");

    if ( !quadrature )
        quadrature = std::make_shared<const QuadratureRule>(gauss_legendre(2 * static_cast<std::size_t>(N)));

    const auto  t0 = clock_type::now();

    AltPlan  plan;

    plan.N          = N;
    plan.m          = m;
    plan.params     = params;
    plan.quadrature = quadrature;

    const auto  table = std::make_shared<const LegendreTable>(N, m, quadrature);

    plan.table_seconds = seconds_since(t0);
    const Rng   root(params.sampling.rng_seed ^ (static_cast<std::uint64_t>(m) << 32));

    auto  t1 = clock_type::now();

    plan.odd         = build_half(make_alt_spec(N, m, Parity::odd, quadrature), table, params, root);
    plan.odd.seconds = seconds_since(t1);

    t1 = clock_type::now();

    plan.even         = build_half(make_alt_spec(N, m, Parity::even, quadrature), table, params, root);
    plan.even.seconds = seconds_since(t1);

    plan.build_seconds = seconds_since(t0);

    return plan;
}

//
// Application
//

Matrix apply_half(const AltHalf & half, const Eigen::Ref<const Matrix> & x)
{
    if ( x.rows() != half.spec.num_cols )
        throw std::invalid_argument("apply_half: dimension mismatch");

    Matrix  y = Matrix::Zero(half.spec.N, x.cols());

    for ( const auto & blk : half.blocks )
    {
        const Rect  a  = blk.active();
        const auto  xs = x.middleRows(a.cols.begin, a.cols.size());
        auto        ys = y.middleRows(a.rows.begin, a.rows.size());

        if ( const auto * f = std::get_if<ButterflyFactorization>(&blk.payload) )
            ys += idbf_apply(*f, xs);
        else if ( const auto * f = std::get_if<LowRankFactor>(&blk.payload) )
            f->apply_add(xs, ys);
        else if ( const auto * d = std::get_if<Matrix>(&blk.payload) )
            ys.noalias() += *d * xs;
    }

    return y;
}

Matrix apply_half_transpose(const AltHalf & half, const Eigen::Ref<const Matrix> & y)
{
    if ( y.rows() != half.spec.N )
        throw std::invalid_argument("apply_half_transpose: dimension mismatch");

    Matrix  x = Matrix::Zero(half.spec.num_cols, y.cols());

    for ( const auto & blk : half.blocks )
    {
        const Rect  a  = blk.active();
        const auto  ys = y.middleRows(a.rows.begin, a.rows.size());
        auto        xs = x.middleRows(a.cols.begin, a.cols.size());

        if ( const auto * f = std::get_if<ButterflyFactorization>(&blk.payload) )
            xs += idbf_apply_transpose(*f, ys);
        else if ( const auto * f = std::get_if<LowRankFactor>(&blk.payload) )
            f->apply_transpose_add(ys, xs);
        else if ( const auto * d = std::get_if<Matrix>(&blk.payload) )
            xs.noalias() += d->transpose() * ys;
    }

    return x;
}

Matrix alt_forward(const AltPlan & plan, const Eigen::Ref<const Matrix> & coeffs)
{
    const Index  N = plan.N;

    if ( coeffs.rows() != plan.coeff_length() )
        throw std::invalid_argument("alt_forward: expected " + std::to_string(plan.coeff_length()) + " coefficients, got "
                                    + std::to_string(coeffs.rows()));

    const Index  c  = coeffs.cols();
    Matrix       xo(plan.odd.spec.num_cols, c);
    Matrix       xe(plan.even.spec.num_cols, c);

    for ( Index j = 0; j < xo.rows(); ++j )
        xo.row(j) = coeffs.row(2 * j + 1);
    for ( Index j = 0; j < xe.rows(); ++j )
        xe.row(j) = coeffs.row(2 * j);

    const Matrix  g1 = apply_half(plan.odd, xo);
    const Matrix  g2 = apply_half(plan.even, xe);
    Matrix        out(2 * N, c);

    for ( Index i = 0; i < N; ++i )
    {
        out.row(N + i)     = g2.row(i) + g1.row(i);
        out.row(N - 1 - i) = g2.row(i) - g1.row(i);
    }

    return out;
}

Matrix alt_adjoint(const AltPlan & plan, const Eigen::Ref<const Matrix> & values)
{
    const Index  N = plan.N;

    if ( values.rows() != 2 * N )
        throw std::invalid_argument("alt_inverse: expected " + std::to_string(2 * N) + " grid values, got "
                                    + std::to_string(values.rows()));

    const Index  c = values.cols();
    Matrix       sum(N, c);
    Matrix       diff(N, c);

    for ( Index i = 0; i < N; ++i )
    {
        sum.row(i)  = values.row(N + i) + values.row(N - 1 - i);
        diff.row(i) = values.row(N + i) - values.row(N - 1 - i);
    }

    const Matrix  xo = apply_half_transpose(plan.odd, diff);
    const Matrix  xe = apply_half_transpose(plan.even, sum);
    Matrix        out(plan.coeff_length(), c);

    for ( Index j = 0; j < xo.rows(); ++j )
        out.row(2 * j + 1) = xo.row(j);
    for ( Index j = 0; j < xe.rows(); ++j )
        out.row(2 * j) = xe.row(j);

    return out;
}

Matrix alt_inverse(const AltPlan & plan, const Eigen::Ref<const Matrix> & values)
{
    if ( values.rows() != 2 * plan.N )
        throw std::invalid_argument("alt_inverse: expected " + std::to_string(2 * plan.N) + " grid values, got "
                                    + std::to_string(values.rows()));

    const Eigen::Map<const Vector>  w(plan.quadrature->weights.data(), 2 * plan.N);

    return alt_adjoint(plan, w.asDiagonal() * values);
}

namespace {

Matrix split_complex(const ComplexVector & v)
{
    Matrix  out(v.size(), 2);

    out.col(0) = v.real();
    out.col(1) = v.imag();

    return out;
}

ComplexVector join_complex(const Matrix & m)
{
    ComplexVector  out(m.rows());

    for ( Index i = 0; i < m.rows(); ++i )
        out(i) = Complex(m(i, 0), m(i, 1));

    return out;
}

} // namespace

ComplexVector alt_forward_complex(const AltPlan & plan, const ComplexVector & coeffs)
{
    return join_complex(alt_forward(plan, split_complex(coeffs)));
}

ComplexVector alt_inverse_complex(const AltPlan & plan, const ComplexVector & values)
{
    return join_complex(alt_inverse(plan, split_complex(values)));
}

//
// Diagnostics
//

AltDiagnostics plan_diagnostics(const AltPlan & plan)
{
    AltDiagnostics  d;

    d.build_seconds = plan.build_seconds;

    for ( const auto * half : { &plan.odd, &plan.even } )
    {
        d.block_count += half->partition_blocks;
        d.dropped     += half->dropped;

        for ( const auto & s : half->stats )
        {
            switch ( s.cls )
            {
            case BlockClass::oscillatory:     ++d.oscillatory; break;
            case BlockClass::non_oscillatory: ++d.non_oscillatory; break;
            case BlockClass::turning:         ++d.turning; break;
            }
        }

        for ( const auto & blk : half->blocks )
        {
            d.max_rank   = std::max(d.max_rank, payload_rank(blk.payload));
            d.total_nnz += payload_nnz(blk.payload);
        }
    }

    return d;
}

double time_alt_forward(const AltPlan & plan, int reps, std::uint64_t seed)
{
    std::mt19937_64                   gen(seed);
    std::normal_distribution<double>  dist;
    Matrix                            x(plan.coeff_length(), 1);

    for ( Index i = 0; i < x.rows(); ++i )
        x(i, 0) = dist(gen);

    std::vector<double>  times;

    for ( int r = 0; r < std::max(1, reps); ++r )
    {
        const auto    t0 = clock_type::now();
        const Matrix  y  = alt_forward(plan, x);

        times.push_back(seconds_since(t0));

        if ( !std::isfinite(y.sum()) )
            throw std::runtime_error("time_alt_forward: non-finite output");
    }

    std::sort(times.begin(), times.end());

    return times[times.size() / 2];
}

//
// Serialization
//

namespace {

constexpr char           plan_magic[8] = { 'F', 'S', 'H', 'T', 'A', 'L', 'T', 'P' };
constexpr std::uint32_t  plan_version  = 1;

void write_rect(std::ostream & os, const Rect & r)
{
    io::write_i64(os, r.rows.begin);
    io::write_i64(os, r.rows.end);
    io::write_i64(os, r.cols.begin);
    io::write_i64(os, r.cols.end);
}

Rect read_rect(std::istream & is)
{
    Rect  r;

    r.rows.begin = io::read_i64(is);
    r.rows.end   = io::read_i64(is);
    r.cols.begin = io::read_i64(is);
    r.cols.end   = io::read_i64(is);

    return r;
}

void write_half(std::ostream & os, const AltHalf & half)
{
    io::write_i64(os, half.partition_blocks);
    io::write_i64(os, half.dropped);
    io::write_f64(os, half.seconds);
    io::write_u32(os, static_cast<std::uint32_t>(half.stats.size()));

    for ( const auto & s : half.stats )
    {
        write_rect(os, s.range);
        write_rect(os, s.active);
        io::write_u32(os, static_cast<std::uint32_t>(s.cls));
        io::write_i64(os, s.rank);
        io::write_i64(os, s.nnz);
        io::write_f64(os, s.seconds);
    }

    io::write_u32(os, static_cast<std::uint32_t>(half.blocks.size()));

    for ( const auto & blk : half.blocks )
    {
        write_rect(os, blk.range);
        write_rect(os, blk.active());
        io::write_u32(os, static_cast<std::uint32_t>(blk.cls));
        io::write_u32(os, static_cast<std::uint32_t>(blk.level));
        io::write_u32(os, static_cast<std::uint32_t>(blk.payload.index()));

        if ( const auto * f = std::get_if<ButterflyFactorization>(&blk.payload) )
            write_butterfly(os, *f);
        else if ( const auto * f = std::get_if<LowRankFactor>(&blk.payload) )
        {
            io::write_matrix(os, f->U);
            io::write_matrix(os, f->sigma);
            io::write_matrix(os, f->V);
        }
        else if ( const auto * d = std::get_if<Matrix>(&blk.payload) )
            io::write_matrix(os, *d);
    }
}

AltHalf read_half(std::istream & is, AltMatrixSpec spec)
{
    AltHalf  half;

    half.spec             = std::move(spec);
    half.partition_blocks = io::read_i64(is);
    half.dropped          = io::read_i64(is);
    half.seconds          = io::read_f64(is);

    const auto  ns = io::read_u32(is);

    for ( std::uint32_t i = 0; i < ns; ++i )
    {
        BlockStats  s;

        s.range   = read_rect(is);
        s.active  = read_rect(is);
        s.cls     = static_cast<BlockClass>(io::read_u32(is));
        s.rank    = io::read_i64(is);
        s.nnz     = io::read_i64(is);
        s.seconds = io::read_f64(is);
        half.stats.push_back(s);
    }

    const auto  nb = io::read_u32(is);

    for ( std::uint32_t i = 0; i < nb; ++i )
    {
        Block  blk;

        blk.range = read_rect(is);
        blk.trim  = read_rect(is);
        blk.cls   = static_cast<BlockClass>(io::read_u32(is));
        blk.level = static_cast<int>(io::read_u32(is));

        switch ( io::read_u32(is) )
        {
        case 0:
            break;
        case 1:
            blk.payload = read_butterfly(is);
            break;
        case 2:
        {
            LowRankFactor  f;

            f.U     = io::read_matrix(is);
            f.sigma = io::read_matrix(is);
            f.V     = io::read_matrix(is);
            blk.payload = std::move(f);
            break;
        }
        case 3:
            blk.payload = io::read_matrix(is);
            break;
        default:
            throw std::runtime_error("read_alt_plan: unknown payload tag");
        }

        const Rect  a = blk.active();

        if ( a.rows.begin < 0 || a.rows.end > half.spec.N || a.cols.begin < 0 || a.cols.end > half.spec.num_cols )
            throw std::runtime_error("read_alt_plan: block outside the matrix");

        half.blocks.push_back(std::move(blk));
    }

    return half;
}

} // namespace

void write_alt_plan(std::ostream & os, const AltPlan & plan)
{
    const auto &  p = plan.params;

    os.write(plan_magic, sizeof(plan_magic));
    io::write_u32(os, plan_version);
    io::write_u32(os, static_cast<std::uint32_t>(plan.N));
    io::write_u32(os, static_cast<std::uint32_t>(plan.m));

    io::write_u32(os, static_cast<std::uint32_t>(p.sampling.mode));
    io::write_i64(os, p.sampling.adaptive_rank);
    io::write_i64(os, p.sampling.oversampling);
    io::write_f64(os, p.sampling.tolerance);
    io::write_i64(os, p.sampling.rsvd_rank);
    io::write_i64(os, p.sampling.rsvd_oversampling);
    io::write_i64(os, static_cast<std::int64_t>(p.sampling.rng_seed));
    io::write_i64(os, p.n0);
    io::write_i64(os, p.leaf_max);
    io::write_f64(os, p.trim_tau);
    io::write_u32(os, static_cast<std::uint32_t>(p.mode));
    io::write_f64(os, plan.build_seconds);
    io::write_f64(os, plan.table_seconds);

    write_half(os, plan.odd);
    write_half(os, plan.even);
}

AltPlan read_alt_plan(std::istream & is)
{
    char  magic[8];

    if ( !is.read(magic, sizeof(magic)) || std::memcmp(magic, plan_magic, sizeof(magic)) != 0 )
        throw std::runtime_error("read_alt_plan: bad magic");
    if ( io::read_u32(is) != plan_version )
        throw std::runtime_error("read_alt_plan: unsupported version");

    AltPlan  plan;

    plan.N = static_cast<int>(io::read_u32(is));
    plan.m = static_cast<int>(io::read_u32(is));

    if ( plan.N < 1 || plan.N > (1 << 24) || plan.m > 2 * plan.N - 1 )
        throw std::runtime_error("read_alt_plan: bad header");

    auto &  p = plan.params;

    p.sampling.mode              = static_cast<SamplingMode>(io::read_u32(is));
    p.sampling.adaptive_rank     = io::read_i64(is);
    p.sampling.oversampling      = io::read_i64(is);
    p.sampling.tolerance         = io::read_f64(is);
    p.sampling.rsvd_rank         = io::read_i64(is);
    p.sampling.rsvd_oversampling = io::read_i64(is);
    p.sampling.rng_seed          = static_cast<std::uint64_t>(io::read_i64(is));
    p.n0                         = io::read_i64(is);
    p.leaf_max                   = io::read_i64(is);
    p.trim_tau                   = io::read_f64(is);
    p.mode                       = static_cast<PlanMode>(io::read_u32(is));
    plan.build_seconds           = io::read_f64(is);
    plan.table_seconds           = io::read_f64(is);

    plan.quadrature = std::make_shared<const QuadratureRule>(gauss_legendre(2 * static_cast<std::size_t>(plan.N)));
    plan.odd        = read_half(is, make_alt_spec(plan.N, plan.m, Parity::odd, plan.quadrature));
    plan.even       = read_half(is, make_alt_spec(plan.N, plan.m, Parity::even, plan.quadrature));

    return plan;
}

} // namespace fsht
