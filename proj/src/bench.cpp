#include "fsht/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace fsht {

namespace {

using clock_type = std::chrono::steady_clock;

Vector gaussian(Index n, Rng & rng)
{
    std::normal_distribution<double>  dist;
    Vector                            v(n);

    for ( Index i = 0; i < n; ++i )
        v(i) = dist(rng.engine());

    return v;
}

// Shared driver: fast values over all rows, reference values on demand.
template <class Reference>
MetricResult sampled_error(const Vector & fast, const IndexList & support, Index sample_size, Rng & rng,
                           Reference && reference, double & acc)
{
    MetricResult  r;

    if ( support.empty() )
    {
        r.degenerate = true;
        return r;
    }

    const Index  count = std::min<Index>(sample_size, static_cast<Index>(support.size()));

    for ( int attempt = 0; attempt < 3; ++attempt )
    {
        const auto  picks = sample_indices(count, static_cast<Index>(support.size()), SamplingMode::random, rng);
        double      num   = 0.0;
        double      den   = 0.0;

        for ( Index p : picks )
        {
            const Index   i   = support[static_cast<std::size_t>(p)];
            const double  ref = reference(i);

            num += (fast(i) - ref) * (fast(i) - ref);
            den += ref * ref;
        }

        if ( den > 0.0 )
        {
            acc += std::sqrt(num / den);
            return r;
        }
    }

    r.degenerate = true;

    return r;
}

} // namespace

MetricResult metric_eps_fwd(const AltHalf & half, const DenseAltMatrix & dense, int trials, Index sample_size, Rng & rng)
{
    const Matrix &  A = dense.data;

    if ( A.rows() != half.spec.N || A.cols() != half.spec.num_cols )
        throw std::invalid_argument("metric_eps_fwd: dense matrix does not match the plan half");
    if ( trials < 1 || sample_size < 1 )
        throw std::invalid_argument("metric_eps_fwd: trials and sample size must be positive");

    IndexList  support;

    for ( Index i = 0; i < A.rows(); ++i )
        if ( A.cols() > 0 && A.row(i).cwiseAbs().maxCoeff() > 0.0 )
            support.push_back(i);

    MetricResult  out;
    double        acc = 0.0;
    int           used = 0;

    for ( int t = 0; t < trials; ++t )
    {
        const Vector  c    = gaussian(A.cols(), rng);
        const Vector  fast = apply_half(half, c).col(0);
        const auto    r    = sampled_error(fast, support, sample_size, rng, [&](Index i) {
            double  s = 0.0;

            for ( Index j = 0; j < A.cols(); ++j )
                s += A(i, j) * c(j);

            return s;
        }, acc);

        out.degenerate = out.degenerate || r.degenerate;
        used += r.degenerate ? 0 : 1;
    }

    out.value = used > 0 ? acc / used : 0.0;

    return out;
}

MetricResult metric_eps_inv(const AltHalf & half, const DenseAltMatrix & dense, int trials, Index sample_size, Rng & rng)
{
    const Matrix &  A = dense.data;

    if ( A.rows() != half.spec.N || A.cols() != half.spec.num_cols )
        throw std::invalid_argument("metric_eps_inv: dense matrix does not match the plan half");
    if ( trials < 1 || sample_size < 1 )
        throw std::invalid_argument("metric_eps_inv: trials and sample size must be positive");

    IndexList  support;

    for ( Index j = 0; j < A.cols(); ++j )
        if ( A.col(j).cwiseAbs().maxCoeff() > 0.0 )
            support.push_back(j);

    MetricResult  out;
    double        acc = 0.0;
    int           used = 0;

    for ( int t = 0; t < trials; ++t )
    {
        Vector  wv = gaussian(A.rows(), rng);

        for ( Index i = 0; i < A.rows(); ++i )
            wv(i) *= half.spec.weight(i);

        const Vector  fast = apply_half_transpose(half, wv).col(0);
        const auto    r    = sampled_error(fast, support, sample_size, rng, [&](Index j) {
            double  s = 0.0;

            for ( Index i = 0; i < A.rows(); ++i )
                s += A(i, j) * wv(i);

            return s;
        }, acc);

        out.degenerate = out.degenerate || r.degenerate;
        used += r.degenerate ? 0 : 1;
    }

    out.value = used > 0 ? acc / used : 0.0;

    return out;
}

MRule parse_m_rule(const std::string & s)
{
    if ( s == "0" )
        return MRule::zero;
    if ( s == "0.5N" || s == "N/2" )
        return MRule::half;
    if ( s == "N" || s == "1N" )
        return MRule::one;
    if ( s == "1.5N" || s == "3N/2" )
        return MRule::three_halves;

    throw std::invalid_argument("unknown m rule '" + s + "' (expected 0, 0.5N, N or 1.5N)");
}

std::string to_string(MRule r)
{
    switch ( r )
    {
    case MRule::zero:         return "0";
    case MRule::half:         return "0.5N";
    case MRule::one:          return "N";
    case MRule::three_halves: return "1.5N";
    }

    return "?";
}

int m_for(MRule r, int N)
{
    int  m = 0;

    switch ( r )
    {
    case MRule::zero:         m = 0; break;
    case MRule::half:         m = N / 2; break;
    case MRule::one:          m = N; break;
    case MRule::three_halves: m = 3 * N / 2; break;
    }

    return std::min(m, 2 * N - 1);
}

namespace {

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());

    return v[v.size() / 2];
}

template <class F>
double median_time(int reps, F && f)
{
    std::vector<double>  t;

    for ( int r = 0; r < std::max(1, reps); ++r )
    {
        const auto  t0 = clock_type::now();

        f();
        t.push_back(std::chrono::duration<double>(clock_type::now() - t0).count());
    }

    return median(std::move(t));
}

} // namespace

std::vector<BenchRecord> run_bench(const BenchConfig & cfg)
{
    std::vector<BenchRecord>  out;

    for ( int N : cfg.sizes )
    {
        const int  m      = m_for(cfg.rule, N);
        AltParams  params = cfg.params;

        if ( cfg.auto_n0 )
            params.n0 = default_n0(N);

        const AltPlan  plan = plan_alt(N, m, params);

        for ( Parity parity : cfg.parities )
        {
            const AltHalf &  half = parity == Parity::odd ? plan.odd : plan.even;
            BenchRecord      rec;

            rec.N      = N;
            rec.m      = m;
            rec.parity = parity;
            rec.n0     = params.n0;
            rec.T_fac  = half.seconds + plan.table_seconds;

            rec.block_count = half.partition_blocks;
            for ( const auto & s : half.stats )
            {
                rec.max_rank   = std::max(rec.max_rank, s.rank);
                rec.total_nnz += s.nnz;
            }

            Rng           rng = Rng(params.sampling.rng_seed).derive(static_cast<std::uint64_t>(N) * 4 + (parity == Parity::odd ? 1 : 2));
            const Vector  x   = gaussian(half.spec.num_cols, rng);
            double        sink = 0.0;

            rec.T_app = median_time(cfg.app_reps, [&] { sink += apply_half(half, x).sum(); });

            if ( N <= cfg.dense_max_N )
            {
                const auto  dense = dense_alt_build(half.spec, true);

                rec.T_mat = dense.seconds;
                rec.T_dir = median_time(cfg.app_reps, [&] { sink += dense_matvec(dense.data, x).sum(); });

                if ( half.spec.num_cols > 0 )
                {
                    rec.eps_fwd = metric_eps_fwd(half, dense, cfg.trials, cfg.sample_size, rng).value;
                    rec.eps_inv = metric_eps_inv(half, dense, cfg.trials, cfg.sample_size, rng).value;
                }
                else
                {
                    rec.eps_fwd = 0.0;
                    rec.eps_inv = 0.0;
                }
            }

            if ( !std::isfinite(sink) )
                throw std::runtime_error("run_bench: non-finite output");

            out.push_back(rec);
        }
    }

    return out;
}

namespace {

std::string fmt(double v, const char * spec)
{
    char  buf[64];

    std::snprintf(buf, sizeof(buf), spec, v);

    return buf;
}

std::string opt(const std::optional<double> & v, const char * spec)
{
    return v ? fmt(*v, spec) : std::string();
}

} // namespace

void write_bench_csv(std::ostream & os, const std::vector<BenchRecord> & records)
{
    os << bench_csv_header << '\n';

    for ( const auto & r : records )
    {
        os << r.N << ',' << r.m << ',' << to_string(r.parity) << ',' << fmt(r.T_fac, "%.6e") << ',' << fmt(r.T_app, "%.6e")
           << ',' << opt(r.T_mat, "%.6e") << ',' << opt(r.T_dir, "%.6e") << ',' << opt(r.eps_fwd, "%.17g") << ','
           << opt(r.eps_inv, "%.17g") << ',' << r.block_count << ',' << r.max_rank << ',' << r.total_nnz << '\n';
    }
}

void write_bench_json(std::ostream & os, const std::vector<BenchRecord> & records, const BenchConfig & cfg)
{
    nlohmann::json  doc;
    const auto &    s = cfg.params.sampling;

    doc["config"] = {
        { "m_rule", to_string(cfg.rule) },
        { "sampling", s.mode == SamplingMode::mock_chebyshev ? "cheb" : "rand" },
        { "rk", s.adaptive_rank },
        { "oversample", s.oversampling },
        { "eps", s.tolerance },
        { "rsvd_rank", s.rsvd_rank },
        { "seed", s.rng_seed },
        { "parallel", cfg.params.parallel },
        { "n0_rule", cfg.auto_n0 ? "512 for N >= 1024, else max(32, N/8)" : "fixed" },
        { "dense_max_N", cfg.dense_max_N },
    };

    auto &  recs = doc["records"] = nlohmann::json::array();

    for ( const auto & r : records )
    {
        nlohmann::json  j = {
            { "N", r.N }, { "m", r.m }, { "parity", to_string(r.parity) }, { "n0", r.n0 },
            { "T_fac", r.T_fac }, { "T_app", r.T_app },
            { "block_count", r.block_count }, { "max_rank", r.max_rank }, { "total_nnz", r.total_nnz },
        };

        j["T_mat"]   = r.T_mat ? nlohmann::json(*r.T_mat) : nlohmann::json();
        j["T_dir"]   = r.T_dir ? nlohmann::json(*r.T_dir) : nlohmann::json();
        j["eps_fwd"] = r.eps_fwd ? nlohmann::json(*r.eps_fwd) : nlohmann::json();
        j["eps_inv"] = r.eps_inv ? nlohmann::json(*r.eps_inv) : nlohmann::json();

        recs.push_back(std::move(j));
    }

    os << doc.dump(2) << '\n';
}

double loglog_slope(const std::vector<double> & x, const std::vector<double> & y)
{
    if ( x.size() != y.size() || x.size() < 2 )
        throw std::invalid_argument("loglog_slope: need at least two matching points");

    const double  n = static_cast<double>(x.size());
    double        sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;

    for ( std::size_t i = 0; i < x.size(); ++i )
    {
        const double  lx = std::log(x[i]);
        const double  ly = std::log(y[i]);

        sx  += lx;
        sy  += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }

    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace fsht
