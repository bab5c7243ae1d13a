#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsht/bench.hpp"
#include "fsht/oracle.hpp"
#include "fsht/sht.hpp"

namespace fsht::cli {

namespace {

struct ParamFlags
{
    double       eps        = 1e-10;
    Index        n0         = -1;       // < 0: default_n0(N)
    Index        rk         = 150;
    Index        rsvd_rank  = 30;
    Index        oversample = 2;
    std::string  sampling   = "cheb";
    std::uint64_t seed      = 0;
    bool         parallel   = false;

    void attach(CLI::App & app)
    {
        app.add_option("--eps", eps, "ID tolerance")->capture_default_str();
        app.add_option("--n0", n0, "partition block size (default 512 for N >= 1024, else max(32, N/8))");
        app.add_option("--rk", rk, "adaptive rank")->capture_default_str();
        app.add_option("--rsvd-rank", rsvd_rank, "rank of non-oscillatory blocks")->capture_default_str();
        app.add_option("--oversample", oversample, "oversampling factor t")->capture_default_str();
        app.add_option("--sampling", sampling, "row sampling")->check(CLI::IsMember({ "cheb", "rand" }))->capture_default_str();
        app.add_option("--seed", seed, "random seed")->capture_default_str();
        app.add_flag("--parallel", parallel, "factorize blocks on all cores");
    }

    AltParams params(int N) const
    {
        AltParams  p;

        p.sampling.tolerance     = eps;
        p.sampling.adaptive_rank = rk;
        p.sampling.rsvd_rank     = rsvd_rank;
        p.sampling.oversampling  = oversample;
        p.sampling.mode          = sampling == "rand" ? SamplingMode::random : SamplingMode::mock_chebyshev;
        p.sampling.rng_seed      = seed;
        p.n0                     = n0 > 0 ? n0 : default_n0(N);
        p.parallel               = parallel;
        p.validate();

        return p;
    }
};

std::vector<Parity> parse_parities(const std::string & s)
{
    if ( s == "odd" )
        return { Parity::odd };
    if ( s == "even" )
        return { Parity::even };

    return { Parity::odd, Parity::even };
}

int resolve_m(int N, int m, const std::string & rule)
{
    if ( m >= 0 )
        return m;

    return m_for(parse_m_rule(rule), N);
}

struct Output
{
    std::ofstream  file;
    std::ostream * os;

    Output(const std::string & path, std::ostream & fallback) : os(&fallback)
    {
        if ( !path.empty() && path != "-" )
        {
            file.open(path, std::ios::binary);
            if ( !file )
                throw std::runtime_error("cannot open " + path + " for writing");
            os = &file;
        }
    }

    std::ostream & stream() { return *os; }
};

std::ifstream open_input(const std::string & path)
{
    std::ifstream  in(path, std::ios::binary);

    if ( !in )
        throw std::runtime_error("cannot open " + path);

    return in;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double grid_rel_err(const ComplexMatrix & a, const ComplexMatrix & b)
{
    const double  d = b.norm();

    return d > 0.0 ? (a - b).norm() / d : (a - b).norm();
}

} // namespace

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
    CLI::App  app{ "Fast associated Legendre and spherical harmonic transforms" };

    app.require_subcommand(1);

    ParamFlags  flags;

    // plan
    auto *       plan_cmd = app.add_subcommand("plan", "build one ALT plan and report diagnostics");
    int          plan_n   = 0;
    int          plan_m   = -1;
    std::string  plan_rule = "N";
    std::string  plan_out;

    plan_cmd->add_option("--n", plan_n, "N (degrees up to 2N - 1)")->required();
    plan_cmd->add_option("--m", plan_m, "order");
    plan_cmd->add_option("--m-rule", plan_rule, "order rule: 0, 0.5N, N, 1.5N")->capture_default_str();
    plan_cmd->add_option("--out", plan_out, "write the serialized plan here");
    flags.attach(*plan_cmd);

    // transform
    auto *       tr_cmd = app.add_subcommand("transform", "apply an SHT to a coefficient or grid file");
    std::string  tr_in;
    std::string  tr_out;
    std::string  tr_dir = "auto";
    bool         tr_verify = false;
    unsigned     tr_scalar = 16;

    tr_cmd->add_option("--in", tr_in, "input file")->required();
    tr_cmd->add_option("--out", tr_out, "output file")->required();
    tr_cmd->add_option("--direction", tr_dir, "forward, inverse or auto (from the magic)")
        ->check(CLI::IsMember({ "auto", "forward", "inverse" }))->capture_default_str();
    tr_cmd->add_flag("--verify", tr_verify, "compare with the dense transform (N <= 128)");
    tr_cmd->add_option("--scalar-size", tr_scalar, "8 (complex64) or 16 (complex128)")
        ->check(CLI::IsMember({ 8u, 16u }))->capture_default_str();
    flags.attach(*tr_cmd);

    // make-coeffs
    auto *         mk_cmd = app.add_subcommand("make-coeffs", "write a random or zero coefficient file");
    int            mk_n   = 0;
    std::uint64_t  mk_seed = 0;
    bool           mk_zero = false;
    std::string    mk_out;

    mk_cmd->add_option("--n", mk_n, "N")->required();
    mk_cmd->add_option("--seed", mk_seed, "seed")->capture_default_str();
    mk_cmd->add_flag("--zero", mk_zero, "all coefficients zero");
    mk_cmd->add_option("--out", mk_out, "output file")->required();

    // bench
    auto *             bench_cmd = app.add_subcommand("bench", "timing and accuracy records per (N, m, parity)");
    std::vector<int>   bench_n{ 256, 512, 1024 };
    std::string        bench_rule = "N";
    std::string        bench_parity = "both";
    std::string        bench_format = "csv";
    std::string        bench_out;
    int                bench_trials = 1;
    int                bench_dense_max = 4096;

    bench_cmd->add_option("--n", bench_n, "sizes, comma separated")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--m-rule", bench_rule, "0, 0.5N, N or 1.5N")->capture_default_str();
    bench_cmd->add_option("--parity", bench_parity, "odd, even or both")
        ->check(CLI::IsMember({ "odd", "even", "both" }))->capture_default_str();
    bench_cmd->add_option("--format", bench_format, "csv or json")->check(CLI::IsMember({ "csv", "json" }))->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "output file (default stdout)");
    bench_cmd->add_option("--trials", bench_trials, "error metric trials")->capture_default_str();
    bench_cmd->add_option("--dense-max", bench_dense_max, "largest N with dense comparison")->capture_default_str();
    flags.attach(*bench_cmd);

    // verify
    auto *                    ver_cmd = app.add_subcommand("verify", "check accuracy against the dense transform");
    std::vector<int>          ver_n{ 256 };
    std::vector<std::string>  ver_rules{ "0", "0.5N", "N", "1.5N" };
    double                    ver_tol = 1e-5;

    ver_cmd->add_option("--n", ver_n, "sizes, comma separated")->delimiter(',')->capture_default_str();
    ver_cmd->add_option("--m-rule", ver_rules, "order rules, comma separated")->delimiter(',')->capture_default_str();
    ver_cmd->add_option("--tol", ver_tol, "bound on eps_fwd and eps_inv")->capture_default_str();
    flags.attach(*ver_cmd);

    // export-blocks
    auto *       ex_cmd = app.add_subcommand("export-blocks", "partition of one ALT half as JSON");
    int          ex_n   = 0;
    int          ex_m   = -1;
    std::string  ex_rule = "N";
    std::string  ex_parity = "odd";
    std::string  ex_out;
    bool         ex_no_trim = false;

    ex_cmd->add_option("--n", ex_n, "N")->required();
    ex_cmd->add_option("--m", ex_m, "order");
    ex_cmd->add_option("--m-rule", ex_rule, "order rule")->capture_default_str();
    ex_cmd->add_option("--parity", ex_parity, "odd or even")->check(CLI::IsMember({ "odd", "even" }))->capture_default_str();
    ex_cmd->add_option("--out", ex_out, "output file (default stdout)");
    ex_cmd->add_flag("--no-trim", ex_no_trim, "skip trimming");
    flags.attach(*ex_cmd);

    try
    {
        app.parse(argc, argv);
    }
    catch ( const CLI::CallForHelp & e )
    {
        out << app.help();
        return exit_ok;
    }
    catch ( const CLI::ParseError & e )
    {
        if ( e.get_exit_code() == 0 )
        {
            out << e.what() << '\n';
            return exit_ok;
        }

        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try
    {
        if ( *plan_cmd )
        {
            const int   m    = resolve_m(plan_n, plan_m, plan_rule);
            const auto  plan = plan_alt(plan_n, m, flags.params(plan_n));
            const auto  d    = plan_diagnostics(plan);

            if ( !plan_out.empty() )
            {
                std::ofstream  f(plan_out, std::ios::binary);

                if ( !f )
                    throw std::runtime_error("cannot open " + plan_out);
                write_alt_plan(f, plan);
            }

            nlohmann::json  j = {
                { "N", plan.N }, { "m", plan.m }, { "n0", plan.params.n0 },
                { "max_rank", d.max_rank }, { "total_nnz", d.total_nnz }, { "block_count", d.block_count },
                { "oscillatory", d.oscillatory }, { "non_oscillatory", d.non_oscillatory }, { "turning", d.turning },
                { "dropped", d.dropped }, { "build_seconds", d.build_seconds },
                { "apply_seconds", time_alt_forward(plan, 3, flags.seed) },
            };

            out << j.dump(2) << '\n';
            return exit_ok;
        }

        if ( *mk_cmd )
        {
            const auto     c = mk_zero ? ShtCoeffs::zeros(mk_n) : ShtCoeffs::random(mk_n, mk_seed);
            std::ofstream  f(mk_out, std::ios::binary);

            if ( !f )
                throw std::runtime_error("cannot open " + mk_out);
            write_coeffs(f, c);

            return exit_ok;
        }

        if ( *tr_cmd )
        {
            auto               in    = open_input(tr_in);
            const std::string  magic = peek_magic(in);
            bool               forward;

            if ( tr_dir == "auto" )
            {
                if ( magic == "FSHTCOEF" )
                    forward = true;
                else if ( magic == "FSHTGRID" )
                    forward = false;
                else
                    throw FormatError("unrecognized magic", 0);
            }
            else
                forward = tr_dir == "forward";

            ShtCoeffs      coeffs;
            ShtGridValues  grid;
            int            N = 0;

            if ( forward )
            {
                coeffs = read_coeffs(in);
                N      = coeffs.N;
            }
            else
            {
                grid = read_grid(in);
                N    = grid.N;
            }

            auto        t0   = std::chrono::steady_clock::now();
            const auto  plan = plan_sht(N, flags.params(N));
            const double  t_plan = seconds_since(t0);

            t0 = std::chrono::steady_clock::now();

            ShtGridValues  g_out;
            ShtCoeffs      c_out;

            if ( forward )
                g_out = sht_forward(plan, coeffs);
            else
                c_out = sht_inverse(plan, grid);

            const double  t_apply = seconds_since(t0);

            {
                std::ofstream  f(tr_out, std::ios::binary);

                if ( !f )
                    throw std::runtime_error("cannot open " + tr_out);
                if ( forward )
                    write_grid(f, g_out, tr_scalar);
                else
                    write_coeffs(f, c_out, tr_scalar);
            }

            out << (forward ? "forward" : "inverse") << " N=" << N << " plan_seconds=" << t_plan << " apply_seconds=" << t_apply << '\n';

            if ( tr_verify )
            {
                if ( N > dense_sht_max_N )
                {
                    err << "verify: dense reference limited to N <= " << dense_sht_max_N << '\n';
                    return exit_usage;
                }

                double  e;

                if ( forward )
                    e = grid_rel_err(g_out.values, dense_sht_forward(N, coeffs.beta));
                else
                {
                    ShtCoeffs  ref;

                    ref.N    = N;
                    ref.beta = dense_sht_inverse(N, grid.values);

                    e = ref.squared_norm() > 0.0 ? relative_error(c_out, ref) : std::sqrt(c_out.squared_norm());
                }

                const bool  ok = e <= 1e-6;

                out << "verify rel_err=" << e << (ok ? " PASS" : " FAIL") << '\n';

                return ok ? exit_ok : exit_verify_fail;
            }

            return exit_ok;
        }

        if ( *bench_cmd )
        {
            BenchConfig  cfg;

            cfg.sizes       = bench_n;
            cfg.rule        = parse_m_rule(bench_rule);
            cfg.parities    = parse_parities(bench_parity);
            cfg.params      = flags.params(bench_n.empty() ? 1024 : bench_n.front());
            cfg.auto_n0     = flags.n0 <= 0;
            cfg.trials      = bench_trials;
            cfg.dense_max_N = bench_dense_max;

            const auto  records = run_bench(cfg);
            Output      o(bench_out, out);

            if ( bench_format == "json" )
                write_bench_json(o.stream(), records, cfg);
            else
                write_bench_csv(o.stream(), records);

            return exit_ok;
        }

        if ( *ver_cmd )
        {
            bool  ok = true;

            for ( int N : ver_n )
            {
                if ( N > dense_alt_max_N )
                    throw std::invalid_argument("verify: N above the dense guard");

                for ( const auto & rule : ver_rules )
                {
                    const int   m    = m_for(parse_m_rule(rule), N);
                    const auto  plan = plan_alt(N, m, flags.params(N));
                    Rng         rng  = Rng(flags.seed).derive(static_cast<std::uint64_t>(N) * 8 + static_cast<std::uint64_t>(m));

                    for ( const auto * half : { &plan.odd, &plan.even } )
                    {
                        if ( half->spec.num_cols == 0 )
                            continue;

                        const auto  dense = dense_alt_build(half->spec);
                        const auto  ef    = metric_eps_fwd(*half, dense, 1, 256, rng);
                        const auto  ei    = metric_eps_inv(*half, dense, 1, 256, rng);
                        const bool  pass  = ef.value <= ver_tol && ei.value <= ver_tol;

                        ok = ok && pass;
                        out << "N=" << N << " m=" << m << " parity=" << to_string(half->spec.parity) << " eps_fwd=" << ef.value
                            << " eps_inv=" << ei.value << (pass ? " PASS" : " FAIL") << '\n';
                    }

                    Matrix  c(plan.coeff_length(), 1);
                    std::normal_distribution<double>  dist;

                    for ( Index i = 0; i < c.rows(); ++i )
                        c(i, 0) = dist(rng.engine());

                    const double  rt   = (alt_inverse(plan, alt_forward(plan, c)) - c).norm() / c.norm();
                    const bool    pass = rt <= 1e-6;

                    ok = ok && pass;
                    out << "N=" << N << " m=" << m << " round_trip=" << rt << (pass ? " PASS" : " FAIL") << '\n';
                }
            }

            return ok ? exit_ok : exit_verify_fail;
        }

        if ( *ex_cmd )
        {
            const int     m      = resolve_m(ex_n, ex_m, ex_rule);
            const Parity  parity = ex_parity == "even" ? Parity::even : Parity::odd;
            const auto    spec   = make_alt_spec(ex_n, m, parity);
            auto          res    = partition(spec, flags.params(ex_n).n0);

            if ( !ex_no_trim )
            {
                const auto  oracle = entry_oracle(spec);

                for ( auto & b : res.blocks )
                    b = trim_block(*oracle, std::move(b));
            }

            Output  o(ex_out, out);

            o.stream() << blocks_to_json(res) << '\n';

            return exit_ok;
        }
    }
    catch ( const FormatError & e )
    {
        err << "format error: " << e.what() << '\n';
        return exit_usage;
    }
    catch ( const std::invalid_argument & e )
    {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    catch ( const std::exception & e )
    {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    return exit_usage;
}

} // namespace fsht::cli
