#include "fsht/sht.hpp"

#include <fftw3.h>

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

namespace fsht {

ShtGrid make_sht_grid(int N)
{
    if ( N < 1 )
        throw std::invalid_argument("make_sht_grid: N must be positive");

    const auto  rule = gauss_legendre(2 * static_cast<std::size_t>(N));
    ShtGrid     g;

    g.N = N;

    for ( std::size_t l = 0; l < rule.order; ++l )
        g.thetas.push_back(rule.theta(l));

    const int  M = g.longitudes();

    for ( int j = 0; j < M; ++j )
        g.phis.push_back(2.0 * std::numbers::pi * (j + 0.5) / M);

    return g;
}

//
// Coefficients and grid values
//

ShtCoeffs ShtCoeffs::zeros(int N)
{
    if ( N < 1 )
        throw std::invalid_argument("ShtCoeffs: N must be positive");

    ShtCoeffs  c;

    c.N = N;
    c.beta.resize(static_cast<std::size_t>(4 * N - 1));

    for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
        c.order(m) = Eigen::VectorXcd::Zero(2 * N - std::abs(m));

    return c;
}

ShtCoeffs ShtCoeffs::random(int N, std::uint64_t seed)
{
    ShtCoeffs                         c = zeros(N);
    std::mt19937_64                   gen(seed);
    std::normal_distribution<double>  dist;

    for ( auto & v : c.beta )
        for ( Index t = 0; t < v.size(); ++t )
            v(t) = { dist(gen), dist(gen) };

    return c;
}

double ShtCoeffs::squared_norm() const
{
    double  s = 0.0;

    for ( const auto & v : beta )
        s += v.squaredNorm();

    return s;
}

void ShtCoeffs::validate() const
{
    if ( N < 1 || beta.size() != static_cast<std::size_t>(4 * N - 1) )
        throw std::invalid_argument("ShtCoeffs: expected 4N - 1 orders");

    for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
        if ( order(m).size() != 2 * N - std::abs(m) )
            throw std::invalid_argument("ShtCoeffs: order " + std::to_string(m) + " has the wrong length");
}

double relative_error(const ShtCoeffs & a, const ShtCoeffs & reference)
{
    a.validate();
    reference.validate();

    if ( a.N != reference.N )
        throw std::invalid_argument("relative_error: size mismatch");

    double  num = 0.0;

    for ( std::size_t i = 0; i < a.beta.size(); ++i )
        num += (a.beta[i] - reference.beta[i]).squaredNorm();

    return std::sqrt(num / reference.squared_norm());
}

void ShtGridValues::validate() const
{
    if ( N < 1 || values.rows() != 2 * N || values.cols() != 4 * N - 1 )
        throw std::invalid_argument("ShtGridValues: expected a 2N x (4N - 1) grid");
}

//
// Fourier stage
//

namespace detail {

struct FftwFree
{
    void operator()(fftw_complex * p) const { fftw_free(p); }
};

using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

struct FftPlans
{
    int        rows = 0;
    int        length = 0;
    fftw_plan  backward = nullptr;   // e^{+i}, synthesis
    fftw_plan  forward  = nullptr;   // e^{-i}, analysis

    FftPlans(int rows_, int length_)
        : rows(rows_), length(length_)
    {
        FftwBuffer  buf(fftw_alloc_complex(static_cast<std::size_t>(rows) * length));
        int         n[1] = { length };

        backward = fftw_plan_many_dft(1, n, rows, buf.get(), nullptr, 1, length, buf.get(), nullptr, 1, length,
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
        forward  = fftw_plan_many_dft(1, n, rows, buf.get(), nullptr, 1, length, buf.get(), nullptr, 1, length,
                                      FFTW_FORWARD, FFTW_ESTIMATE);

        if ( !backward || !forward )
            throw std::runtime_error("fftw planning failed");
    }

    FftPlans(const FftPlans &)             = delete;
    FftPlans & operator=(const FftPlans &) = delete;

    ~FftPlans()
    {
        if ( backward )
            fftw_destroy_plan(backward);
        if ( forward )
            fftw_destroy_plan(forward);
    }

    FftwBuffer buffer() const
    {
        return FftwBuffer(fftw_alloc_complex(static_cast<std::size_t>(rows) * length));
    }
};

} // namespace detail

ShtPlan::ShtPlan()                                = default;
ShtPlan::ShtPlan(ShtPlan &&) noexcept             = default;
ShtPlan & ShtPlan::operator=(ShtPlan &&) noexcept = default;
ShtPlan::~ShtPlan()                               = default;

namespace {

// DFT bin of mode m on the length-M grid: m for m >= 0, M + m for m < 0.
int bin(int m, int M)
{
    return m >= 0 ? m : M + m;
}

} // namespace

ComplexMatrix ShtPlan::synthesize(const ComplexMatrix & modes) const
{
    const int  M = 4 * N - 1;

    if ( modes.rows() != 2 * N || modes.cols() != M )
        throw std::invalid_argument("synthesize: expected a 2N x (4N - 1) array");

    auto          buf  = fft_->buffer();
    const double  phi0 = std::numbers::pi / M;

    for ( Index l = 0; l < 2 * N; ++l )
        for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
        {
            const Complex  v = modes(l, m + 2 * N - 1) * std::polar(1.0, m * phi0);
            auto &         b = buf[static_cast<std::size_t>(l * M + bin(m, M))];

            b[0] = v.real();
            b[1] = v.imag();
        }

    fftw_execute_dft(fft_->backward, buf.get(), buf.get());

    ComplexMatrix  out(2 * N, M);

    for ( Index l = 0; l < 2 * N; ++l )
        for ( int j = 0; j < M; ++j )
        {
            const auto & b = buf[static_cast<std::size_t>(l * M + j)];

            out(l, j) = { b[0], b[1] };
        }

    return out;
}

ComplexMatrix ShtPlan::analyze(const ComplexMatrix & values) const
{
    const int  M = 4 * N - 1;

    if ( values.rows() != 2 * N || values.cols() != M )
        throw std::invalid_argument("analyze: expected a 2N x (4N - 1) array");

    auto          buf  = fft_->buffer();
    const double  phi0 = std::numbers::pi / M;

    for ( Index l = 0; l < 2 * N; ++l )
        for ( int j = 0; j < M; ++j )
        {
            auto & b = buf[static_cast<std::size_t>(l * M + j)];

            b[0] = values(l, j).real();
            b[1] = values(l, j).imag();
        }

    fftw_execute_dft(fft_->forward, buf.get(), buf.get());

    ComplexMatrix  out(2 * N, M);

    for ( Index l = 0; l < 2 * N; ++l )
        for ( int m = -(2 * N - 1); m <= 2 * N - 1; ++m )
        {
            const auto & b = buf[static_cast<std::size_t>(l * M + bin(m, M))];

            out(l, m + 2 * N - 1) = Complex(b[0], b[1]) * std::polar(1.0 / M, -m * phi0);
        }

    return out;
}

//
// Transforms
//

ShtPlan plan_sht(int N, const AltParams & params)
{
    if ( N < 1 )
        throw std::invalid_argument("plan_sht: N must be positive");

    params.validate();

    const auto  t0 = std::chrono::steady_clock::now();
    ShtPlan     plan;

    plan.N      = N;
    plan.params = params;
    plan.grid   = make_sht_grid(N);

    const auto  quadrature = std::make_shared<const QuadratureRule>(gauss_legendre(2 * static_cast<std::size_t>(N)));

    for ( int m = 0; m <= 2 * N - 1; ++m )
    {
        try
        {
            plan.alt_plans.push_back(plan_alt(N, m, params, quadrature));
        }
        catch ( const std::exception & e )
        {
            throw std::runtime_error("plan_sht: order m = " + std::to_string(m) + ": " + e.what());
        }
    }

    plan.fft_          = std::make_unique<detail::FftPlans>(2 * N, 4 * N - 1);
    plan.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    return plan;
}

ShtGridValues sht_forward(const ShtPlan & plan, const ShtCoeffs & coeffs)
{
    coeffs.validate();

    if ( coeffs.N != plan.N )
        throw std::invalid_argument("sht_forward: coefficient size does not match the plan");

    const int      N = plan.N;
    ComplexMatrix  modes(2 * N, 4 * N - 1);

    // m and -m share one plan: four real columns per apply
    for ( int m = 0; m <= 2 * N - 1; ++m )
    {
        const auto &  pos = coeffs.order(m);
        const auto &  neg = coeffs.order(-m);
        Matrix        x(pos.size(), 4);

        x.col(0) = pos.real();
        x.col(1) = pos.imag();
        x.col(2) = neg.real();
        x.col(3) = neg.imag();

        const Matrix  g = alt_forward(plan.plan_for(m), x);

        for ( Index l = 0; l < 2 * N; ++l )
        {
            modes(l, m + 2 * N - 1)  = { g(l, 0), g(l, 1) };
            modes(l, -m + 2 * N - 1) = { g(l, 2), g(l, 3) };
        }
    }

    return { N, plan.synthesize(modes) };
}

ShtCoeffs sht_inverse(const ShtPlan & plan, const ShtGridValues & values)
{
    values.validate();

    if ( values.N != plan.N )
        throw std::invalid_argument("sht_inverse: grid size does not match the plan");

    const int            N     = plan.N;
    const ComplexMatrix  modes = plan.analyze(values.values);
    ShtCoeffs            out   = ShtCoeffs::zeros(N);

    for ( int m = 0; m <= 2 * N - 1; ++m )
    {
        Matrix  g(2 * N, 4);

        g.col(0) = modes.col(m + 2 * N - 1).real();
        g.col(1) = modes.col(m + 2 * N - 1).imag();
        g.col(2) = modes.col(-m + 2 * N - 1).real();
        g.col(3) = modes.col(-m + 2 * N - 1).imag();

        const Matrix  c = alt_inverse(plan.plan_for(m), g);

        for ( Index t = 0; t < c.rows(); ++t )
        {
            out.order(m)(t)  = { c(t, 0), c(t, 1) };
            out.order(-m)(t) = { c(t, 2), c(t, 3) };
        }
    }

    return out;
}

//
// Files
//

FormatError::FormatError(const std::string & what, std::uint64_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset)
{
}

namespace {

constexpr char           coef_magic[8] = { 'F', 'S', 'H', 'T', 'C', 'O', 'E', 'F' };
constexpr char           grid_magic[8] = { 'F', 'S', 'H', 'T', 'G', 'R', 'I', 'D' };
constexpr std::uint32_t  file_version  = 1;
constexpr std::uint32_t  max_file_N    = 1u << 16;

class Writer
{
public:
    explicit Writer(std::ostream & os) : os_(os) {}

    void bytes(const void * p, std::size_t n) { os_.write(static_cast<const char *>(p), static_cast<std::streamsize>(n)); }

    template <class U>
    void uint(U v)
    {
        std::array<unsigned char, sizeof(U)>  b;

        for ( std::size_t i = 0; i < sizeof(U); ++i )
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b.data(), b.size());
    }

    void scalar(double v, unsigned size)
    {
        if ( size == 16 )
            uint(std::bit_cast<std::uint64_t>(v));
        else
            uint(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }

private:
    std::ostream & os_;
};

class Reader
{
public:
    explicit Reader(std::istream & is) : is_(is) {}

    std::uint64_t offset() const { return offset_; }

    void bytes(void * p, std::size_t n, const char * what)
    {
        if ( !is_.read(static_cast<char *>(p), static_cast<std::streamsize>(n)) )
            throw FormatError(std::string("truncated file while reading ") + what, offset_ + static_cast<std::uint64_t>(is_.gcount()));
        offset_ += n;
    }

    template <class U>
    U uint(const char * what)
    {
        std::array<unsigned char, sizeof(U)>  b;

        bytes(b.data(), b.size(), what);

        U  v = 0;

        for ( std::size_t i = 0; i < sizeof(U); ++i )
            v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));

        return v;
    }

    double scalar(unsigned size)
    {
        if ( size == 16 )
            return std::bit_cast<double>(uint<std::uint64_t>("value"));

        return static_cast<double>(std::bit_cast<float>(uint<std::uint32_t>("value")));
    }

private:
    std::istream & is_;
    std::uint64_t  offset_ = 0;
};

void check_scalar_size(unsigned s)
{
    if ( s != 8 && s != 16 )
        throw std::invalid_argument("scalar size must be 8 (complex64) or 16 (complex128)");
}

struct Header
{
    std::uint32_t  N;
    std::uint32_t  scalar_size;
};

void write_header(Writer & w, const char (&magic)[8], int N, unsigned scalar_size)
{
    w.bytes(magic, 8);
    w.uint(file_version);
    w.uint(static_cast<std::uint32_t>(N));
    w.uint(static_cast<std::uint32_t>(scalar_size));
}

Header read_header(Reader & r, const char (&magic)[8])
{
    char  got[8];

    r.bytes(got, 8, "magic");

    if ( std::memcmp(got, magic, 8) != 0 )
        throw FormatError("bad magic, expected " + std::string(magic, 8), 0);

    const auto  version = r.uint<std::uint32_t>("version");

    if ( version != file_version )
        throw FormatError("unsupported version " + std::to_string(version), 8);

    Header  h;

    h.N = r.uint<std::uint32_t>("N");

    if ( h.N < 1 || h.N > max_file_N )
        throw FormatError("N out of range", 12);

    h.scalar_size = r.uint<std::uint32_t>("scalar size");

    if ( h.scalar_size != 8 && h.scalar_size != 16 )
        throw FormatError("scalar size must be 8 or 16", 16);

    return h;
}

} // namespace

void write_coeffs(std::ostream & os, const ShtCoeffs & c, unsigned scalar_size)
{
    c.validate();
    check_scalar_size(scalar_size);

    Writer  w(os);

    write_header(w, coef_magic, c.N, scalar_size);

    for ( const auto & v : c.beta )
        for ( Index t = 0; t < v.size(); ++t )
        {
            w.scalar(v(t).real(), scalar_size);
            w.scalar(v(t).imag(), scalar_size);
        }
}

ShtCoeffs read_coeffs(std::istream & is)
{
    Reader        r(is);
    const Header  h = read_header(r, coef_magic);
    ShtCoeffs     c = ShtCoeffs::zeros(static_cast<int>(h.N));

    for ( auto & v : c.beta )
        for ( Index t = 0; t < v.size(); ++t )
        {
            const double  re = r.scalar(h.scalar_size);
            const double  im = r.scalar(h.scalar_size);

            v(t) = { re, im };
        }

    return c;
}

void write_grid(std::ostream & os, const ShtGridValues & g, unsigned scalar_size)
{
    g.validate();
    check_scalar_size(scalar_size);

    Writer  w(os);

    write_header(w, grid_magic, g.N, scalar_size);

    for ( Index l = 0; l < g.values.rows(); ++l )
        for ( Index j = 0; j < g.values.cols(); ++j )
        {
            w.scalar(g.values(l, j).real(), scalar_size);
            w.scalar(g.values(l, j).imag(), scalar_size);
        }
}

ShtGridValues read_grid(std::istream & is)
{
    Reader         r(is);
    const Header   h = read_header(r, grid_magic);
    ShtGridValues  g;

    g.N = static_cast<int>(h.N);
    g.values.resize(2 * g.N, 4 * g.N - 1);

    for ( Index l = 0; l < g.values.rows(); ++l )
        for ( Index j = 0; j < g.values.cols(); ++j )
        {
            const double  re = r.scalar(h.scalar_size);
            const double  im = r.scalar(h.scalar_size);

            g.values(l, j) = { re, im };
        }

    return g;
}

std::string peek_magic(std::istream & is)
{
    const auto  pos = is.tellg();
    char        got[8] = {};

    is.read(got, 8);

    const auto  n = is.gcount();

    is.clear();
    is.seekg(pos);

    if ( n != 8 )
        throw FormatError("file shorter than its magic", static_cast<std::uint64_t>(n));

    return std::string(got, 8);
}

} // namespace fsht
