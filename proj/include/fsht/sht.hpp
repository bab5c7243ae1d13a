#ifndef FSHT_SHT_HPP
#define FSHT_SHT_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsht/alt.hpp"

namespace fsht {

using ComplexMatrix = Eigen::MatrixXcd;

//
// Tensor grid: 2N Gauss-Legendre angles (row l is node l, ascending in x) by
// 4N - 1 equispaced longitudes phi_j = 2 pi (j + 1/2) / (4N - 1).
//
struct ShtGrid
{
    int                  N = 0;
    std::vector<double>  thetas;
    std::vector<double>  phis;

    int longitudes() const { return 4 * N - 1; }
};

ShtGrid make_sht_grid(int N);

// beta[m + 2N - 1](k - |m|) for |m| <= k <= 2N - 1.
struct ShtCoeffs
{
    int                            N = 0;
    std::vector<Eigen::VectorXcd>  beta;

    static ShtCoeffs zeros(int N);
    static ShtCoeffs random(int N, std::uint64_t seed);

    Eigen::VectorXcd &       order(int m) { return beta[static_cast<std::size_t>(m + 2 * N - 1)]; }
    const Eigen::VectorXcd & order(int m) const { return beta[static_cast<std::size_t>(m + 2 * N - 1)]; }

    double squared_norm() const;
    void   validate() const;
};

double relative_error(const ShtCoeffs & a, const ShtCoeffs & reference);

// f(theta_l, phi_j), 2N x (4N - 1).
struct ShtGridValues
{
    int            N = 0;
    ComplexMatrix  values;

    void validate() const;
};

namespace detail {
struct FftPlans;
}

class ShtPlan
{
public:
    ShtPlan();
    ShtPlan(ShtPlan &&) noexcept;
    ShtPlan & operator=(ShtPlan &&) noexcept;
    ~ShtPlan();

    int                          N = 0;
    AltParams                    params;
    ShtGrid                      grid;
    std::vector<AltPlan>         alt_plans;   // m = 0 .. 2N - 1; -m reuses |m|
    double                       build_seconds = 0.0;

    const AltPlan & plan_for(int m) const { return alt_plans[static_cast<std::size_t>(m < 0 ? -m : m)]; }

    // Fourier stage on a 2N x (4N - 1) array. Column m + 2N - 1 of the mode
    // array holds g(m, theta_l).
    ComplexMatrix synthesize(const ComplexMatrix & modes) const;
    ComplexMatrix analyze(const ComplexMatrix & values) const;

private:
    std::unique_ptr<detail::FftPlans> fft_;

    friend ShtPlan plan_sht(int N, const AltParams & params);
};

ShtPlan plan_sht(int N, const AltParams & params);

ShtGridValues sht_forward(const ShtPlan & plan, const ShtCoeffs & coeffs);
ShtCoeffs     sht_inverse(const ShtPlan & plan, const ShtGridValues & values);

//
// Files: 8 magic bytes ("FSHTCOEF" or "FSHTGRID"), u32 version = 1, u32 N,
// u32 scalar size (8: complex64, 16: complex128), then little-endian complex
// values. Coefficients are m-major from -(2N - 1), k ascending; the grid is
// theta-major.
//
class FormatError : public std::runtime_error
{
public:
    FormatError(const std::string & what, std::uint64_t offset);

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

void          write_coeffs(std::ostream & os, const ShtCoeffs & c, unsigned scalar_size = 16);
ShtCoeffs     read_coeffs(std::istream & is);
void          write_grid(std::ostream & os, const ShtGridValues & g, unsigned scalar_size = 16);
ShtGridValues read_grid(std::istream & is);

// Reads the magic bytes only and rewinds.
std::string peek_magic(std::istream & is);

} // namespace fsht

#endif // FSHT_SHT_HPP
