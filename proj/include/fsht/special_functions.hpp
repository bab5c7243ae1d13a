#ifndef FSHT_SPECIAL_FUNCTIONS_HPP
#define FSHT_SPECIAL_FUNCTIONS_HPP

#include <cstddef>
#include <vector>

namespace fsht {

//
// Gauss-Legendre rule on (-1,1). Nodes are strictly ascending, so
// theta(l) = arccos(nodes[l]) is strictly descending.
//
struct QuadratureRule
{
    std::size_t          order = 0;
    std::vector<double>  nodes;
    std::vector<double>  weights;

    double theta(std::size_t l) const;
};

QuadratureRule gauss_legendre(std::size_t order);

struct LegendreParams
{
    int  degree = 0;   // k
    int  order  = 0;   // m, 0 <= m <= k
};

// Natural-log magnitude below which a value is returned as exact zero.
inline constexpr double underflow_log_threshold = -700.0;

//
// L2-normalized associated Legendre function, int_{-1}^{1} P^2 dx = 1,
// without the Condon-Shortley phase (P_m^m >= 0).
//
double legendre_normalized(LegendreParams params, double x);

// [P_m^m(x), ..., P_kmax^m(x)] from one upward recurrence pass.
std::vector<double> legendre_normalized_column(int m, int k_max, double x);

// Turning point arcsin(sqrt(m^2 - 1/4) / (k + 1/2)) in (0, pi/2); m >= 1.
double turning_point(int k, int m);

namespace detail {

// Three-term recurrence in the degree for the normalized functions:
//   P_k = a_k x P_{k-1} - b_k P_{k-2}
struct RecurrenceCoeffs
{
    double  a;
    double  b;
};

RecurrenceCoeffs recurrence_coeffs(int k, int m);

// sqrt((2m+1)/2) * prod_{i=1..m} sqrt((2i-1)/(2i)); P_m^m(x) = c_m (1-x^2)^{m/2}
double sectoral_constant(int m);

//
// Value mantissa * 2^exponent. The recurrence runs on the mantissa pair and
// rescales by exact powers of two, so values far below the double range are
// carried without underflow until they are read out.
//
struct ScaledPair
{
    double  prev     = 0.0;   // P_{k-1}
    double  cur      = 0.0;   // P_k
    int     exponent = 0;
};

ScaledPair sectoral_start(double c_m, int m, double x);

inline void recurrence_step(ScaledPair & s, const RecurrenceCoeffs & c, double x)
{
    const double  next = c.a * x * s.cur - c.b * s.prev;

    s.prev = s.cur;
    s.cur  = next;

    if ( next > 0x1p600 || next < -0x1p600 )
    {
        s.prev *= 0x1p-600;
        s.cur  *= 0x1p-600;
        s.exponent += 600;
    }
}

// Reads out mantissa * 2^exponent, clamping to zero below the threshold.
double scaled_value(double mantissa, int exponent);

} // namespace detail

} // namespace fsht

#endif // FSHT_SPECIAL_FUNCTIONS_HPP
