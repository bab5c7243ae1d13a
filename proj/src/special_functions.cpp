#include "fsht/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fsht {

double QuadratureRule::theta(std::size_t l) const
{
    return std::acos(nodes.at(l));
}

namespace {

struct LegendreEval
{
    double  p;    // P_n(x)
    double  dp;   // P_n'(x)
};

// Unnormalized Legendre polynomial and derivative via the Bonnet recurrence.
LegendreEval legendre_with_derivative(std::size_t n, double x)
{
    double  p0 = 1.0;
    double  p1 = x;

    for ( std::size_t k = 2; k <= n; ++k )
    {
        const double  kd = static_cast<double>(k);
        const double  p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;

        p0 = p1;
        p1 = p2;
    }

    const double  nd = static_cast<double>(n);

    return { p1, nd * (x * p1 - p0) / (x * x - 1.0) };
}

} // namespace

QuadratureRule gauss_legendre(std::size_t order)
{
    if ( order == 0 )
        throw std::invalid_argument("gauss_legendre: order must be positive");

    QuadratureRule  rule;

    rule.order = order;
    rule.nodes.assign(order, 0.0);
    rule.weights.assign(order, 0.0);

    const double  n        = static_cast<double>(order);
    const auto    half     = order / 2;
    const double  scale    = 1.0 - (1.0 - 1.0 / n) / (8.0 * n * n);

    // largest root first; the negative half follows by symmetry
    for ( std::size_t i = 0; i < half; ++i )
    {
        const double  guess_angle = std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5);
        double        x           = scale * std::cos(guess_angle);

        for ( int iter = 0; iter < 20; ++iter )
        {
            const auto    ev = legendre_with_derivative(order, x);
            const double  dx = ev.p / ev.dp;

            x -= dx;

            if ( std::abs(dx) <= 1e-15 )
                break;
        }

        const auto    ev = legendre_with_derivative(order, x);
        const double  w  = 2.0 / ((1.0 - x * x) * ev.dp * ev.dp);

        rule.nodes[order - 1 - i]   = x;
        rule.nodes[i]               = -x;
        rule.weights[order - 1 - i] = w;
        rule.weights[i]             = w;
    }

    if ( order % 2 == 1 )
    {
        const auto  ev = legendre_with_derivative(order, 0.0);

        rule.nodes[half]   = 0.0;
        rule.weights[half] = 2.0 / (ev.dp * ev.dp);
    }

    return rule;
}

namespace detail {

RecurrenceCoeffs recurrence_coeffs(int k, int m)
{
    const double  kd   = k;
    const double  md   = m;
    const double  den  = (kd - md) * (kd + md);
    const double  a    = std::sqrt((4.0 * kd * kd - 1.0) / den);
    const double  b    = std::sqrt(((2.0 * kd + 1.0) * (kd - 1.0 - md) * (kd - 1.0 + md))
                                   / ((2.0 * kd - 3.0) * den));

    return { a, b };
}

double sectoral_constant(int m)
{
    double  c = std::sqrt((2.0 * m + 1.0) / 2.0);

    for ( int i = 1; i <= m; ++i )
        c *= std::sqrt((2.0 * i - 1.0) / (2.0 * i));

    return c;
}

ScaledPair sectoral_start(double c_m, int m, double x)
{
    const double  log_value = std::log(c_m) + 0.5 * m * std::log((1.0 - x) * (1.0 + x));
    const double  exponent  = std::floor(log_value / std::numbers::ln2);

    ScaledPair  s;

    s.exponent = static_cast<int>(exponent);
    s.cur      = std::exp(log_value - exponent * std::numbers::ln2);
    s.prev     = 0.0;

    return s;
}

double scaled_value(double mantissa, int exponent)
{
    if ( mantissa == 0.0 )
        return 0.0;

    const double  log_mag = std::log(std::abs(mantissa)) + exponent * std::numbers::ln2;

    if ( log_mag < underflow_log_threshold )
        return 0.0;

    return std::ldexp(mantissa, exponent);
}

} // namespace detail

namespace {

void check_legendre_args(int k, int m, double x)
{
    if ( m < 0 || k < 0 )
        throw std::invalid_argument("legendre: degree and order must be nonnegative");
    if ( m > k )
        throw std::invalid_argument("legendre: order " + std::to_string(m) + " exceeds degree " + std::to_string(k));
    if ( !(std::abs(x) < 1.0) )
        throw std::invalid_argument("legendre: argument must lie in (-1,1)");
}

} // namespace

double legendre_normalized(LegendreParams params, double x)
{
    const int  k = params.degree;
    const int  m = params.order;

    check_legendre_args(k, m, x);

    auto  s = detail::sectoral_start(detail::sectoral_constant(m), m, x);

    for ( int j = m + 1; j <= k; ++j )
        detail::recurrence_step(s, detail::recurrence_coeffs(j, m), x);

    return detail::scaled_value(s.cur, s.exponent);
}

std::vector<double> legendre_normalized_column(int m, int k_max, double x)
{
    check_legendre_args(k_max, m, x);

    std::vector<double>  out;

    out.reserve(static_cast<std::size_t>(k_max - m + 1));

    auto  s = detail::sectoral_start(detail::sectoral_constant(m), m, x);

    out.push_back(detail::scaled_value(s.cur, s.exponent));

    for ( int j = m + 1; j <= k_max; ++j )
    {
        detail::recurrence_step(s, detail::recurrence_coeffs(j, m), x);
        out.push_back(detail::scaled_value(s.cur, s.exponent));
    }

    return out;
}

double turning_point(int k, int m)
{
    if ( m < 1 )
        throw std::invalid_argument("turning_point: order must be at least 1");
    if ( k < m )
        throw std::invalid_argument("turning_point: degree must be at least the order");

    const double  md = m;

    return std::asin(std::sqrt(md * md - 0.25) / (k + 0.5));
}

} // namespace fsht
