#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "bls/errors.hpp"
#include "bls/series.hpp"

// Complex-argument hypergeometric series at the fixed parameter tuples the
// four-point function needs, the gamma function, the constant mu, and the
// crossing-symmetric function A(x) with S3 domain reduction.

namespace bls::special {

using cplx = std::complex<double>;

/// Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms); relative error
/// below 1e-13 across the positive axis.
inline double gamma_positive(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma_positive: requires x > 0");
    static constexpr std::array<double, 9> coef = {
        0.99999999999980993,  676.5203681218851,    -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,  12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // reflection keeps the series argument in its accurate range
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_positive(1.0 - x));
    }
    const double z = x - 1.0;
    double a = coef[0];
    for (int i = 1; i < 9; ++i) a += coef[static_cast<size_t>(i)] / (z + i);
    const double t = z + 7.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

/// mu = 2^(1/3) pi^2 / (3 sqrt(3) Gamma(1/6)^2 Gamma(4/3)^2) ~ 0.0968596.
inline double mu_constant() {
    const double g16 = gamma_positive(1.0 / 6.0);
    const double g43 = gamma_positive(4.0 / 3.0);
    return std::cbrt(2.0) * std::numbers::pi * std::numbers::pi /
           (3.0 * std::sqrt(3.0) * g16 * g16 * g43 * g43);
}

namespace detail {

inline cplx hyp_series(cplx x, double (*ratio)(int), int* terms_out = nullptr) {
    cplx term = 1.0, sum = 1.0;
    int n = 0;
    for (; n < 100000; ++n) {
        term *= x * ratio(n);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    }
    if (terms_out) *terms_out = n + 1;
    return sum;
}

} // namespace detail

/// 2F1(2/3, 1; 4/3; x), power series; requires |x| < 1.
inline cplx hyp2f1_23_1_43(cplx x, int* terms_out = nullptr) {
    if (std::abs(x) >= 1.0)
        throw std::domain_error("hyp2f1_23_1_43: series requires |x| < 1");
    return detail::hyp_series(
        x, [](int n) { return (2.0 / 3.0 + n) / (4.0 / 3.0 + n); }, terms_out);
}

/// 3F2(1, 1, 4/3; 2, 5/3; x), power series; requires |x| < 1.
inline cplx hyp3f2_11_43_2_53(cplx x, int* terms_out = nullptr) {
    if (std::abs(x) >= 1.0)
        throw std::domain_error("hyp3f2_11_43_2_53: series requires |x| < 1");
    return detail::hyp_series(
        x,
        [](int n) { return (1.0 + n) * (4.0 / 3.0 + n) / ((2.0 + n) * (5.0 / 3.0 + n)); },
        terms_out);
}

/// Cross ratio x = z12 z34 / (z13 z24); {0, 1, infinity} are excluded values.
struct CrossRatio {
    cplx x;

    explicit CrossRatio(cplx value) : x(value) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw std::domain_error("CrossRatio: non-finite");
        if (std::abs(x) < 1e-13 || std::abs(x - 1.0) < 1e-13)
            throw std::domain_error("CrossRatio: degenerate (x ~ 0 or 1)");
    }
};

struct AOptions {
    double mu;          // override hook for identity fault-injection runs
    int max_terms = 100000;
    AOptions() : mu(mu_constant()) {}
};

struct AResult {
    double value = 0.0;
    cplx representative;    // where the series was actually summed
    double log_correction = 0.0;
    int terms = 0;          // slowest series at the representative
};

namespace detail {

// The crossing group {x, 1-x, 1/x, 1/(1-x), x/(x-1), (x-1)/x} acts on the
// cross ratio; A(x) = A(1-x) and A(x) = A(1/x) - log|x| generate the log
// corrections, expressed against the representative y:
//   y = x, 1-x         : A(x) = A(y)
//   y = 1/x, 1/(1-x)   : A(x) = A(y) + log|y|
//   y = x/(x-1), (x-1)/x : A(x) = A(y) + log|1-y|
struct OrbitPoint {
    cplx y;
    double corr;
};

inline std::array<OrbitPoint, 6> crossing_orbit(cplx x) {
    const cplx one = 1.0;
    const cplx a = x;
    const cplx b = one - x;
    const cplx c = one / x;
    const cplx d = one / (one - x);
    const cplx e = x / (x - one);
    const cplx f = (x - one) / x;
    return {OrbitPoint{a, 0.0},
            OrbitPoint{b, 0.0},
            OrbitPoint{c, std::log(std::abs(c))},
            OrbitPoint{d, std::log(std::abs(d))},
            OrbitPoint{e, std::log(std::abs(one - e))},
            OrbitPoint{f, std::log(std::abs(one - f))}};
}

// A evaluated by direct series at y, |y| < 1 and |1-y| <= 1:
// A = Re(y 3F2(y))/2 - 6 mu |y(1-y)|^(2/3) |2F1(y)|^2.
inline double a_direct(cplx y, const AOptions& opt, int* terms) {
    int t1 = 0, t2 = 0;
    const cplx f32 = hyp3f2_11_43_2_53(y, &t1);
    const cplx f21 = hyp2f1_23_1_43(y, &t2);
    if (terms) *terms = std::max(t1, t2);
    const double m = std::abs(f21);
    return 0.5 * (y * f32).real() -
           6.0 * opt.mu * std::pow(std::abs(y * (1.0 - y)), 2.0 / 3.0) * m * m;
}

} // namespace detail

/// A(x) with domain reduction. In-lens arguments (|x| <= 1 and |1-x| <= 1)
/// are summed directly, which keeps the crossing-identity checks nontrivial;
/// anything else maps through the orbit to the representative minimizing
/// (max(|y|, |1-y|), |y|). Near the lens corners exp(+-i pi/3) convergence is
/// slow; up to max_terms are accepted and the count is surfaced in AResult.
inline AResult a_function_detailed(CrossRatio cr, const AOptions& opt = AOptions()) {
    const cplx x = cr.x;
    AResult res;
    const double ax = std::abs(x), a1x = std::abs(1.0 - x);
    if (ax <= 1.0 && a1x <= 1.0 && ax < 1.0) {
        res.representative = x;
        res.log_correction = 0.0;
    } else {
        const auto orbit = detail::crossing_orbit(x);
        int best = -1;
        double best_major = 1e300, best_minor = 1e300;
        for (int i = 0; i < 6; ++i) {
            const double m0 = std::abs(orbit[static_cast<size_t>(i)].y);
            const double m1 = std::abs(1.0 - orbit[static_cast<size_t>(i)].y);
            const double major = std::max(m0, m1);
            if (m0 >= 1.0) continue; // series needs |y| < 1
            if (major < best_major - 1e-15 ||
                (major < best_major + 1e-15 && m0 < best_minor)) {
                best = i;
                best_major = major;
                best_minor = m0;
            }
        }
        if (best < 0)
            throw std::domain_error("a_function: no orbit representative with |y| < 1");
        res.representative = orbit[static_cast<size_t>(best)].y;
        res.log_correction = orbit[static_cast<size_t>(best)].corr;
    }
    res.value = detail::a_direct(res.representative, opt, &res.terms) + res.log_correction;
    return res;
}

inline double a_function(cplx x, const AOptions& opt = AOptions()) {
    return a_function_detailed(CrossRatio(x), opt).value;
}

/// Double-series table of A(x) in u = x^(1/3), ubar (root_order fixes the
/// branch step; only 3 is meaningful here). Support:
///   (3j, 0), (0, 3j)   from the x 3F2 / xbar 3F2 pieces,
///   (1+3j, 1+3j')      from -6 mu |x(1-x)|^(2/3) |2F1|^2.
/// `order` counts integer powers of x; the table extends to u^(3*order).
inline series::BiSeries a_series_coefficients(int order, int root_order = 3) {
    if (root_order != 3) throw std::invalid_argument("a_series_coefficients: root_order must be 3");
    if (order < 1 || order > 12) throw std::invalid_argument("a_series_coefficients: order must be in [1,12]");

    // a(x) = x 3F2(...)/4
    series::PowerSeries a;
    a.c.assign(static_cast<size_t>(order) + 1, 0.0);
    double t = 0.25;
    for (int k = 1; k <= order; ++k) {
        a.c[static_cast<size_t>(k)] = t;
        t *= k * (1.0 / 3.0 + k) / ((k + 1) * (2.0 / 3.0 + k));
    }
    // g(x) = (1-x)^(1/3) 2F1(2/3,1;4/3;x)
    series::PowerSeries f21;
    f21.c.assign(static_cast<size_t>(order) + 1, 0.0);
    f21.c[0] = 1.0;
    for (int k = 0; k < order; ++k)
        f21.c[static_cast<size_t>(k + 1)] =
            f21.c[static_cast<size_t>(k)] * (2.0 / 3.0 + k) / (4.0 / 3.0 + k);
    const series::PowerSeries g = series::mul(series::one_minus_x_pow(1.0 / 3.0, order), f21, order);

    const double mu = mu_constant();
    auto table = series::BiSeries::zero(3 * order);
    for (int j = 1; j <= order; ++j) {
        table.at(3 * j, 0) += a.c[static_cast<size_t>(j)];
        table.at(0, 3 * j) += a.c[static_cast<size_t>(j)];
    }
    // -6 mu u ubar g(x) g(xbar)
    for (int j = 0; j <= order; ++j)
        for (int jp = 0; jp <= order; ++jp) {
            const int p = 1 + 3 * j, q = 1 + 3 * jp;
            if (p <= table.max_order && q <= table.max_order)
                table.at(p, q) -= 6.0 * mu * g.c[static_cast<size_t>(j)] * g.c[static_cast<size_t>(jp)];
        }
    return table;
}

} // namespace bls::special
