#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bls::detail {

// Hankel asymptotic expansion of J_nu(x), DLMF 10.17.3. Accurate to full
// double precision for x >= 40 and 4*nu^2 not much larger than ~2x (the
// series terms then decrease monotonically far below 1e-17 before the
// divergent turnaround at k ~ 2x).
inline double bessel_j_hankel(double nu, double x) {
    const double mu = 4.0 * nu * nu;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    for (int k = 1; k <= 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (8.0 * k * x);
        if (k % 2 == 1) {
            q += (k % 4 == 1) ? term : -term;
        } else {
            p += (k % 4 == 0) ? term : -term;
        }
        if (std::fabs(term) < 1e-18) break;
    }
    const double chi = x - nu * 0.5 * std::numbers::pi - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

// J_nu(x) for x >= 40 and nu = m/2 >= 0 (integer or half-integer order).
// Orders 0 and 1/2 come from the Hankel expansion / the exact closed form;
// higher orders by anchored downward recurrence
//   J_{n-1}(x) = (2n/x) J_n(x) - J_{n+1}(x),
// which is stable downward and normalized against the bottom-order anchor.
inline double bessel_j_large_x(double nu, double x) {
    if (x < 40.0) throw std::invalid_argument("bessel_j_large_x: x < 40");
    const bool half = std::fabs(nu - std::floor(nu) - 0.5) < 0.25;
    const double base = half ? 0.5 : 0.0;
    const double anchor = half ? std::sqrt(2.0 / (std::numbers::pi * x)) * std::sin(x)
                               : bessel_j_hankel(0.0, x);
    if (nu == base) return anchor;
    const int steps = static_cast<int>(std::lround(nu - base));
    if (steps == 1 && !half) return bessel_j_hankel(1.0, x);

    const int start = steps + 20;
    double jp = 0.0;                       // J_{order+1} trial
    double jc = 1e-30;                     // J_{order} trial
    double at_nu = 0.0;
    double order = base + start;
    for (int n = start; n >= 1; --n) {
        const double jm = (2.0 * order / x) * jc - jp;
        jp = jc;
        jc = jm;
        order -= 1.0;
        if (n - 1 == steps) at_nu = jc;
        // rescale to avoid overflow in the x << order regime
        if (std::fabs(jc) > 1e250) {
            jc *= 1e-250;
            jp *= 1e-250;
            at_nu *= 1e-250;
        }
    }
    return at_nu * (anchor / jc);
}

} // namespace bls::detail
