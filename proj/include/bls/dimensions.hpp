#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "bls/errors.hpp"
#include "bls/mark_distribution.hpp"

namespace bls {

/// Conformal data of one vertex operator at intensity lambda.
struct Dimensions {
    double delta = 0.0;   // layering dimension, in [0, lambda/5]
    double delta_w = 0.0; // winding dimension
    double lambda = 0.0;
};

/// Layering dimension Delta(beta) = (lambda/10)(1 - phi(beta)).
inline double delta_layering(double lambda, const MarkDistribution& dist, double beta) {
    if (!(lambda > 0.0)) throw std::invalid_argument("delta_layering: lambda must be > 0");
    if (beta == 0.0) return 0.0;
    return std::max(0.0, lambda / 10.0 * (1.0 - dist.phi(beta)));
}

namespace detail {

// sum_{m>=1} (1 - cos(m theta))/m^2 = pi*theta/2 - theta^2/4 on [0, 2pi]
// (Fourier series of the second Bernoulli polynomial).
inline double one_minus_cos_sum(double theta) {
    theta = std::fabs(theta);
    theta = std::fmod(theta, 2.0 * std::numbers::pi);
    return 0.5 * std::numbers::pi * theta - 0.25 * theta * theta;
}

// sum_{m>M} 1/m^2, Euler-Maclaurin; error O(M^-9).
inline double zeta2_tail(double M) {
    const double i = 1.0 / M;
    return i - 0.5 * i * i + i * i * i / 6.0 - std::pow(i, 5) / 30.0 + std::pow(i, 7) / 42.0;
}

} // namespace detail

/// Winding dimension Delta_w(beta) = (lambda/2pi^2) sum_{m>=1} (1-phi(m beta))/m^2,
/// to absolute accuracy tol.
///
/// Lattice marks use the exact per-atom closed form. Otherwise the series is
/// truncated adaptively with the tail bounded by env * sum_{m>M} 1/m^2, where
/// env is the distribution's monotone |phi| envelope (1 when unknown). Throws
/// accuracy_error with the achieved bound if the cap is hit first.
inline double delta_winding(double lambda, const MarkDistribution& dist, double beta,
                            double tol = 1e-10) {
    if (!(lambda > 0.0)) throw std::invalid_argument("delta_winding: lambda must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("delta_winding: tol must be > 0");
    if (beta == 0.0) return 0.0;
    const double pref = lambda / (2.0 * std::numbers::pi * std::numbers::pi);

    if (dist.kind() == MarkKind::bernoulli)
        return pref * detail::one_minus_cos_sum(beta);
    if (dist.kind() == MarkKind::lattice) {
        double s = 0.0;
        for (const auto& [n, p] : dist.lattice_atoms())
            if (n > 0) s += 2.0 * p * detail::one_minus_cos_sum(beta * dist.lattice_spacing() * n);
        return pref * s;
    }

    const long cap = 1L << 24;
    double partial = 0.0;
    long m = 1;
    for (long block = 64; m <= cap; block *= 2) {
        const long stop = std::min(cap, block);
        for (; m <= stop; ++m) partial += (1.0 - dist.phi(m * beta)) / (double(m) * double(m));
        const double tail = detail::zeta2_tail(double(stop));
        const double env = dist.tail_envelope((stop + 1) * std::fabs(beta)).value_or(1.0);
        // partial + tail accounts for the full sum of 1/m^2; the only neglected
        // piece is sum_{m>M} phi/m^2, bounded by env * tail
        const double bound = pref * env * tail;
        if (bound < tol) return pref * (partial + tail);
        if (stop == cap)
            throw accuracy_error("delta_winding: tolerance unreachable by truncation", bound);
    }
    return pref * partial; // unreachable
}

/// Layering and winding dimensions together.
inline Dimensions dimensions_of(double lambda, const MarkDistribution& dist, double beta,
                                double tol = 1e-10) {
    return {delta_layering(lambda, dist, beta), delta_winding(lambda, dist, beta, tol), lambda};
}

struct ChargeCheck {
    bool satisfied = false;
    std::optional<long> k; // multiple of 2pi/b for lattice marks, 0 otherwise
};

/// Full-plane charge conservation: sum beta_j in (2pi/b) Z for lattice-type
/// marks (returns k), else sum beta_j = 0, both within 1e-9. The lattice
/// branch is taken whenever the variant is lattice-like, even when k = 0.
inline ChargeCheck charge_conservation(const MarkDistribution& dist,
                                       const std::vector<double>& betas) {
    double sum = 0.0;
    for (double b : betas) sum += b;
    const auto period = dist.lattice_period();
    if (period) {
        const long k = std::lround(sum / *period);
        if (std::fabs(sum - k * *period) <= 1e-9) return {true, k};
        return {false, std::nullopt};
    }
    if (std::fabs(sum) <= 1e-9) return {true, 0};
    return {false, std::nullopt};
}

} // namespace bls
