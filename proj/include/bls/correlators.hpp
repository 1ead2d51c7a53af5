#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bls/dimensions.hpp"
#include "bls/mark_distribution.hpp"
#include "bls/special.hpp"

// Closed-form correlators of layering vertex operators in the full plane and
// the upper half-plane, plus the general n-point skeleton with pluggable loop
// weights. All shipped formulas are the post-limit normalized forms: the
// regulator constants (2 delta e^{-5 alpha_hat} and e^{-pi/sqrt(3)}) are
// absorbed into the operator normalization and never appear at runtime.

namespace bls {

using cplx = std::complex<double>;

/// An insertion (z, beta); Im z > 0 required for half-plane correlators.
struct ChargedPoint {
    cplx z;
    double beta = 0.0;
};

enum class Domain { plane, upper_half_plane };

struct CorrelatorConfig {
    double lambda = 1.0;
    MarkDistribution dist = MarkDistribution::bernoulli();
    std::vector<ChargedPoint> points;
    Domain domain = Domain::plane;
};

/// Value plus machine-readable flags. Charge-violating plane correlators
/// vanish: value 0 with the flag set, not an error (sweeps need the zero).
struct CorrelatorResult {
    double value = 0.0;
    bool vanishes_by_charge = false;
    std::optional<cplx> cross_ratio;
    std::optional<double> a_value;
    std::vector<double> deltas; // per-insertion layering dimensions
};

namespace detail {

inline void require_distinct(const std::vector<ChargedPoint>& pts) {
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            if (std::abs(pts[i].z - pts[j].z) <= 1e-12)
                throw std::invalid_argument("correlator: coincident insertion points");
}

inline void require_upper_half(const std::vector<ChargedPoint>& pts) {
    for (const auto& p : pts)
        if (!(p.z.imag() > 0.0))
            throw std::domain_error("correlator: insertion must satisfy Im z > 0");
}

inline ChargeCheck plane_charge(const CorrelatorConfig& cfg) {
    std::vector<double> betas;
    betas.reserve(cfg.points.size());
    for (const auto& p : cfg.points) betas.push_back(p.beta);
    return charge_conservation(cfg.dist, betas);
}

} // namespace detail

/// <O O>_C = |z1 - z2|^(-4 Delta_1).
inline CorrelatorResult two_point_plane(const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 2) throw std::invalid_argument("two_point_plane: needs 2 points");
    detail::require_distinct(cfg.points);
    CorrelatorResult res;
    res.deltas = {delta_layering(cfg.lambda, cfg.dist, cfg.points[0].beta),
                  delta_layering(cfg.lambda, cfg.dist, cfg.points[1].beta)};
    if (!detail::plane_charge(cfg).satisfied) {
        res.vanishes_by_charge = true;
        return res;
    }
    res.value = std::pow(std::abs(cfg.points[0].z - cfg.points[1].z), -4.0 * res.deltas[0]);
    return res;
}

/// Triple product with unit three-point coefficient.
inline CorrelatorResult three_point_plane(const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 3) throw std::invalid_argument("three_point_plane: needs 3 points");
    detail::require_distinct(cfg.points);
    CorrelatorResult res;
    for (const auto& p : cfg.points)
        res.deltas.push_back(delta_layering(cfg.lambda, cfg.dist, p.beta));
    if (!detail::plane_charge(cfg).satisfied) {
        res.vanishes_by_charge = true;
        return res;
    }
    const double d1 = res.deltas[0], d2 = res.deltas[1], d3 = res.deltas[2];
    const auto r = [&](int i, int j) { return std::abs(cfg.points[static_cast<size_t>(i)].z -
                                                       cfg.points[static_cast<size_t>(j)].z); };
    res.value = std::pow(r(0, 1), -2.0 * (d1 + d2 - d3)) *
                std::pow(r(0, 2), -2.0 * (d1 + d3 - d2)) *
                std::pow(r(1, 2), -2.0 * (d2 + d3 - d1));
    return res;
}

/// Four-point function:
///   exp[-2 A(x) (sum_i Delta_i - sum_{j>=2} Delta_1j)]
///   * |z13 z24/(z12 z34)|^(-2 D12) |z13 z24/(z14 z23)|^(-2 D14)
///   * |z12 z14/z24|^(-2 D1) |z12 z23/z13|^(-2 D2)
///   * |z23 z34/z24|^(-2 D3) |z14 z34/z13|^(-2 D4),
/// x = z12 z34/(z13 z24).
inline CorrelatorResult four_point_plane(const CorrelatorConfig& cfg,
                                         const special::AOptions& aopt = special::AOptions()) {
    if (cfg.points.size() != 4) throw std::invalid_argument("four_point_plane: needs 4 points");
    detail::require_distinct(cfg.points);
    CorrelatorResult res;
    for (const auto& p : cfg.points)
        res.deltas.push_back(delta_layering(cfg.lambda, cfg.dist, p.beta));
    if (!detail::plane_charge(cfg).satisfied) {
        res.vanishes_by_charge = true;
        return res;
    }
    const cplx z1 = cfg.points[0].z, z2 = cfg.points[1].z, z3 = cfg.points[2].z,
               z4 = cfg.points[3].z;
    const cplx z12 = z1 - z2, z13 = z1 - z3, z14 = z1 - z4, z23 = z2 - z3, z24 = z2 - z4,
               z34 = z3 - z4;
    const cplx x = z12 * z34 / (z13 * z24);
    const double b1 = cfg.points[0].beta, b2 = cfg.points[1].beta, b3 = cfg.points[2].beta,
                 b4 = cfg.points[3].beta;
    const double d1 = res.deltas[0], d2 = res.deltas[1], d3 = res.deltas[2], d4 = res.deltas[3];
    const double d12 = delta_layering(cfg.lambda, cfg.dist, b1 + b2);
    const double d13 = delta_layering(cfg.lambda, cfg.dist, b1 + b3);
    const double d14 = delta_layering(cfg.lambda, cfg.dist, b1 + b4);
    const double exponent_sum = d1 + d2 + d3 + d4 - d12 - d13 - d14;

    const double a = special::a_function(x, aopt);
    res.cross_ratio = x;
    res.a_value = a;
    res.value = std::exp(-2.0 * a * exponent_sum) *
                std::pow(std::abs(z13 * z24 / (z12 * z34)), -2.0 * d12) *
                std::pow(std::abs(z13 * z24 / (z14 * z23)), -2.0 * d14) *
                std::pow(std::abs(z12 * z14 / z24), -2.0 * d1) *
                std::pow(std::abs(z12 * z23 / z13), -2.0 * d2) *
                std::pow(std::abs(z23 * z34 / z24), -2.0 * d3) *
                std::pow(std::abs(z14 * z34 / z13), -2.0 * d4);
    return res;
}

/// <O~>_H = |z1 - conj(z1)|^(-2 Delta_1) = (2 Im z1)^(-2 Delta_1).
inline CorrelatorResult one_point_halfplane(const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 1) throw std::invalid_argument("one_point_halfplane: needs 1 point");
    detail::require_upper_half(cfg.points);
    CorrelatorResult res;
    res.deltas = {delta_layering(cfg.lambda, cfg.dist, cfg.points[0].beta)};
    res.value = std::pow(2.0 * cfg.points[0].z.imag(), -2.0 * res.deltas[0]);
    return res;
}

/// Half-plane two-point function; sigma = |z1-z2|^2 / |z1-conj(z2)|^2 in (0,1),
/// the hypergeometric factor is evaluated at 1 - sigma.
inline CorrelatorResult two_point_halfplane(const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 2) throw std::invalid_argument("two_point_halfplane: needs 2 points");
    detail::require_upper_half(cfg.points);
    detail::require_distinct(cfg.points);
    CorrelatorResult res;
    const double b1 = cfg.points[0].beta, b2 = cfg.points[1].beta;
    const double d1 = delta_layering(cfg.lambda, cfg.dist, b1);
    const double d2 = delta_layering(cfg.lambda, cfg.dist, b2);
    const double d12 = delta_layering(cfg.lambda, cfg.dist, b1 + b2);
    res.deltas = {d1, d2};
    const cplx z1 = cfg.points[0].z, z2 = cfg.points[1].z;
    const double r12 = std::abs(z1 - z2);
    const double r1c2 = std::abs(z1 - std::conj(z2));
    const double sigma = (r12 / r1c2) * (r12 / r1c2);
    if (!(1.0 - sigma < 1.0)) throw std::domain_error("two_point_halfplane: degenerate sigma");
    const double e = d1 + d2 - d12;
    const double hyp = special::hyp3f2_11_43_2_53(cplx(1.0 - sigma)).real();
    res.value = std::pow(r12, -2.0 * e) * std::pow(r1c2, 2.0 * e) *
                std::pow(2.0 * z1.imag(), -2.0 * d1) * std::pow(2.0 * z2.imag(), -2.0 * d2) *
                std::exp(-e * (1.0 - sigma) * hyp);
    return res;
}

/// Loop weights alpha(S|S^c) for the n-point skeleton: the measure of loops
/// separating the subset S from its complement. Must be nonnegative.
using WeightProvider =
    std::function<double(std::span<const int> subset, std::span<const int> complement)>;

/// Winding weights: per subset S, a finite list of (winding multiset K, weight).
struct WindingClass {
    std::vector<int> windings; // one integer per point of S, in subset order
    double weight = 0.0;
};
using WindingWeightProvider = std::function<std::vector<WindingClass>(
    std::span<const int> subset, std::span<const int> complement)>;

/// Product over nonempty subsets S of exp[-lambda alpha(S|S^c)(1 - phi(sum_S beta))].
inline double n_point_skeleton(const CorrelatorConfig& cfg, const WeightProvider& weights) {
    const size_t n = cfg.points.size();
    if (n == 0 || n > 20) throw std::invalid_argument("n_point_skeleton: needs 1..20 points");
    double log_value = 0.0;
    std::vector<int> subset, comp;
    for (unsigned long mask = 1; mask < (1ul << n); ++mask) {
        subset.clear();
        comp.clear();
        double beta_sum = 0.0;
        for (size_t i = 0; i < n; ++i) {
            if (mask & (1ul << i)) {
                subset.push_back(static_cast<int>(i));
                beta_sum += cfg.points[i].beta;
            } else {
                comp.push_back(static_cast<int>(i));
            }
        }
        const double alpha = weights(subset, comp);
        if (alpha < 0.0)
            throw std::invalid_argument("n_point_skeleton: provider returned negative weight");
        log_value -= cfg.lambda * alpha * (1.0 - cfg.dist.phi(beta_sum));
    }
    return std::exp(log_value);
}

/// Winding analogue; the provider enumerates winding classes K per subset
/// (bounded domains only, full-plane multi-point existence is open).
inline double winding_n_point_skeleton(const CorrelatorConfig& cfg,
                                       const WindingWeightProvider& weights) {
    const size_t n = cfg.points.size();
    if (n == 0 || n > 20) throw std::invalid_argument("winding_n_point_skeleton: needs 1..20 points");
    double log_value = 0.0;
    std::vector<int> subset, comp;
    for (unsigned long mask = 1; mask < (1ul << n); ++mask) {
        subset.clear();
        comp.clear();
        for (size_t i = 0; i < n; ++i) {
            if (mask & (1ul << i)) subset.push_back(static_cast<int>(i));
            else comp.push_back(static_cast<int>(i));
        }
        for (const auto& cls : weights(subset, comp)) {
            if (cls.windings.size() != subset.size())
                throw std::invalid_argument("winding_n_point_skeleton: K size mismatch");
            if (cls.weight < 0.0)
                throw std::invalid_argument("winding_n_point_skeleton: negative weight");
            double arg = 0.0;
            for (size_t j = 0; j < subset.size(); ++j)
                arg += cls.windings[j] * cfg.points[static_cast<size_t>(subset[j])].beta;
            log_value -= cfg.lambda * cls.weight * (1.0 - cfg.dist.phi(arg));
        }
    }
    return std::exp(log_value);
}

/// Mobius map z -> (az+b)/(cz+d), ad - bc = 1.
struct MobiusMap {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    cplx apply(cplx z) const { return (a * z + b) / (c * z + d); }
    cplx derivative(cplx z) const {
        const cplx den = c * z + d;
        return 1.0 / (den * den);
    }
};

struct MobiusImage {
    std::vector<ChargedPoint> points;
    std::vector<double> fprime_abs; // |f'(z_j)|
};

/// Transformed insertions plus the |f'(z_j)| factors of the covariance law
/// <prod O(f(z_j))> = prod |f'(z_j)|^(-2 Delta_j) <prod O(z_j)>.
inline MobiusImage mobius_image(const std::vector<ChargedPoint>& points, const MobiusMap& map) {
    if (std::abs(map.a * map.d - map.b * map.c - 1.0) > 1e-12)
        throw std::invalid_argument("mobius_image: require ad - bc = 1");
    MobiusImage out;
    for (const auto& p : points) {
        if (std::abs(map.c * p.z + map.d) < 1e-12)
            throw std::domain_error("mobius_image: insertion at the pole of the map");
        out.points.push_back({map.apply(p.z), p.beta});
        out.fprime_abs.push_back(std::abs(map.derivative(p.z)));
    }
    return out;
}

/// Free-field vertex correlator prod_{i<j} |z_ij|^(4 gamma_i gamma_j); the
/// lambda -> infinity limit of the plane correlators at fixed lambda beta^2.
inline double free_field_limit(const std::vector<double>& gammas,
                               const std::vector<ChargedPoint>& points) {
    if (gammas.size() != points.size())
        throw std::invalid_argument("free_field_limit: size mismatch");
    double sum = 0.0;
    for (double g : gammas) sum += g;
    if (std::fabs(sum) > 1e-12)
        throw std::invalid_argument("free_field_limit: gammas must sum to 0");
    double log_value = 0.0;
    for (size_t i = 0; i < points.size(); ++i)
        for (size_t j = i + 1; j < points.size(); ++j)
            log_value += 4.0 * gammas[i] * gammas[j] * std::log(std::abs(points[i].z - points[j].z));
    return std::exp(log_value);
}

/// gamma = sqrt(lambda E[X^2]/20) * beta, the free-field charge of (lambda, beta).
inline double gamma_of(double lambda, const MarkDistribution& dist, double beta) {
    return std::sqrt(lambda * dist.second_moment() / 20.0) * beta;
}

/// Evaluates the closed form appropriate for cfg (by point count and domain).
inline CorrelatorResult evaluate(const CorrelatorConfig& cfg) {
    if (cfg.domain == Domain::plane) {
        switch (cfg.points.size()) {
        case 2: return two_point_plane(cfg);
        case 3: return three_point_plane(cfg);
        case 4: return four_point_plane(cfg);
        default: throw std::invalid_argument("evaluate: plane supports 2..4 points");
        }
    }
    switch (cfg.points.size()) {
    case 1: return one_point_halfplane(cfg);
    case 2: return two_point_halfplane(cfg);
    default: throw std::invalid_argument("evaluate: half-plane supports 1..2 points");
    }
}

struct LambdaPowerPair {
    double at_lambda = 0.0;
    double at_half_power = 0.0; // <...>_{lambda=1/2} raised to 2 lambda
};

/// Both sides of <...>_lambda = <...>_{1/2}^{2 lambda}; the loop weights are
/// intensity-independent so the identity holds exactly for every closed form.
inline LambdaPowerPair lambda_power_property(const CorrelatorConfig& cfg) {
    LambdaPowerPair out;
    out.at_lambda = evaluate(cfg).value;
    CorrelatorConfig half = cfg;
    half.lambda = 0.5;
    out.at_half_power = std::pow(evaluate(half).value, 2.0 * cfg.lambda);
    return out;
}

} // namespace bls
