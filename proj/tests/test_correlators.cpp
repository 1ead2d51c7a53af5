#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bls/correlators.hpp"

using namespace bls;
using std::numbers::pi;

namespace {

CorrelatorConfig bern_cfg(double lambda, std::vector<ChargedPoint> pts) {
    CorrelatorConfig cfg;
    cfg.lambda = lambda;
    cfg.dist = MarkDistribution::bernoulli();
    cfg.points = std::move(pts);
    return cfg;
}

// factor-by-factor evaluation at 50-digit precision (frozen):
// lambda=1, bernoulli, beta=(pi,pi), z=(i, 1+i)
constexpr double halfplane_ref = 0.63580075190588211383638877244897356339436761293418;

// random charge-conserving Gaussian-mark config
CorrelatorConfig random_4pt(std::mt19937_64& gen, double lambda = 1.0) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    CorrelatorConfig cfg;
    cfg.lambda = lambda;
    cfg.dist = MarkDistribution::gaussian(1.0);
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double beta = j < 3 ? unif(gen) : -sum;
        sum += beta;
        cfg.points.push_back({{3.0 * unif(gen), 3.0 * unif(gen)}, beta});
    }
    bool ok = true;
    for (size_t i = 0; i < 4; ++i)
        for (size_t j = i + 1; j < 4; ++j)
            ok = ok && std::abs(cfg.points[i].z - cfg.points[j].z) > 0.2;
    if (!ok) return random_4pt(gen, lambda);
    return cfg;
}

} // namespace

TEST_CASE("two-point plane") {
    auto cfg = bern_cfg(1.0, {{{0.0, 0.0}, pi}, {{1.0, 0.0}, pi}});
    CHECK(two_point_plane(cfg).value == doctest::Approx(1.0).epsilon(1e-14));

    cfg.points[1].z = {2.0, 0.0};
    CHECK(two_point_plane(cfg).value == doctest::Approx(std::pow(2.0, -0.8)).epsilon(1e-14));

    CorrelatorConfig bad;
    bad.lambda = 1.0;
    bad.dist = MarkDistribution::gaussian(1.0);
    bad.points = {{{0.0, 0.0}, 0.3}, {{1.0, 0.0}, 0.3}};
    const auto res = two_point_plane(bad);
    CHECK(res.value == 0.0);
    CHECK(res.vanishes_by_charge);

    cfg.points[1].z = cfg.points[0].z;
    CHECK_THROWS_AS(two_point_plane(cfg), std::invalid_argument);
}

TEST_CASE("three-point plane") {
    auto zero = bern_cfg(1.0, {{{0.0, 0.0}, 0.0}, {{1.0, 0.0}, 0.0}, {{0.0, 1.5}, 0.0}});
    CHECK(three_point_plane(zero).value == doctest::Approx(1.0));

    // (pi, pi, 0) with k=1: direct substitution into the quoted formula
    auto cfg = bern_cfg(1.0, {{{0.0, 0.0}, pi}, {{2.0, 0.0}, pi}, {{0.5, 1.5}, 0.0}});
    const double d = 0.2;
    const double expect = std::pow(std::abs(cfg.points[0].z - cfg.points[1].z), -2.0 * (2 * d)) *
                          std::pow(std::abs(cfg.points[0].z - cfg.points[2].z), -2.0 * 0.0) *
                          std::pow(std::abs(cfg.points[1].z - cfg.points[2].z), -2.0 * 0.0);
    CHECK(three_point_plane(cfg).value == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("four-point plane: all-zero charges and crossing symmetry") {
    auto zeros = bern_cfg(1.3, {{{0.0, 0.0}, 0.0},
                                {{1.0, 0.0}, 0.0},
                                {{0.3, 1.2}, 0.0},
                                {{-0.7, 0.4}, 0.0}});
    CHECK(four_point_plane(zeros).value == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 gen(11);
    const auto cfg = random_4pt(gen, 0.8);
    const double base = four_point_plane(cfg).value;
    CHECK(base > 0.0);
    std::array<int, 4> perm = {0, 1, 2, 3};
    do {
        CorrelatorConfig permuted = cfg;
        for (int j = 0; j < 4; ++j)
            permuted.points[static_cast<size_t>(j)] = cfg.points[static_cast<size_t>(perm[static_cast<size_t>(j)])];
        CHECK(four_point_plane(permuted).value == doctest::Approx(base).epsilon(1e-10));
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("four-point reduces to three-point when beta4 = 0") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        CorrelatorConfig cfg;
        cfg.lambda = 1.2;
        cfg.dist = MarkDistribution::gaussian(0.8);
        const double b1 = unif(gen), b2 = unif(gen);
        cfg.points = {{{unif(gen), unif(gen)}, b1},
                      {{2.5 + unif(gen), unif(gen)}, b2},
                      {{unif(gen), 2.5 + unif(gen)}, -b1 - b2},
                      {{-2.5 + unif(gen), -2.5 + unif(gen)}, 0.0}};
        CorrelatorConfig three = cfg;
        three.points.pop_back();
        const double lhs = four_point_plane(cfg).value;
        const double rhs = three_point_plane(three).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("identity insertion leaves values unchanged") {
    std::mt19937_64 gen(17);
    auto cfg = random_4pt(gen);
    cfg.points.resize(2);
    cfg.points[1].beta = -cfg.points[0].beta;
    const double two = two_point_plane(cfg).value;
    CorrelatorConfig three = cfg;
    three.points.push_back({{5.0, -4.0}, 0.0});
    CHECK(three_point_plane(three).value == doctest::Approx(two).epsilon(1e-10));

    CorrelatorConfig half;
    half.lambda = 0.9;
    half.dist = MarkDistribution::gaussian(1.0);
    half.domain = Domain::upper_half_plane;
    half.points = {{{0.4, 1.2}, 0.7}};
    const double one = one_point_halfplane(half).value;
    half.points.push_back({{-2.0, 3.0}, 0.0});
    CHECK(two_point_halfplane(half).value == doctest::Approx(one).epsilon(1e-10));
}

TEST_CASE("Mobius covariance of plane correlators") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        const auto cfg = random_4pt(gen, 0.6);
        const double a = 1.0 + 0.4 * unif(gen), b = 0.5 * unif(gen), c = 0.25 * unif(gen);
        const MobiusMap map{a, b, c, (1.0 + b * c) / a};
        bool near_pole = false;
        for (const auto& p : cfg.points)
            near_pole = near_pole || std::abs(map.c * p.z + map.d) < 0.15;
        if (near_pole) {
            --rep;
            continue;
        }
        const auto img = mobius_image(cfg.points, map);
        CorrelatorConfig moved = cfg;
        moved.points = img.points;
        double factor = 1.0;
        for (size_t j = 0; j < 4; ++j)
            factor *= std::pow(img.fprime_abs[j],
                               -2.0 * delta_layering(cfg.lambda, cfg.dist, cfg.points[j].beta));
        CHECK(four_point_plane(moved).value ==
              doctest::Approx(four_point_plane(cfg).value * factor).epsilon(1e-8));

        // 2- and 3-point versions
        CorrelatorConfig two = cfg;
        two.points.resize(2);
        two.points[1].beta = -two.points[0].beta;
        const auto img2 = mobius_image(two.points, map);
        CorrelatorConfig two_moved = two;
        two_moved.points = img2.points;
        double f2 = 1.0;
        for (size_t j = 0; j < 2; ++j)
            f2 *= std::pow(img2.fprime_abs[j],
                           -2.0 * delta_layering(two.lambda, two.dist, two.points[j].beta));
        CHECK(two_point_plane(two_moved).value ==
              doctest::Approx(two_point_plane(two).value * f2).epsilon(1e-8));
    }
}

TEST_CASE("mobius_image basics") {
    const std::vector<ChargedPoint> pts = {{{0.0, 1.0}, 0.5}, {{2.0, 0.0}, -0.5}};
    const auto ident = mobius_image(pts, MobiusMap{});
    CHECK(ident.points[0].z == pts[0].z);
    CHECK(ident.fprime_abs[0] == doctest::Approx(1.0));

    const double s = 1.7; // dilation z -> s^2 z as (s z + 0)/(0 z + 1/s)
    const auto dil = mobius_image(pts, MobiusMap{s, 0.0, 0.0, 1.0 / s});
    CHECK(dil.fprime_abs[0] == doctest::Approx(s * s).epsilon(1e-14));
    CHECK(dil.fprime_abs[1] == doctest::Approx(s * s).epsilon(1e-14));

    // inversion-type map at z = i: |f'| = |1/(ci + d)|^2
    const MobiusMap inv{0.0, 1.0, -1.0, 0.0}; // z -> -1/z, det = 1
    const auto got = mobius_image({{{0.0, 1.0}, 1.0}}, inv);
    CHECK(got.fprime_abs[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(mobius_image({{{0.0, 0.0}, 1.0}}, inv), std::domain_error);
    CHECK_THROWS_AS(mobius_image(pts, MobiusMap{2.0, 0.0, 0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("half-plane one- and two-point functions") {
    CorrelatorConfig cfg;
    cfg.lambda = 1.0;
    cfg.dist = MarkDistribution::bernoulli();
    cfg.domain = Domain::upper_half_plane;
    cfg.points = {{{0.0, 1.0}, 0.0}};
    CHECK(one_point_halfplane(cfg).value == doctest::Approx(1.0));
    cfg.points[0].beta = pi;
    CHECK(one_point_halfplane(cfg).value == doctest::Approx(std::pow(2.0, -0.4)).epsilon(1e-14));
    cfg.points[0].z = {0.0, 5.0};
    CHECK(one_point_halfplane(cfg).value == doctest::Approx(std::pow(10.0, -0.4)).epsilon(1e-14));
    cfg.points[0].z = {0.0, -1.0};
    CHECK_THROWS_AS(one_point_halfplane(cfg), std::domain_error);

    cfg.points = {{{0.0, 1.0}, pi}, {{1.0, 1.0}, pi}};
    CHECK(two_point_halfplane(cfg).value == doctest::Approx(halfplane_ref).epsilon(1e-13));

    // cluster decomposition: ratio to product of one-point functions -> 1
    double prev_gap = 1e300;
    for (double sep = 10.0; sep <= 1e6; sep *= 10.0) {
        CorrelatorConfig two = cfg;
        two.points = {{{0.0, 1.0}, pi}, {{sep, 2.0}, pi}};
        CorrelatorConfig p1 = two, p2 = two;
        p1.points = {two.points[0]};
        p2.points = {two.points[1]};
        const double ratio = two_point_halfplane(two).value /
                             (one_point_halfplane(p1).value * one_point_halfplane(p2).value);
        const double gap = std::fabs(ratio - 1.0);
        CHECK(gap <= prev_gap + 1e-15); // monotone up to the roundoff floor
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-5);
}

TEST_CASE("n-point skeleton") {
    CorrelatorConfig cfg = bern_cfg(1.0, {{{0.0, 0.0}, pi}, {{1.0, 0.0}, 0.4}, {{0.0, 1.0}, -0.4}});
    // all weights zero -> 1
    CHECK(n_point_skeleton(cfg, [](auto, auto) { return 0.0; }) == doctest::Approx(1.0));

    // single point with weight alpha reproduces the cutoff one-point function
    CorrelatorConfig one = bern_cfg(2.0, {{{0.0, 0.0}, pi}});
    const double alpha = 0.2 * std::log(3.0); // (1/5) log(R/delta), R/delta = 3
    const double got = n_point_skeleton(one, [&](auto, auto) { return alpha; });
    CHECK(got == doctest::Approx(std::pow(3.0, -2.0 * bls::delta_layering(2.0, one.dist, pi)))
              .epsilon(1e-12));

    CHECK_THROWS_AS(n_point_skeleton(cfg, [](auto, auto) { return -1.0; }), std::invalid_argument);
}

TEST_CASE("winding n-point skeleton reproduces the winding one-point function") {
    CorrelatorConfig one;
    one.lambda = 1.0;
    one.dist = MarkDistribution::gaussian(1.0);
    one.points = {{{0.0, 0.0}, 1.0}};
    const double log_ratio = 1.0; // R/delta = e
    const int kmax = 2000;
    const auto provider = [&](std::span<const int>, std::span<const int>) {
        std::vector<WindingClass> classes;
        for (int k = -kmax; k <= kmax; ++k) {
            if (k == 0) continue;
            classes.push_back({{k}, log_ratio / (2.0 * pi * pi * k * k)});
        }
        return classes;
    };
    const double got = winding_n_point_skeleton(one, provider);
    const double dw = bls::delta_winding(1.0, one.dist, 1.0, 1e-12);
    // truncated |k| <= kmax sum vs the full series: consistent to the tail bound
    const double tail_bound = 2.0 * 1.0 / (2.0 * pi * pi) * (1.0 / kmax);
    CHECK(std::fabs(-std::log(got) / (2.0 * log_ratio) - dw) < tail_bound);

    CHECK(winding_n_point_skeleton(one, [](auto, auto) { return std::vector<WindingClass>{}; }) ==
          doctest::Approx(1.0));
}

TEST_CASE("free-field limit") {
    const std::vector<ChargedPoint> pts = {{{0.0, 0.0}, 0.0}, {{2.0, 0.0}, 0.0}};
    CHECK(free_field_limit({0.0, 0.0}, pts) == doctest::Approx(1.0));
    const double g = 0.3;
    CHECK(free_field_limit({g, -g}, pts) == doctest::Approx(std::pow(2.0, -4.0 * g * g)).epsilon(1e-13));
    CHECK_THROWS_AS(free_field_limit({0.1, 0.2}, pts), std::invalid_argument);

    CHECK(gamma_of(5.0, MarkDistribution::gaussian(2.0), 0.3) ==
          doctest::Approx(std::sqrt(5.0 * 4.0 / 20.0) * 0.3).epsilon(1e-14));

    // four_point_plane approaches the free-field product as lambda grows
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const std::vector<double> cs = {0.8, -0.5, 0.9, -1.2};
    std::vector<ChargedPoint> geom;
    for (int j = 0; j < 4; ++j) geom.push_back({{2.0 * unif(gen), 2.0 * unif(gen)}, 0.0});
    const auto dist = MarkDistribution::gaussian(1.0);
    double prev = 1e300;
    for (const double lambda : {10.0, 100.0, 1000.0}) {
        CorrelatorConfig cfg;
        cfg.lambda = lambda;
        cfg.dist = dist;
        std::vector<double> gammas;
        for (int j = 0; j < 4; ++j) {
            cfg.points.push_back({geom[static_cast<size_t>(j)].z,
                                  cs[static_cast<size_t>(j)] / std::sqrt(lambda)});
            gammas.push_back(gamma_of(lambda, dist, cfg.points.back().beta));
        }
        const double exact = four_point_plane(cfg).value;
        const double ff = free_field_limit(gammas, cfg.points);
        const double rel = std::fabs(exact / ff - 1.0);
        CHECK(rel < prev);
        prev = rel;
    }
    CHECK(prev < 0.01);
}

TEST_CASE("lambda-power property across correlator kinds") {
    std::mt19937_64 gen(29);
    for (int rep = 0; rep < 100; ++rep) {
        auto cfg = random_4pt(gen, 0.3 + 0.03 * rep);
        const auto pair = lambda_power_property(cfg);
        CHECK(pair.at_lambda == doctest::Approx(pair.at_half_power).epsilon(1e-12));
    }
    // half-plane two-point at lambda = 0.3
    CorrelatorConfig half;
    half.lambda = 0.3;
    half.dist = MarkDistribution::gaussian(1.0);
    half.domain = Domain::upper_half_plane;
    half.points = {{{0.0, 1.0}, 0.7}, {{1.5, 2.0}, -0.2}};
    const auto pair = lambda_power_property(half);
    CHECK(pair.at_lambda == doctest::Approx(pair.at_half_power).epsilon(1e-12));
}

TEST_CASE("positivity of closed-form correlators") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 25; ++rep) {
        const auto cfg = random_4pt(gen, 1.0 + rep * 0.1);
        CHECK(four_point_plane(cfg).value > 0.0);
    }
}
