#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "bls/correlators.hpp"
#include "bls/dimensions.hpp"
#include "bls/errors.hpp"
#include "bls/series.hpp"
#include "bls/special.hpp"

// Conformal-block expansion of the four-point function. The internal spectrum
// sits on the lattice Delta^(p,p') = Delta_12 + p/3 (barred: p'/3); matching
// the double series of G(x) in u = x^(1/3) against Virasoro block series
// extracts the three-point coefficient products C34 C12.

namespace bls::blocks {

using cplx = std::complex<double>;

struct BlockLabel {
    int p = 0;
    int p_bar = 0;
    auto operator<=>(const BlockLabel&) const = default;
};

struct CoeffEntry {
    BlockLabel label;
    double delta = 0.0;     // Delta_12 + p/3
    double delta_bar = 0.0; // Delta_12 + p'/3
    double coeff = 0.0;     // C34^(p,p') C12^(p,p')
};

struct CoeffTable {
    std::vector<CoeffEntry> entries;
    int pmax = 0;
    double residual = 0.0;          // RMS mismatch on the window beyond pmax
    double degeneracy_margin = 0.0; // |1 - phi(beta1+beta2)|

    const CoeffEntry* find(int p, int p_bar) const {
        for (const auto& e : entries)
            if (e.label.p == p && e.label.p_bar == p_bar) return &e;
        return nullptr;
    }
};

namespace verma {

// States of a Verma module as maps PBW-ordered partition -> coefficient,
// partitions sorted descending: (k1 >= k2 >= ...) stands for L_{-k1}...L_{-km}|D>.
using Partition = std::vector<int>;
using State = std::map<Partition, double>;

inline int level_of(const Partition& p) {
    int s = 0;
    for (int k : p) s += k;
    return s;
}

// L_n applied to coeff * L_{-Y}|Delta>, accumulated into out. Uses
// [L_m, L_n] = (m-n) L_{m+n} + (c/12) m (m^2-1) delta_{m+n,0}.
inline void apply_mono(int n, const Partition& mono, double c_charge, double delta, double coeff,
                       State& out) {
    if (coeff == 0.0) return;
    if (mono.empty()) {
        if (n < 0) {
            out[Partition{-n}] += coeff;
        } else if (n == 0) {
            out[Partition{}] += coeff * delta;
        }
        return; // positive modes annihilate the highest-weight state
    }
    if (n == 0) {
        out[mono] += coeff * (delta + level_of(mono));
        return;
    }
    const int k = mono.front();
    if (n < 0 && -n >= k) {
        Partition ext;
        ext.reserve(mono.size() + 1);
        ext.push_back(-n);
        ext.insert(ext.end(), mono.begin(), mono.end());
        out[ext] += coeff;
        return;
    }
    const Partition rest(mono.begin() + 1, mono.end());
    // L_n L_{-k} = L_{-k} L_n + (n+k) L_{n-k} + delta_{n,k} (c/12) n(n^2-1)
    State inner;
    apply_mono(n, rest, c_charge, delta, coeff, inner);
    for (const auto& [part, v] : inner) {
        Partition ext;
        ext.reserve(part.size() + 1);
        ext.push_back(k);
        ext.insert(ext.end(), part.begin(), part.end());
        out[ext] += v;
    }
    apply_mono(n - k, rest, c_charge, delta, coeff * (n + k), out);
    if (n == k) out[rest] += coeff * (c_charge / 12.0 * n * (double(n) * n - 1.0));
}

inline State apply(int n, const State& s, double c_charge, double delta) {
    State out;
    for (const auto& [mono, v] : s) apply_mono(n, mono, c_charge, delta, v, out);
    return out;
}

inline const std::vector<std::vector<Partition>>& partitions_by_level() {
    static const std::vector<std::vector<Partition>> table = {
        {},
        {{1}},
        {{2}, {1, 1}},
        {{3}, {2, 1}, {1, 1, 1}},
    };
    return table;
}

// Shapovalov matrix <L_{-Y} D | L_{-Y'} D> at the given level (<= 3).
inline std::vector<std::vector<double>> gram_matrix(int level, double c_charge, double delta) {
    const auto& parts = partitions_by_level().at(static_cast<size_t>(level));
    const size_t n = parts.size();
    std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
    for (size_t j = 0; j < n; ++j) {
        for (size_t i = 0; i < n; ++i) {
            // adjoint of L_{-k1}...L_{-km} is L_km ... L_k1: apply k1 first
            State s{{parts[j], 1.0}};
            for (int k : parts[i]) s = apply(k, s, c_charge, delta);
            const auto it = s.find(Partition{});
            g[i][j] = (it == s.end()) ? 0.0 : it->second;
        }
    }
    return g;
}

// <D_p| L_km ... L_k1 |xi>, xi the projection of phi_a(1)|D_b> onto the
// D_p module; each mode acts diagonally on the xi tower:
//   L_k |xi_M> = (D_p + M - k + k D_a - D_b) |xi_{M-k}>.
// Parts are processed first-to-last (largest first, matching the adjoint).
inline double matrix_element(const Partition& part, double dp, double da, double db) {
    int rem = level_of(part);
    double out = 1.0;
    for (int k : part) {
        rem -= k;
        out *= dp + rem + k * da - db;
    }
    return out;
}

// Solve G x = rhs (n <= 3), Gaussian elimination with partial pivoting;
// returns false when effectively singular.
inline bool solve_small(std::vector<std::vector<double>> g, std::vector<double> rhs,
                        std::vector<double>& x, double* cond_proxy = nullptr) {
    const size_t n = g.size();
    double norm = 0.0;
    for (const auto& row : g)
        for (double v : row) norm = std::max(norm, std::fabs(v));
    double min_pivot = 1e300;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::fabs(g[r][col]) > std::fabs(g[piv][col])) piv = r;
        std::swap(g[piv], g[col]);
        std::swap(rhs[piv], rhs[col]);
        const double p = g[col][col];
        min_pivot = std::min(min_pivot, std::fabs(p));
        if (std::fabs(p) <= 1e-300) return false;
        for (size_t r = col + 1; r < n; ++r) {
            const double f = g[r][col] / p;
            for (size_t cc = col; cc < n; ++cc) g[r][cc] -= f * g[col][cc];
            rhs[r] -= f * rhs[col];
        }
    }
    x.assign(n, 0.0);
    for (size_t r = n; r-- > 0;) {
        double acc = rhs[r];
        for (size_t cc = r + 1; cc < n; ++cc) acc -= g[r][cc] * x[cc];
        x[r] = acc / g[r][r];
    }
    // scale against max(norm, 1) so a uniformly tiny matrix (null state at
    // small Delta) still registers as degenerate
    if (cond_proxy) *cond_proxy = (min_pivot > 0.0) ? std::max(norm, 1.0) / min_pivot : 1e300;
    return true;
}

} // namespace verma

/// Holomorphic Virasoro block series coefficients b_0..b_level (b_0 = 1) for
/// internal dimension dp and externals d1..d4, channel (34)(21):
///   F(x) = x^(dp - d3 - d4) sum_N b_N x^N,
///   b_N = sum_{Y,Y'} m34(Y) [G_N^{-1}]_{YY'} m21(Y').
/// The antiholomorphic factor is the same routine at the barred dimensions.
/// Levels above 3 are out of scope. Throws degeneracy_error (naming the level)
/// when a Gram matrix is near-singular (condition proxy above 1e12).
inline std::vector<double> virasoro_block_series(double c_charge, double dp, double d1, double d2,
                                                 double d3, double d4, int level) {
    if (level < 0 || level > 3)
        throw std::invalid_argument("virasoro_block_series: level must be in [0,3]");
    std::vector<double> b{1.0};
    for (int lvl = 1; lvl <= level; ++lvl) {
        const auto& parts = verma::partitions_by_level().at(static_cast<size_t>(lvl));
        const auto g = verma::gram_matrix(lvl, c_charge, dp);
        std::vector<double> m34, m21;
        for (const auto& y : parts) {
            m34.push_back(verma::matrix_element(y, dp, d3, d4));
            m21.push_back(verma::matrix_element(y, dp, d2, d1));
        }
        std::vector<double> x;
        double cond = 0.0;
        if (!verma::solve_small(g, m21, x, &cond) || cond > 1e12)
            throw degeneracy_error("virasoro_block_series: near-singular Gram matrix at level " +
                                       std::to_string(lvl),
                                   lvl);
        double acc = 0.0;
        for (size_t i = 0; i < x.size(); ++i) acc += m34[i] * x[i];
        b.push_back(acc);
    }
    return b;
}

namespace detail {

struct FourPointData {
    double lambda = 0.0;
    double d1, d2, d3, d4;    // external layering dimensions
    double d12, d13, d14;     // pair dimensions Delta(beta_1 + beta_j)
    double exponent_sum;      // E = sum d_i - d12 - d13 - d14
    double q_exponent;        // Q = d14 - d2 - d3
    double c_charge;          // c = 2 lambda
    double degeneracy_margin; // |1 - phi(beta1+beta2)|
};

inline FourPointData four_point_data(const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 4) throw std::invalid_argument("blocks: cfg needs 4 points");
    std::vector<double> betas;
    for (const auto& p : cfg.points) betas.push_back(p.beta);
    if (!charge_conservation(cfg.dist, betas).satisfied)
        throw std::invalid_argument("blocks: charge conservation violated");
    FourPointData d;
    d.lambda = cfg.lambda;
    d.d1 = delta_layering(cfg.lambda, cfg.dist, betas[0]);
    d.d2 = delta_layering(cfg.lambda, cfg.dist, betas[1]);
    d.d3 = delta_layering(cfg.lambda, cfg.dist, betas[2]);
    d.d4 = delta_layering(cfg.lambda, cfg.dist, betas[3]);
    d.d12 = delta_layering(cfg.lambda, cfg.dist, betas[0] + betas[1]);
    d.d13 = delta_layering(cfg.lambda, cfg.dist, betas[0] + betas[2]);
    d.d14 = delta_layering(cfg.lambda, cfg.dist, betas[0] + betas[3]);
    d.exponent_sum = d.d1 + d.d2 + d.d3 + d.d4 - d.d12 - d.d13 - d.d14;
    d.q_exponent = d.d14 - d.d2 - d.d3;
    d.c_charge = 2.0 * cfg.lambda;
    d.degeneracy_margin = std::fabs(1.0 - cfg.dist.phi(betas[0] + betas[1]));
    return d;
}

} // namespace detail

/// G(x) = lim_{z1->inf} |z1|^(4 Delta_1) <O(z1) O(1) O(x) O(0)>.
///
/// Taking the limit in the closed-form four-point function, the z1-dependent
/// factors cancel against the |z1|^(4 D1) prefactor and the rest collapses to
///   G(x) = exp[-2 A(x) E] |x|^(2(D12 - D3 - D4)) |1-x|^(2(D14 - D2 - D3)),
/// with E = sum_i D_i - D12 - D13 - D14 (verified against four_point_plane at
/// finite z1 in the test suite; error falls off like 1/|z1|).
inline double g_function(const CorrelatorConfig& cfg, cplx x) {
    const auto d = detail::four_point_data(cfg);
    if (std::abs(x) < 1e-13 || std::abs(x - 1.0) < 1e-13)
        throw std::domain_error("g_function: degenerate cross ratio");
    const double a = special::a_function(x);
    return std::exp(-2.0 * a * d.exponent_sum) *
           std::pow(std::abs(x), 2.0 * (d.d12 - d.d3 - d.d4)) *
           std::pow(std::abs(1.0 - x), 2.0 * (d.d14 - d.d2 - d.d3));
}

/// Double series in u = x^(1/3), ubar of H(x) = G(x) / |x|^(2(D12-D3-D4)).
///
/// With a(x) = x 3F2(x)/4 and g(x) = (1-x)^(1/3) 2F1(x), A(x) splits as
/// a(x) + a(xbar) - 6 mu u ubar g(x) g(xbar), so
///   H = sum_m [(12 mu E)^m / m!] u^m ubar^m A_m(x) A_m(xbar),
///   A_m(x) = exp(-2 E a(x)) (1-x)^Q g(x)^m,
/// and only integer-x-power series arithmetic is needed. `order` counts
/// integer powers of x; the returned table extends to u^(3*order).
inline series::BiSeries expand_g_series(const CorrelatorConfig& cfg, int order) {
    if (order < 1 || order > 12) throw std::invalid_argument("expand_g_series: order must be in [1,12]");
    const auto d = detail::four_point_data(cfg);
    const double mu = special::mu_constant();

    series::PowerSeries a;
    a.c.assign(static_cast<size_t>(order) + 1, 0.0);
    double t = 0.25;
    for (int k = 1; k <= order; ++k) {
        a.c[static_cast<size_t>(k)] = t;
        t *= k * (1.0 / 3.0 + k) / ((k + 1) * (2.0 / 3.0 + k));
    }
    series::PowerSeries f21;
    f21.c.assign(static_cast<size_t>(order) + 1, 0.0);
    f21.c[0] = 1.0;
    for (int k = 0; k < order; ++k)
        f21.c[static_cast<size_t>(k + 1)] =
            f21.c[static_cast<size_t>(k)] * (2.0 / 3.0 + k) / (4.0 / 3.0 + k);
    const auto g = series::mul(series::one_minus_x_pow(1.0 / 3.0, order), f21, order);

    series::PowerSeries minus2ea;
    minus2ea.c.assign(a.c.size(), 0.0);
    for (size_t i = 0; i < a.c.size(); ++i) minus2ea.c[i] = -2.0 * d.exponent_sum * a.c[i];
    auto base = series::mul(series::exp(minus2ea, order),
                            series::one_minus_x_pow(d.q_exponent, order), order);

    const int max_u = 3 * order;
    auto h = series::BiSeries::zero(max_u);
    series::PowerSeries am = base;
    double cm = 1.0;
    for (int m = 0; m <= max_u; ++m) {
        if (m > 0) {
            am = series::mul(am, g, order);
            cm *= 12.0 * mu * d.exponent_sum / m;
        }
        for (int j = 0; 3 * j + m <= max_u; ++j)
            for (int jp = 0; 3 * jp + m <= max_u; ++jp)
                h.at(m + 3 * j, m + 3 * jp) +=
                    cm * am.c[static_cast<size_t>(j)] * am.c[static_cast<size_t>(jp)];
    }
    return h;
}

/// Extracts C34^(p,p') C12^(p,p') for p, p' <= pmax by matching expand_g_series
/// against sum C * (block series in u) * (block series in ubar).
///
/// The match is triangular in (p,p') -- the diagonal entries are b0*b0 = 1 --
/// so the solve is exact; the reported residual is the RMS mismatch over the
/// fixed equation window max(P,P') <= 9 excluding the solved square, i.e. the
/// content the truncated label set fails to explain (it shrinks as pmax
/// grows). Requires |1 - phi(beta1+beta2)| > 1e-6, else the identity-family
/// dimensions degenerate.
inline CoeffTable extract_coefficients(const CorrelatorConfig& cfg, int pmax) {
    if (pmax < 0 || pmax > 6) throw std::invalid_argument("extract_coefficients: pmax must be in [0,6]");
    const auto d = detail::four_point_data(cfg);
    if (d.degeneracy_margin <= 1e-6)
        throw degeneracy_error("extract_coefficients: degenerate Delta_12 (|1-phi(b1+b2)| <= 1e-6)");

    const int window = 9; // block level (window - p)/3 stays within the level-3 cap
    const int order = (window + 2) / 3 + 1;
    const auto h = expand_g_series(cfg, std::min(12, std::max(order, 2)));

    // block series per label component p: dimension d12 + p/3, level as deep
    // as the residual window reaches
    std::vector<std::vector<double>> bser(static_cast<size_t>(pmax) + 1);
    for (int p = 0; p <= pmax; ++p) {
        const int level = std::min(3, (window - p) / 3);
        bser[static_cast<size_t>(p)] = virasoro_block_series(d.c_charge, d.d12 + p / 3.0, d.d1,
                                                             d.d2, d.d3, d.d4, level);
    }

    std::map<std::pair<int, int>, double> c;
    auto expansion_at = [&](int bp, int bq, bool skip_self) {
        double acc = 0.0;
        for (int p = bp % 3; p <= std::min(bp, pmax); p += 3)
            for (int q = bq % 3; q <= std::min(bq, pmax); q += 3) {
                if (skip_self && p == bp && q == bq) continue;
                const auto it = c.find({p, q});
                if (it == c.end()) continue;
                const auto& sp = bser[static_cast<size_t>(p)];
                const auto& sq = bser[static_cast<size_t>(q)];
                const size_t np = static_cast<size_t>((bp - p) / 3);
                const size_t nq = static_cast<size_t>((bq - q) / 3);
                if (np < sp.size() && nq < sq.size()) acc += it->second * sp[np] * sq[nq];
            }
        return acc;
    };

    for (int p = 0; p <= pmax; ++p)
        for (int q = 0; q <= pmax; ++q)
            c[{p, q}] = h.at(p, q) - expansion_at(p, q, true);

    double rss = 0.0;
    for (int p = 0; p <= window; ++p)
        for (int q = 0; q <= window; ++q) {
            if (p <= pmax && q <= pmax) continue;
            const double r = h.at(p, q) - expansion_at(p, q, false);
            rss += r * r;
        }

    CoeffTable table;
    table.pmax = pmax;
    table.residual = std::sqrt(rss); // L2 norm of the unexplained window

    table.degeneracy_margin = d.degeneracy_margin;
    for (const auto& [label, value] : c)
        table.entries.push_back({BlockLabel{label.first, label.second},
                                 d.d12 + label.first / 3.0, d.d12 + label.second / 3.0, value});
    return table;
}

/// Paper closed forms of the coefficient products for the quoted labels:
/// (0,0), the diagonal family (n,n) n <= 3, and the first off-diagonal family
/// (0,3), (1,4), (2,5) together with their transposes. Other labels grow in
/// length rapidly and are not implemented.
inline double closed_form_C(BlockLabel label, const CorrelatorConfig& cfg) {
    if (cfg.points.size() != 4) throw std::invalid_argument("closed_form_C: cfg needs 4 points");
    const auto ph = [&](double b) { return cfg.dist.phi(b); };
    const double b1 = cfg.points[0].beta, b2 = cfg.points[1].beta, b3 = cfg.points[2].beta,
                 b4 = cfg.points[3].beta;
    const double lam = cfg.lambda;
    const double mu = special::mu_constant();
    const double c11 = 1.2 * lam * mu *
                       (1.0 - ph(b1) - ph(b2) - ph(b3) - ph(b4) + ph(b1 + b2) + ph(b1 + b3) +
                        ph(b1 + b4));

    int p = label.p, q = label.p_bar;
    if (p > q) std::swap(p, q); // (p,p') and (p',p) coincide for spinless externals

    if (p == 0 && q == 0) return 1.0;
    if (p == 1 && q == 1) return c11;
    if (p == 2 && q == 2) return 0.5 * c11 * c11;
    if (p == 3 && q == 3) return c11 * c11 * c11 / 6.0;

    const double s = 1.0 - ph(b1 + b2);
    if (std::fabs(s) <= 1e-6)
        throw degeneracy_error("closed_form_C: degenerate Delta_12 denominator");
    const double cross = (ph(b1) - ph(b2)) * (ph(b3) - ph(b4));
    if (p == 0 && q == 3)
        return lam / 20.0 * (cross / s - ph(b1 + b3) + ph(b1 + b4));
    if (p == 1 && q == 4)
        return lam / 20.0 * c11 *
               (3.0 * lam * cross / (10.0 + 3.0 * lam * s) - ph(b1 + b3) + ph(b1 + b4));
    if (p == 2 && q == 5)
        return lam / 40.0 * c11 * c11 *
               (3.0 * lam * cross / (20.0 + 3.0 * lam * s) - ph(b1 + b3) + ph(b1 + b4));
    throw std::invalid_argument("closed_form_C: label not implemented");
}

} // namespace bls::blocks
