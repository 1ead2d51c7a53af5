#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace bls::series {

/// Truncated power series sum_k c[k] x^k, fixed order.
struct PowerSeries {
    std::vector<double> c;

    int order() const { return static_cast<int>(c.size()) - 1; }

    std::complex<double> eval(std::complex<double> x) const {
        std::complex<double> acc = 0.0;
        for (int k = order(); k >= 0; --k) acc = acc * x + c[static_cast<size_t>(k)];
        return acc;
    }
};

inline PowerSeries mul(const PowerSeries& a, const PowerSeries& b, int order) {
    PowerSeries out;
    out.c.assign(static_cast<size_t>(order) + 1, 0.0);
    for (int i = 0; i <= std::min(a.order(), order); ++i) {
        if (a.c[static_cast<size_t>(i)] == 0.0) continue;
        const int jmax = std::min(b.order(), order - i);
        for (int j = 0; j <= jmax; ++j)
            out.c[static_cast<size_t>(i + j)] += a.c[static_cast<size_t>(i)] * b.c[static_cast<size_t>(j)];
    }
    return out;
}

/// exp of a series with zero constant term, via (e^S)' = S' e^S.
inline PowerSeries exp(const PowerSeries& s, int order) {
    if (s.order() >= 0 && s.c[0] != 0.0)
        throw std::invalid_argument("series::exp: nonzero constant term");
    PowerSeries out;
    out.c.assign(static_cast<size_t>(order) + 1, 0.0);
    out.c[0] = 1.0;
    for (int m = 1; m <= order; ++m) {
        double acc = 0.0;
        for (int k = 1; k <= m; ++k)
            if (k <= s.order()) acc += k * s.c[static_cast<size_t>(k)] * out.c[static_cast<size_t>(m - k)];
        out.c[static_cast<size_t>(m)] = acc / m;
    }
    return out;
}

/// (1 - x)^q as a power series.
inline PowerSeries one_minus_x_pow(double q, int order) {
    PowerSeries out;
    out.c.assign(static_cast<size_t>(order) + 1, 0.0);
    out.c[0] = 1.0;
    for (int k = 0; k < order; ++k)
        out.c[static_cast<size_t>(k + 1)] = -out.c[static_cast<size_t>(k)] * (q - k) / (k + 1);
    return out;
}

/// Double series sum c(p, pbar) u^p ubar^pbar on a square table.
struct BiSeries {
    int max_order = 0;                 // powers run 0..max_order in each variable
    std::vector<double> coef;          // row-major (max_order+1)^2

    double at(int p, int pbar) const { return coef[static_cast<size_t>(p) * (max_order + 1) + pbar]; }
    double& at(int p, int pbar) { return coef[static_cast<size_t>(p) * (max_order + 1) + pbar]; }

    static BiSeries zero(int max_order) {
        BiSeries b;
        b.max_order = max_order;
        b.coef.assign(static_cast<size_t>(max_order + 1) * (max_order + 1), 0.0);
        return b;
    }

    /// Resums the table at u = x^(1/3), ubar = conj(x)^(1/3) (principal roots).
    double eval_u(std::complex<double> u) const {
        const std::complex<double> ubar = std::conj(u);
        std::complex<double> acc = 0.0;
        std::complex<double> up = 1.0;
        for (int p = 0; p <= max_order; ++p) {
            std::complex<double> ubp = 1.0;
            std::complex<double> row = 0.0;
            for (int q = 0; q <= max_order; ++q) {
                row += at(p, q) * ubp;
                ubp *= ubar;
            }
            acc += row * up;
            up *= u;
        }
        return acc.real();
    }
};

} // namespace bls::series
