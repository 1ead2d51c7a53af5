#pragma once

#include <cmath>

namespace bls::detail {

// Minimal double-double (~106-bit mantissa) arithmetic: just enough for
// alternating series whose largest term dwarfs the sum (0F1 at large argument).
struct dd {
    double hi = 0.0;
    double lo = 0.0;
};

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

// requires |a| >= |b|
inline dd quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd add(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline dd mul(dd a, dd b) {
    dd p = two_prod(a.hi, b.hi);
    return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline dd mul(dd a, double b) {
    dd p = two_prod(a.hi, b);
    return quick_two_sum(p.hi, p.lo + a.lo * b);
}

inline dd div(dd a, double b) {
    double q1 = a.hi / b;
    dd p = two_prod(q1, b);
    double q2 = (((a.hi - p.hi) - p.lo) + a.lo) / b;
    return quick_two_sum(q1, q2);
}

inline double abs_hi(dd a) { return std::fabs(a.hi); }

} // namespace bls::detail
