#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bls/errors.hpp"
#include "bls/mark_distribution.hpp"
#include "bls/mc/geometry.hpp"
#include "bls/mc/rng.hpp"

// Monte Carlo sampler of the Brownian loop soup with marked loops. Loops are
// drawn from the scale-invariant measure (1/2pi) d^2z dt/t^2 dmu_br(z,t);
// estimators verify the loop-weight and one-point formulas independently of
// the analytic modules.

namespace bls::mc {

struct LoopPath {
    cplx center;                 // root point of the bridge
    double duration = 0.0;       // Brownian time t (area units)
    std::vector<cplx> vertices;  // M+1 points, first == last == center
};

struct Window {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct TimeRange {
    double t_min = 0.0, t_max = 0.0;
};

struct SoupSample {
    std::vector<LoopPath> loops;
    std::vector<double> marks; // one per loop, independent of geometry
    Window window;
    TimeRange t_range;
};

/// Inverse-CDF sample of the duration density 1/t^2 on [t_min, t_max]:
/// t = t_min / (1 - u (1 - t_min/t_max)).
inline double duration_from_uniform(double t_min, double t_max, double u) {
    if (!(0.0 < t_min && t_min < t_max)) throw std::invalid_argument("duration: bad range");
    return t_min / (1.0 - u * (1.0 - t_min / t_max));
}

inline double sample_duration(double t_min, double t_max, PhiloxStream& rng) {
    return duration_from_uniform(t_min, t_max, rng.next_unit_co());
}

/// Complex Brownian bridge of duration t with M steps, rooted at `center`:
/// independent real and imaginary walks W_k of step variance t/M, closed by
/// B_k = W_k - (k/M) W_M. Closure is exact in floating point.
inline std::vector<cplx> sample_bridge(cplx center, double t, int M, PhiloxStream& rng) {
    if (M < 64 || (M & (M - 1)) != 0)
        throw std::invalid_argument("sample_bridge: M must be a power of two >= 64");
    const double step = std::sqrt(t / M);
    std::vector<cplx> w(static_cast<size_t>(M) + 1);
    w[0] = 0.0;
    for (int k = 1; k <= M; ++k)
        w[static_cast<size_t>(k)] =
            w[static_cast<size_t>(k) - 1] + step * cplx(rng.next_gaussian(), rng.next_gaussian());
    const cplx wm = w[static_cast<size_t>(M)];
    std::vector<cplx> out(static_cast<size_t>(M) + 1);
    for (int k = 0; k <= M; ++k)
        out[static_cast<size_t>(k)] = center + w[static_cast<size_t>(k)] - (double(k) / M) * wm;
    out[static_cast<size_t>(M)] = center;
    out[0] = center;
    return out;
}

/// Bridge by Levy midpoint refinement (identical in law to sample_bridge),
/// abandoned early when the loop cannot land in the diameter window
/// [diam_lo, diam_hi): anchors at spacing M/64 already bound the final
/// diameter from below exactly (refinement only adds points) and from above
/// up to sub-segment excursions below 0.75 sqrt(t) (probability < 1e-13).
/// Returns an empty vector when filtered out.
inline std::vector<cplx> sample_bridge_filtered(cplx center, double t, int M, double diam_lo,
                                                double diam_hi, PhiloxStream& rng) {
    if (M < 64 || (M & (M - 1)) != 0)
        throw std::invalid_argument("sample_bridge_filtered: M must be a power of two >= 64");
    std::vector<cplx> b(static_cast<size_t>(M) + 1, cplx{0.0, 0.0});
    for (int spacing = M; spacing > 1; spacing /= 2) {
        const double sigma = std::sqrt(t * spacing / (4.0 * M));
        for (int i = 0; i < M; i += spacing)
            b[static_cast<size_t>(i + spacing / 2)] =
                0.5 * (b[static_cast<size_t>(i)] + b[static_cast<size_t>(i + spacing)]) +
                sigma * cplx(rng.next_gaussian(), rng.next_gaussian());
        if (spacing == M / 32) { // 64 anchor segments built so far
            double lo2 = 0.0;
            for (int i = 0; i <= M; i += spacing / 2)
                for (int j = i + spacing / 2; j <= M; j += spacing / 2)
                    lo2 = std::max(lo2, std::norm(b[static_cast<size_t>(i)] - b[static_cast<size_t>(j)]));
            const double coarse = std::sqrt(lo2);
            const double slack = 1.5 * std::sqrt(t);
            if (coarse >= diam_hi || coarse + slack < diam_lo) return {};
        }
    }
    for (auto& p : b) p += center;
    b[0] = center;
    b[static_cast<size_t>(M)] = center;
    return b;
}

/// The loop locally refined around an observation point, with its winding.
struct RefinedLoop {
    std::vector<cplx> vertices;
    int winding = 0;
    bool winding_exact = true; // false when the depth cap hit next to z
};

/// Conditionally samples deeper Levy levels of the bridge for segments whose
/// sub-path could reach z (dist below 5 sqrt(tau), escape probability under
/// 4e-25), until the path provably cannot wind around z any further. The
/// result is distributed as a finer discretization of the same loop, so its
/// winding number is the continuum loop's with overwhelming probability;
/// plain M-point polygons scramble windings for points within the
/// discretization scale of the path.
inline RefinedLoop refine_near_point(std::span<const cplx> vertices, double duration, cplx z,
                                     PhiloxStream& rng) {
    RefinedLoop out;
    out.vertices.reserve(vertices.size() + 64);
    const double tau0 = duration / (double(vertices.size()) - 1.0);
    out.vertices.push_back(vertices[0]);

    struct Frame {
        cplx a, b;
        double tau;
        int depth;
    };
    std::vector<Frame> stack;
    for (size_t s = 0; s + 1 < vertices.size(); ++s) {
        stack.push_back({vertices[s], vertices[s + 1], tau0, 0});
        while (!stack.empty()) {
            const Frame f = stack.back();
            stack.pop_back();
            const double reach = 5.0 * std::sqrt(f.tau);
            if (point_segment_distance(z, f.a, f.b) > reach) {
                out.vertices.push_back(f.b);
                continue;
            }
            if (f.depth >= 26) {
                out.winding_exact = false; // z essentially on the path
                out.vertices.push_back(f.b);
                continue;
            }
            const double sigma = std::sqrt(f.tau / 4.0);
            const cplx mid = 0.5 * (f.a + f.b) + sigma * cplx(rng.next_gaussian(), rng.next_gaussian());
            // process [a,mid] first: push [mid,b] below it
            stack.push_back({mid, f.b, f.tau / 2.0, f.depth + 1});
            stack.push_back({f.a, mid, f.tau / 2.0, f.depth + 1});
        }
    }
    try {
        out.winding = winding_number(out.vertices, z);
    } catch (const std::domain_error&) {
        out.winding_exact = false;
    }
    return out;
}

/// Poisson sample via the exponential race; safe for large means.
inline long sample_poisson(double mean, PhiloxStream& rng) {
    long n = 0;
    double acc = 0.0;
    while (true) {
        acc += -std::log(rng.next_unit());
        if (acc > mean) return n;
        ++n;
    }
}

/// One mark per loop. Only the MC module samples marks; analytic evaluation
/// goes through phi alone.
inline double sample_mark(const MarkDistribution& dist, PhiloxStream& rng) {
    switch (dist.kind()) {
    case MarkKind::bernoulli:
        return rng.next_unit_co() < 0.5 ? 1.0 : -1.0;
    case MarkKind::gaussian_scalar:
        return dist.gaussian_sigma() * rng.next_gaussian();
    case MarkKind::lattice: {
        double u = rng.next_unit_co();
        const auto& atoms = dist.lattice_atoms();
        for (const auto& [n, p] : atoms) {
            if (u < p) return dist.lattice_spacing() * n;
            u -= p;
        }
        return dist.lattice_spacing() * atoms.back().first;
    }
    case MarkKind::unit_vector: {
        // first coordinate of a uniform point on S^(d-1)
        const int d = dist.unit_vector_dim();
        double first = rng.next_gaussian();
        double norm2 = first * first;
        for (int i = 1; i < d; ++i) {
            const double g = rng.next_gaussian();
            norm2 += g * g;
        }
        return first / std::sqrt(norm2);
    }
    case MarkKind::custom:
        throw std::invalid_argument("sample_mark: custom distributions have no sampler");
    }
    return 0.0;
}

/// Poissonian soup over a fixed window: count ~ Poisson with mean
/// lambda/(2 pi) Area (1/t_min - 1/t_max), uniform centers, iid durations,
/// bridges and marks. The window must pad the observation region by at least
/// 10 sqrt(t_max) or large loops get clipped (that bias is the caller's).
inline SoupSample sample_soup(double lambda, const Window& window, const TimeRange& tr, int M,
                              const MarkDistribution& dist, PhiloxStream& rng) {
    const double mean =
        lambda / (2.0 * std::numbers::pi) * window.area() * (1.0 / tr.t_min - 1.0 / tr.t_max);
    const long n = sample_poisson(mean, rng);
    SoupSample soup;
    soup.window = window;
    soup.t_range = tr;
    soup.loops.reserve(static_cast<size_t>(n));
    soup.marks.reserve(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double cx = window.x0 + (window.x1 - window.x0) * rng.next_unit_co();
        const double cy = window.y0 + (window.y1 - window.y0) * rng.next_unit_co();
        const double t = sample_duration(tr.t_min, tr.t_max, rng);
        LoopPath loop;
        loop.center = {cx, cy};
        loop.duration = t;
        loop.vertices = sample_bridge(loop.center, t, M, rng);
        soup.loops.push_back(std::move(loop));
        soup.marks.push_back(sample_mark(dist, rng));
    }
    return soup;
}

struct EstimatorResult {
    double mean = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    std::string bias_notes;
};

enum class VertexKind { layering, winding };

/// Shared knobs of the soup estimators. The diameter window is [delta, R);
/// durations run over [(delta t_low_factor)^2, (R t_high_factor)^2], which
/// covers the window with negligible truncated mass.
struct McConfig {
    double lambda = 1.0;
    cplx z = {0.0, 0.0};
    double delta = 1.0;
    double R = std::numbers::e;
    int M = 1024;
    long n_soups = 20000;
    std::uint64_t seed = 1;
    int threads = 0;              // 0 = hardware concurrency
    double capture_factor = 5.0;  // centers sampled within this * sqrt(t) of z
    int cells_per_delta = 50;     // enclosure grid resolution h = delta / this
    double t_low_factor = 0.1;
    double t_high_factor = 10.0;
    bool probe_truncation = false; // re-run with 4x wider duration window
};

namespace detail {

struct Welford {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }

    // order-stable combination of independent accumulators
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const long nt = n + o.n;
        mean += d * o.n / nt;
        m2 += o.m2 + d * d * (double(n) * o.n / nt);
        n = nt;
    }
};

struct BatchStats {
    Welford acc;
    long candidate_loops = 0;
    long indeterminate = 0;
};

// Soups for the estimators are generated with per-loop capture regions: a
// loop of duration t is rooted uniformly in the disk |c - z| < a sqrt(t),
// whose area grows like t, so the restricted intensity
//   lambda/(2 pi) * pi a^2 t * dt/t^2 = (lambda a^2 / 2) dt/t
// is log-uniform in duration. Loops rooted farther away reach z with
// probability < 4 e^{-a^2} ~ 6e-11 at a = 5, far below counting noise.
// Bridges are abandoned at the 64-anchor stage when the diameter window
// cannot be met.
template <typename PerLoop>
inline void run_soup(const McConfig& cfg, double t_min, double t_max, PhiloxStream& geom,
                     PhiloxStream& marks, const MarkDistribution* mark_dist, PerLoop&& per_loop) {
    const double a = cfg.capture_factor;
    const double log_ratio = std::log(t_max / t_min);
    const double mean_loops = 0.5 * cfg.lambda * a * a * log_ratio;
    const long n = sample_poisson(mean_loops, geom);
    for (long i = 0; i < n; ++i) {
        const double t = t_min * std::exp(log_ratio * geom.next_unit_co());
        const double r = a * std::sqrt(t) * std::sqrt(geom.next_unit_co());
        const double phi = 2.0 * std::numbers::pi * geom.next_unit_co();
        const cplx center = cfg.z + std::polar(r, phi);
        const auto vertices =
            sample_bridge_filtered(center, t, cfg.M, cfg.delta, cfg.R, geom);
        const double mark = mark_dist ? sample_mark(*mark_dist, marks) : 0.0;
        if (vertices.empty()) continue;
        per_loop(vertices, t, mark);
    }
}

// Filled-interior membership. Nonzero winding already implies z cannot reach
// the unbounded face, so the flood fill only has to decide the winding-zero
// pocket cases; its wall hits are resolved by jitter, refinement and escape
// probes.
inline std::optional<bool> covers(std::span<const cplx> vertices, cplx z, double h) {
    try {
        if (winding_number(vertices, z) != 0) return true;
    } catch (const std::domain_error&) {
        return std::nullopt; // on the path
    }
    switch (classify_resolved(vertices, z, h)) {
    case Enclosure::inside: return true;
    case Enclosure::outside: return false;
    case Enclosure::indeterminate: return std::nullopt;
    }
    return std::nullopt;
}

enum class Observable { alpha_layering, winding_weight, vertex_layering, vertex_winding };

struct RunSpec {
    Observable kind;
    int winding_k = 0;
    double beta = 0.0;
    const MarkDistribution* dist = nullptr;
};

inline BatchStats run_batch(const McConfig& cfg, const RunSpec& spec, double t_min, double t_max,
                            long soup_begin, long soup_end, std::uint64_t stream_base) {
    PhiloxStream geom(cfg.seed, stream_base);
    PhiloxStream marks(cfg.seed, stream_base + 1);
    PhiloxStream refine(cfg.seed, stream_base + (1ull << 40));
    BatchStats stats;
    const double h = cfg.delta / cfg.cells_per_delta;
    const bool needs_marks =
        spec.kind == Observable::vertex_layering || spec.kind == Observable::vertex_winding;
    for (long s = soup_begin; s < soup_end; ++s) {
        double count = 0.0;
        double n_of_z = 0.0;
        run_soup(cfg, t_min, t_max, geom, marks, needs_marks ? spec.dist : nullptr,
                 [&](std::span<const cplx> vertices, double duration, double mark) {
                     // diameter is a functional of the M-point discretization
                     const double diam = polygon_diameter(vertices);
                     if (diam < cfg.delta || diam >= cfg.R) return;
                     if (!bounding_box(vertices).contains(cfg.z)) return;
                     ++stats.candidate_loops;
                     const auto ref = refine_near_point(vertices, duration, cfg.z, refine);
                     if (!ref.winding_exact) {
                         ++stats.indeterminate;
                         return;
                     }
                     switch (spec.kind) {
                     case Observable::alpha_layering:
                     case Observable::vertex_layering: {
                         bool in = ref.winding != 0;
                         if (!in) {
                             // winding-zero pocket decision at grid resolution
                             switch (classify_resolved(ref.vertices, cfg.z, h)) {
                             case Enclosure::inside: in = true; break;
                             case Enclosure::outside: break;
                             case Enclosure::indeterminate: ++stats.indeterminate; return;
                             }
                         }
                         if (in) {
                             count += 1.0;
                             n_of_z += mark;
                         }
                         break;
                     }
                     case Observable::winding_weight:
                         if (ref.winding == spec.winding_k) count += 1.0;
                         break;
                     case Observable::vertex_winding:
                         n_of_z += mark * ref.winding;
                         break;
                     }
                 });
        switch (spec.kind) {
        case Observable::alpha_layering:
        case Observable::winding_weight:
            stats.acc.add(count / cfg.lambda);
            break;
        case Observable::vertex_layering:
        case Observable::vertex_winding:
            stats.acc.add(std::cos(spec.beta * n_of_z));
            break;
        }
    }
    return stats;
}

inline EstimatorResult run_estimator(const McConfig& cfg, const RunSpec& spec) {
    if (!(cfg.delta < cfg.R)) {
        // empty diameter window: zero by convention
        EstimatorResult res;
        res.n_samples = cfg.n_soups;
        res.bias_notes = "empty diameter window [delta, R)";
        return res;
    }
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("mc: lambda must be > 0");
    if (cfg.n_soups < 2) throw std::invalid_argument("mc: need n_soups >= 2");

    const auto run_window = [&](double t_min, double t_max, long n_soups) {
        const long batch_size = 64;
        const long n_batches = (n_soups + batch_size - 1) / batch_size;
        std::vector<BatchStats> results(static_cast<size_t>(n_batches));
        std::atomic<long> next{0};
        const int hw = static_cast<int>(std::thread::hardware_concurrency());
        const long want = cfg.threads > 0 ? cfg.threads : (hw > 0 ? hw : 1);
        const int n_threads = static_cast<int>(std::max<long>(1, std::min<long>(want, n_batches)));
        auto worker = [&] {
            while (true) {
                const long b = next.fetch_add(1);
                if (b >= n_batches) break;
                const long lo = b * batch_size;
                const long hi = std::min(n_soups, lo + batch_size);
                results[static_cast<size_t>(b)] =
                    run_batch(cfg, spec, t_min, t_max, lo, hi, 2 * static_cast<std::uint64_t>(b));
            }
        };
        std::vector<std::thread> pool;
        for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        BatchStats total;
        for (const auto& r : results) { // merge in batch order: bit-stable
            total.acc.merge(r.acc);
            total.candidate_loops += r.candidate_loops;
            total.indeterminate += r.indeterminate;
        }
        return total;
    };

    const double t_min = std::pow(cfg.delta * cfg.t_low_factor, 2);
    const double t_max = std::pow(cfg.R * cfg.t_high_factor, 2);
    const BatchStats total = run_window(t_min, t_max, cfg.n_soups);

    if (total.candidate_loops > 0 &&
        total.indeterminate > std::max<long>(4, total.candidate_loops / 100))
        throw resolution_error("mc estimator: indeterminate enclosure rate above 1%; "
                               "increase cells_per_delta",
                               double(total.indeterminate) / double(total.candidate_loops));

    EstimatorResult res;
    res.mean = total.acc.mean;
    res.n_samples = total.acc.n;
    res.std_error = total.acc.n > 1 ? std::sqrt(total.acc.m2 / (total.acc.n - 1.0) / total.acc.n)
                                    : 0.0;
    std::ostringstream notes;
    notes << "duration window [" << t_min << ", " << t_max << "], capture radius "
          << cfg.capture_factor << "*sqrt(t), M=" << cfg.M
          << " polygonal discretization (under-covers fractal boundaries), indeterminate="
          << total.indeterminate << "/" << total.candidate_loops;
    if (cfg.probe_truncation) {
        const BatchStats probe = run_window(t_min / 4.0, t_max * 4.0, std::max<long>(cfg.n_soups / 4, 2));
        notes << "; 4x-wider duration window shifts estimate by "
              << (probe.acc.mean - total.acc.mean);
    }
    res.bias_notes = notes.str();
    return res;
}

} // namespace detail

/// Estimate of alpha = mu_loop(loops with delta <= diam < R whose filled
/// interior contains z): mean covering count per soup divided by lambda.
/// Target (1/5) log(R/delta).
inline EstimatorResult estimate_alpha_layering(const McConfig& cfg) {
    return detail::run_estimator(cfg, {detail::Observable::alpha_layering, 0, 0.0, nullptr});
}

/// Estimate of the winding-k loop weight around z in the diameter window.
/// Target 1/(2 pi^2 k^2) log(R/delta).
inline EstimatorResult estimate_winding_weight(const McConfig& cfg, int k) {
    if (k == 0) throw std::invalid_argument("estimate_winding_weight: k must be nonzero");
    return detail::run_estimator(cfg, {detail::Observable::winding_weight, k, 0.0, nullptr});
}

/// <e^{i beta N(z)}> with N the marked layering (or winding) sum over the
/// diameter window. Target (R/delta)^(-2 Delta) with Delta from the analytic
/// dimension formulas.
inline EstimatorResult estimate_vertex_onepoint(VertexKind kind, const MarkDistribution& dist,
                                                double beta, const McConfig& cfg) {
    if (beta == 0.0) {
        EstimatorResult res; // e^0: exactly one, zero variance
        res.mean = 1.0;
        res.n_samples = cfg.n_soups;
        res.bias_notes = "beta = 0";
        return res;
    }
    detail::RunSpec spec{kind == VertexKind::layering ? detail::Observable::vertex_layering
                                                      : detail::Observable::vertex_winding,
                         0, beta, &dist};
    return detail::run_estimator(cfg, spec);
}

} // namespace bls::mc
