#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace bls::mc {

using cplx = std::complex<double>;

struct BoundingBox {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(cplx z) const {
        return z.real() >= x0 && z.real() <= x1 && z.imag() >= y0 && z.imag() <= y1;
    }
};

inline BoundingBox bounding_box(std::span<const cplx> pts) {
    BoundingBox b{pts[0].real(), pts[0].imag(), pts[0].real(), pts[0].imag()};
    for (const auto& p : pts) {
        b.x0 = std::min(b.x0, p.real());
        b.x1 = std::max(b.x1, p.real());
        b.y0 = std::min(b.y0, p.imag());
        b.y1 = std::max(b.y1, p.imag());
    }
    return b;
}

inline double point_segment_distance(cplx z, cplx a, cplx b) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(z - a);
    double t = ((z - a).real() * ab.real() + (z - a).imag() * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(z - (a + t * ab));
}

/// Signed winding number of the closed polyline around z; exact for polygons
/// away from the path. Throws when z sits on (or within 1e-12 of) the path.
inline int winding_number(std::span<const cplx> vertices, cplx z) {
    const size_t n = vertices.size();
    double total = 0.0;
    for (size_t i = 0; i + 1 < n; ++i) {
        const cplx a = vertices[i] - z;
        const cplx b = vertices[i + 1] - z;
        if (point_segment_distance(z, vertices[i], vertices[i + 1]) <= 1e-12)
            throw std::domain_error("winding_number: point on the path");
        const double cross = a.real() * b.imag() - a.imag() * b.real();
        const double dot = a.real() * b.real() + a.imag() * b.imag();
        total += std::atan2(cross, dot);
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

/// Largest pairwise distance, via the convex hull (Andrew monotone chain);
/// hulls of Brownian-bridge polygons are tiny, so the quadratic pass is cheap.
inline double polygon_diameter(std::span<const cplx> vertices) {
    std::vector<cplx> pts(vertices.begin(), vertices.end());
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() == 1) return 0.0;
    const auto cross = [](cplx o, cplx a, cplx b) {
        return (a.real() - o.real()) * (b.imag() - o.imag()) -
               (a.imag() - o.imag()) * (b.real() - o.real());
    };
    std::vector<cplx> hull(2 * pts.size());
    size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    const size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {
        const auto& p = pts[i];
        while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    double best = 0.0;
    for (size_t i = 0; i < hull.size(); ++i)
        for (size_t j = i + 1; j < hull.size(); ++j)
            best = std::max(best, std::abs(hull[i] - hull[j]));
    return best;
}

enum class Enclosure { outside, inside, indeterminate };

/// Flood-fill classification of the complement of a closed polyline at a fixed
/// grid resolution: cells pierced by a segment are walls, cells reachable from
/// the border ring without crossing walls are outside, the rest are the filled
/// interior (complement of the unbounded face, channels narrower than h sealed).
class EnclosureGrid {
public:
    /// jitter in [0,1)^2 shifts the grid origin by a cell fraction: a point
    /// sitting in a path-crossed cell at one offset is often clean at another.
    EnclosureGrid(std::span<const cplx> vertices, double grid_h, double jitter_x = 0.0,
                  double jitter_y = 0.0)
        : h_(grid_h), bb_(bounding_box(vertices)) {
        if (!(grid_h > 0.0)) throw std::invalid_argument("EnclosureGrid: grid_h must be > 0");
        // one empty margin ring guarantees the outside fill can wrap around
        ox_ = bb_.x0 - (1.5 + jitter_x) * grid_h;
        oy_ = bb_.y0 - (1.5 + jitter_y) * grid_h;
        nx_ = static_cast<int>(std::ceil((bb_.x1 - ox_) / grid_h)) + 2;
        ny_ = static_cast<int>(std::ceil((bb_.y1 - oy_) / grid_h)) + 2;
        state_.assign(static_cast<size_t>(nx_) * ny_, 0);

        // conservative voxel traversal of every segment (Amanatides-Woo)
        for (size_t s = 0; s + 1 < vertices.size(); ++s) {
            const cplx a = vertices[s], b = vertices[s + 1];
            int ix, iy, jx, jy;
            cell_of(a, ix, iy);
            cell_of(b, jx, jy);
            state_[idx(ix, iy)] = 1;
            const double dx = b.real() - a.real(), dy = b.imag() - a.imag();
            const int step_x = dx > 0 ? 1 : -1, step_y = dy > 0 ? 1 : -1;
            double tmax_x =
                dx != 0.0 ? ((ox_ + (ix + (step_x > 0 ? 1 : 0)) * h_) - a.real()) / dx : 1e300;
            double tmax_y =
                dy != 0.0 ? ((oy_ + (iy + (step_y > 0 ? 1 : 0)) * h_) - a.imag()) / dy : 1e300;
            const double tdx = dx != 0.0 ? std::fabs(h_ / dx) : 1e300;
            const double tdy = dy != 0.0 ? std::fabs(h_ / dy) : 1e300;
            int guard = 4 * (nx_ + ny_);
            while ((ix != jx || iy != jy) && guard-- > 0) {
                if (tmax_x < tmax_y) {
                    ix += step_x;
                    tmax_x += tdx;
                } else {
                    iy += step_y;
                    tmax_y += tdy;
                }
                if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) break;
                state_[idx(ix, iy)] = 1;
            }
            state_[idx(jx, jy)] = 1;
        }

        // BFS from the border ring; a 4-connected fill cannot leak through the
        // face-connected wall chains the traversal produces
        std::vector<std::pair<int, int>> stack;
        const auto push = [&](int ix, int iy) {
            const size_t i = idx(ix, iy);
            if (state_[i] == 0) {
                state_[i] = 2;
                stack.emplace_back(ix, iy);
            }
        };
        for (int ix = 0; ix < nx_; ++ix) {
            push(ix, 0);
            push(ix, ny_ - 1);
        }
        for (int iy = 0; iy < ny_; ++iy) {
            push(0, iy);
            push(nx_ - 1, iy);
        }
        while (!stack.empty()) {
            const auto [cx, cy] = stack.back();
            stack.pop_back();
            if (cx > 0) push(cx - 1, cy);
            if (cx + 1 < nx_) push(cx + 1, cy);
            if (cy > 0) push(cx, cy - 1);
            if (cy + 1 < ny_) push(cx, cy + 1);
        }
    }

    Enclosure classify(cplx z) const {
        if (!bb_.contains(z)) return Enclosure::outside;
        int ix, iy;
        cell_of(z, ix, iy);
        const std::uint8_t s = state_[idx(ix, iy)];
        if (s == 1) return Enclosure::indeterminate;
        return s == 2 ? Enclosure::outside : Enclosure::inside;
    }

private:
    void cell_of(cplx p, int& ix, int& iy) const {
        ix = std::clamp(static_cast<int>(std::floor((p.real() - ox_) / h_)), 0, nx_ - 1);
        iy = std::clamp(static_cast<int>(std::floor((p.imag() - oy_) / h_)), 0, ny_ - 1);
    }
    size_t idx(int ix, int iy) const { return static_cast<size_t>(iy) * nx_ + ix; }

    double h_;
    BoundingBox bb_;
    double ox_ = 0.0, oy_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::uint8_t> state_; // 0 interior, 1 wall, 2 outside
};

/// Filled-interior membership: is z in the complement of the unbounded face?
/// z inside a path-crossed cell is indeterminate (caller resamples or shrinks h).
inline Enclosure encloses_outer(std::span<const cplx> vertices, cplx z, double grid_h) {
    return EnclosureGrid(vertices, grid_h).classify(z);
}

inline bool segments_cross(cplx p1, cplx p2, cplx q1, cplx q2) {
    const auto orient = [](cplx a, cplx b, cplx c) {
        const double v = (b.real() - a.real()) * (c.imag() - a.imag()) -
                         (b.imag() - a.imag()) * (c.real() - a.real());
        return (v > 0.0) - (v < 0.0);
    };
    const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
    if (o1 == 0 || o2 == 0 || o3 == 0 || o4 == 0) return true; // touching: treat as crossing
    return o1 != o2 && o3 != o4;
}

inline double distance_to_path(std::span<const cplx> vertices, cplx z, cplx* nearest = nullptr) {
    double best = 1e300;
    for (size_t i = 0; i + 1 < vertices.size(); ++i) {
        const double d = point_segment_distance(z, vertices[i], vertices[i + 1]);
        if (d < best) {
            best = d;
            if (nearest) {
                const cplx ab = vertices[i + 1] - vertices[i];
                const double len2 = std::norm(ab);
                double t = len2 == 0.0 ? 0.0
                                       : ((z - vertices[i]).real() * ab.real() +
                                          (z - vertices[i]).imag() * ab.imag()) / len2;
                *nearest = vertices[i] + std::clamp(t, 0.0, 1.0) * ab;
            }
        }
    }
    return best;
}

/// Enclosure of z with wall-cell hits resolved by grid-origin jitter, grid
/// refinement, and finally escape probes: a probe w connected to z by a
/// segment that crosses no path edge lies in the same face as z, so a clean
/// classification at w is exact for z. Points within ~1e-4 of the discretized
/// path in a fully caged pocket stay indeterminate.
inline Enclosure classify_resolved(std::span<const cplx> vertices, cplx z, double h0) {
    // golden-ratio origin offsets decorrelate successive tries
    static constexpr double jit[4][2] = {
        {0.0, 0.0}, {0.618034, 0.381966}, {0.236068, 0.854102}, {0.854102, 0.236068}};
    for (int lvl = 0; lvl < 3; ++lvl) {
        const double h = h0 / (1 << lvl);
        for (const auto& j : jit) {
            const Enclosure c = EnclosureGrid(vertices, h, j[0], j[1]).classify(z);
            if (c != Enclosure::indeterminate) return c;
        }
    }
    // escape probes, classified by the same offset chain at the base resolution
    cplx nearest;
    const double d = distance_to_path(vertices, z, &nearest);
    if (d <= 1e-12) return Enclosure::indeterminate;
    const cplx dir = (z - nearest) / d;
    const cplx perp(-dir.imag(), dir.real());
    const cplx probes[6] = {z + h0 * dir,        z + 2.0 * h0 * dir, z - h0 * dir,
                            z + 1.5 * h0 * perp, z - 1.5 * h0 * perp, z + 3.0 * h0 * dir};
    for (const cplx w : probes) {
        bool crossed = false;
        for (size_t i = 0; i + 1 < vertices.size() && !crossed; ++i)
            crossed = segments_cross(z, w, vertices[i], vertices[i + 1]);
        if (crossed) continue;
        for (int lvl = 0; lvl < 2; ++lvl)
            for (const auto& j : jit) {
                const Enclosure c =
                    EnclosureGrid(vertices, h0 / (1 << lvl), j[0], j[1]).classify(w);
                if (c != Enclosure::indeterminate) return c;
            }
    }
    return Enclosure::indeterminate;
}

} // namespace bls::mc
