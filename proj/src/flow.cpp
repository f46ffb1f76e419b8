#include "respflow/flow.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>
#include <vector>

namespace respflow {

void FlowConfig::validate() const {
    if (window_half_width < 1) throw InvalidArgument("window_half_width must be >= 1");
    if (pyramid_levels < 1) throw InvalidArgument("pyramid_levels must be >= 1");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
    if (!(convergence_epsilon > 0)) throw InvalidArgument("convergence_epsilon must be > 0");
    if (!(min_eigenvalue >= 0)) throw InvalidArgument("min_eigenvalue must be >= 0");
}

namespace {

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// [1,4,6,4,1]/16 separable low-pass, replicate borders, keep even indices.
// Horizontal pass only at the columns that survive decimation.
Frame downsample(const Frame& src) {
    const int w = src.width, h = src.height;
    const int dw = (w + 1) / 2, dh = (h + 1) / 2;
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

    Frame half(dw, h);
    for (int y = 0; y < h; ++y) {
        const float* row = &src.data[static_cast<size_t>(y) * w];
        for (int dx = 0; dx < dw; ++dx) {
            int x = 2 * dx;
            double acc = 0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * row[clampi(x + i, 0, w - 1)];
            half.at(dx, y) = static_cast<float>(acc);
        }
    }
    Frame dst(dw, dh);
    for (int dy = 0; dy < dh; ++dy) {
        int y = 2 * dy;
        for (int dx = 0; dx < dw; ++dx) {
            double acc = 0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * half.at(dx, clampi(y + i, 0, h - 1));
            dst.at(dx, dy) = static_cast<float>(acc);
        }
    }
    return dst;
}

// Scharr 3x3 at one pixel, replicate borders. The single source of gradient
// values for both the full-frame grids and the tracker's local patches.
std::pair<float, float> scharr_at(const Frame& f, int x, int y) {
    double tl = f.at_clamped(x - 1, y - 1), tm = f.at_clamped(x, y - 1), tr = f.at_clamped(x + 1, y - 1);
    double ml = f.at_clamped(x - 1, y), mr = f.at_clamped(x + 1, y);
    double bl = f.at_clamped(x - 1, y + 1), bm = f.at_clamped(x, y + 1), br = f.at_clamped(x + 1, y + 1);
    double gx = (3.0 * tr + 10.0 * mr + 3.0 * br - 3.0 * tl - 10.0 * ml - 3.0 * bl) / 32.0;
    double gy = (3.0 * bl + 10.0 * bm + 3.0 * br - 3.0 * tl - 10.0 * tm - 3.0 * tr) / 32.0;
    return {static_cast<float>(gx), static_cast<float>(gy)};
}

double bilerp(double v00, double v10, double v01, double v11, double fx, double fy) {
    double top = v00 + fx * (v10 - v00);
    double bot = v01 + fx * (v11 - v01);
    return top + fy * (bot - top);
}

bool inside_inset(const Frame& f, Vec2 p, int hw) {
    return p.x >= hw && p.x <= f.width - 1 - hw && p.y >= hw && p.y <= f.height - 1 - hw;
}

// Iterative refinement shared by the public full-grid entry point and the
// tracker's patch-local fast path. grad_at/prev_at take integer pixel
// coordinates already inside bounds (callers pre-clamp), so both providers
// return identical values and the two paths agree bit for bit.
template <class GradFn, class PrevFn>
RefineResult refine_impl(const Frame& next, Vec2 point, Vec2 guess, const FlowConfig& cfg,
                         GradFn&& grad_at, PrevFn&& prev_at) {
    const int hw = cfg.window_half_width;
    const int x0 = static_cast<int>(std::floor(point.x));
    const int y0 = static_cast<int>(std::floor(point.y));
    const double fx = point.x - x0, fy = point.y - y0;
    const int n = cfg.window_pixels();

    thread_local std::vector<double> wgx, wgy, wpv;
    wgx.resize(n);
    wgy.resize(n);
    wpv.resize(n);

    double a = 0, b = 0, c = 0;
    int idx = 0;
    for (int uy = -hw; uy <= hw; ++uy) {
        for (int ux = -hw; ux <= hw; ++ux, ++idx) {
            int gx0 = x0 + ux, gy0 = y0 + uy;
            auto [g00x, g00y] = grad_at(gx0, gy0);
            auto [g10x, g10y] = grad_at(gx0 + 1, gy0);
            auto [g01x, g01y] = grad_at(gx0, gy0 + 1);
            auto [g11x, g11y] = grad_at(gx0 + 1, gy0 + 1);
            double gx = bilerp(g00x, g10x, g01x, g11x, fx, fy);
            double gy = bilerp(g00y, g10y, g01y, g11y, fx, fy);
            double pv = bilerp(prev_at(gx0, gy0), prev_at(gx0 + 1, gy0), prev_at(gx0, gy0 + 1),
                               prev_at(gx0 + 1, gy0 + 1), fx, fy);
            wgx[idx] = gx;
            wgy[idx] = gy;
            wpv[idx] = pv;
            a += gx * gx;
            b += gx * gy;
            c += gy * gy;
        }
    }

    RefineResult r;
    r.displacement = guess;
    double half_trace = 0.5 * (a + c);
    double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    r.min_eig = (half_trace - rad) / n;
    if (r.min_eig < cfg.min_eigenvalue) return r;  // degenerate texture, caller marks lost

    const double det = a * c - b * b;
    double dx = guess.x, dy = guess.y;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double bx = 0, by = 0;
        idx = 0;
        for (int uy = -hw; uy <= hw; ++uy) {
            for (int ux = -hw; ux <= hw; ++ux, ++idx) {
                double nv = sample_bilinear(next, point.x + ux + dx, point.y + uy + dy);
                double di = wpv[idx] - nv;
                bx += wgx[idx] * di;
                by += wgy[idx] * di;
            }
        }
        double sx = (c * bx - b * by) / det;
        double sy = (a * by - b * bx) / det;
        dx += sx;
        dy += sy;
        if (!std::isfinite(dx) || !std::isfinite(dy))
            throw NumericError("non-finite displacement during refinement");
        if (std::hypot(sx, sy) < cfg.convergence_epsilon) {
            r.converged = true;
            break;
        }
    }
    r.displacement = {dx, dy};
    return r;
}

// Patch-local variant: gradients and prev values are materialized once on the
// small integer lattice the window can touch, then served from flat arrays.
RefineResult refine_patch(const Frame& prev, const Frame& next, Vec2 point, Vec2 guess,
                          const FlowConfig& cfg) {
    const int hw = cfg.window_half_width;
    const int ox = static_cast<int>(std::floor(point.x)) - hw;
    const int oy = static_cast<int>(std::floor(point.y)) - hw;
    const int pw = 2 * hw + 2;

    thread_local std::vector<float> pgx, pgy, ppv;
    pgx.resize(static_cast<size_t>(pw) * pw);
    pgy.resize(static_cast<size_t>(pw) * pw);
    ppv.resize(static_cast<size_t>(pw) * pw);
    for (int j = 0; j < pw; ++j) {
        int y = clampi(oy + j, 0, prev.height - 1);
        for (int i = 0; i < pw; ++i) {
            int x = clampi(ox + i, 0, prev.width - 1);
            auto [gx, gy] = scharr_at(prev, x, y);
            size_t at = static_cast<size_t>(j) * pw + i;
            pgx[at] = gx;
            pgy[at] = gy;
            ppv[at] = prev.at(x, y);
        }
    }
    auto grad = [&](int x, int y) {
        size_t at = static_cast<size_t>(y - oy) * pw + (x - ox);
        return std::pair<float, float>(pgx[at], pgy[at]);
    };
    auto prev_val = [&](int x, int y) {
        return static_cast<double>(ppv[static_cast<size_t>(y - oy) * pw + (x - ox)]);
    };
    return refine_impl(next, point, guess, cfg, grad, prev_val);
}

}  // namespace

Pyramid build_pyramid(const Frame& frame, int levels, int window_half_width) {
    if (levels < 1) throw InvalidArgument("pyramid levels must be >= 1");
    if (window_half_width < 1) throw InvalidArgument("window_half_width must be >= 1");
    const int min_dim = 2 * window_half_width + 1;

    Pyramid pyr;
    pyr.requested_levels = levels;
    pyr.levels.push_back(frame);
    while (pyr.num_levels() < levels) {
        const Frame& cur = pyr.levels.back();
        int nw = (cur.width + 1) / 2, nh = (cur.height + 1) / 2;
        if (nw < min_dim || nh < min_dim) break;  // coarser level could not hold the window
        pyr.levels.push_back(downsample(cur));
    }
    return pyr;
}

Gradients spatial_gradient(const Frame& frame) {
    Gradients g{Frame(frame.width, frame.height), Frame(frame.width, frame.height)};
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            auto [gx, gy] = scharr_at(frame, x, y);
            g.ix.at(x, y) = gx;
            g.iy.at(x, y) = gy;
        }
    }
    return g;
}

double sample_bilinear(const Frame& frame, double x, double y) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    double v00 = frame.at_clamped(x0, y0);
    double v10 = frame.at_clamped(x0 + 1, y0);
    double v01 = frame.at_clamped(x0, y0 + 1);
    double v11 = frame.at_clamped(x0 + 1, y0 + 1);
    return bilerp(v00, v10, v01, v11, fx, fy);
}

RefineResult lk_refine(const Frame& prev, const Frame& next, const Gradients& grads,
                       Vec2 point, Vec2 guess, const FlowConfig& cfg) {
    cfg.validate();
    if (!prev.same_size(next)) throw InvalidArgument("prev and next frames differ in size");
    if (!grads.ix.same_size(prev) || !grads.iy.same_size(prev))
        throw InvalidArgument("gradient grids do not match the frame");
    if (!inside_inset(prev, point, cfg.window_half_width))
        throw InvalidArgument("point violates the window inset bounds");

    auto grad = [&](int x, int y) {
        return std::pair<float, float>(grads.ix.at_clamped(x, y), grads.iy.at_clamped(x, y));
    };
    auto prev_val = [&](int x, int y) { return static_cast<double>(prev.at_clamped(x, y)); };
    return refine_impl(next, point, guess, cfg, grad, prev_val);
}

PointResult track_point(const Pyramid& pyr_prev, const Pyramid& pyr_next, Vec2 point,
                        const FlowConfig& cfg) {
    cfg.validate();
    if (pyr_prev.num_levels() == 0 || pyr_prev.num_levels() != pyr_next.num_levels())
        throw InvalidArgument("pyramids must be non-empty and of equal depth");
    for (int l = 0; l < pyr_prev.num_levels(); ++l)
        if (!pyr_prev.levels[l].same_size(pyr_next.levels[l]))
            throw InvalidArgument("pyramid levels differ in size");
    const Frame& base = pyr_prev.levels[0];
    if (point.x < 0 || point.x > base.width - 1 || point.y < 0 || point.y > base.height - 1)
        throw InvalidArgument("point outside frame bounds");

    const int hw = cfg.window_half_width;
    Vec2 d{0, 0};
    for (int level = pyr_prev.num_levels() - 1; level >= 1; --level) {
        double s = static_cast<double>(1 << level);
        Vec2 q{point.x / s, point.y / s};
        const Frame& fp = pyr_prev.levels[level];
        // levels whose projection sits too close to the border contribute no
        // estimate; the guess just carries through the doubling
        if (inside_inset(fp, q, hw)) {
            RefineResult r = refine_patch(fp, pyr_next.levels[level], q, d, cfg);
            if (r.degenerate(cfg) || !r.converged) return {point, TrackStatus::lost};
            d = r.displacement;
        }
        d = d * 2.0;
    }
    if (!inside_inset(base, point, hw)) return {point, TrackStatus::lost};
    RefineResult r = refine_patch(base, pyr_next.levels[0], point, d, cfg);
    if (r.degenerate(cfg) || !r.converged) return {point, TrackStatus::lost};
    Vec2 moved = point + r.displacement;
    if (!inside_inset(base, moved, hw)) return {point, TrackStatus::lost};
    return {moved, TrackStatus::tracked};
}

TrackMatrix track_sequence(const FrameSequence& seq, const std::vector<Vec2>& initial_points,
                           const FlowConfig& cfg) {
    cfg.validate();
    if (seq.frames.size() < 2) throw InvalidArgument("tracking needs at least 2 frames");
    if (seq.fps <= 0) throw InvalidArgument("sequence fps must be positive");
    if (initial_points.empty()) throw InvalidArgument("tracking needs at least 1 point");
    const Frame& f0 = seq.frames.front();
    for (size_t i = 0; i < initial_points.size(); ++i)
        if (!inside_inset(f0, initial_points[i], cfg.window_half_width))
            throw InvalidArgument("initial point " + std::to_string(i) +
                                  " violates the window inset bounds");

    const int n_frames = static_cast<int>(seq.frames.size());
    const int n_pts = static_cast<int>(initial_points.size());
    TrackMatrix m;
    m.fps = seq.fps;
    m.positions.assign(n_pts, std::vector<Vec2>(n_frames));
    m.status.assign(n_pts, std::vector<TrackStatus>(n_frames, TrackStatus::lost));
    for (int p = 0; p < n_pts; ++p) {
        m.positions[p][0] = initial_points[p];
        m.status[p][0] = TrackStatus::tracked;
    }

    Pyramid prev = build_pyramid(f0, cfg.pyramid_levels, cfg.window_half_width);
    for (int t = 1; t < n_frames; ++t) {
        Pyramid next = build_pyramid(seq.frames[t], cfg.pyramid_levels, cfg.window_half_width);
        int alive = 0;
        for (int p = 0; p < n_pts; ++p) {
            if (m.status[p][t - 1] == TrackStatus::lost) {
                m.positions[p][t] = m.positions[p][t - 1];  // carried for record-keeping
                continue;
            }
            PointResult r = track_point(prev, next, m.positions[p][t - 1], cfg);
            if (r.status == TrackStatus::tracked) {
                m.positions[p][t] = r.position;
                m.status[p][t] = TrackStatus::tracked;
                ++alive;
            } else {
                m.positions[p][t] = m.positions[p][t - 1];
            }
        }
        if (alive == 0 && t < n_frames - 1) throw AllPointsLostError(t);
        prev = std::move(next);
    }
    return m;
}

void write_track_csv(const TrackMatrix& tracks, std::ostream& out) {
    out << "frame,point_id,x,y,status\n";
    char buf[64];
    for (int t = 0; t < tracks.n_frames(); ++t) {
        for (int p = 0; p < tracks.n_points(); ++p) {
            const Vec2& v = tracks.positions[p][t];
            std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%s", t, p, v.x, v.y,
                          tracks.tracked(p, t) ? "tracked" : "lost");
            out << buf << '\n';
        }
    }
}

}  // namespace respflow
