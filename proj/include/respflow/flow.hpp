#ifndef RESPFLOW_FLOW_HPP
#define RESPFLOW_FLOW_HPP

#include <iosfwd>
#include <vector>

#include "respflow/errors.hpp"
#include "respflow/frame.hpp"
#include "respflow/geometry.hpp"

namespace respflow {

struct FlowConfig {
    int window_half_width = 10;  // 21x21 window
    int pyramid_levels = 3;
    int max_iterations = 30;
    double convergence_epsilon = 0.01;  // pixels, on the per-iteration step norm
    double min_eigenvalue = 1e-4;       // per window pixel

    int window_size() const { return 2 * window_half_width + 1; }
    int window_pixels() const { return window_size() * window_size(); }

    void validate() const;  // throws InvalidArgument
};

struct Pyramid {
    std::vector<Frame> levels;  // levels[0] is full resolution
    int requested_levels = 0;   // what the caller asked for, before clamping

    int num_levels() const { return static_cast<int>(levels.size()); }
    bool clamped() const { return num_levels() < requested_levels; }
};

struct Gradients {
    Frame ix;
    Frame iy;
};

// levels is clamped so the coarsest kept level spans at least the tracking
// window (2*window_half_width+1) in both dimensions
Pyramid build_pyramid(const Frame& frame, int levels, int window_half_width = 10);

Gradients spatial_gradient(const Frame& frame);

double sample_bilinear(const Frame& frame, double x, double y);

struct RefineResult {
    Vec2 displacement;
    double min_eig = 0.0;  // smaller eigenvalue of G per window pixel
    bool converged = false;

    bool degenerate(const FlowConfig& cfg) const { return min_eig < cfg.min_eigenvalue; }
};

// Single-level iterative step. grads must come from prev. point must lie at
// least window_half_width inside prev's bounds.
RefineResult lk_refine(const Frame& prev, const Frame& next, const Gradients& grads,
                       Vec2 point, Vec2 guess, const FlowConfig& cfg);

enum class TrackStatus { tracked, lost };

struct PointResult {
    Vec2 position;
    TrackStatus status = TrackStatus::lost;
};

PointResult track_point(const Pyramid& pyr_prev, const Pyramid& pyr_next, Vec2 point,
                        const FlowConfig& cfg);

struct TrackMatrix {
    std::vector<std::vector<Vec2>> positions;      // [point][frame]
    std::vector<std::vector<TrackStatus>> status;  // [point][frame]
    double fps = 0.0;

    int n_points() const { return static_cast<int>(positions.size()); }
    int n_frames() const {
        return positions.empty() ? 0 : static_cast<int>(positions.front().size());
    }
    bool tracked(int point, int frame) const {
        return status[point][frame] == TrackStatus::tracked;
    }
};

TrackMatrix track_sequence(const FrameSequence& seq, const std::vector<Vec2>& initial_points,
                           const FlowConfig& cfg);

// header `frame,point_id,x,y,status`, one row per (frame, point)
void write_track_csv(const TrackMatrix& tracks, std::ostream& out);

}  // namespace respflow

#endif  // RESPFLOW_FLOW_HPP
