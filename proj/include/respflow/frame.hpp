#ifndef RESPFLOW_FRAME_HPP
#define RESPFLOW_FRAME_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

#include "respflow/errors.hpp"

namespace respflow {

/// Single-channel intensity image. Samples are row-major scalars in [0,1].
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Frame() = default;
    Frame(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    /// Replicate-border read: coordinates outside the frame clamp to the edge.
    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return data[static_cast<size_t>(y) * width + x];
    }

    bool same_size(const Frame& o) const { return width == o.width && height == o.height; }
};

struct FrameSequence {
    std::vector<Frame> frames;
    double fps = 0.0;

    int width() const { return frames.empty() ? 0 : frames.front().width; }
    int height() const { return frames.empty() ? 0 : frames.front().height; }
    double duration_s() const { return fps > 0 ? frames.size() / fps : 0.0; }
};

}  // namespace respflow

#endif  // RESPFLOW_FRAME_HPP
