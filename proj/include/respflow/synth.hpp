#ifndef RESPFLOW_SYNTH_HPP
#define RESPFLOW_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respflow/errors.hpp"
#include "respflow/frame.hpp"
#include "respflow/geometry.hpp"
#include "respflow/roi.hpp"

namespace respflow {

enum class TextureKind { checker, sinusoid2d, noise, solid, blobs };

std::string to_string(TextureKind kind);
TextureKind texture_from_string(const std::string& name);

struct TextureSpec {
    TextureKind kind = TextureKind::checker;
    double period = 16.0;    // cell size, wavelength, or lattice spacing in px
    double contrast = 1.0;   // scales the swing around the base level
    double value = 0.5;      // solid level, and base level for blobs
    uint64_t seed = 1;       // noise lattice and default blob jitter
    double blob_sigma = 1.5;
    std::vector<Vec2> blob_centers;  // explicit placement; empty -> seeded lattice
};

Frame render_texture(const TextureSpec& spec, int width, int height);

struct SceneSpec {
    int width = 640;
    int height = 480;
    double fps = 30.0;
    double duration_s = 30.0;
    double breathing_freq = 0.3;  // Hz
    double breathing_amp = 2.0;   // px, vertical
    TextureSpec texture;
    std::optional<TextureSpec> chest_texture;  // override inside the chest region
    Rect chest_region{0, 0, 0, 0};  // zero size -> proportional default layout
    Rect face_region{0, 0, 0, 0};
    double head_noise_amp = 0.0;  // px, peak of the smoothed random walk
    uint64_t seed = 1;
};

struct SceneTruth {
    double bpm = 0.0;
    std::vector<double> chest_dy;
    std::vector<double> face_dx;
    std::vector<double> face_dy;
};

struct Scene {
    FrameSequence video;
    SceneTruth truth;
    KeypointSet keypoints;
    Rect chest_region;
    Rect face_region;
};

// Static background; chest content translates vertically on the breathing
// sinusoid; face content follows breathing plus the seeded head-motion walk.
Scene render_breathing_video(const SceneSpec& spec);

// Second frame is the first resampled bilinearly at a uniform offset.
std::pair<Frame, Frame> render_shift_pair(const TextureSpec& texture, int width, int height,
                                          Vec2 shift);

// Writes video.y4m (or frames/*.pgm), keypoints.json and truth.csv into dir.
void write_scene(const Scene& scene, const std::string& dir, bool as_y4m = true);

}  // namespace respflow

#endif  // RESPFLOW_SYNTH_HPP
