#ifndef RESPFLOW_ROI_HPP
#define RESPFLOW_ROI_HPP

#include <optional>
#include <string>
#include <vector>

#include "respflow/errors.hpp"
#include "respflow/geometry.hpp"

namespace respflow {

struct KeypointSet {
    std::optional<Vec2> eye_left;
    std::optional<Vec2> eye_right;
    std::optional<Vec2> nose;
    std::optional<Vec2> chin;
    std::optional<Vec2> shoulder_left;
    std::optional<Vec2> shoulder_right;
    std::optional<Vec2> neck;
};

enum class PointConfigKind { face_points, chest_points, chest_grid };

std::string to_string(PointConfigKind kind);
PointConfigKind kind_from_string(const std::string& name);

KeypointSet parse_keypoints(const std::string& path);
KeypointSet parse_keypoints_text(const std::string& text, const std::string& name);
void write_keypoints(const KeypointSet& k, const std::string& path);

// [midpoint(eye_left, eye_right), nose, chin]
std::vector<Vec2> face_points(const KeypointSet& k);

// [shoulder_left, shoulder_right, neck]
std::vector<Vec2> chest_points(const KeypointSet& k);

// Frame bounds inset by the tracker's window half-width; generated points
// outside it are dropped.
struct PointBounds {
    int width = 0;
    int height = 0;
    int inset = 0;
};

struct GridPoints {
    std::vector<Vec2> points;
    int n_generated = 0;
    int n_dropped = 0;
};

// Triangular lattice: shoulder segment as base, apex one shoulder-width below
// the midpoint, row r holding rows-r points.
GridPoints chest_grid(const KeypointSet& k, int rows = 5,
                      const std::optional<PointBounds>& bounds = std::nullopt);

struct SelectedPoints {
    std::vector<Vec2> points;
    int n_dropped = 0;
};

SelectedPoints select_points(PointConfigKind kind, const KeypointSet& k, int rows = 5,
                             const std::optional<PointBounds>& bounds = std::nullopt);

}  // namespace respflow

#endif  // RESPFLOW_ROI_HPP
