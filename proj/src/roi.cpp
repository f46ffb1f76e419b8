#include "respflow/roi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace respflow {

namespace {

struct LandmarkEntry {
    const char* name;
    std::optional<Vec2> KeypointSet::*slot;
};

const LandmarkEntry kLandmarks[] = {
    {"eye_left", &KeypointSet::eye_left},
    {"eye_right", &KeypointSet::eye_right},
    {"nose", &KeypointSet::nose},
    {"chin", &KeypointSet::chin},
    {"shoulder_left", &KeypointSet::shoulder_left},
    {"shoulder_right", &KeypointSet::shoulder_right},
    {"neck", &KeypointSet::neck},
};

size_t line_of_byte(const std::string& text, size_t byte) {
    size_t end = std::min(byte, text.size());
    return 1 + static_cast<size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

bool within_bounds(Vec2 p, const PointBounds& b) {
    return p.x >= b.inset && p.x <= b.width - 1 - b.inset && p.y >= b.inset &&
           p.y <= b.height - 1 - b.inset;
}

Vec2 require(const std::optional<Vec2>& slot, const char* name) {
    if (!slot) throw MissingLandmarkError(name);
    return *slot;
}

void require_distinct_shoulders(Vec2 sl, Vec2 sr) {
    if (sl.x == sr.x)
        throw InvalidArgument("shoulder_left and shoulder_right must differ in x");
}

}  // namespace

std::string to_string(PointConfigKind kind) {
    switch (kind) {
        case PointConfigKind::face_points: return "face_points";
        case PointConfigKind::chest_points: return "chest_points";
        case PointConfigKind::chest_grid: return "chest_grid";
    }
    return "unknown";
}

PointConfigKind kind_from_string(const std::string& name) {
    if (name == "face_points") return PointConfigKind::face_points;
    if (name == "chest_points") return PointConfigKind::chest_points;
    if (name == "chest_grid") return PointConfigKind::chest_grid;
    throw InvalidArgument("unknown point configuration '" + name +
                          "' (expected face_points, chest_points or chest_grid)");
}

KeypointSet parse_keypoints_text(const std::string& text, const std::string& name) {
    using nlohmann::json;

    // the default parser silently keeps the last duplicate key, so duplicates
    // are caught through the event callback
    std::set<std::string> seen;
    std::string duplicate;
    json doc;
    try {
        doc = json::parse(text, [&](int, json::parse_event_t event, json& parsed) {
            if (event == json::parse_event_t::key) {
                std::string key = parsed.get<std::string>();
                if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
            }
            return true;
        });
    } catch (const json::parse_error& e) {
        throw FormatError(name + ": parse error at line " +
                          std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
    }
    if (!duplicate.empty())
        throw FormatError(name + ": duplicate landmark '" + duplicate + "'");
    if (!doc.is_object()) throw FormatError(name + ": expected a top-level object");

    KeypointSet k;
    for (const auto& [key, value] : doc.items()) {
        const LandmarkEntry* entry = nullptr;
        for (const auto& cand : kLandmarks)
            if (key == cand.name) entry = &cand;
        if (!entry) throw FormatError(name + ": unknown landmark '" + key + "'");
        if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
            !value[1].is_number())
            throw FormatError(name + ": landmark '" + key +
                              "' must be a two-element numeric array");
        k.*(entry->slot) = Vec2{value[0].get<double>(), value[1].get<double>()};
    }
    return k;
}

KeypointSet parse_keypoints(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_keypoints_text(text, path);
}

void write_keypoints(const KeypointSet& k, const std::string& path) {
    nlohmann::ordered_json doc;
    for (const auto& entry : kLandmarks) {
        const std::optional<Vec2>& slot = k.*(entry.slot);
        if (slot) doc[entry.name] = {slot->x, slot->y};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

std::vector<Vec2> face_points(const KeypointSet& k) {
    Vec2 el = require(k.eye_left, "eye_left");
    Vec2 er = require(k.eye_right, "eye_right");
    Vec2 nose = require(k.nose, "nose");
    Vec2 chin = require(k.chin, "chin");
    return {midpoint(el, er), nose, chin};
}

std::vector<Vec2> chest_points(const KeypointSet& k) {
    Vec2 sl = require(k.shoulder_left, "shoulder_left");
    Vec2 sr = require(k.shoulder_right, "shoulder_right");
    Vec2 neck = require(k.neck, "neck");
    require_distinct_shoulders(sl, sr);
    return {sl, sr, neck};
}

GridPoints chest_grid(const KeypointSet& k, int rows,
                      const std::optional<PointBounds>& bounds) {
    if (rows < 2) throw InvalidArgument("chest_grid needs rows >= 2");
    Vec2 sl = require(k.shoulder_left, "shoulder_left");
    Vec2 sr = require(k.shoulder_right, "shoulder_right");
    require_distinct_shoulders(sl, sr);

    Vec2 seg = sr - sl;
    double len = seg.norm();
    Vec2 perp{-seg.y / len, seg.x / len};
    if (perp.y < 0) perp = perp * -1.0;  // away from the head
    Vec2 apex = midpoint(sl, sr) + perp * len;

    GridPoints out;
    for (int r = 0; r < rows; ++r) {
        double f = static_cast<double>(r) / (rows - 1);
        Vec2 left = sl + (apex - sl) * f;
        Vec2 right = sr + (apex - sr) * f;
        int count = rows - r;
        for (int i = 0; i < count; ++i) {
            double u = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
            Vec2 p = left + (right - left) * u;
            ++out.n_generated;
            if (bounds && !within_bounds(p, *bounds)) {
                ++out.n_dropped;
                continue;
            }
            out.points.push_back(p);
        }
    }
    if (2 * out.n_dropped > out.n_generated)
        throw DegenerateGridError("chest grid degenerate: " + std::to_string(out.n_dropped) +
                                  " of " + std::to_string(out.n_generated) +
                                  " points fall outside the tracking bounds");
    return out;
}

SelectedPoints select_points(PointConfigKind kind, const KeypointSet& k, int rows,
                             const std::optional<PointBounds>& bounds) {
    if (kind == PointConfigKind::chest_grid) {
        GridPoints grid = chest_grid(k, rows, bounds);
        return {std::move(grid.points), grid.n_dropped};
    }
    std::vector<Vec2> pts =
        kind == PointConfigKind::face_points ? face_points(k) : chest_points(k);
    if (bounds) {
        for (size_t i = 0; i < pts.size(); ++i)
            if (!within_bounds(pts[i], *bounds))
                throw InvalidArgument(to_string(kind) + " point " + std::to_string(i) +
                                      " falls outside the tracking bounds");
    }
    return {std::move(pts), 0};
}

}  // namespace respflow
