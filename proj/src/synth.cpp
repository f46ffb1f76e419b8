#include "respflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "respflow/flow.hpp"
#include "respflow/video_io.hpp"

namespace respflow {

std::string to_string(TextureKind kind) {
    switch (kind) {
        case TextureKind::checker: return "checker";
        case TextureKind::sinusoid2d: return "sinusoid2d";
        case TextureKind::noise: return "noise";
        case TextureKind::solid: return "solid";
        case TextureKind::blobs: return "blobs";
    }
    return "unknown";
}

TextureKind texture_from_string(const std::string& name) {
    if (name == "checker") return TextureKind::checker;
    if (name == "sinusoid2d") return TextureKind::sinusoid2d;
    if (name == "noise") return TextureKind::noise;
    if (name == "solid") return TextureKind::solid;
    if (name == "blobs") return TextureKind::blobs;
    throw InvalidArgument("unknown texture '" + name + "'");
}

namespace {

// Mean of the +/-1 square wave (half-period h) over [u-0.5, u+0.5], so cell
// edges come out antialiased by exact area coverage.
double square_mean(double u, double h) {
    auto integral = [h](double v) {
        double cell = std::floor(v / h);
        double rest = v - cell * h;
        double full = std::fmod(cell, 2.0) != 0.0 ? h : 0.0;  // completed pairs cancel
        double sign = std::fmod(cell, 2.0) == 0.0 ? 1.0 : -1.0;
        return full + sign * rest;
    };
    return integral(u + 0.5) - integral(u - 0.5);
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

Frame render_checker(const TextureSpec& spec, int w, int h) {
    double half = spec.period / 2.0;
    double amp = 0.35 * spec.contrast;
    Frame f(w, h);
    std::vector<double> sx(w), sy(h);
    for (int x = 0; x < w; ++x) sx[x] = square_mean(x, half);
    for (int y = 0; y < h; ++y) sy[y] = square_mean(y, half);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(x, y) = clamp01(0.5 + amp * sx[x] * sy[y]);
    return f;
}

Frame render_sinusoid(const TextureSpec& spec, int w, int h) {
    double amp = 0.175 * spec.contrast;
    double k = 2.0 * std::numbers::pi / spec.period;
    Frame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f.at(x, y) = clamp01(0.5 + amp * (std::sin(k * x) + std::sin(k * y)));
    return f;
}

// Value noise: bilinear interpolation of a seeded random lattice, so the
// feature scale is the lattice spacing and survives downsampling.
Frame render_noise(const TextureSpec& spec, int w, int h) {
    double spacing = std::max(2.0, spec.period);
    int gw = static_cast<int>(std::ceil(w / spacing)) + 2;
    int gh = static_cast<int>(std::ceil(h / spacing)) + 2;
    std::mt19937_64 rng(spec.seed);
    std::vector<double> lattice(static_cast<size_t>(gw) * gh);
    for (double& v : lattice)
        v = 2.0 * (static_cast<double>(rng()) / static_cast<double>(UINT64_MAX)) - 1.0;

    double amp = 0.35 * spec.contrast;
    Frame f(w, h);
    for (int y = 0; y < h; ++y) {
        double gy = y / spacing;
        int y0 = static_cast<int>(gy);
        double fy = gy - y0;
        for (int x = 0; x < w; ++x) {
            double gx = x / spacing;
            int x0 = static_cast<int>(gx);
            double fx = gx - x0;
            double v00 = lattice[static_cast<size_t>(y0) * gw + x0];
            double v10 = lattice[static_cast<size_t>(y0) * gw + x0 + 1];
            double v01 = lattice[static_cast<size_t>(y0 + 1) * gw + x0];
            double v11 = lattice[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
            double top = v00 + fx * (v10 - v00);
            double bot = v01 + fx * (v11 - v01);
            f.at(x, y) = clamp01(0.5 + amp * (top + fy * (bot - top)));
        }
    }
    return f;
}

Frame render_blobs(const TextureSpec& spec, int w, int h) {
    std::vector<Vec2> centers = spec.blob_centers;
    if (centers.empty()) {
        double spacing = std::max(4.0, spec.period);
        std::mt19937_64 rng(spec.seed);
        auto jitter = [&] {
            return (static_cast<double>(rng()) / static_cast<double>(UINT64_MAX) - 0.5) *
                   spacing / 2.0;
        };
        for (double cy = spacing / 2.0; cy < h; cy += spacing)
            for (double cx = spacing / 2.0; cx < w; cx += spacing)
                centers.push_back({cx + jitter(), cy + jitter()});
    }
    Frame f(w, h);
    for (float& v : f.data) v = clamp01(spec.value);
    double sigma = std::max(0.5, spec.blob_sigma);
    int reach = static_cast<int>(std::ceil(4.0 * sigma));
    for (const Vec2& c : centers) {
        int x0 = std::max(0, static_cast<int>(std::floor(c.x)) - reach);
        int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x)) + reach);
        int y0 = std::max(0, static_cast<int>(std::floor(c.y)) - reach);
        int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y)) + reach);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double dx = x - c.x, dy = y - c.y;
                double g = spec.contrast * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                f.at(x, y) = clamp01(f.at(x, y) + g);
            }
        }
    }
    return f;
}

void validate_region(const Rect& r, int w, int h, const char* name) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.right() > w || r.bottom() > h)
        throw InvalidArgument(std::string(name) + " region does not fit inside the frame");
}

Rect default_chest(int w, int h) {
    return {static_cast<int>(std::lround(0.28 * w)), static_cast<int>(std::lround(0.46 * h)),
            static_cast<int>(std::lround(0.44 * w)), static_cast<int>(std::lround(0.50 * h))};
}

Rect default_face(int w, int h) {
    return {static_cast<int>(std::lround(0.375 * w)), static_cast<int>(std::lround(0.083 * h)),
            static_cast<int>(std::lround(0.25 * w)), static_cast<int>(std::lround(0.27 * h))};
}

KeypointSet scene_keypoints(const Rect& chest, const Rect& face) {
    KeypointSet k;
    double sy = chest.y + 0.15 * chest.h;
    k.shoulder_left = Vec2{chest.x + 0.2 * chest.w, sy};
    k.shoulder_right = Vec2{chest.x + 0.8 * chest.w, sy};
    k.neck = midpoint(*k.shoulder_left, *k.shoulder_right);
    double ey = face.y + 0.35 * face.h;
    k.eye_left = Vec2{face.x + 0.25 * face.w, ey};
    k.eye_right = Vec2{face.x + 0.75 * face.w, ey};
    k.nose = Vec2{face.x + 0.5 * face.w, face.y + 0.58 * face.h};
    k.chin = Vec2{face.x + 0.5 * face.w, face.y + 0.78 * face.h};
    return k;
}

// Smoothed, zero-start random walk normalized to a peak of `amp` pixels.
std::vector<double> smooth_walk(uint64_t seed, int n, double fps, double amp) {
    std::mt19937_64 rng(seed);
    std::vector<double> walk(n, 0.0);
    double pos = 0.0;
    for (int i = 0; i < n; ++i) {
        pos += 2.0 * (static_cast<double>(rng()) / static_cast<double>(UINT64_MAX)) - 1.0;
        walk[i] = pos;
    }
    int half = std::max(2, static_cast<int>(std::lround(fps / 4.0)));
    std::vector<double> smooth(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            acc += walk[j];
            ++cnt;
        }
        smooth[i] = acc / cnt;
    }
    double base = smooth[0];
    double peak = 0.0;
    for (double& v : smooth) {
        v -= base;
        peak = std::max(peak, std::fabs(v));
    }
    if (peak > 0.0)
        for (double& v : smooth) v *= amp / peak;
    return smooth;
}

void resample_region(Frame& dst, const Frame& base, const Rect& r, double dx, double dy) {
    for (int y = r.y; y < r.bottom(); ++y)
        for (int x = r.x; x < r.right(); ++x)
            dst.at(x, y) = static_cast<float>(sample_bilinear(base, x - dx, y - dy));
}

}  // namespace

Frame render_texture(const TextureSpec& spec, int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("texture dimensions must be positive");
    if (spec.kind != TextureKind::solid && spec.kind != TextureKind::blobs && spec.period <= 0)
        throw InvalidArgument("texture period must be positive");
    switch (spec.kind) {
        case TextureKind::checker: return render_checker(spec, width, height);
        case TextureKind::sinusoid2d: return render_sinusoid(spec, width, height);
        case TextureKind::noise: return render_noise(spec, width, height);
        case TextureKind::solid: {
            Frame f(width, height);
            for (float& v : f.data) v = clamp01(spec.value);
            return f;
        }
        case TextureKind::blobs: return render_blobs(spec, width, height);
    }
    throw InvalidArgument("unknown texture kind");
}

Scene render_breathing_video(const SceneSpec& spec) {
    if (spec.width < 16 || spec.height < 16)
        throw InvalidArgument("scene dimensions too small");
    if (!(spec.fps > 0)) throw InvalidArgument("fps must be positive");
    if (!(spec.duration_s > 0)) throw InvalidArgument("duration must be positive");
    if (!(spec.breathing_freq > 0) || !(spec.breathing_freq < spec.fps / 2))
        throw InvalidArgument("breathing frequency must lie in (0, fps/2)");
    if (spec.breathing_amp < 0) throw InvalidArgument("breathing amplitude must be >= 0");
    if (spec.head_noise_amp < 0) throw InvalidArgument("head noise amplitude must be >= 0");

    Rect chest = spec.chest_region.w > 0 ? spec.chest_region
                                         : default_chest(spec.width, spec.height);
    Rect face = spec.face_region.w > 0 ? spec.face_region
                                       : default_face(spec.width, spec.height);
    validate_region(chest, spec.width, spec.height, "chest");
    validate_region(face, spec.width, spec.height, "face");
    if (chest.overlaps(face)) throw InvalidArgument("chest and face regions overlap");

    int n = static_cast<int>(std::lround(spec.duration_s * spec.fps));
    if (n < 2) throw InvalidArgument("scene must span at least 2 frames");

    Frame base = render_texture(spec.texture, spec.width, spec.height);
    if (spec.chest_texture) {
        Frame ct = render_texture(*spec.chest_texture, spec.width, spec.height);
        for (int y = chest.y; y < chest.bottom(); ++y)
            for (int x = chest.x; x < chest.right(); ++x) base.at(x, y) = ct.at(x, y);
    }

    Scene scene;
    scene.chest_region = chest;
    scene.face_region = face;
    scene.keypoints = scene_keypoints(chest, face);
    scene.truth.bpm = spec.breathing_freq * 60.0;
    scene.truth.chest_dy.resize(n);
    scene.truth.face_dx.assign(n, 0.0);
    scene.truth.face_dy.resize(n);

    std::vector<double> walk_x(n, 0.0), walk_y(n, 0.0);
    if (spec.head_noise_amp > 0) {
        walk_x = smooth_walk(spec.seed * 2 + 1, n, spec.fps, spec.head_noise_amp);
        walk_y = smooth_walk(spec.seed * 2 + 2, n, spec.fps, spec.head_noise_amp);
    }
    const double w = 2.0 * std::numbers::pi * spec.breathing_freq;
    for (int t = 0; t < n; ++t) {
        scene.truth.chest_dy[t] = spec.breathing_amp * std::sin(w * t / spec.fps);
        scene.truth.face_dx[t] = walk_x[t];
        scene.truth.face_dy[t] = scene.truth.chest_dy[t] + walk_y[t];
    }

    scene.video.fps = spec.fps;
    scene.video.frames.reserve(n);
    scene.video.frames.push_back(base);
    for (int t = 1; t < n; ++t) {
        Frame frame = base;
        resample_region(frame, base, chest, 0.0, scene.truth.chest_dy[t]);
        resample_region(frame, base, face, scene.truth.face_dx[t], scene.truth.face_dy[t]);
        scene.video.frames.push_back(std::move(frame));
    }
    return scene;
}

std::pair<Frame, Frame> render_shift_pair(const TextureSpec& texture, int width, int height,
                                          Vec2 shift) {
    Frame first = render_texture(texture, width, height);
    Frame second(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            second.at(x, y) =
                static_cast<float>(sample_bilinear(first, x - shift.x, y - shift.y));
    return {std::move(first), std::move(second)};
}

void write_scene(const Scene& scene, const std::string& dir, bool as_y4m) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

    if (as_y4m) {
        save_y4m(scene.video, (fs::path(dir) / "video.y4m").string());
    } else {
        fs::path frames_dir = fs::path(dir) / "frames";
        fs::create_directories(frames_dir, ec);
        if (ec) throw IoError("cannot create directory " + frames_dir.string());
        char name[32];
        for (size_t i = 0; i < scene.video.frames.size(); ++i) {
            std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
            save_pgm(scene.video.frames[i], (frames_dir / name).string());
        }
    }
    write_keypoints(scene.keypoints, (fs::path(dir) / "keypoints.json").string());

    std::ofstream truth((fs::path(dir) / "truth.csv").string());
    if (!truth) throw IoError("cannot open " + dir + "/truth.csv for writing");
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# bpm: %.9g", scene.truth.bpm);
    truth << buf << "\nframe,chest_dy,face_dx,face_dy\n";
    for (size_t t = 0; t < scene.truth.chest_dy.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g", t, scene.truth.chest_dy[t],
                      scene.truth.face_dx[t], scene.truth.face_dy[t]);
        truth << buf << '\n';
    }
    if (!truth) throw IoError("failed writing " + dir + "/truth.csv");
}

}  // namespace respflow
