#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "respflow/frame.hpp"

namespace testsup {

// Unique scratch directory, removed with its contents on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

respflow::Frame random_frame(int width, int height, std::uint64_t seed);

// Band-limited random texture: bilinear upsample of a coarse seeded lattice.
respflow::Frame smooth_frame(int width, int height, int spacing, std::uint64_t seed);

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

// Independent PNG encoder. `filter` 0..4 is applied to every scanline.
void write_png_gray(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                    int height, int filter = 0);
void write_png_rgb(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                   int height, int filter = 0);

}  // namespace testsup
