#include "support/helpers.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>

namespace testsup {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
        char name[64];
        std::snprintf(name, sizeof(name), "respflow_test_%08x%08x", rd(), rd());
        fs::path candidate = fs::temp_directory_path() / name;
        std::error_code ec;
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("could not create a scratch directory");
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

respflow::Frame random_frame(int width, int height, std::uint64_t seed) {
    respflow::Frame f;
    f.width = width;
    f.height = height;
    f.data.resize(static_cast<size_t>(width) * height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    for (float& v : f.data) v = uni(rng);
    return f;
}

respflow::Frame smooth_frame(int width, int height, int spacing, std::uint64_t seed) {
    if (spacing < 1) spacing = 1;
    int lw = width / spacing + 2, lh = height / spacing + 2;
    std::vector<float> lattice(static_cast<size_t>(lw) * lh);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    for (float& v : lattice) v = uni(rng);

    respflow::Frame f;
    f.width = width;
    f.height = height;
    f.data.resize(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        double gy = static_cast<double>(y) / spacing;
        int y0 = static_cast<int>(gy);
        double fy = gy - y0;
        for (int x = 0; x < width; ++x) {
            double gx = static_cast<double>(x) / spacing;
            int x0 = static_cast<int>(gx);
            double fx = gx - x0;
            double v00 = lattice[static_cast<size_t>(y0) * lw + x0];
            double v10 = lattice[static_cast<size_t>(y0) * lw + x0 + 1];
            double v01 = lattice[static_cast<size_t>(y0 + 1) * lw + x0];
            double v11 = lattice[static_cast<size_t>(y0 + 1) * lw + x0 + 1];
            double top = v00 + (v10 - v00) * fx;
            double bot = v01 + (v11 - v01) * fx;
            f.data[static_cast<size_t>(y) * width + x] = static_cast<float>(top + (bot - top) * fy);
        }
    }
    return f;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                      static_cast<uInt>(body.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void write_png(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
               int height, int channels, int filter) {
    size_t stride = static_cast<size_t>(width) * channels;
    if (pixels.size() != stride * height) throw std::runtime_error("pixel buffer size mismatch");

    std::string raw;
    raw.reserve((stride + 1) * height);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* row = pixels.data() + y * stride;
        const std::uint8_t* up = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
        raw.push_back(static_cast<char>(filter));
        for (size_t i = 0; i < stride; ++i) {
            int left = i >= static_cast<size_t>(channels) ? row[i - channels] : 0;
            int above = up ? up[i] : 0;
            int corner = (up && i >= static_cast<size_t>(channels)) ? up[i - channels] : 0;
            int v = row[i];
            int enc;
            switch (filter) {
                case 1: enc = v - left; break;
                case 2: enc = v - above; break;
                case 3: enc = v - (left + above) / 2; break;
                case 4: enc = v - paeth(left, above, corner); break;
                default: enc = v;
            }
            raw.push_back(static_cast<char>(enc & 0xff));
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("deflate failed");

    std::string png("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                      // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);                  // color type
    ihdr.push_back(0);                                      // compression
    ihdr.push_back(0);                                      // filter method
    ihdr.push_back(0);                                      // no interlace
    put_chunk(png, "IHDR", ihdr);
    put_chunk(png, "IDAT",
              std::string(reinterpret_cast<const char*>(compressed.data()), bound));
    put_chunk(png, "IEND", "");
    write_file(path, png);
}

}  // namespace

void write_png_gray(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                    int height, int filter) {
    write_png(path, pixels, width, height, 1, filter);
}

void write_png_rgb(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                   int height, int filter) {
    write_png(path, pixels, width, height, 3, filter);
}

}  // namespace testsup
