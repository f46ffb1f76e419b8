#include "respflow/video_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace respflow {

namespace {

// byte -> [0,1] lookup, fixed quantization 1/255
const std::array<float, 256>& byte_lut() {
    static const std::array<float, 256> lut = [] {
        std::array<float, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = static_cast<float>(i / 255.0);
        return t;
    }();
    return lut;
}

uint8_t quantize(float v) {
    double scaled = std::lround(static_cast<double>(v) * 255.0);
    return static_cast<uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

int pgm_read_token(std::istream& in, const std::string& name) {
    // whitespace and '#' comments may separate header tokens
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw FormatError(name + ": malformed PGM header");
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1000000000L) throw FormatError(name + ": PGM header value out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(value);
}

}  // namespace

double to_grayscale(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

Frame decode_pgm(std::istream& in, const std::string& name) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5')
        throw FormatError(name + ": not a binary PGM (P5) file");
    int width = pgm_read_token(in, name);
    int height = pgm_read_token(in, name);
    int maxval = pgm_read_token(in, name);
    if (width < 1 || height < 1) throw FormatError(name + ": invalid PGM dimensions");
    if (maxval != 255) throw FormatError(name + ": only maxval 255 PGM is supported");
    in.get();  // single whitespace byte before the raster

    Frame frame(width, height);
    std::vector<uint8_t> row(static_cast<size_t>(width));
    const auto& lut = byte_lut();
    for (int y = 0; y < height; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), width);
        if (in.gcount() != width) throw FormatError(name + ": truncated PGM raster");
        for (int x = 0; x < width; ++x) frame.at(x, y) = lut[row[x]];
    }
    return frame;
}

Frame load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return decode_pgm(in, path);
}

void encode_pgm(const Frame& frame, std::ostream& out) {
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(frame.width));
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) row[x] = quantize(frame.at(x, y));
        out.write(reinterpret_cast<const char*>(row.data()), frame.width);
    }
}

void save_pgm(const Frame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    encode_pgm(frame, out);
    if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// PNG (8-bit grayscale / RGB, non-interlaced)
// ---------------------------------------------------------------------------

namespace {

uint32_t read_be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a);
    int pb = std::abs(p - b);
    int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<uint8_t>(a);
    if (pb <= pc) return static_cast<uint8_t>(b);
    return static_cast<uint8_t>(c);
}

}  // namespace

Frame load_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw FormatError(path + ": not a PNG file");

    size_t pos = 8;
    uint32_t width = 0, height = 0;
    int channels = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<uint8_t> idat;

    while (pos + 12 <= bytes.size()) {
        uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw FormatError(path + ": truncated PNG chunk");
        const uint8_t* type = &bytes[pos + 4];
        const uint8_t* data = &bytes[pos + 8];
        uint32_t stored_crc = read_be32(&bytes[pos + 8 + len]);
        uint32_t crc = static_cast<uint32_t>(crc32(crc32(0L, type, 4), data, len));
        if (crc != stored_crc) throw FormatError(path + ": PNG chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw FormatError(path + ": bad IHDR length");
            width = read_be32(data);
            height = read_be32(data + 4);
            int bit_depth = data[8];
            int color_type = data[9];
            int interlace = data[12];
            if (width < 1 || height < 1) throw FormatError(path + ": invalid PNG dimensions");
            if (bit_depth != 8)
                throw FormatError(path + ": unsupported PNG bit depth " + std::to_string(bit_depth));
            if (color_type == 0)
                channels = 1;
            else if (color_type == 2)
                channels = 3;
            else
                throw FormatError(path + ": unsupported PNG color type " + std::to_string(color_type));
            if (interlace != 0) throw FormatError(path + ": interlaced PNG is not supported");
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            if (!saw_ihdr) throw FormatError(path + ": IDAT before IHDR");
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || !saw_iend || idat.empty()) throw FormatError(path + ": incomplete PNG");

    size_t stride = static_cast<size_t>(width) * channels;
    size_t expected = (stride + 1) * height;
    std::vector<uint8_t> raw(expected);
    uLongf dest_len = static_cast<uLongf>(expected);
    int rc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || dest_len != expected) throw FormatError(path + ": PNG inflate failed");

    // undo per-row filters in place
    std::vector<uint8_t> pixels(stride * height);
    for (uint32_t y = 0; y < height; ++y) {
        uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &pixels[stride * y];
        const uint8_t* up = y > 0 ? &pixels[stride * (y - 1)] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<size_t>(channels) ? dst[i - channels] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= static_cast<size_t>(channels)) ? up[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw FormatError(path + ": unknown PNG filter type");
            }
            dst[i] = static_cast<uint8_t>(v & 0xff);
        }
    }

    Frame frame(static_cast<int>(width), static_cast<int>(height));
    const auto& lut = byte_lut();
    for (uint32_t y = 0; y < height; ++y) {
        const uint8_t* row = &pixels[stride * y];
        for (uint32_t x = 0; x < width; ++x) {
            if (channels == 1) {
                frame.at(x, y) = lut[row[x]];
            } else {
                const uint8_t* px = row + 3 * x;
                frame.at(x, y) = static_cast<float>(
                    to_grayscale(lut[px[0]], lut[px[1]], lut[px[2]]));
            }
        }
    }
    return frame;
}

Frame load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() == 2 && magic[0] == 'P' && magic[1] == '5') {
        in.seekg(0);
        return decode_pgm(in, path);
    }
    if (in.gcount() == 2 && static_cast<uint8_t>(magic[0]) == 0x89 && magic[1] == 'P') {
        in.close();
        return load_png(path);
    }
    throw FormatError(path + ": unrecognized image format (need P5 PGM or PNG)");
}

// ---------------------------------------------------------------------------
// YUV4MPEG2
// ---------------------------------------------------------------------------

namespace {

struct Y4mHeader {
    int width = 0;
    int height = 0;
    long fps_num = 0;
    long fps_den = 0;
    bool mono = false;
    size_t header_bytes = 0;
};

Y4mHeader parse_y4m_header(std::istream& in, const std::string& path) {
    std::string line;
    size_t offset = 0;
    int c;
    while ((c = in.get()) != EOF && c != '\n') {
        line.push_back(static_cast<char>(c));
        if (line.size() > 2048) throw FormatError(path + ": oversized Y4M header at byte 2048");
        ++offset;
    }
    if (c == EOF) throw FormatError(path + ": truncated Y4M header at byte " + std::to_string(offset));

    static const std::string magic = "YUV4MPEG2";
    if (line.compare(0, magic.size(), magic) != 0)
        throw FormatError(path + ": missing YUV4MPEG2 magic at byte 0");

    Y4mHeader h;
    h.header_bytes = offset + 1;
    std::string colorspace = "420";  // Y4M default when no C tag is present
    size_t pos = magic.size();
    while (pos < line.size()) {
        if (line[pos] == ' ') {
            ++pos;
            continue;
        }
        char tag = line[pos++];
        size_t end = line.find(' ', pos);
        std::string value = line.substr(pos, end == std::string::npos ? end : end - pos);
        size_t tag_offset = pos - 1;
        switch (tag) {
            case 'W':
                h.width = std::atoi(value.c_str());
                break;
            case 'H':
                h.height = std::atoi(value.c_str());
                break;
            case 'F': {
                size_t colon = value.find(':');
                if (colon == std::string::npos)
                    throw FormatError(path + ": malformed F tag at byte " + std::to_string(tag_offset));
                h.fps_num = std::atol(value.substr(0, colon).c_str());
                h.fps_den = std::atol(value.substr(colon + 1).c_str());
                break;
            }
            case 'C':
                colorspace = value;
                break;
            case 'I':
            case 'A':
            case 'X':
                break;  // irrelevant to luma extraction
            default:
                throw FormatError(path + ": unknown Y4M header tag '" + std::string(1, tag) +
                                  "' at byte " + std::to_string(tag_offset));
        }
        pos = end == std::string::npos ? line.size() : end;
    }

    if (h.width < 1 || h.height < 1)
        throw FormatError(path + ": Y4M header missing or invalid W/H tag");
    if (h.fps_num <= 0 || h.fps_den <= 0)
        throw FormatError(path + ": Y4M header missing or invalid F tag");

    if (colorspace == "mono") {
        h.mono = true;
    } else if (colorspace == "420" || colorspace == "420jpeg" || colorspace == "420paldv" ||
               colorspace == "420mpeg2") {
        if (h.width % 2 != 0 || h.height % 2 != 0)
            throw FormatError(path + ": C420 Y4M requires even dimensions");
        h.mono = false;
    } else {
        throw FormatError(path + ": unsupported Y4M colorspace C" + colorspace);
    }
    return h;
}

std::pair<long, long> fps_to_rational(double fps) {
    for (long den : {1L, 1001L, 1000L}) {
        long num = std::lround(fps * den);
        if (num > 0 && std::fabs(static_cast<double>(num) / den - fps) < 1e-9) return {num, den};
    }
    long den = 100000;
    long num = std::lround(fps * den);
    long g = std::gcd(num, den);
    return {num / g, den / g};
}

}  // namespace

FrameSequence load_y4m(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    Y4mHeader h = parse_y4m_header(in, path);

    FrameSequence seq;
    seq.fps = static_cast<double>(h.fps_num) / static_cast<double>(h.fps_den);

    size_t luma_len = static_cast<size_t>(h.width) * h.height;
    size_t chroma_len = h.mono ? 0 : 2 * (static_cast<size_t>(h.width) / 2) * (h.height / 2);
    std::vector<uint8_t> luma(luma_len);
    const auto& lut = byte_lut();

    int frame_index = 0;
    while (true) {
        std::string marker;
        int c;
        while ((c = in.get()) != EOF && c != '\n') {
            marker.push_back(static_cast<char>(c));
            if (marker.size() > 256) throw FormatError(path + ": oversized FRAME marker");
        }
        if (marker.empty() && c == EOF) break;  // clean end of stream
        if (marker.compare(0, 5, "FRAME") != 0)
            throw FormatError(path + ": expected FRAME marker before frame " +
                              std::to_string(frame_index));

        in.read(reinterpret_cast<char*>(luma.data()), static_cast<std::streamsize>(luma_len));
        if (static_cast<size_t>(in.gcount()) != luma_len)
            throw FormatError(path + ": truncated frame payload at frame " +
                              std::to_string(frame_index));
        if (chroma_len > 0) {
            in.ignore(static_cast<std::streamsize>(chroma_len));
            if (static_cast<size_t>(in.gcount()) != chroma_len)
                throw FormatError(path + ": truncated frame payload at frame " +
                                  std::to_string(frame_index));
        }

        Frame frame(h.width, h.height);
        for (size_t i = 0; i < luma_len; ++i) frame.data[i] = lut[luma[i]];
        seq.frames.push_back(std::move(frame));
        ++frame_index;
    }
    return seq;
}

void save_y4m(const FrameSequence& seq, const std::string& path) {
    if (seq.frames.empty()) throw InvalidArgument("cannot write empty sequence to " + path);
    if (seq.fps <= 0) throw InvalidArgument("sequence fps must be positive");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");

    int w = seq.width(), h = seq.height();
    bool mono = (w % 2 != 0) || (h % 2 != 0);
    auto [num, den] = fps_to_rational(seq.fps);
    out << "YUV4MPEG2 W" << w << " H" << h << " F" << num << ":" << den << " Ip A1:1 C"
        << (mono ? "mono" : "420") << "\n";

    std::vector<uint8_t> luma(static_cast<size_t>(w) * h);
    std::vector<uint8_t> chroma(mono ? 0 : 2 * (static_cast<size_t>(w) / 2) * (h / 2), 0x80);
    for (const Frame& frame : seq.frames) {
        for (size_t i = 0; i < luma.size(); ++i) luma[i] = quantize(frame.data[i]);
        out << "FRAME\n";
        out.write(reinterpret_cast<const char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
        if (!chroma.empty())
            out.write(reinterpret_cast<const char*>(chroma.data()),
                      static_cast<std::streamsize>(chroma.size()));
    }
    if (!out) throw IoError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Frame directories
// ---------------------------------------------------------------------------

bool glob_match(const std::string& pattern, const std::string& name) {
    size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

FrameSequence load_frame_dir(const std::string& dir, const std::string& glob, double fps) {
    namespace fs = std::filesystem;
    if (fps <= 0) throw InvalidArgument("fps must be positive");
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (glob_match(glob, name)) names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    if (names.size() < 2)
        throw InvalidArgument(dir + ": insufficient input, need at least 2 frames matching '" +
                              glob + "', found " + std::to_string(names.size()));

    FrameSequence seq;
    seq.fps = fps;
    seq.frames.reserve(names.size());
    for (const std::string& name : names) {
        Frame frame = load_image((fs::path(dir) / name).string());
        if (!seq.frames.empty() && !frame.same_size(seq.frames.front()))
            throw FormatError(dir + "/" + name + ": dimension mismatch (" +
                              std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                              " vs " + std::to_string(seq.frames.front().width) + "x" +
                              std::to_string(seq.frames.front().height) + ")");
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

FrameSequence load_video_auto(const std::string& path, const std::string& glob,
                              double fps_override) {
    if (std::filesystem::is_directory(path))
        return load_frame_dir(path, glob, fps_override > 0 ? fps_override : 30.0);
    FrameSequence seq = load_y4m(path);
    if (fps_override > 0) seq.fps = fps_override;
    return seq;
}

}  // namespace respflow
