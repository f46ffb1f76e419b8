#ifndef RESPFLOW_VIDEO_IO_HPP
#define RESPFLOW_VIDEO_IO_HPP

#include <iosfwd>
#include <string>

#include "respflow/frame.hpp"

namespace respflow {

/// BT.601 luma from channels in [0,1].
double to_grayscale(double r, double g, double b);

/// Binary PGM (P5, maxval 255).
Frame decode_pgm(std::istream& in, const std::string& name);
Frame load_pgm(const std::string& path);
void encode_pgm(const Frame& frame, std::ostream& out);
void save_pgm(const Frame& frame, const std::string& path);

/// 8-bit non-interlaced PNG, grayscale or RGB. Other depths/types rejected.
Frame load_png(const std::string& path);

/// Dispatch on magic bytes (P5 -> PGM, \x89PNG -> PNG).
Frame load_image(const std::string& path);

/// YUV4MPEG2 stream. C420-family and Cmono accepted; chroma is discarded and
/// the luma plane is rescaled to [0,1].
FrameSequence load_y4m(const std::string& path);
void save_y4m(const FrameSequence& seq, const std::string& path);

/// Load every image in `dir` whose filename matches `glob` (shell-style
/// * and ? wildcards), sorted lexicographically. Needs at least two frames of
/// identical dimensions.
FrameSequence load_frame_dir(const std::string& dir, const std::string& glob, double fps);

/// Shell-style filename match supporting * and ?.
bool glob_match(const std::string& pattern, const std::string& name);

/// Directory -> frame sequence via `glob`; file -> Y4M stream. `fps_override`
/// replaces the container rate when positive; directories default to 30.
FrameSequence load_video_auto(const std::string& path, const std::string& glob,
                              double fps_override);

}  // namespace respflow

#endif  // RESPFLOW_VIDEO_IO_HPP
