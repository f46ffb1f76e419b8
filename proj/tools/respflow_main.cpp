#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "respflow/evaluate.hpp"
#include "respflow/flow.hpp"
#include "respflow/plot.hpp"
#include "respflow/roi.hpp"
#include "respflow/signal.hpp"
#include "respflow/synth.hpp"
#include "respflow/video_io.hpp"

namespace {

using namespace respflow;

struct SynthArgs {
    std::string out;
    double bpm = 18.0;
    double duration = 30.0;
    double fps = 30.0;
    int width = 640;
    int height = 480;
    double amp = 2.0;
    std::string texture = "checker";
    double period = 16.0;
    double contrast = 1.0;
    double value = 0.5;
    double blob_sigma = 1.5;
    std::string chest_texture;
    double head_noise = 0.0;
    std::uint64_t seed = 1;
    std::string format = "y4m";
};

struct TrackArgs {
    std::string video;
    std::string keypoints;
    std::string kind = "chest_grid";
    int rows = 5;
    int window = 20;
    int pyramid_levels = 3;
    double fps = 0.0;
    std::string glob = "*";
    std::string out;
};

struct EstimateArgs : TrackArgs {
    double low_cut = 0.1;
    double high_cut = 0.5;
    int order = 2;
    std::string dump_signal;
    std::string plot;
};

struct EvalArgs {
    std::string manifest;
    std::string out;
    int jobs = 1;
};

struct PlotArgs {
    std::string signal;
    std::string out;
    std::string title = "breathing signal";
};

FlowConfig flow_from_args(const TrackArgs& a) {
    if (a.window < 4 || a.window % 2 != 0)
        throw InvalidArgument("--window takes the full window size and must be even and >= 4");
    FlowConfig cfg;
    cfg.window_half_width = a.window / 2;
    cfg.pyramid_levels = a.pyramid_levels;
    cfg.validate();
    return cfg;
}

void warn_if_clamped(const FrameSequence& seq, const FlowConfig& cfg) {
    Pyramid pyr = build_pyramid(seq.frames.front(), cfg.pyramid_levels, cfg.window_half_width);
    if (pyr.clamped())
        std::cerr << "note: pyramid clamped to " << pyr.num_levels() << " of "
                  << pyr.requested_levels << " requested levels for " << seq.width() << "x"
                  << seq.height() << " input\n";
}

TextureSpec texture_from_args(const SynthArgs& a, const std::string& kind_name) {
    TextureSpec t;
    t.kind = texture_from_string(kind_name);
    t.period = a.period;
    t.contrast = a.contrast;
    t.value = a.value;
    t.blob_sigma = a.blob_sigma;
    t.seed = a.seed;
    return t;
}

int cmd_synth(const SynthArgs& a) {
    SceneSpec spec;
    spec.width = a.width;
    spec.height = a.height;
    spec.fps = a.fps;
    spec.duration_s = a.duration;
    if (!(a.bpm > 0)) throw InvalidArgument("--bpm must be positive");
    spec.breathing_freq = a.bpm / 60.0;
    spec.breathing_amp = a.amp;
    spec.texture = texture_from_args(a, a.texture);
    if (!a.chest_texture.empty()) spec.chest_texture = texture_from_args(a, a.chest_texture);
    spec.head_noise_amp = a.head_noise;
    spec.seed = a.seed;

    Scene scene = render_breathing_video(spec);
    write_scene(scene, a.out, a.format == "y4m");
    std::printf("wrote %s: %d frames %dx%d @ %g fps, bpm %g\n", a.out.c_str(),
                static_cast<int>(scene.video.frames.size()), a.width, a.height, a.fps, a.bpm);
    return 0;
}

int cmd_track(const TrackArgs& a) {
    FlowConfig cfg = flow_from_args(a);
    FrameSequence seq = load_video_auto(a.video, a.glob, a.fps);
    KeypointSet keys = parse_keypoints(a.keypoints);

    PointBounds bounds{seq.width(), seq.height(), cfg.window_half_width};
    SelectedPoints sel = select_points(kind_from_string(a.kind), keys, a.rows, bounds);
    if (sel.n_dropped > 0)
        std::cerr << "note: dropped " << sel.n_dropped << " grid point(s) outside the tracking bounds\n";
    warn_if_clamped(seq, cfg);

    TrackMatrix tracks = track_sequence(seq, sel.points, cfg);
    if (a.out.empty()) {
        write_track_csv(tracks, std::cout);
    } else {
        std::ofstream out(a.out);
        if (!out) throw IoError("cannot open " + a.out + " for writing");
        write_track_csv(tracks, out);
        if (!out) throw IoError("failed writing " + a.out);
    }
    return 0;
}

int cmd_estimate(const EstimateArgs& a) {
    FlowConfig cfg = flow_from_args(a);
    FilterSpec filt;
    filt.low_cut = a.low_cut;
    filt.high_cut = a.high_cut;
    filt.order = a.order;

    FrameSequence seq = load_video_auto(a.video, a.glob, a.fps);
    KeypointSet keys = parse_keypoints(a.keypoints);
    warn_if_clamped(seq, cfg);

    EstimateOutput est = estimate(seq, keys, kind_from_string(a.kind), cfg, filt, a.rows);
    const EstimateReport& r = est.report;
    if (r.n_points_dropped > 0)
        std::cerr << "note: dropped " << r.n_points_dropped
                  << " grid point(s) outside the tracking bounds\n";
    if (r.n_points_lost > 0)
        std::cerr << "note: " << r.n_points_lost << " of " << r.n_points_used
                  << " point(s) lost before the final frame\n";

    nlohmann::ordered_json doc;
    doc["bpm"] = r.bpm;
    doc["n_peaks"] = static_cast<int>(r.peak_indices.size());
    doc["peak_indices"] = r.peak_indices;
    doc["duration_s"] = r.duration_s;
    doc["kind"] = to_string(r.kind);
    doc["n_points_used"] = r.n_points_used;
    doc["n_points_lost"] = r.n_points_lost;
    doc["n_points_dropped"] = r.n_points_dropped;
    doc["flags"] = r.flags;
    doc["config"] = {{"window", 2 * r.flow.window_half_width},
                     {"pyramid_levels", r.flow.pyramid_levels},
                     {"max_iterations", r.flow.max_iterations},
                     {"convergence_epsilon", r.flow.convergence_epsilon},
                     {"min_eigenvalue", r.flow.min_eigenvalue},
                     {"low_cut", r.filter.low_cut},
                     {"high_cut", r.filter.high_cut},
                     {"order", r.filter.order},
                     {"fps", seq.fps}};
    std::cout << doc.dump(2) << '\n';

    if (!a.dump_signal.empty()) {
        std::ofstream out(a.dump_signal);
        if (!out) throw IoError("cannot open " + a.dump_signal + " for writing");
        write_signal_csv(est.raw, est.filtered, r.peak_indices, out);
        if (!out) throw IoError("failed writing " + a.dump_signal);
    }
    if (!a.plot.empty()) {
        SignalDump dump;
        for (int i = 0; i < est.raw.size(); ++i) dump.time_s.push_back(i / est.raw.fs);
        dump.raw = est.raw.samples;
        dump.filtered = est.filtered.samples;
        dump.peaks = r.peak_indices;
        char title[128];
        std::snprintf(title, sizeof(title), "%s: %.1f bpm", to_string(r.kind).c_str(), r.bpm);
        write_signal_svg(dump, title, a.plot);
    }
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    SuiteManifest manifest = parse_manifest(a.manifest);
    SuiteReport report = run_suite(manifest, a.jobs);
    print_suite_table(report, std::cout);
    if (!a.out.empty()) write_suite_json(report, a.out);
    return report.n_failed > 0 ? 3 : 0;
}

int cmd_plot(const PlotArgs& a) {
    std::ifstream in(a.signal);
    if (!in) throw IoError("cannot open " + a.signal);
    SignalDump dump = read_signal_csv(in, a.signal);
    write_signal_svg(dump, a.title, a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"breathing-rate estimation from video via sparse optical flow"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic breathing video");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_option("--bpm", sa.bpm, "breathing rate, breaths per minute");
    synth->add_option("--duration", sa.duration, "clip length in seconds");
    synth->add_option("--fps", sa.fps, "frame rate");
    synth->add_option("--width", sa.width, "frame width");
    synth->add_option("--height", sa.height, "frame height");
    synth->add_option("--amp", sa.amp, "breathing amplitude in pixels");
    synth->add_option("--texture", sa.texture, "checker|sinusoid2d|noise|solid|blobs");
    synth->add_option("--period", sa.period, "texture cell size / wavelength in pixels");
    synth->add_option("--contrast", sa.contrast, "texture contrast");
    synth->add_option("--value", sa.value, "texture base level");
    synth->add_option("--blob-sigma", sa.blob_sigma, "blob radius parameter");
    synth->add_option("--chest-texture", sa.chest_texture, "override texture inside the chest region");
    synth->add_option("--head-noise", sa.head_noise, "peak head-motion amplitude in pixels");
    synth->add_option("--seed", sa.seed, "random seed");
    synth->add_option("--format", sa.format, "y4m|pgm")
        ->check(CLI::IsMember({"y4m", "pgm"}));

    auto add_track_options = [](CLI::App* cmd, TrackArgs& t) {
        cmd->add_option("--video", t.video, "Y4M file or frame directory")->required();
        cmd->add_option("--keypoints", t.keypoints, "landmark JSON file")->required();
        cmd->add_option("--kind", t.kind, "face_points|chest_points|chest_grid");
        cmd->add_option("--rows", t.rows, "chest grid rows");
        cmd->add_option("--window", t.window, "full tracking window size in pixels");
        cmd->add_option("--pyramid-levels", t.pyramid_levels, "pyramid depth");
        cmd->add_option("--fps", t.fps, "frame rate override");
        cmd->add_option("--glob", t.glob, "frame filename pattern for directories");
    };

    TrackArgs ta;
    CLI::App* track = app.add_subcommand("track", "track points and write the trajectory CSV");
    add_track_options(track, ta);
    track->add_option("--out", ta.out, "CSV path (default: stdout)");

    EstimateArgs ea;
    CLI::App* est = app.add_subcommand("estimate", "run the full pipeline and report the rate");
    add_track_options(est, ea);
    est->add_option("--low-cut", ea.low_cut, "band-pass low edge in Hz");
    est->add_option("--high-cut", ea.high_cut, "band-pass high edge in Hz");
    est->add_option("--order", ea.order, "filter order per pass");
    est->add_option("--dump-signal", ea.dump_signal, "write the signal CSV here");
    est->add_option("--plot", ea.plot, "write a signal SVG here");

    EvalArgs va;
    CLI::App* eval_cmd = app.add_subcommand("eval", "run a manifest of cases and report RMSE");
    eval_cmd->add_option("--manifest", va.manifest, "suite manifest JSON")->required();
    eval_cmd->add_option("--out", va.out, "write the suite report JSON here");
    eval_cmd->add_option("--jobs", va.jobs, "concurrent cases")->check(CLI::PositiveNumber);

    PlotArgs pa;
    CLI::App* plot = app.add_subcommand("plot", "render a dumped signal CSV as SVG");
    plot->add_option("--signal", pa.signal, "signal CSV from estimate --dump-signal")->required();
    plot->add_option("--out", pa.out, "SVG path")->required();
    plot->add_option("--title", pa.title, "plot title");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(sa);
        if (*track) return cmd_track(ta);
        if (*est) return cmd_estimate(ea);
        if (*eval_cmd) return cmd_eval(va);
        if (*plot) return cmd_plot(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
