#ifndef RESPFLOW_SIGNAL_HPP
#define RESPFLOW_SIGNAL_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "respflow/errors.hpp"
#include "respflow/flow.hpp"
#include "respflow/frame.hpp"
#include "respflow/roi.hpp"

namespace respflow {

struct BreathSignal {
    enum class Kind { raw, filtered };

    std::vector<double> samples;
    double fs = 0.0;
    Kind kind = Kind::raw;

    int size() const { return static_cast<int>(samples.size()); }
    double duration_s() const { return fs > 0 ? samples.size() / fs : 0.0; }
};

struct FilterSpec {
    double low_cut = 0.1;   // Hz
    double high_cut = 0.5;  // Hz
    int order = 2;          // applied forward and backward

    void validate(double fs) const;  // requires 0 < low_cut < high_cut < fs/2
};

// Digital transfer function b/a, both of length 2*order+1, a[0] = 1.
struct BandpassCoeffs {
    std::vector<double> b;
    std::vector<double> a;
};

// Butterworth band-pass via the prewarped bilinear transform.
BandpassCoeffs design_bandpass(const FilterSpec& spec, double fs);

// Zero-phase forward-backward filtering with odd-reflection padding of
// 3x the coefficient length on each side.
std::vector<double> filtfilt(const BandpassCoeffs& c, const std::vector<double>& x);

BreathSignal bandpass(const BreathSignal& sig, const FilterSpec& spec);

// Per-frame mean vertical displacement of the surviving points, with a
// leading zero so the sample count matches the frame count.
BreathSignal extract_raw(const TrackMatrix& tracks);

// Strict local maxima with prominence >= 0.3*std and >= 2 s separation.
std::vector<int> detect_peaks(const BreathSignal& sig);

double breathing_rate(int n_peaks, double duration_s);

struct EstimateReport {
    double bpm = 0.0;
    std::vector<int> peak_indices;
    double duration_s = 0.0;
    PointConfigKind kind = PointConfigKind::chest_grid;
    int n_points_used = 0;  // points that entered the tracker
    int n_points_lost = 0;  // of those, lost before the final frame
    int n_points_dropped = 0;  // grid points discarded at selection
    std::vector<std::string> flags;
    FlowConfig flow;
    FilterSpec filter;
};

struct EstimateOutput {
    EstimateReport report;
    BreathSignal raw;
    BreathSignal filtered;
};

// Full pipeline: select -> track -> extract -> filter -> peaks -> rate.
// Failures are rethrown as PipelineError tagged with the stage name.
EstimateOutput estimate(const FrameSequence& seq, const KeypointSet& keypoints,
                        PointConfigKind kind, const FlowConfig& flow_cfg,
                        const FilterSpec& filt, int grid_rows = 5);

// `sample_index,time_s,raw,filtered` rows plus a `# peaks: ...` trailer.
void write_signal_csv(const BreathSignal& raw, const BreathSignal& filtered,
                      const std::vector<int>& peaks, std::ostream& out);

struct SignalDump {
    std::vector<double> time_s;
    std::vector<double> raw;
    std::vector<double> filtered;
    std::vector<int> peaks;
};

SignalDump read_signal_csv(std::istream& in, const std::string& name);

}  // namespace respflow

#endif  // RESPFLOW_SIGNAL_HPP
