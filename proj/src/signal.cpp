#include "respflow/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace respflow {

void FilterSpec::validate(double fs) const {
    if (order < 1) throw InvalidArgument("filter order must be >= 1");
    if (!(fs > 0)) throw InvalidArgument("sample rate must be positive");
    if (!(low_cut > 0) || !(low_cut < high_cut) || !(high_cut < fs / 2))
        throw InvalidArgument("band edges must satisfy 0 < low_cut < high_cut < fs/2 (fs = " +
                              std::to_string(fs) + ")");
}

namespace {

using cplx = std::complex<double>;

std::vector<double> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> c{cplx(1.0, 0.0)};
    for (const cplx& r : roots) {
        c.push_back(cplx(0.0, 0.0));
        for (size_t i = c.size() - 1; i >= 1; --i) c[i] = c[i] - r * c[i - 1];
    }
    std::vector<double> out(c.size());
    for (size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

// Solve M v = rhs in place, partial pivoting. M is row-major s x s.
std::vector<double> solve_dense(std::vector<double> M, std::vector<double> rhs) {
    const int s = static_cast<int>(rhs.size());
    for (int col = 0; col < s; ++col) {
        int pivot = col;
        for (int r = col + 1; r < s; ++r)
            if (std::fabs(M[r * s + col]) > std::fabs(M[pivot * s + col])) pivot = r;
        if (M[pivot * s + col] == 0.0) throw NumericError("singular filter state system");
        if (pivot != col) {
            for (int c = 0; c < s; ++c) std::swap(M[pivot * s + c], M[col * s + c]);
            std::swap(rhs[pivot], rhs[col]);
        }
        for (int r = col + 1; r < s; ++r) {
            double factor = M[r * s + col] / M[col * s + col];
            for (int c = col; c < s; ++c) M[r * s + c] -= factor * M[col * s + c];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> v(s);
    for (int r = s - 1; r >= 0; --r) {
        double acc = rhs[r];
        for (int c = r + 1; c < s; ++c) acc -= M[r * s + c] * v[c];
        v[r] = acc / M[r * s + r];
    }
    return v;
}

// Steady-state initial conditions for a unit-step input, so the forward and
// backward passes start without transients.
std::vector<double> lfilter_zi(const std::vector<double>& b, const std::vector<double>& a) {
    const int s = static_cast<int>(a.size()) - 1;
    std::vector<double> M(static_cast<size_t>(s) * s, 0.0);
    for (int i = 0; i < s; ++i) M[i * s + i] = 1.0;
    for (int j = 0; j < s; ++j) M[j * s + 0] += a[j + 1];
    for (int i = 0; i + 1 < s; ++i) M[i * s + (i + 1)] -= 1.0;
    std::vector<double> rhs(s);
    for (int j = 0; j < s; ++j) rhs[j] = b[j + 1] - a[j + 1] * b[0];
    return solve_dense(std::move(M), std::move(rhs));
}

// Direct form II transposed with caller-provided initial state.
std::vector<double> lfilter(const std::vector<double>& b, const std::vector<double>& a,
                            const std::vector<double>& x, std::vector<double> z) {
    const int s = static_cast<int>(z.size());
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double xi = x[i];
        double yi = b[0] * xi + z[0];
        for (int j = 0; j + 1 < s; ++j) z[j] = b[j + 1] * xi + z[j + 1] - a[j + 1] * yi;
        z[s - 1] = b[s] * xi - a[s] * yi;
        y[i] = yi;
    }
    return y;
}

}  // namespace

BandpassCoeffs design_bandpass(const FilterSpec& spec, double fs) {
    spec.validate(fs);
    const int n = spec.order;
    const double pi = std::numbers::pi;

    // prewarped edges in the normalized design domain (bilinear rate 2 Hz)
    double w1 = 4.0 * std::tan(pi * spec.low_cut / fs);
    double w2 = 4.0 * std::tan(pi * spec.high_cut / fs);
    double wo2 = w1 * w2;
    double bw = w2 - w1;

    // analog low-pass prototype poles on the unit circle, left half-plane
    std::vector<cplx> lp_poles;
    for (int k = 0; k < n; ++k) {
        double theta = pi * (2.0 * k + n + 1.0) / (2.0 * n);
        lp_poles.emplace_back(std::cos(theta), std::sin(theta));
    }

    // low-pass -> band-pass: each pole splits in two; n zeros appear at s = 0
    std::vector<cplx> bp_poles;
    for (const cplx& p : lp_poles) {
        cplx ps = p * (bw / 2.0);
        cplx rad = std::sqrt(ps * ps - cplx(wo2, 0.0));
        bp_poles.push_back(ps + rad);
        bp_poles.push_back(ps - rad);
    }
    double gain = std::pow(bw, n);

    // bilinear transform z = (4 + s) / (4 - s)
    const double c4 = 4.0;
    std::vector<cplx> z_poles;
    cplx pole_prod(1.0, 0.0);
    for (const cplx& p : bp_poles) {
        z_poles.push_back((cplx(c4, 0.0) + p) / (cplx(c4, 0.0) - p));
        pole_prod *= cplx(c4, 0.0) - p;
    }
    double zero_prod = std::pow(c4, n);  // the n zeros at s = 0
    gain *= (cplx(zero_prod, 0.0) / pole_prod).real();

    // digital zeros: n at +1 (from s = 0), n at -1 (from infinity)
    std::vector<cplx> z_zeros(n, cplx(1.0, 0.0));
    z_zeros.insert(z_zeros.end(), n, cplx(-1.0, 0.0));

    BandpassCoeffs c;
    c.b = poly_from_roots(z_zeros);
    for (double& v : c.b) v *= gain;
    c.a = poly_from_roots(z_poles);
    return c;
}

std::vector<double> filtfilt(const BandpassCoeffs& c, const std::vector<double>& x) {
    if (c.b.size() != c.a.size() || c.a.size() < 2 || c.a[0] != 1.0)
        throw InvalidArgument("malformed filter coefficients");
    const int n = static_cast<int>(x.size());
    const int padlen = 3 * static_cast<int>(c.a.size());
    if (n <= padlen)
        throw InvalidArgument("signal too short to filter: " + std::to_string(n) +
                              " samples, need more than " + std::to_string(padlen));

    // odd reflection about both endpoints
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (int i = 0; i < padlen; ++i) ext.push_back(2.0 * x[0] - x[padlen - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (int i = 0; i < padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    std::vector<double> zi = lfilter_zi(c.b, c.a);
    std::vector<double> z0(zi.size());

    for (size_t i = 0; i < zi.size(); ++i) z0[i] = zi[i] * ext.front();
    std::vector<double> y = lfilter(c.b, c.a, ext, z0);

    std::reverse(y.begin(), y.end());
    for (size_t i = 0; i < zi.size(); ++i) z0[i] = zi[i] * y.front();
    y = lfilter(c.b, c.a, y, z0);
    std::reverse(y.begin(), y.end());

    return {y.begin() + padlen, y.begin() + padlen + n};
}

BreathSignal bandpass(const BreathSignal& sig, const FilterSpec& spec) {
    if (sig.kind != BreathSignal::Kind::raw)
        throw InvalidArgument("bandpass expects a raw signal");
    if (!(sig.fs > 0)) throw InvalidArgument("signal sample rate must be positive");
    BandpassCoeffs c = design_bandpass(spec, sig.fs);
    if (sig.size() <= 6 * static_cast<int>(c.a.size()))
        throw InvalidArgument("signal too short for the band-pass: " +
                              std::to_string(sig.size()) + " samples, need more than " +
                              std::to_string(6 * c.a.size()));
    BreathSignal out;
    out.samples = filtfilt(c, sig.samples);
    out.fs = sig.fs;
    out.kind = BreathSignal::Kind::filtered;
    return out;
}

BreathSignal extract_raw(const TrackMatrix& tracks) {
    const int T = tracks.n_frames();
    const int P = tracks.n_points();
    if (T < 2) throw InvalidArgument("need at least 2 tracked frames");
    if (P < 1) throw InvalidArgument("need at least 1 tracked point");
    if (!(tracks.fps > 0)) throw InvalidArgument("track matrix fps must be positive");

    BreathSignal sig;
    sig.fs = tracks.fps;
    sig.kind = BreathSignal::Kind::raw;
    sig.samples.assign(T, 0.0);
    for (int t = 1; t < T; ++t) {
        double sum = 0.0;
        int cnt = 0;
        for (int p = 0; p < P; ++p) {
            if (tracks.tracked(p, t) && tracks.tracked(p, t - 1)) {
                sum += tracks.positions[p][t].y - tracks.positions[p][t - 1].y;
                ++cnt;
            }
        }
        if (t == 1 && cnt == 0)
            throw EmptySignalError("no point tracked past the first frame");
        sig.samples[t] = cnt > 0 ? sum / cnt : 0.0;
    }
    return sig;
}

std::vector<int> detect_peaks(const BreathSignal& sig) {
    if (sig.kind != BreathSignal::Kind::filtered)
        throw InvalidArgument("detect_peaks expects a filtered signal");
    const std::vector<double>& x = sig.samples;
    const int n = sig.size();

    // strict local maxima; a plateau counts once, at its leftmost sample
    std::vector<int> candidates;
    int i = 1;
    while (i < n - 1) {
        if (x[i] > x[i - 1]) {
            int j = i;
            while (j + 1 < n && x[j + 1] == x[i]) ++j;
            if (j + 1 < n && x[j + 1] < x[i]) candidates.push_back(i);
            i = j + 1;
        } else {
            ++i;
        }
    }
    if (candidates.empty()) return {};

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / n);

    // prominence: drop to the lowest saddle before a higher sample on each side
    std::vector<int> prominent;
    for (int c : candidates) {
        double left_min = x[c];
        for (int j = c - 1; j >= 0 && x[j] <= x[c]; --j) left_min = std::min(left_min, x[j]);
        double right_min = x[c];
        for (int j = c + 1; j < n && x[j] <= x[c]; ++j) right_min = std::min(right_min, x[j]);
        double prom = x[c] - std::max(left_min, right_min);
        if (prom >= 0.3 * sd) prominent.push_back(c);
    }

    // enforce separation, higher peaks first, ties to the earlier index
    std::vector<int> order = prominent;
    std::sort(order.begin(), order.end(), [&](int p, int q) {
        if (x[p] != x[q]) return x[p] > x[q];
        return p < q;
    });
    const double min_sep = 2.0 * sig.fs;
    std::vector<int> kept;
    for (int c : order) {
        bool blocked = false;
        for (int k : kept)
            if (std::fabs(static_cast<double>(c - k)) < min_sep) {
                blocked = true;
                break;
            }
        if (!blocked) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

double breathing_rate(int n_peaks, double duration_s) {
    if (n_peaks < 0) throw InvalidArgument("peak count must be >= 0");
    if (!(duration_s > 0)) throw InvalidArgument("duration must be positive");
    return n_peaks / duration_s * 60.0;
}

namespace {

template <class F>
auto run_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError(name, e.what());
    }
}

}  // namespace

EstimateOutput estimate(const FrameSequence& seq, const KeypointSet& keypoints,
                        PointConfigKind kind, const FlowConfig& flow_cfg,
                        const FilterSpec& filt, int grid_rows) {
    if (seq.frames.empty()) throw PipelineError("select", "empty frame sequence");

    SelectedPoints sel = run_stage("select", [&] {
        PointBounds bounds{seq.width(), seq.height(), flow_cfg.window_half_width};
        return select_points(kind, keypoints, grid_rows, bounds);
    });
    TrackMatrix tracks =
        run_stage("track", [&] { return track_sequence(seq, sel.points, flow_cfg); });
    BreathSignal raw = run_stage("extract", [&] { return extract_raw(tracks); });
    BreathSignal filtered = run_stage("filter", [&] { return bandpass(raw, filt); });
    std::vector<int> peaks = run_stage("peaks", [&] { return detect_peaks(filtered); });
    double duration = seq.frames.size() / seq.fps;
    double bpm = run_stage("rate", [&] {
        return breathing_rate(static_cast<int>(peaks.size()), duration);
    });

    EstimateOutput out;
    out.report.bpm = bpm;
    out.report.peak_indices = peaks;
    out.report.duration_s = duration;
    out.report.kind = kind;
    out.report.n_points_used = static_cast<int>(sel.points.size());
    out.report.n_points_dropped = sel.n_dropped;
    for (int p = 0; p < tracks.n_points(); ++p)
        if (!tracks.tracked(p, tracks.n_frames() - 1)) ++out.report.n_points_lost;
    bool all_zero = std::all_of(raw.samples.begin(), raw.samples.end(),
                                [](double v) { return v == 0.0; });
    if (all_zero) out.report.flags.push_back("all-zero raw signal");
    if (peaks.empty()) out.report.flags.push_back("no breathing detected");
    out.report.flow = flow_cfg;
    out.report.filter = filt;
    out.raw = std::move(raw);
    out.filtered = std::move(filtered);
    return out;
}

void write_signal_csv(const BreathSignal& raw, const BreathSignal& filtered,
                      const std::vector<int>& peaks, std::ostream& out) {
    if (raw.samples.size() != filtered.samples.size())
        throw InvalidArgument("raw and filtered signals differ in length");
    if (!(raw.fs > 0)) throw InvalidArgument("signal sample rate must be positive");
    out << "sample_index,time_s,raw,filtered\n";
    char buf[96];
    for (int i = 0; i < raw.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.9g,%.9g", i, i / raw.fs, raw.samples[i],
                      filtered.samples[i]);
        out << buf << '\n';
    }
    out << "# peaks:";
    for (int p : peaks) out << ' ' << p;
    out << '\n';
}

SignalDump read_signal_csv(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line) || line != "sample_index,time_s,raw,filtered")
        throw FormatError(name + ": missing signal CSV header");
    SignalDump dump;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# peaks:", 0) == 0) {
            std::istringstream ps(line.substr(8));
            int idx;
            while (ps >> idx) dump.peaks.push_back(idx);
            continue;
        }
        int index;
        double t, r, f;
        char c1, c2, c3;
        std::istringstream ls(line);
        if (!(ls >> index >> c1 >> t >> c2 >> r >> c3 >> f) || c1 != ',' || c2 != ',' ||
            c3 != ',')
            throw FormatError(name + ": malformed signal row " + std::to_string(row));
        dump.time_s.push_back(t);
        dump.raw.push_back(r);
        dump.filtered.push_back(f);
        ++row;
    }
    if (dump.raw.empty()) throw FormatError(name + ": no signal rows");
    return dump;
}

}  // namespace respflow
