#include "respflow/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace respflow {

namespace {

struct Ticks {
    double lo, hi, step;
};

// Expands [lo, hi] to round multiples of a 1/2/5 decade step.
Ticks nice_ticks(double lo, double hi, int target) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    double raw_step = (hi - lo) / std::max(1, target);
    double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double norm = raw_step / mag;
    double step = (norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0) * mag;
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_signal_svg(const SignalDump& dump, const std::string& title) {
    const int width = 960, height = 420;
    const int ml = 64, mr = 16, mt = 40, mb = 44;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double t_lo = 0.0, t_hi = 1.0, v_lo = 0.0, v_hi = 1.0;
    if (!dump.time_s.empty()) {
        t_lo = dump.time_s.front();
        t_hi = dump.time_s.back();
        auto [rmin, rmax] = std::minmax_element(dump.raw.begin(), dump.raw.end());
        auto [fmin, fmax] = std::minmax_element(dump.filtered.begin(), dump.filtered.end());
        v_lo = std::min(*rmin, *fmin);
        v_hi = std::max(*rmax, *fmax);
    }
    Ticks tx = nice_ticks(t_lo, t_hi, 8);
    Ticks ty = nice_ticks(v_lo, v_hi, 6);

    auto sx = [&](double t) { return ml + (t - tx.lo) / (tx.hi - tx.lo) * pw; };
    auto sy = [&](double v) { return mt + (ty.hi - v) / (ty.hi - ty.lo) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape_xml(title) << "</text>\n";

    // grid and tick labels
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
    for (double t = tx.lo; t <= tx.hi + tx.step * 0.5; t += tx.step) {
        double x = sx(t);
        svg << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\""
            << mt + ph << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << mt + ph + 16
            << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    for (double v = ty.lo; v <= ty.hi + ty.step * 0.5; v += ty.step) {
        double y = sy(v);
        svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw << "\" y2=\""
            << y << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\">time (s)</text>\n";
    svg << "</g>\n";
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#888\"/>\n";

    auto polyline = [&](const std::vector<double>& ys, const char* color, const char* sw) {
        if (ys.empty()) return;
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << sw
            << "\" points=\"";
        char buf[64];
        for (size_t i = 0; i < ys.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(dump.time_s[i]), sy(ys[i]));
            svg << buf;
        }
        svg << "\"/>\n";
    };
    polyline(dump.raw, "#aaaaaa", "1");
    polyline(dump.filtered, "#1f6fd0", "1.5");

    for (int p : dump.peaks) {
        if (p < 0 || p >= static_cast<int>(dump.time_s.size())) continue;
        svg << "<circle cx=\"" << sx(dump.time_s[p]) << "\" cy=\"" << sy(dump.filtered[p])
            << "\" r=\"3.5\" fill=\"none\" stroke=\"#d03030\" stroke-width=\"1.5\"/>\n";
    }

    // legend
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<line x1=\"" << ml + 10 << "\" y1=\"" << mt + 12 << "\" x2=\"" << ml + 34
        << "\" y2=\"" << mt + 12 << "\" stroke=\"#aaaaaa\"/>"
        << "<text x=\"" << ml + 38 << "\" y=\"" << mt + 15 << "\">raw</text>\n"
        << "<line x1=\"" << ml + 80 << "\" y1=\"" << mt + 12 << "\" x2=\"" << ml + 104
        << "\" y2=\"" << mt + 12 << "\" stroke=\"#1f6fd0\" stroke-width=\"1.5\"/>"
        << "<text x=\"" << ml + 108 << "\" y=\"" << mt + 15 << "\">filtered</text>\n"
        << "<circle cx=\"" << ml + 172 << "\" cy=\"" << mt + 12
        << "\" r=\"3.5\" fill=\"none\" stroke=\"#d03030\" stroke-width=\"1.5\"/>"
        << "<text x=\"" << ml + 180 << "\" y=\"" << mt + 15 << "\">peaks</text>\n"
        << "</g>\n";

    svg << "</svg>\n";
    return svg.str();
}

void write_signal_svg(const SignalDump& dump, const std::string& title, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << render_signal_svg(dump, title);
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace respflow
