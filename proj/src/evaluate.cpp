#include "respflow/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include "json.hpp"

#include "respflow/video_io.hpp"

namespace respflow {

double rmse(const std::vector<double>& estimates, const std::vector<double>& truths) {
    if (estimates.empty() || estimates.size() != truths.size())
        throw InvalidArgument("rmse needs equal nonzero-length inputs");
    double acc = 0.0;
    for (size_t i = 0; i < estimates.size(); ++i) {
        double d = estimates[i] - truths[i];
        acc += d * d;
    }
    return std::sqrt(acc / estimates.size());
}

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path.string();
    return (base / path).string();
}

}  // namespace

SuiteManifest parse_manifest(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("cases") || !doc["cases"].is_array())
        throw FormatError(path + ": manifest needs a top-level \"cases\" array");
    const auto& cases = doc["cases"];
    if (cases.empty()) throw FormatError(path + ": manifest has no cases");

    std::filesystem::path base = std::filesystem::path(path).parent_path();
    SuiteManifest m;
    int index = 0;
    for (const auto& jc : cases) {
        if (!jc.is_object()) throw FormatError(path + ": case " + std::to_string(index) +
                                               " is not an object");
        SuiteCase c;
        auto need_string = [&](const char* key) {
            if (!jc.contains(key) || !jc[key].is_string())
                throw FormatError(path + ": case " + std::to_string(index) +
                                  " needs a string field \"" + key + "\"");
            return jc[key].get<std::string>();
        };
        c.video = resolve(base, need_string("video"));
        c.keypoints = resolve(base, need_string("keypoints"));
        if (c.video == c.keypoints)
            throw FormatError(path + ": case " + std::to_string(index) +
                              " uses the same path for video and keypoints");
        if (!jc.contains("truth_bpm") || !jc["truth_bpm"].is_number())
            throw FormatError(path + ": case " + std::to_string(index) +
                              " needs a numeric \"truth_bpm\"");
        c.truth_bpm = jc["truth_bpm"].get<double>();
        if (!(c.truth_bpm > 0))
            throw FormatError(path + ": case " + std::to_string(index) +
                              " truth_bpm must be positive");

        if (jc.contains("kinds")) {
            for (const auto& k : jc["kinds"]) c.kinds.push_back(kind_from_string(k.get<std::string>()));
        } else {
            c.kinds = {PointConfigKind::face_points, PointConfigKind::chest_points,
                       PointConfigKind::chest_grid};
        }
        if (c.kinds.empty())
            throw FormatError(path + ": case " + std::to_string(index) + " lists no kinds");

        if (jc.contains("id")) c.id = jc["id"].get<std::string>();
        if (c.id.empty()) c.id = std::filesystem::path(c.video).stem().string();

        if (jc.contains("window")) c.flow.window_half_width = jc["window"].get<int>() / 2;
        if (jc.contains("pyramid_levels")) c.flow.pyramid_levels = jc["pyramid_levels"].get<int>();
        if (jc.contains("rows")) c.grid_rows = jc["rows"].get<int>();
        if (jc.contains("low_cut")) c.filter.low_cut = jc["low_cut"].get<double>();
        if (jc.contains("high_cut")) c.filter.high_cut = jc["high_cut"].get<double>();
        if (jc.contains("order")) c.filter.order = jc["order"].get<int>();
        if (jc.contains("fps")) c.fps = jc["fps"].get<double>();
        if (jc.contains("glob")) c.glob = jc["glob"].get<std::string>();
        m.cases.push_back(std::move(c));
        ++index;
    }
    return m;
}

SuiteReport run_suite(const SuiteManifest& manifest, int jobs) {
    if (manifest.cases.empty()) throw InvalidArgument("manifest has no cases");
    const int n_cases = static_cast<int>(manifest.cases.size());
    jobs = std::clamp(jobs, 1, n_cases);

    std::vector<std::vector<CaseResult>> slots(n_cases);
    std::atomic<int> cursor{0};

    auto worker = [&] {
        while (true) {
            int i = cursor.fetch_add(1);
            if (i >= n_cases) break;
            const SuiteCase& c = manifest.cases[i];
            std::vector<CaseResult>& out = slots[i];

            FrameSequence seq;
            KeypointSet keys;
            std::string load_error;
            try {
                seq = load_video_auto(c.video, c.glob, c.fps);
                keys = parse_keypoints(c.keypoints);
            } catch (const std::exception& e) {
                load_error = e.what();
            }
            for (PointConfigKind kind : c.kinds) {
                CaseResult r;
                r.id = c.id;
                r.kind = kind;
                r.truth_bpm = c.truth_bpm;
                if (!load_error.empty()) {
                    r.message = load_error;
                } else {
                    try {
                        EstimateOutput est = estimate(seq, keys, kind, c.flow, c.filter, c.grid_rows);
                        r.estimate_bpm = est.report.bpm;
                        r.error = est.report.bpm - c.truth_bpm;
                        r.ok = true;
                    } catch (const std::exception& e) {
                        r.message = e.what();
                    }
                }
                out.push_back(std::move(r));
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    SuiteReport report;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_kind;
    for (auto& slot : slots) {
        for (CaseResult& r : slot) {
            if (r.ok) {
                auto& [est, truth] = by_kind[to_string(r.kind)];
                est.push_back(r.estimate_bpm);
                truth.push_back(r.truth_bpm);
            } else {
                ++report.n_failed;
            }
            report.results.push_back(std::move(r));
        }
    }
    for (const auto& [kind, pair] : by_kind)
        report.rmse_by_kind[kind] = rmse(pair.first, pair.second);
    return report;
}

void print_suite_table(const SuiteReport& report, std::ostream& out) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %-14s %8s %10s %8s  %s", "case", "kind", "truth",
                  "estimate", "error", "status");
    out << buf << '\n';
    for (const CaseResult& r : report.results) {
        if (r.ok) {
            std::snprintf(buf, sizeof(buf), "%-20s %-14s %8.2f %10.2f %8.2f  ok", r.id.c_str(),
                          to_string(r.kind).c_str(), r.truth_bpm, r.estimate_bpm, r.error);
        } else {
            std::snprintf(buf, sizeof(buf), "%-20s %-14s %8.2f %10s %8s  FAILED: %s",
                          r.id.c_str(), to_string(r.kind).c_str(), r.truth_bpm, "-", "-",
                          r.message.c_str());
        }
        out << buf << '\n';
    }
    for (const auto& [kind, value] : report.rmse_by_kind) {
        std::snprintf(buf, sizeof(buf), "rmse %-14s %.4f bpm", kind.c_str(), value);
        out << buf << '\n';
    }
    if (report.n_failed > 0) out << report.n_failed << " case(s) failed\n";
}

void write_suite_json(const SuiteReport& report, const std::string& path) {
    nlohmann::ordered_json doc;
    doc["results"] = nlohmann::ordered_json::array();
    for (const CaseResult& r : report.results) {
        nlohmann::ordered_json jr;
        jr["id"] = r.id;
        jr["kind"] = to_string(r.kind);
        jr["truth_bpm"] = r.truth_bpm;
        if (r.ok) {
            jr["estimate_bpm"] = r.estimate_bpm;
            jr["error"] = r.error;
        } else {
            jr["estimate_bpm"] = nullptr;
            jr["error"] = nullptr;
            jr["message"] = r.message;
        }
        jr["ok"] = r.ok;
        doc["results"].push_back(std::move(jr));
    }
    doc["rmse_by_kind"] = report.rmse_by_kind;
    doc["n_failed"] = report.n_failed;

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace respflow
