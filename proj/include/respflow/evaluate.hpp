#ifndef RESPFLOW_EVALUATE_HPP
#define RESPFLOW_EVALUATE_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "respflow/flow.hpp"
#include "respflow/roi.hpp"
#include "respflow/signal.hpp"

namespace respflow {

double rmse(const std::vector<double>& estimates, const std::vector<double>& truths);

struct SuiteCase {
    std::string id;
    std::string video;      // file or frame directory, resolved against the manifest
    std::string keypoints;
    std::vector<PointConfigKind> kinds;
    double truth_bpm = 0.0;
    FlowConfig flow;
    FilterSpec filter;
    int grid_rows = 5;
    double fps = 0.0;  // 0 -> container rate (frame dirs fall back to 30)
    std::string glob = "*";
};

struct SuiteManifest {
    std::vector<SuiteCase> cases;
};

SuiteManifest parse_manifest(const std::string& path);

struct CaseResult {
    std::string id;
    PointConfigKind kind = PointConfigKind::chest_grid;
    double truth_bpm = 0.0;
    double estimate_bpm = 0.0;
    double error = 0.0;  // estimate - truth
    bool ok = false;
    std::string message;
};

struct SuiteReport {
    std::vector<CaseResult> results;  // ordered by (case, kind) regardless of jobs
    std::map<std::string, double> rmse_by_kind;  // over successful cases only
    int n_failed = 0;
};

SuiteReport run_suite(const SuiteManifest& manifest, int jobs = 1);

void print_suite_table(const SuiteReport& report, std::ostream& out);
void write_suite_json(const SuiteReport& report, const std::string& path);

}  // namespace respflow

#endif  // RESPFLOW_EVALUATE_HPP
