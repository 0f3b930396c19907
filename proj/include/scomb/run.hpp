#pragma once

#include <string>
#include <vector>

#include "scomb/eval.hpp"
#include "scomb/panel.hpp"

namespace scomb {

/// One estimation window, Table-3 style: same end year, varying start.
struct SampleWindow {
    std::string name;
    int first_year = 0;
    int last_year = 0;
};

/// Declarative description of a full ingest + evaluation run.
/// Relative input paths are resolved against the config file's
/// directory by load_config.
struct RunConfig {
    std::string survey_csv;
    std::string actuals_csv;  // optional side file of realized values
    CsvSchema schema;
    ActualsSchema actuals_schema;
    std::vector<std::string> variables;
    std::vector<SampleWindow> samples;
    int frequency = 4;
    FillPolicy fill;
    double epsilon = 1e-8;
    std::vector<Method> methods{Method::ave, Method::s_stc, Method::cas};
    CasOptions cas;
    int train_end_year = 0;
    std::vector<std::string> metrics{"ME", "RMSE", "MAPE", "MdAPE"};
    double bias_cut = 0.3;
    double var_cut = 0.3;
    std::string out_dir = "out";
    int jobs = 1;
    unsigned seed = 0;
};

RunConfig load_config(const std::string& path);

/// Parse config JSON; relative paths are resolved against base_dir.
RunConfig parse_config(const std::string& json_text, const std::string& base_dir);

/// Apply one "key=value" style override (out_dir, epsilon, jobs,
/// methods, cas.mode, cas.linkage, cas.k, train_end_year).
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

struct IngestSummary {
    size_t records = 0;
    size_t records_after_fill = 0;
    size_t panels_written = 0;
    std::vector<std::string> paths;
};

/// Load, fill, split, and write one panel JSON per
/// (variable, sample, season) under out_dir/panels, plus an index file
/// the run command consumes.
IngestSummary cmd_ingest(const RunConfig& config);

struct RunSummary {
    size_t panels = 0;
    size_t failed = 0;
    std::vector<std::string> failure_messages;
    std::string out_dir;
};

/// Evaluate every ingested panel selected by the config: per-panel
/// weight histories, combination series, selections, dendrogram and
/// biplot exports, plus aggregated metrics, beat, decomposition, and
/// dispersion tables. Per-panel failures are logged and isolated.
RunSummary cmd_run(const RunConfig& config);

/// Render run outputs into <run_dir>/report.md and return its path.
std::string cmd_report(const std::string& run_dir);

/// Weight-matrix biplot of one stored panel; writes <out>.csv-style
/// plot data and a JSON sibling. Returns the CSV path.
std::string panel_biplot(const std::string& panel_json_path, const std::string& out_path,
                         bool covariance_scaling, double epsilon);

/// Dendrogram (and, for k >= 1, the cut and cluster weights) of one
/// stored panel; writes JSON plus plot-ready CSVs. Returns the JSON
/// path.
std::string panel_cluster(const std::string& panel_json_path, const std::string& out_path,
                          Linkage linkage, size_t k, double epsilon);

}  // namespace scomb
