#include "scomb/run.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "json.hpp"
#include "scomb/csv.hpp"
#include "scomb/errors.hpp"
#include "scomb/log.hpp"
#include "scomb/weights.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace scomb {

namespace {

std::string fmt(double v) { return csv::format_double(v); }

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string sanitize(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'
                          ? c
                          : '_');
    }
    return out.empty() ? std::string("_") : out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::io_error, "read failed for " + path);
    return text;
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");
    out << text;
    if (!out) fail(Errc::io_error, "write failed for " + path);
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

[[noreturn]] void config_fail(const std::string& message) {
    fail(Errc::config_error, message);
}

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) config_fail("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_fail("bad value for '" + key + "'");
    }
}

std::string require_string(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_string()) {
        config_fail("missing string '" + key + "' in " + where);
    }
    return obj.at(key).get<std::string>();
}

CasMode cas_mode_from_name(const std::string& name) {
    if (name == "threshold") return CasMode::threshold;
    if (name == "cluster") return CasMode::cluster;
    if (name == "biplot") return CasMode::biplot;
    config_fail("cas mode must be threshold, cluster, or biplot; got '" + name + "'");
}

const char* cas_mode_name(CasMode m) {
    switch (m) {
        case CasMode::threshold: return "threshold";
        case CasMode::cluster: return "cluster";
        case CasMode::biplot: return "biplot";
    }
    return "?";
}

Linkage linkage_from_name(const std::string& name) {
    if (name == "ward") return Linkage::ward;
    if (name == "complete") return Linkage::complete;
    config_fail("linkage must be ward or complete; got '" + name + "'");
}

const char* linkage_name(Linkage l) {
    return l == Linkage::ward ? "ward" : "complete";
}

struct PanelEntry {
    std::string file;
    std::string variable;
    std::string sample;
    int season = 0;
};

std::string panels_dir(const RunConfig& config) {
    return (fs::path(config.out_dir) / "panels").string();
}

std::string index_path(const RunConfig& config) {
    return (fs::path(panels_dir(config)) / "index.json").string();
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        config_fail(std::string("config is not valid json: ") + e.what());
    }
    if (!j.is_object()) config_fail("config root must be an object");
    check_known_keys(j, {"survey_csv", "actuals_csv", "schema", "actuals_schema", "variables",
                          "samples", "frequency", "fill", "epsilon", "methods", "cas",
                          "rolling", "metrics", "case_cuts", "out_dir", "jobs", "seed"},
                     "config");

    RunConfig c;
    c.survey_csv = resolve_path(require_string(j, "survey_csv", "config"), base_dir);
    c.actuals_csv = resolve_path(get_or<std::string>(j, "actuals_csv", ""), base_dir);

    if (!j.contains("schema") || !j.at("schema").is_object()) {
        config_fail("config needs a schema object");
    }
    const json& s = j.at("schema");
    check_known_keys(s, {"variable", "forecaster", "year", "season", "horizon", "value",
                          "actual"},
                     "schema");
    c.schema.variable = require_string(s, "variable", "schema");
    c.schema.forecaster = require_string(s, "forecaster", "schema");
    c.schema.year = require_string(s, "year", "schema");
    c.schema.season = require_string(s, "season", "schema");
    c.schema.horizon = require_string(s, "horizon", "schema");
    c.schema.value = require_string(s, "value", "schema");
    c.schema.actual = get_or<std::string>(s, "actual", "");

    c.actuals_schema = {c.schema.variable, c.schema.year, c.schema.season, "actual"};
    if (j.contains("actuals_schema")) {
        const json& a = j.at("actuals_schema");
        check_known_keys(a, {"variable", "year", "season", "value"}, "actuals_schema");
        c.actuals_schema.variable = require_string(a, "variable", "actuals_schema");
        c.actuals_schema.year = require_string(a, "year", "actuals_schema");
        c.actuals_schema.season = require_string(a, "season", "actuals_schema");
        c.actuals_schema.value = require_string(a, "value", "actuals_schema");
    }

    c.variables = get_or<std::vector<std::string>>(j, "variables", {});

    if (!j.contains("samples") || !j.at("samples").is_array() || j.at("samples").empty()) {
        config_fail("config needs a non-empty samples array");
    }
    std::set<std::string> sample_names;
    for (const json& sj : j.at("samples")) {
        check_known_keys(sj, {"name", "first_year", "last_year"}, "samples[]");
        SampleWindow w;
        w.name = require_string(sj, "name", "samples[]");
        w.first_year = get_or<int>(sj, "first_year", 0);
        w.last_year = get_or<int>(sj, "last_year", 0);
        if (w.first_year == 0 || w.last_year == 0 || w.first_year > w.last_year) {
            config_fail("sample '" + w.name + "' window is not well-ordered");
        }
        if (!sample_names.insert(w.name).second) {
            config_fail("duplicate sample name '" + w.name + "'");
        }
        c.samples.push_back(std::move(w));
    }

    c.frequency = get_or<int>(j, "frequency", 4);
    if (c.frequency < 1 || c.frequency > 12) config_fail("frequency must be in 1..12");

    if (j.contains("fill")) {
        const json& f = j.at("fill");
        check_known_keys(f, {"use_two_step_fill", "max_consecutive_missing"}, "fill");
        c.fill.use_two_step_fill = get_or<bool>(f, "use_two_step_fill", true);
        c.fill.max_consecutive_missing = get_or<int>(f, "max_consecutive_missing", 4);
        if (c.fill.max_consecutive_missing < 0) {
            config_fail("max_consecutive_missing must be >= 0");
        }
    }

    c.epsilon = get_or<double>(j, "epsilon", 1e-8);
    if (!(c.epsilon > 0.0)) config_fail("epsilon must be > 0");

    if (j.contains("methods")) {
        c.methods.clear();
        for (const json& mj : j.at("methods")) {
            if (!mj.is_string()) config_fail("methods must be an array of names");
            Method m;
            try {
                m = method_from_name(mj.get<std::string>());
            } catch (const Error& e) {
                config_fail(e.what());
            }
            if (std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end()) {
                config_fail("duplicate method '" + mj.get<std::string>() + "'");
            }
            c.methods.push_back(m);
        }
        if (c.methods.empty()) config_fail("methods must not be empty");
    }

    if (j.contains("cas")) {
        const json& k = j.at("cas");
        check_known_keys(k, {"mode", "linkage", "k", "allocation", "angle_tolerance_degrees",
                              "min_length_fraction"},
                         "cas");
        c.cas.mode = cas_mode_from_name(get_or<std::string>(k, "mode", "threshold"));
        c.cas.linkage = linkage_from_name(get_or<std::string>(k, "linkage", "ward"));
        const int kk = get_or<int>(k, "k", 2);
        if (kk < 1) config_fail("cas.k must be >= 1");
        c.cas.k = static_cast<size_t>(kk);
        const std::string alloc = get_or<std::string>(k, "allocation", "uniform");
        if (alloc == "uniform") {
            c.cas.allocation = ClusterAllocation::uniform;
        } else if (alloc == "combined") {
            c.cas.allocation = ClusterAllocation::combined;
        } else {
            config_fail("cas.allocation must be uniform or combined");
        }
        c.cas.angle_tolerance_degrees = get_or<double>(k, "angle_tolerance_degrees", 5.0);
        c.cas.min_length_fraction = get_or<double>(k, "min_length_fraction", 0.1);
        if (c.cas.angle_tolerance_degrees < 0.0 || c.cas.min_length_fraction < 0.0) {
            config_fail("cas tolerances must be nonnegative");
        }
    }

    if (!j.contains("rolling") || !j.at("rolling").is_object()) {
        config_fail("config needs a rolling object");
    }
    const json& r = j.at("rolling");
    check_known_keys(r, {"train_end_year"}, "rolling");
    c.train_end_year = get_or<int>(r, "train_end_year", 0);
    if (c.train_end_year == 0) config_fail("rolling.train_end_year is required");

    if (j.contains("metrics")) {
        c.metrics = j.at("metrics").get<std::vector<std::string>>();
        if (c.metrics.empty()) config_fail("metrics must not be empty");
        for (const std::string& m : c.metrics) {
            if (m != "ME" && m != "RMSE" && m != "MAPE" && m != "MdAPE") {
                config_fail("unknown metric '" + m + "'");
            }
        }
    }

    if (j.contains("case_cuts")) {
        const json& cc = j.at("case_cuts");
        check_known_keys(cc, {"bias", "variance"}, "case_cuts");
        c.bias_cut = get_or<double>(cc, "bias", 0.3);
        c.var_cut = get_or<double>(cc, "variance", 0.3);
        if (c.bias_cut < 0.0 || c.var_cut < 0.0) config_fail("case cuts must be nonnegative");
    }

    c.out_dir = resolve_path(get_or<std::string>(j, "out_dir", "out"), base_dir);
    c.jobs = get_or<int>(j, "jobs", 1);
    if (c.jobs < 1) config_fail("jobs must be >= 1");
    c.seed = get_or<unsigned>(j, "seed", 0u);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error&) {
        config_fail("cannot read config file " + path);
    }
    return parse_config(text, fs::path(path).parent_path().string());
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
    auto parse_positive_int = [&](const char* what) {
        try {
            size_t pos = 0;
            int v = std::stoi(value, &pos);
            if (pos != value.size() || v < 1) throw std::invalid_argument(what);
            return v;
        } catch (const std::exception&) {
            config_fail(std::string(what) + " must be a positive integer, got '" + value + "'");
        }
    };
    if (key == "out_dir") {
        if (value.empty()) config_fail("out_dir override must not be empty");
        config.out_dir = value;
    } else if (key == "epsilon") {
        try {
            size_t pos = 0;
            double v = std::stod(value, &pos);
            if (pos != value.size() || !(v > 0.0)) throw std::invalid_argument("");
            config.epsilon = v;
        } catch (const std::exception&) {
            config_fail("epsilon override must be a positive number, got '" + value + "'");
        }
    } else if (key == "jobs") {
        config.jobs = parse_positive_int("jobs");
    } else if (key == "cas.k") {
        config.cas.k = static_cast<size_t>(parse_positive_int("cas.k"));
    } else if (key == "cas.mode") {
        config.cas.mode = cas_mode_from_name(value);
    } else if (key == "cas.linkage") {
        config.cas.linkage = linkage_from_name(value);
    } else if (key == "train_end_year") {
        config.train_end_year = parse_positive_int("train_end_year");
    } else if (key == "methods") {
        std::vector<Method> methods;
        size_t start = 0;
        while (start <= value.size()) {
            size_t comma = value.find(',', start);
            std::string name = value.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!name.empty()) {
                try {
                    methods.push_back(method_from_name(name));
                } catch (const Error& e) {
                    config_fail(e.what());
                }
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (methods.empty()) config_fail("methods override is empty");
        config.methods = std::move(methods);
    } else {
        config_fail("unknown override '" + key + "'");
    }
}

IngestSummary cmd_ingest(const RunConfig& config) {
    if (!fs::exists(config.survey_csv)) {
        config_fail("survey file does not exist: " + config.survey_csv);
    }
    if (!config.actuals_csv.empty() && !fs::exists(config.actuals_csv)) {
        config_fail("actuals file does not exist: " + config.actuals_csv);
    }

    IngestSummary summary;
    std::vector<SurveyRecord> records = load_survey(config.survey_csv, config.schema);
    summary.records = records.size();
    if (!config.actuals_csv.empty()) {
        merge_actuals(records, load_actuals(config.actuals_csv, config.actuals_schema));
    }
    records = apply_fill_policy(std::move(records), config.fill);
    summary.records_after_fill = records.size();

    if (config.variables.empty()) {
        log_message(LogLevel::warn, "no variables configured; nothing to ingest");
        return summary;
    }

    ojson index;
    index["panels"] = ojson::array();
    for (const std::string& variable : config.variables) {
        for (const SampleWindow& window : config.samples) {
            std::vector<ForecastPanel> panels =
                split_panels(records, variable, window.first_year, window.last_year);
            for (const ForecastPanel& panel : panels) {
                const std::string name = sanitize(variable) + "__" + sanitize(window.name) +
                                         "__s" + std::to_string(panel.season);
                const std::string file = name + ".json";
                const std::string path = (fs::path(panels_dir(config)) / file).string();
                write_text_file(path, panel_to_json(panel));
                summary.paths.push_back(path);
                ++summary.panels_written;

                ojson entry;
                entry["file"] = file;
                entry["variable"] = variable;
                entry["sample"] = window.name;
                entry["season"] = panel.season;
                entry["rows"] = panel.rows();
                entry["cols"] = panel.cols();
                index["panels"].push_back(std::move(entry));
            }
        }
    }
    write_text_file(index_path(config), index.dump(2) + "\n");
    log_message(LogLevel::info,
                "ingested " + std::to_string(summary.panels_written) + " panels");
    return summary;
}

namespace {

struct MetricsRow {
    Method method;
    Metrics metrics;
};

struct MsfeRow {
    Method method;
    std::optional<MsfeDecomposition> d;
    int case_id = 0;
    bool perfect = false;
};

struct CvRow {
    int time = 0;
    std::optional<double> cv;
};

struct PanelOutcome {
    PanelEntry entry;
    bool ok = false;
    std::string error;
    size_t rows = 0;
    size_t cols = 0;
    std::vector<MetricsRow> metrics_rows;
    std::vector<MsfeRow> msfe_rows;
    std::vector<BeatCell> cells;
    std::vector<CvRow> cv_rows;
};

std::optional<double> metric_value(const Metrics& m, const std::string& metric) {
    if (metric == "ME") return m.me;
    if (metric == "RMSE") return m.rmse;
    if (metric == "MAPE") return m.mape;
    if (metric == "MdAPE") return m.mdape;
    fail(Errc::invalid_argument, "unknown metric '" + metric + "'");
}

std::vector<int> dendrogram_leaf_order(const Dendrogram& d) {
    // Display order: expand each merge left-to-right, children in node-id
    // order, so leaves of one cluster stay contiguous.
    const size_t J = d.leaves();
    std::vector<std::vector<int>> order(J + d.merges.size());
    for (size_t i = 0; i < J; ++i) order[i] = {static_cast<int>(i)};
    for (size_t s = 0; s < d.merges.size(); ++s) {
        auto& dst = order[J + s];
        dst = order[d.merges[s].a];
        dst.insert(dst.end(), order[d.merges[s].b].begin(), order[d.merges[s].b].end());
    }
    return d.merges.empty() ? order[0] : order[J + d.merges.size() - 1];
}

ojson dendrogram_to_json(const Dendrogram& d) {
    ojson j;
    j["leaf_labels"] = d.leaf_labels;
    j["merges"] = ojson::array();
    for (const MergeStep& m : d.merges) {
        ojson step;
        step["a"] = m.a;
        step["b"] = m.b;
        step["height"] = m.height;
        step["size"] = m.size;
        j["merges"].push_back(std::move(step));
    }
    j["leaf_order"] = dendrogram_leaf_order(d);
    return j;
}

void write_dendrogram_csvs(const Dendrogram& d, const std::string& json_path) {
    fs::path base(json_path);
    csv::Table merges;
    merges.header = {"step", "a", "b", "height", "size"};
    for (size_t s = 0; s < d.merges.size(); ++s) {
        const MergeStep& m = d.merges[s];
        merges.rows.push_back({std::to_string(s), std::to_string(m.a), std::to_string(m.b),
                               fmt(m.height), std::to_string(m.size)});
    }
    csv::write_file(base.parent_path() / (base.stem().string() + "_merges.csv"), merges);

    csv::Table leaves;
    leaves.header = {"position", "leaf", "label"};
    std::vector<int> order = dendrogram_leaf_order(d);
    for (size_t p = 0; p < order.size(); ++p) {
        const int leaf = order[p];
        const std::string label =
            d.leaf_labels.empty() ? std::to_string(leaf) : d.leaf_labels[leaf];
        leaves.rows.push_back({std::to_string(p), std::to_string(leaf), label});
    }
    csv::write_file(base.parent_path() / (base.stem().string() + "_leaves.csv"), leaves);
}

void write_biplot_files(const BiplotResult& b, const std::vector<int>& times,
                        const std::vector<std::string>& ids, const std::string& csv_path) {
    csv::Table t;
    t.header = {"kind", "label", "d1", "d2"};
    for (size_t i = 0; i < b.scores.size(); ++i) {
        t.rows.push_back(
            {"score", std::to_string(times[i]), fmt(b.scores[i][0]), fmt(b.scores[i][1])});
    }
    for (size_t j = 0; j < b.loadings.size(); ++j) {
        t.rows.push_back({"loading", ids[j], fmt(b.loadings[j][0]), fmt(b.loadings[j][1])});
    }
    csv::write_file(csv_path, t);

    ojson j;
    j["singular_values"] = {b.singular_values[0], b.singular_values[1]};
    j["variance_explained"] = b.variance_explained;
    j["scores"] = ojson::array();
    for (size_t i = 0; i < b.scores.size(); ++i) {
        j["scores"].push_back({{"label", std::to_string(times[i])},
                               {"d1", b.scores[i][0]},
                               {"d2", b.scores[i][1]}});
    }
    j["loadings"] = ojson::array();
    for (size_t i = 0; i < b.loadings.size(); ++i) {
        j["loadings"].push_back(
            {{"label", ids[i]}, {"d1", b.loadings[i][0]}, {"d2", b.loadings[i][1]}});
    }
    fs::path base(csv_path);
    write_text_file((base.parent_path() / (base.stem().string() + ".json")).string(),
                    j.dump(2) + "\n");
}

PanelOutcome evaluate_panel(const RunConfig& config, const PanelEntry& entry) {
    PanelOutcome out;
    out.entry = entry;
    const std::string panel_path = (fs::path(panels_dir(config)) / entry.file).string();
    const ForecastPanel panel = panel_from_json(read_text_file(panel_path));
    out.rows = panel.rows();
    out.cols = panel.cols();

    RollingScheme scheme;
    for (int t : panel.times) {
        if (t <= config.train_end_year) {
            ++scheme.train_end;
        } else {
            scheme.eval_periods.push_back(t);
        }
    }
    const RollingResult result =
        rolling_evaluate(panel, config.methods, scheme, config.epsilon, config.cas);

    const std::string run_dir =
        (fs::path(config.out_dir) / "runs" / fs::path(entry.file).stem()).string();
    fs::create_directories(run_dir);

    csv::Table combos;
    combos.header = {"time", "method", "forecast", "actual"};
    const size_t steps = result.series.front().times.size();
    for (size_t i = 0; i < steps; ++i) {
        for (const MethodSeries& s : result.series) {
            combos.rows.push_back({std::to_string(s.times[i]), method_name(s.method),
                                   fmt(s.forecasts[i]), fmt(s.actuals[i])});
        }
    }
    csv::write_file((fs::path(run_dir) / "combinations.csv").string(), combos);

    csv::Table weights;
    weights.header = {"time", "method", "forecaster", "weight"};
    const bool has_cas =
        std::find(config.methods.begin(), config.methods.end(), Method::cas) !=
        config.methods.end();
    for (const StepDetail& d : result.details) {
        for (Method m : config.methods) {
            const std::vector<double>* w = nullptr;
            if (m == Method::s_stc) w = &d.s_stc_weights;
            if (m == Method::e_stc) w = &d.e_stc_weights;
            if (m == Method::cas) w = &d.cas_weights_full;
            if (!w || w->empty()) continue;
            for (size_t j = 0; j < w->size(); ++j) {
                weights.rows.push_back({std::to_string(d.time), method_name(m),
                                        panel.forecaster_ids[j], fmt((*w)[j])});
            }
        }
    }
    csv::write_file((fs::path(run_dir) / "weights.csv").string(), weights);

    if (has_cas) {
        csv::Table sel;
        sel.header = {"time", "included", "ids"};
        for (const StepDetail& d : result.details) {
            std::string ids;
            for (size_t i = 0; i < d.cas_included.size(); ++i) {
                if (i) ids += "|";
                ids += panel.forecaster_ids[d.cas_included[i]];
            }
            sel.rows.push_back(
                {std::to_string(d.time), std::to_string(d.cas_included.size()), ids});
        }
        csv::write_file((fs::path(run_dir) / "selections.csv").string(), sel);
    }

    // Full-history structure exports; diagnostics only, so a degenerate
    // panel (zero variation) skips them rather than failing the run.
    try {
        const CompositionMatrix w = weight_matrix(accuracy_matrix(panel, config.epsilon));
        const Dendrogram dend =
            cluster_forecasts(pairwise_distance(w), config.cas.linkage, panel.forecaster_ids);
        const std::string dend_path = (fs::path(run_dir) / "dendrogram.json").string();
        write_text_file(dend_path, dendrogram_to_json(dend).dump(2) + "\n");
        write_dendrogram_csvs(dend, dend_path);
        const BiplotResult b = biplot(w);
        write_biplot_files(b, panel.times, panel.forecaster_ids,
                           (fs::path(run_dir) / "biplot.csv").string());
    } catch (const Error& e) {
        log_message(LogLevel::warn,
                    entry.file + ": structure exports skipped: " + e.what());
    }

    const bool j_ge_t = panel.cols() >= panel.rows();
    for (const MethodSeries& s : result.series) {
        MetricsRow row;
        row.method = s.method;
        row.metrics = accuracy_metrics(s.forecasts, s.actuals);
        out.metrics_rows.push_back(row);

        MsfeRow mrow;
        mrow.method = s.method;
        try {
            MsfeDecomposition d = msfe_decomposition(s.forecasts, s.actuals);
            mrow.case_id = classify_case(d, config.bias_cut, config.var_cut);
            mrow.d = d;
        } catch (const Error& e) {
            if (e.code() != Errc::zero_msfe) throw;
            mrow.perfect = true;
        }
        out.msfe_rows.push_back(mrow);
    }

    for (const std::string& metric : config.metrics) {
        std::vector<std::pair<Method, double>> values;
        for (const MetricsRow& row : out.metrics_rows) {
            std::optional<double> v = metric_value(row.metrics, metric);
            if (v) values.emplace_back(row.method, *v);
        }
        if (values.size() != out.metrics_rows.size()) continue;  // metric undefined here
        BeatCell cell;
        cell.variable = entry.variable;
        cell.sample = entry.sample;
        cell.season = entry.season;
        cell.metric = metric;
        cell.winner = beat_winner(metric, values);
        cell.j_greater_equal_t = j_ge_t;
        out.cells.push_back(std::move(cell));
    }

    for (size_t t = 0; t < panel.rows(); ++t) {
        CvRow row;
        row.time = panel.times[t];
        try {
            row.cv = coefficient_of_variation(panel.forecasts[t]);
        } catch (const Error& e) {
            if (e.code() != Errc::zero_mean) throw;
        }
        out.cv_rows.push_back(row);
    }

    out.ok = true;
    return out;
}

}  // namespace

RunSummary cmd_run(const RunConfig& config) {
    if (!fs::exists(index_path(config))) {
        fail(Errc::missing_run,
             "no panel store at " + panels_dir(config) + "; run ingest first");
    }
    json index;
    try {
        index = json::parse(read_text_file(index_path(config)));
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("bad panel index: ") + e.what());
    }

    std::set<std::string> want_vars(config.variables.begin(), config.variables.end());
    std::set<std::string> want_samples;
    for (const SampleWindow& w : config.samples) want_samples.insert(w.name);

    std::vector<PanelEntry> entries;
    for (const json& e : index.at("panels")) {
        PanelEntry entry;
        entry.file = e.at("file").get<std::string>();
        entry.variable = e.at("variable").get<std::string>();
        entry.sample = e.at("sample").get<std::string>();
        entry.season = e.at("season").get<int>();
        if (!want_vars.empty() && !want_vars.count(entry.variable)) continue;
        if (!want_samples.count(entry.sample)) continue;
        entries.push_back(std::move(entry));
    }
    if (entries.empty()) {
        fail(Errc::missing_run, "no ingested panels match the configured variables/samples");
    }

    std::vector<PanelOutcome> outcomes(entries.size());
    auto work = [&](size_t i) {
        try {
            outcomes[i] = evaluate_panel(config, entries[i]);
        } catch (const std::exception& e) {
            outcomes[i].entry = entries[i];
            outcomes[i].ok = false;
            outcomes[i].error = e.what();
            log_message(LogLevel::error, entries[i].file + ": " + e.what());
        }
    };

    const size_t jobs = std::min<size_t>(std::max(config.jobs, 1), entries.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < entries.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (size_t w = 0; w < jobs; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < entries.size();
                     i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // Aggregation is sequential and follows index order, so output bytes
    // do not depend on scheduling.
    csv::Table metrics;
    metrics.header = {"variable", "sample", "season", "j", "t",
                      "method",   "n",      "ME",     "RMSE", "MAPE", "MdAPE"};
    csv::Table msfe;
    msfe.header = {"variable",  "sample",   "season",   "method", "msfe",
                   "bias_prop", "var_prop", "cov_prop", "case",   "note"};
    csv::Table cv;
    cv.header = {"variable", "sample", "season", "time", "cv"};
    std::vector<BeatCell> cells;

    RunSummary summary;
    summary.out_dir = config.out_dir;
    ojson failures = ojson::array();
    for (const PanelOutcome& o : outcomes) {
        ++summary.panels;
        if (!o.ok) {
            ++summary.failed;
            summary.failure_messages.push_back(o.entry.file + ": " + o.error);
            ojson f;
            f["panel"] = o.entry.file;
            f["error"] = o.error;
            failures.push_back(std::move(f));
            continue;
        }
        for (const MetricsRow& row : o.metrics_rows) {
            metrics.rows.push_back(
                {o.entry.variable, o.entry.sample, std::to_string(o.entry.season),
                 std::to_string(o.cols), std::to_string(o.rows), method_name(row.method),
                 std::to_string(row.metrics.n), fmt(row.metrics.me), fmt(row.metrics.rmse),
                 row.metrics.mape ? fmt(*row.metrics.mape) : "",
                 row.metrics.mdape ? fmt(*row.metrics.mdape) : ""});
        }
        for (const MsfeRow& row : o.msfe_rows) {
            msfe.rows.push_back(
                {o.entry.variable, o.entry.sample, std::to_string(o.entry.season),
                 method_name(row.method), row.d ? fmt(row.d->msfe) : fmt(0.0),
                 row.d ? fmt(row.d->bias_prop) : "", row.d ? fmt(row.d->var_prop) : "",
                 row.d ? fmt(row.d->cov_prop) : "",
                 row.d ? std::to_string(row.case_id) : "",
                 row.perfect ? "perfect" : ""});
        }
        for (const CvRow& row : o.cv_rows) {
            cv.rows.push_back({o.entry.variable, o.entry.sample,
                               std::to_string(o.entry.season), std::to_string(row.time),
                               row.cv ? fmt(*row.cv) : ""});
        }
        cells.insert(cells.end(), o.cells.begin(), o.cells.end());
    }

    csv::write_file((fs::path(config.out_dir) / "metrics.csv").string(), metrics);
    csv::write_file((fs::path(config.out_dir) / "msfe.csv").string(), msfe);
    csv::write_file((fs::path(config.out_dir) / "cv.csv").string(), cv);

    const BeatTable table = beat_table(cells);
    csv::Table beats;
    beats.header = {"stratum", "method", "count", "percent"};
    auto emit_stratum = [&](const std::string& name, const BeatCounts& counts) {
        for (Method m : config.methods) {
            auto it = counts.counts.find(m);
            const size_t c = it == counts.counts.end() ? 0 : it->second;
            beats.rows.push_back(
                {name, method_name(m), std::to_string(c), fmt(counts.percent(m))});
        }
        size_t simplex = 0;
        for (Method m : {Method::s_stc, Method::cas}) {
            auto it = counts.counts.find(m);
            if (it != counts.counts.end()) simplex += it->second;
        }
        beats.rows.push_back(
            {name, "SIMPLEX", std::to_string(simplex), fmt(counts.percent_simplex())});
    };
    emit_stratum("overall", table.overall);
    emit_stratum("j_less_t", table.j_less);
    emit_stratum("j_ge_t", table.j_greater);
    csv::write_file((fs::path(config.out_dir) / "beats.csv").string(), beats);

    ojson sj;
    sj["panels"] = summary.panels;
    sj["failed"] = summary.failed;
    sj["failures"] = std::move(failures);
    ojson methods = ojson::array();
    for (Method m : config.methods) methods.push_back(method_name(m));
    sj["methods"] = std::move(methods);
    sj["metrics"] = config.metrics;
    sj["cas_mode"] = cas_mode_name(config.cas.mode);
    sj["linkage"] = linkage_name(config.cas.linkage);
    sj["epsilon"] = config.epsilon;
    sj["train_end_year"] = config.train_end_year;
    write_text_file((fs::path(config.out_dir) / "run_summary.json").string(),
                    sj.dump(2) + "\n");

    log_message(LogLevel::info, "evaluated " + std::to_string(summary.panels - summary.failed) +
                                    "/" + std::to_string(summary.panels) + " panels");
    return summary;
}

std::string cmd_report(const std::string& run_dir) {
    const std::string summary_path = (fs::path(run_dir) / "run_summary.json").string();
    if (!fs::exists(summary_path)) {
        fail(Errc::missing_run, "no run summary at " + summary_path);
    }
    json summary;
    try {
        summary = json::parse(read_text_file(summary_path));
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("bad run summary: ") + e.what());
    }
    const auto need = [&](const char* name) {
        const std::string p = (fs::path(run_dir) / name).string();
        if (!fs::exists(p)) fail(Errc::missing_run, std::string("missing ") + name);
        return csv::read_file(p);
    };
    const csv::Table metrics = need("metrics.csv");
    const csv::Table beats = need("beats.csv");
    const csv::Table msfe = need("msfe.csv");
    const csv::Table cv = need("cv.csv");

    std::string md;
    md += "# Forecast combination run report\n\n";
    md += "Panels evaluated: " + std::to_string(summary.at("panels").get<size_t>() -
                                                summary.at("failed").get<size_t>()) +
          " of " + std::to_string(summary.at("panels").get<size_t>()) + "\n\n";

    if (summary.at("failed").get<size_t>() > 0) {
        md += "## Incomplete panels\n\n";
        for (const json& f : summary.at("failures")) {
            md += "- `" + f.at("panel").get<std::string>() + "`: " +
                  f.at("error").get<std::string>() + "\n";
        }
        md += "\nCells for these panels are missing from every table below.\n\n";
    }

    md += "## Method wins\n\n";
    md += "Share of (variable, sample, season, metric) cells won per method;\n";
    md += "SIMPLEX pools the varying-weight methods (S_STC + CAS).\n\n";
    md += "| stratum | method | wins | percent |\n|---|---|---:|---:|\n";
    {
        const int c_stratum = beats.column("stratum");
        const int c_method = beats.column("method");
        const int c_count = beats.column("count");
        const int c_pct = beats.column("percent");
        for (const auto& row : beats.rows) {
            md += "| " + row[c_stratum] + " | " + row[c_method] + " | " + row[c_count] +
                  " | " + fmt2(std::stod(row[c_pct])) + " |\n";
        }
    }
    md += "\n";

    // One table per metric: rows are variable x sample, methods across,
    // values averaged over that pair's seasonal panels.
    const int m_var = metrics.column("variable");
    const int m_sample = metrics.column("sample");
    const int m_method = metrics.column("method");
    std::vector<std::string> methods;
    for (const json& m : summary.at("methods")) methods.push_back(m.get<std::string>());
    std::vector<std::string> metric_names;
    for (const json& m : summary.at("metrics")) metric_names.push_back(m.get<std::string>());

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& row : metrics.rows) {
        std::pair<std::string, std::string> p{row[m_var], row[m_sample]};
        if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
    }

    for (const std::string& metric : metric_names) {
        const int c_metric = metrics.column(metric);
        if (c_metric < 0) continue;
        md += "## " + metric + " by variable and sample\n\n";
        md += "Seasonal panels averaged; NA marks undefined cells.\n\n";
        md += "| variable | sample |";
        for (const std::string& m : methods) md += " " + m + " |";
        md += "\n|---|---|";
        for (size_t i = 0; i < methods.size(); ++i) md += "---:|";
        md += "\n";
        for (const auto& [variable, sample] : pairs) {
            md += "| " + variable + " | " + sample + " |";
            for (const std::string& method : methods) {
                double total = 0.0;
                size_t n = 0;
                bool missing = false;
                for (const auto& row : metrics.rows) {
                    if (row[m_var] != variable || row[m_sample] != sample ||
                        row[m_method] != method) {
                        continue;
                    }
                    if (row[c_metric].empty()) {
                        missing = true;
                    } else {
                        total += std::stod(row[c_metric]);
                        ++n;
                    }
                }
                if (n == 0 || missing) {
                    md += " NA |";
                } else {
                    md += " " + fmt2(total / static_cast<double>(n)) + " |";
                }
            }
            md += "\n";
        }
        md += "\n";
    }

    md += "## Squared-error decomposition cases\n\n";
    md += "Case 1 = low bias, low variance; 2 = high variance; 3 = high bias and\n";
    md += "variance; 4 = high bias, low variance. Counts over all panels.\n\n";
    {
        const int c_method = msfe.column("method");
        const int c_case = msfe.column("case");
        const int c_note = msfe.column("note");
        std::map<std::string, std::array<size_t, 5>> case_counts;
        size_t perfect = 0;
        for (const auto& row : msfe.rows) {
            if (!row[c_note].empty()) {
                ++perfect;
                continue;
            }
            if (row[c_case].empty()) continue;
            int id = std::stoi(row[c_case]);
            if (id >= 1 && id <= 4) ++case_counts[row[c_method]][id];
        }
        md += "| method | case 1 | case 2 | case 3 | case 4 |\n|---|---:|---:|---:|---:|\n";
        for (const std::string& method : methods) {
            const auto& counts = case_counts[method];
            md += "| " + method + " | " + std::to_string(counts[1]) + " | " +
                  std::to_string(counts[2]) + " | " + std::to_string(counts[3]) + " | " +
                  std::to_string(counts[4]) + " |\n";
        }
        if (perfect > 0) {
            md += "\nPerfect-forecast series (undefined proportions): " +
                  std::to_string(perfect) + "\n";
        }
    }
    md += "\n";

    md += "## Forecast dispersion\n\n";
    md += "Coefficient of variation of the individual forecasts, averaged per\n";
    md += "variable and sample.\n\n";
    {
        const int c_var = cv.column("variable");
        const int c_sample = cv.column("sample");
        const int c_cv = cv.column("cv");
        md += "| variable | sample | mean CV | rows |\n|---|---|---:|---:|\n";
        for (const auto& [variable, sample] : pairs) {
            double total = 0.0;
            size_t n = 0;
            for (const auto& row : cv.rows) {
                if (row[c_var] != variable || row[c_sample] != sample || row[c_cv].empty()) {
                    continue;
                }
                total += std::stod(row[c_cv]);
                ++n;
            }
            md += "| " + variable + " | " + sample + " | " +
                  (n ? fmt2(total / static_cast<double>(n)) : std::string("NA")) + " | " +
                  std::to_string(n) + " |\n";
        }
    }
    md += "\n";

    const std::string report_path = (fs::path(run_dir) / "report.md").string();
    write_text_file(report_path, md);
    return report_path;
}

std::string panel_biplot(const std::string& panel_json_path, const std::string& out_path,
                         bool covariance_scaling, double epsilon) {
    const ForecastPanel panel = panel_from_json(read_text_file(panel_json_path));
    const CompositionMatrix w = weight_matrix(accuracy_matrix(panel, epsilon));
    const BiplotResult b =
        biplot(w, covariance_scaling ? BiplotScaling::covariance : BiplotScaling::form);
    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_biplot_files(b, panel.times, panel.forecaster_ids, out_path);
    return out_path;
}

std::string panel_cluster(const std::string& panel_json_path, const std::string& out_path,
                          Linkage linkage, size_t k, double epsilon) {
    const ForecastPanel panel = panel_from_json(read_text_file(panel_json_path));
    const CompositionMatrix w = weight_matrix(accuracy_matrix(panel, epsilon));
    const Dendrogram dend =
        cluster_forecasts(pairwise_distance(w), linkage, panel.forecaster_ids);
    ojson j = dendrogram_to_json(dend);
    j["linkage"] = linkage_name(linkage);
    if (k >= 1) {
        const ClusterWeights cw = cluster_cas(w, dend, k);
        j["k"] = k;
        j["assignment"] = cw.assignment;
        j["weights"] = cw.weights.parts();
    }
    fs::path out(out_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_text_file(out_path, j.dump(2) + "\n");
    write_dendrogram_csvs(dend, out_path);
    return out_path;
}

}  // namespace scomb
