#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "scomb/csv.hpp"
#include "scomb/errors.hpp"
#include "scomb/run.hpp"

using namespace scomb;
using oracles::code_of;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* fixture_dir() { return SCOMB_FIXTURE_DIR; }

struct TempDir {
    fs::path path;

    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("scomb_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunConfig fixture_config(const TempDir& tmp) {
    RunConfig config = load_config(std::string(fixture_dir()) + "/config.json");
    apply_override(config, "out_dir", (tmp.path / "out").string());
    return config;
}

// Minimal config accepted by the parser; error cases mutate it.
json minimal_config() {
    return json{{"survey_csv", "survey.csv"},
                {"schema",
                 {{"variable", "variable"},
                  {"forecaster", "forecaster"},
                  {"year", "year"},
                  {"season", "quarter"},
                  {"horizon", "horizon"},
                  {"value", "value"},
                  {"actual", "actual"}}},
                {"samples", json::array({{{"name", "s1"},
                                          {"first_year", 2004},
                                          {"last_year", 2018}}})},
                {"rolling", {{"train_end_year", 2014}}}};
}

}  // namespace

TEST_SUITE_BEGIN("run");

TEST_CASE("the sample config loads with every field in place") {
    RunConfig c = load_config(std::string(fixture_dir()) + "/config.json");
    CHECK(fs::path(c.survey_csv).filename() == "survey.csv");
    CHECK(fs::exists(c.survey_csv));
    CHECK(c.variables == std::vector<std::string>{"gdp_growth", "inflation"});
    REQUIRE(c.samples.size() == 5);
    CHECK(c.samples.front().name == "s1");
    CHECK(c.samples.front().first_year == 2004);
    CHECK(c.samples.back().first_year == 2014);
    CHECK(c.samples.back().last_year == 2018);
    CHECK(c.frequency == 4);
    CHECK(c.epsilon == 1e-8);
    REQUIRE(c.methods.size() == 4);
    CHECK(c.methods[0] == Method::ave);
    CHECK(c.methods[3] == Method::cas);
    CHECK(c.cas.mode == CasMode::threshold);
    CHECK(c.cas.linkage == Linkage::ward);
    CHECK(c.cas.k == 2);
    CHECK(c.train_end_year == 2014);
    CHECK(c.metrics == std::vector<std::string>{"ME", "RMSE", "MAPE", "MdAPE"});
    CHECK(fs::path(c.out_dir).filename() == "out");
    CHECK(c.jobs == 1);
}

TEST_CASE("config defects are reported as configuration errors") {
    auto parse = [](const json& j) { parse_config(j.dump(), ""); };

    CHECK(code_of([] { parse_config("not json", ""); }) == Errc::config_error);
    CHECK(code_of([] { parse_config("[1,2]", ""); }) == Errc::config_error);
    CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == Errc::config_error);

    json base = minimal_config();
    CHECK_NOTHROW(parse_config(base.dump(), ""));

    json j = base;
    j.erase("survey_csv");
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j.erase("schema");
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["schema"].erase("year");
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["schema"]["extra"] = "x";
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["mystery"] = 1;
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["samples"] = json::array();
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["samples"][0]["first_year"] = 2020;
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["samples"].push_back(j["samples"][0]);
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["frequency"] = 13;
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["epsilon"] = 0.0;
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["methods"] = {"AVE", "AVE"};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["methods"] = {"MAGIC"};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["methods"] = json::array();
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["cas"] = {{"mode", "psychic"}};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["cas"] = {{"k", 0}};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["cas"] = {{"allocation", "fancy"}};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j.erase("rolling");
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["metrics"] = {"RMSE", "R2"};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["case_cuts"] = {{"bias", -0.1}};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["jobs"] = 0;
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);

    j = base;
    j["fill"] = {{"max_consecutive_missing", -1}};
    CHECK(code_of([&] { parse(j); }) == Errc::config_error);
}

TEST_CASE("relative paths resolve against the config directory") {
    json j = minimal_config();
    RunConfig c = parse_config(j.dump(), "/some/base");
    CHECK(c.survey_csv == "/some/base/survey.csv");
    CHECK(c.out_dir == "/some/base/out");
    RunConfig abs = parse_config(j.dump(), "");
    CHECK(abs.survey_csv == "survey.csv");
}

TEST_CASE("overrides parse strictly") {
    json j = minimal_config();
    RunConfig c = parse_config(j.dump(), "");

    apply_override(c, "out_dir", "elsewhere");
    CHECK(c.out_dir == "elsewhere");
    apply_override(c, "epsilon", "0.5");
    CHECK(c.epsilon == 0.5);
    apply_override(c, "jobs", "4");
    CHECK(c.jobs == 4);
    apply_override(c, "cas.k", "3");
    CHECK(c.cas.k == 3);
    apply_override(c, "cas.mode", "cluster");
    CHECK(c.cas.mode == CasMode::cluster);
    apply_override(c, "cas.linkage", "complete");
    CHECK(c.cas.linkage == Linkage::complete);
    apply_override(c, "train_end_year", "2010");
    CHECK(c.train_end_year == 2010);
    apply_override(c, "methods", "AVE,CAS");
    REQUIRE(c.methods.size() == 2);
    CHECK(c.methods[1] == Method::cas);

    CHECK(code_of([&] { apply_override(c, "epsilon", "-1"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "epsilon", "1x"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "jobs", "0"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "jobs", "two"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "cas.mode", "nope"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "methods", ",,"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "methods", "AVE,MAGIC"); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "out_dir", ""); }) == Errc::config_error);
    CHECK(code_of([&] { apply_override(c, "banana", "1"); }) == Errc::config_error);
}

TEST_CASE("ingest splits the survey into per-season panels") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    IngestSummary s = cmd_ingest(config);
    CHECK(s.records == 824);
    CHECK(s.records_after_fill == 804);
    CHECK(s.panels_written == 40);
    CHECK(s.paths.size() == 40);

    const fs::path index = tmp.path / "out" / "panels" / "index.json";
    REQUIRE(fs::exists(index));
    json idx = json::parse(slurp(index));
    REQUIRE(idx.at("panels").size() == 40);
    size_t widest = 0;
    for (const json& e : idx.at("panels")) {
        CHECK(fs::exists(index.parent_path() / e.at("file").get<std::string>()));
        CHECK((e.at("variable") == "gdp_growth" || e.at("variable") == "inflation"));
        CHECK(e.at("rows").get<size_t>() >= 5);
        widest = std::max(widest, e.at("cols").get<size_t>());
    }
    // The late-window panels hold more forecasters than periods.
    CHECK(widest >= 7);

    // Missing survey file is a configuration error.
    RunConfig broken = config;
    broken.survey_csv = (tmp.path / "missing.csv").string();
    CHECK(code_of([&] { cmd_ingest(broken); }) == Errc::config_error);
}

TEST_CASE("run evaluates every ingested panel and aggregates the tables") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);
    RunSummary s = cmd_run(config);
    CHECK(s.panels == 40);
    CHECK(s.failed == 0);
    CHECK(s.failure_messages.empty());

    const fs::path out = tmp.path / "out";
    const csv::Table metrics = csv::read_file((out / "metrics.csv").string());
    CHECK(metrics.rows.size() == 40 * 4);
    const csv::Table msfe = csv::read_file((out / "msfe.csv").string());
    CHECK(msfe.rows.size() == 40 * 4);
    const csv::Table beats = csv::read_file((out / "beats.csv").string());
    CHECK(beats.rows.size() == 3 * 5);  // three strata, four methods + SIMPLEX
    const csv::Table cv = csv::read_file((out / "cv.csv").string());
    CHECK(cv.rows.size() > 40 * 4);

    // Beat counts partition the metric cells within each stratum.
    const int c_stratum = beats.column("stratum");
    const int c_method = beats.column("method");
    const int c_count = beats.column("count");
    size_t overall = 0, less = 0, greater = 0;
    for (const auto& row : beats.rows) {
        if (row[c_method] == "SIMPLEX") continue;
        const size_t n = std::stoul(row[c_count]);
        if (row[c_stratum] == "overall") overall += n;
        if (row[c_stratum] == "j_less_t") less += n;
        if (row[c_stratum] == "j_ge_t") greater += n;
    }
    CHECK(overall == 40 * 4);
    CHECK(less + greater == overall);
    CHECK(greater > 0);

    json summary = json::parse(slurp(out / "run_summary.json"));
    CHECK(summary.at("panels") == 40);
    CHECK(summary.at("failed") == 0);
    CHECK(summary.at("methods").size() == 4);

    // Per-panel exports exist for a spot-checked run directory.
    const fs::path run_dir = out / "runs" / "gdp_growth__s1__s1";
    CHECK(fs::exists(run_dir / "combinations.csv"));
    CHECK(fs::exists(run_dir / "weights.csv"));
    CHECK(fs::exists(run_dir / "selections.csv"));
    CHECK(fs::exists(run_dir / "dendrogram.json"));
    CHECK(fs::exists(run_dir / "biplot.csv"));
    CHECK(fs::exists(run_dir / "biplot.json"));

    const csv::Table combos = csv::read_file((run_dir / "combinations.csv").string());
    CHECK(combos.rows.size() == 4 * 4);  // four eval years, four methods
}

TEST_CASE("written tables re-parse to the values the library computed") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);
    cmd_run(config);
    const fs::path out = tmp.path / "out";

    // Recompute one panel in-process with the same settings.
    const ForecastPanel panel =
        panel_from_json(slurp(out / "panels" / "gdp_growth__s1__s1.json"));
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

    const auto close = [](const std::string& cell, double want) {
        const double got = std::stod(cell);
        return std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want));
    };

    const csv::Table metrics = csv::read_file((out / "metrics.csv").string());
    const int c_var = metrics.column("variable");
    const int c_sample = metrics.column("sample");
    const int c_season = metrics.column("season");
    const int c_method = metrics.column("method");
    size_t matched = 0;
    for (const auto& row : metrics.rows) {
        if (row[c_var] != "gdp_growth" || row[c_sample] != "s1" || row[c_season] != "1") {
            continue;
        }
        for (const MethodSeries& series : result.series) {
            if (row[c_method] != method_name(series.method)) continue;
            ++matched;
            const Metrics m = accuracy_metrics(series.forecasts, series.actuals);
            CHECK(std::stoul(row[metrics.column("n")]) == m.n);
            CHECK(close(row[metrics.column("ME")], m.me));
            CHECK(close(row[metrics.column("RMSE")], m.rmse));
            CHECK(row[metrics.column("MAPE")].empty() == !m.mape.has_value());
            if (m.mape) CHECK(close(row[metrics.column("MAPE")], *m.mape));
            if (m.mdape) CHECK(close(row[metrics.column("MdAPE")], *m.mdape));
        }
    }
    CHECK(matched == config.methods.size());

    // The per-panel series and weight history round-trip the same way.
    const fs::path run_dir = out / "runs" / "gdp_growth__s1__s1";
    const csv::Table combos = csv::read_file((run_dir / "combinations.csv").string());
    size_t combo_cells = 0;
    for (const auto& row : combos.rows) {
        for (const MethodSeries& series : result.series) {
            if (row[combos.column("method")] != method_name(series.method)) continue;
            for (size_t i = 0; i < series.times.size(); ++i) {
                if (row[combos.column("time")] != std::to_string(series.times[i])) continue;
                ++combo_cells;
                CHECK(close(row[combos.column("forecast")], series.forecasts[i]));
                CHECK(close(row[combos.column("actual")], series.actuals[i]));
            }
        }
    }
    CHECK(combo_cells == combos.rows.size());

    const csv::Table weights = csv::read_file((run_dir / "weights.csv").string());
    size_t weight_cells = 0;
    for (const auto& row : weights.rows) {
        if (row[weights.column("method")] != method_name(Method::s_stc)) continue;
        for (const StepDetail& d : result.details) {
            if (row[weights.column("time")] != std::to_string(d.time)) continue;
            for (size_t j = 0; j < panel.forecaster_ids.size(); ++j) {
                if (row[weights.column("forecaster")] != panel.forecaster_ids[j]) continue;
                ++weight_cells;
                CHECK(close(row[weights.column("weight")], d.s_stc_weights[j]));
            }
        }
    }
    CHECK(weight_cells == result.details.size() * panel.cols());
}

TEST_CASE("running without ingesting first is a missing-run error") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    CHECK(code_of([&] { cmd_run(config); }) == Errc::missing_run);

    cmd_ingest(config);
    RunConfig filtered = config;
    filtered.variables = {"unknown_variable"};
    CHECK(code_of([&] { cmd_run(filtered); }) == Errc::missing_run);

    CHECK(code_of([&] { cmd_report((tmp.path / "nowhere").string()); }) == Errc::missing_run);
}

TEST_CASE("a corrupt panel is isolated instead of sinking the run") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);

    const fs::path victim = tmp.path / "out" / "panels" / "inflation__s3__s2.json";
    REQUIRE(fs::exists(victim));
    std::ofstream(victim, std::ios::binary) << "{broken";

    RunSummary s = cmd_run(config);
    CHECK(s.panels == 40);
    CHECK(s.failed == 1);
    REQUIRE(s.failure_messages.size() == 1);
    CHECK(s.failure_messages[0].find("inflation__s3__s2") != std::string::npos);

    const csv::Table metrics = csv::read_file((tmp.path / "out" / "metrics.csv").string());
    CHECK(metrics.rows.size() == 39 * 4);

    // The report names the incomplete panel.
    const std::string report_path = cmd_report((tmp.path / "out").string());
    const std::string report = slurp(report_path);
    CHECK(report.find("## Incomplete panels") != std::string::npos);
    CHECK(report.find("inflation__s3__s2") != std::string::npos);
}

TEST_CASE("parallel run produces the same tables as sequential") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);
    cmd_run(config);
    const std::string seq_metrics = slurp(tmp.path / "out" / "metrics.csv");
    const std::string seq_beats = slurp(tmp.path / "out" / "beats.csv");

    apply_override(config, "jobs", "4");
    cmd_run(config);
    CHECK(slurp(tmp.path / "out" / "metrics.csv") == seq_metrics);
    CHECK(slurp(tmp.path / "out" / "beats.csv") == seq_beats);
}

TEST_CASE("the report renders every section") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);
    cmd_run(config);
    const std::string path = cmd_report((tmp.path / "out").string());
    const std::string report = slurp(path);
    CHECK(report.find("# Forecast combination run report") != std::string::npos);
    CHECK(report.find("Panels evaluated: 40 of 40") != std::string::npos);
    CHECK(report.find("## Method wins") != std::string::npos);
    CHECK(report.find("## RMSE by variable and sample") != std::string::npos);
    CHECK(report.find("## MdAPE by variable and sample") != std::string::npos);
    CHECK(report.find("## Squared-error decomposition cases") != std::string::npos);
    CHECK(report.find("## Forecast dispersion") != std::string::npos);
    CHECK(report.find("SIMPLEX") != std::string::npos);
    CHECK(report.find("## Incomplete panels") == std::string::npos);
}

TEST_CASE("stored panels feed the standalone structure tools") {
    TempDir tmp;
    RunConfig config = fixture_config(tmp);
    cmd_ingest(config);
    const std::string panel =
        (tmp.path / "out" / "panels" / "gdp_growth__s5__s1.json").string();
    REQUIRE(fs::exists(panel));

    const std::string bp =
        panel_biplot(panel, (tmp.path / "plots" / "b.csv").string(), false, 1e-8);
    CHECK(fs::exists(bp));
    CHECK(fs::exists(tmp.path / "plots" / "b.json"));
    json bj = json::parse(slurp(tmp.path / "plots" / "b.json"));
    CHECK(bj.at("variance_explained").get<double>() > 0.0);
    CHECK(bj.at("variance_explained").get<double>() <= 1.0 + 1e-12);
    CHECK(bj.at("scores").size() == 5);
    CHECK(bj.at("loadings").size() == 7);

    const std::string cl = panel_cluster(panel, (tmp.path / "plots" / "d.json").string(),
                                         Linkage::ward, 2, 1e-8);
    CHECK(fs::exists(cl));
    CHECK(fs::exists(tmp.path / "plots" / "d_merges.csv"));
    CHECK(fs::exists(tmp.path / "plots" / "d_leaves.csv"));
    json dj = json::parse(slurp(cl));
    CHECK(dj.at("merges").size() == 6);
    CHECK(dj.at("leaf_labels").size() == 7);
    CHECK(dj.at("k") == 2);
    CHECK(dj.at("assignment").size() == 7);
    CHECK(dj.at("weights").size() == 7);
    double total = 0.0;
    for (const json& w : dj.at("weights")) total += w.get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // Leaf order is a permutation of the leaves.
    std::vector<int> order = dj.at("leaf_order").get<std::vector<int>>();
    std::sort(order.begin(), order.end());
    for (int i = 0; i < 7; ++i) CHECK(order[static_cast<size_t>(i)] == i);

    const std::string flat = panel_cluster(panel, (tmp.path / "plots" / "d0.json").string(),
                                           Linkage::complete, 0, 1e-8);
    json d0 = json::parse(slurp(flat));
    CHECK(!d0.contains("assignment"));
    CHECK(d0.at("linkage") == "complete");
}

TEST_SUITE_END();
