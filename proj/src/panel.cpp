#include "scomb/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "json.hpp"
#include "scomb/csv.hpp"
#include "scomb/errors.hpp"

namespace scomb {

namespace {

bool is_missing_cell(const std::string& s) { return s.empty() || s == "NA"; }

int parse_int(const std::string& s, const char* what, size_t row) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(Errc::parse_error,
             "row " + std::to_string(row) + ": bad " + std::string(what) + " '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const char* what, size_t row) {
    try {
        size_t consumed = 0;
        double v = std::stod(s, &consumed);
        if (consumed == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(Errc::parse_error,
         "row " + std::to_string(row) + ": bad " + std::string(what) + " '" + s + "'");
}

int require_column(const csv::Table& t, const std::string& name, const char* what) {
    if (name.empty()) fail(Errc::schema_error, std::string("schema leaves ") + what + " unmapped");
    int idx = t.column(name);
    if (idx < 0) fail(Errc::schema_error, std::string(what) + " column '" + name + "' not found");
    return idx;
}

std::string period_str(const Period& p) {
    return std::to_string(p.year) + "." + std::to_string(p.season);
}

// Canonical record order; makes fill/exclude output reproducible.
bool record_less(const SurveyRecord& a, const SurveyRecord& b) {
    return std::tie(a.variable, a.forecaster_id, a.period, a.horizon) <
           std::tie(b.variable, b.forecaster_id, b.period, b.horizon);
}

}  // namespace

void ForecastPanel::validate() const {
    if (times.empty()) fail(Errc::empty_panel, "panel has no rows");
    if (forecaster_ids.size() < 2) {
        fail(Errc::invalid_argument, "panel needs at least 2 forecasters, has " +
                                         std::to_string(forecaster_ids.size()));
    }
    for (size_t t = 1; t < times.size(); ++t) {
        if (times[t] <= times[t - 1]) {
            fail(Errc::invalid_argument, "panel times not strictly increasing");
        }
    }
    if (forecasts.size() != times.size() || actuals.size() != times.size()) {
        fail(Errc::dimension_mismatch, "panel rows disagree with times length");
    }
    for (const auto& row : forecasts) {
        if (row.size() != forecaster_ids.size()) {
            fail(Errc::dimension_mismatch, "panel row width disagrees with forecaster count");
        }
        for (double v : row) {
            if (!std::isfinite(v)) fail(Errc::invalid_argument, "panel forecast not finite");
        }
    }
    for (double v : actuals) {
        if (!std::isfinite(v)) fail(Errc::invalid_argument, "panel actual not finite");
    }
}

ForecastPanel ForecastPanel::head(size_t t) const {
    if (t == 0 || t > times.size()) {
        fail(Errc::invalid_argument, "head(" + std::to_string(t) + ") outside 1.." +
                                         std::to_string(times.size()));
    }
    ForecastPanel p;
    p.variable = variable;
    p.season = season;
    p.forecaster_ids = forecaster_ids;
    p.times.assign(times.begin(), times.begin() + t);
    p.forecasts.assign(forecasts.begin(), forecasts.begin() + t);
    p.actuals.assign(actuals.begin(), actuals.begin() + t);
    return p;
}

std::vector<SurveyRecord> load_survey(const std::string& path, const CsvSchema& schema) {
    csv::Table t = csv::read_file(path);
    int c_var = require_column(t, schema.variable, "variable");
    int c_fc = require_column(t, schema.forecaster, "forecaster");
    int c_year = require_column(t, schema.year, "year");
    int c_season = require_column(t, schema.season, "season");
    int c_horizon = require_column(t, schema.horizon, "horizon");
    int c_value = require_column(t, schema.value, "value");
    int c_actual = -1;
    if (!schema.actual.empty()) {
        c_actual = t.column(schema.actual);
        if (c_actual < 0) {
            fail(Errc::schema_error, "actual column '" + schema.actual + "' not found");
        }
    }

    std::vector<SurveyRecord> records;
    records.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        size_t line = i + 2;  // header is line 1
        SurveyRecord r;
        r.variable = row[c_var];
        r.forecaster_id = row[c_fc];
        if (r.variable.empty()) fail(Errc::parse_error, "row " + std::to_string(line) + ": empty variable");
        if (r.forecaster_id.empty()) {
            fail(Errc::parse_error, "row " + std::to_string(line) + ": empty forecaster id");
        }
        r.period.year = parse_int(row[c_year], "year", line);
        r.period.season = parse_int(row[c_season], "season", line);
        if (r.period.season < 1 || r.period.season > 12) {
            fail(Errc::parse_error,
                 "row " + std::to_string(line) + ": season index " +
                     std::to_string(r.period.season) + " outside 1..12");
        }
        r.horizon = parse_int(row[c_horizon], "horizon", line);
        if (r.horizon < 1) {
            fail(Errc::parse_error, "row " + std::to_string(line) + ": horizon must be >= 1");
        }
        if (!is_missing_cell(row[c_value])) {
            r.value = parse_double(row[c_value], "value", line);
        }
        if (c_actual >= 0 && !is_missing_cell(row[c_actual])) {
            r.actual = parse_double(row[c_actual], "actual", line);
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ActualRecord> load_actuals(const std::string& path, const ActualsSchema& schema) {
    csv::Table t = csv::read_file(path);
    int c_var = require_column(t, schema.variable, "variable");
    int c_year = require_column(t, schema.year, "year");
    int c_season = require_column(t, schema.season, "season");
    int c_value = require_column(t, schema.value, "value");
    std::vector<ActualRecord> out;
    out.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        size_t line = i + 2;
        ActualRecord a;
        a.variable = row[c_var];
        a.period.year = parse_int(row[c_year], "year", line);
        a.period.season = parse_int(row[c_season], "season", line);
        a.value = parse_double(row[c_value], "actual", line);
        out.push_back(std::move(a));
    }
    return out;
}

void merge_actuals(std::vector<SurveyRecord>& records, const std::vector<ActualRecord>& actuals) {
    std::map<std::pair<std::string, Period>, double> by_key;
    for (const auto& a : actuals) by_key[{a.variable, a.period}] = a.value;
    for (auto& r : records) {
        auto it = by_key.find({r.variable, r.period});
        if (it != by_key.end()) r.actual = it->second;
    }
}

namespace {

// Season grid of one variable: the sorted season indices it uses.
// Stepping through (year, season) cells on this grid defines what
// "consecutive" means for the exclusion rule.
struct SeasonGrid {
    std::vector<int> seasons;

    Period next(Period p) const {
        auto it = std::upper_bound(seasons.begin(), seasons.end(), p.season);
        if (it == seasons.end()) return {p.year + 1, seasons.front()};
        return {p.year, *it};
    }
};

}  // namespace

std::vector<SurveyRecord> apply_fill_policy(std::vector<SurveyRecord> records,
                                            const FillPolicy& policy) {
    if (policy.max_consecutive_missing < 0) {
        fail(Errc::invalid_argument, "max_consecutive_missing must be >= 0");
    }
    std::sort(records.begin(), records.end(), record_less);

    std::map<std::string, std::set<int>> season_sets;
    for (const auto& r : records) season_sets[r.variable].insert(r.period.season);

    // (variable, forecaster) -> period -> record indices per horizon.
    struct Slot {
        int h1 = -1;
        int h2 = -1;
    };
    std::map<std::pair<std::string, std::string>, std::map<Period, Slot>> groups;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto& slot = groups[{r.variable, r.forecaster_id}][r.period];
        if (r.horizon == 1 && slot.h1 < 0) slot.h1 = static_cast<int>(i);
        if (r.horizon == 2 && slot.h2 < 0) slot.h2 = static_cast<int>(i);
    }

    std::vector<SurveyRecord> synthesized;
    std::set<std::pair<std::string, std::string>> excluded;

    for (auto& [key, periods] : groups) {
        std::set<Period> present;
        if (policy.use_two_step_fill) {
            for (auto& [period, slot] : periods) {
                if (slot.h2 < 0 || !records[slot.h2].value) continue;
                if (slot.h1 < 0) {
                    SurveyRecord filled = records[slot.h2];
                    filled.horizon = 1;
                    synthesized.push_back(std::move(filled));
                    present.insert(period);
                } else if (!records[slot.h1].value) {
                    records[slot.h1].value = records[slot.h2].value;
                    if (!records[slot.h1].actual) {
                        records[slot.h1].actual = records[slot.h2].actual;
                    }
                }
            }
        }

        // Longest run of missing one-step values strictly between the
        // forecaster's first and last observed ones. Absence before entry
        // or after exit is not a gap.
        for (const auto& [period, slot] : periods) {
            if (slot.h1 >= 0 && records[slot.h1].value) present.insert(period);
        }
        if (present.empty()) continue;

        SeasonGrid grid{{season_sets[key.first].begin(), season_sets[key.first].end()}};
        Period cur = *present.begin();
        Period last = *present.rbegin();
        int run = 0;
        int longest = 0;
        while (cur < last) {
            cur = grid.next(cur);
            if (present.count(cur)) {
                run = 0;
            } else {
                ++run;
                longest = std::max(longest, run);
            }
        }
        if (longest > policy.max_consecutive_missing) excluded.insert(key);
    }

    std::vector<SurveyRecord> out;
    out.reserve(records.size() + synthesized.size());
    for (auto& r : records) {
        if (!excluded.count({r.variable, r.forecaster_id})) out.push_back(std::move(r));
    }
    for (auto& r : synthesized) {
        if (!excluded.count({r.variable, r.forecaster_id})) out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), record_less);
    return out;
}

std::vector<ForecastPanel> split_panels(const std::vector<SurveyRecord>& records,
                                        const std::string& variable, int first_year,
                                        int last_year) {
    if (first_year > last_year) {
        fail(Errc::invalid_argument, "window start year exceeds end year");
    }

    std::set<int> seasons;
    std::map<Period, double> actual_by_period;
    // forecaster -> period -> one-step value
    std::map<std::string, std::map<Period, double>> values;
    for (const auto& r : records) {
        if (r.variable != variable) continue;
        seasons.insert(r.period.season);
        if (r.actual && !actual_by_period.count(r.period)) {
            actual_by_period[r.period] = *r.actual;
        }
        if (r.horizon == 1 && r.value) {
            values[r.forecaster_id].emplace(r.period, *r.value);
        }
    }
    if (seasons.empty()) fail(Errc::empty_panel, "no records for variable '" + variable + "'");

    std::vector<ForecastPanel> panels;
    for (int season : seasons) {
        ForecastPanel p;
        p.variable = variable;
        p.season = season;
        for (int year = first_year; year <= last_year; ++year) p.times.push_back(year);

        for (const auto& [id, by_period] : values) {
            bool complete = true;
            for (int year : p.times) {
                if (!by_period.count({year, season})) {
                    complete = false;
                    break;
                }
            }
            if (complete) p.forecaster_ids.push_back(id);
        }
        if (p.forecaster_ids.size() < 2) {
            fail(Errc::empty_panel, variable + " season " + std::to_string(season) + ": only " +
                                        std::to_string(p.forecaster_ids.size()) +
                                        " complete forecasters over " +
                                        std::to_string(first_year) + "-" +
                                        std::to_string(last_year));
        }

        for (int year : p.times) {
            Period period{year, season};
            auto it = actual_by_period.find(period);
            if (it == actual_by_period.end()) {
                fail(Errc::empty_panel,
                     variable + ": no realized value for " + period_str(period));
            }
            p.actuals.push_back(it->second);
            std::vector<double> row;
            row.reserve(p.forecaster_ids.size());
            for (const auto& id : p.forecaster_ids) row.push_back(values[id].at(period));
            p.forecasts.push_back(std::move(row));
        }
        p.validate();
        panels.push_back(std::move(p));
    }
    return panels;
}

std::string panel_to_json(const ForecastPanel& panel) {
    nlohmann::ordered_json j;
    j["variable"] = panel.variable;
    j["season"] = panel.season;
    j["times"] = panel.times;
    j["forecaster_ids"] = panel.forecaster_ids;
    j["forecasts"] = panel.forecasts;
    j["actuals"] = panel.actuals;
    return j.dump(2) + "\n";
}

ForecastPanel panel_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::parse_error, std::string("bad panel json: ") + e.what());
    }
    ForecastPanel p;
    try {
        j.at("variable").get_to(p.variable);
        j.at("season").get_to(p.season);
        j.at("times").get_to(p.times);
        j.at("forecaster_ids").get_to(p.forecaster_ids);
        j.at("forecasts").get_to(p.forecasts);
        j.at("actuals").get_to(p.actuals);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::schema_error, std::string("panel json missing field: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace scomb
