#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scomb {

/// Target period of a forecast: calendar year plus season index
/// (quarter 1..4, month 1..12, or 1 for annual data).
struct Period {
    int year = 0;
    int season = 0;

    friend bool operator==(const Period&, const Period&) = default;
    friend auto operator<=>(const Period&, const Period&) = default;
};

/// One survey row: forecaster `forecaster_id` predicted `value` for
/// `variable` at target period `period`, `horizon` steps ahead.
/// `value` and `actual` are empty when the source cell was missing.
struct SurveyRecord {
    std::string variable;
    std::string forecaster_id;
    Period period;
    int horizon = 1;
    std::optional<double> value;
    std::optional<double> actual;
};

/// Missing-data policy: fill a missing one-step forecast with the same
/// forecaster's two-step forecast for the same target period, then drop
/// forecasters whose longest interior run of still-missing one-step
/// values exceeds `max_consecutive_missing`.
struct FillPolicy {
    bool use_two_step_fill = true;
    int max_consecutive_missing = 4;
};

/// Column mapping from a survey CSV's header names to record fields.
/// `actual` may be empty when realized values come from a side file.
struct CsvSchema {
    std::string variable;
    std::string forecaster;
    std::string year;
    std::string season;
    std::string horizon;
    std::string value;
    std::string actual;
};

/// Balanced one-step-ahead forecast panel for a single variable and
/// season: `forecasts` is T×J with rows aligned to `times` (years,
/// strictly increasing) and columns to `forecaster_ids`; `actuals`
/// holds the realized value per row.
struct ForecastPanel {
    std::string variable;
    int season = 0;
    std::vector<int> times;
    std::vector<std::string> forecaster_ids;
    std::vector<std::vector<double>> forecasts;
    std::vector<double> actuals;

    size_t rows() const { return times.size(); }
    size_t cols() const { return forecaster_ids.size(); }

    /// Throws unless the panel is balanced, times strictly increase,
    /// J >= 2, and T >= 1.
    void validate() const;

    /// Sub-panel holding the first t rows.
    ForecastPanel head(size_t t) const;
};

/// Parse a survey CSV into records using the schema's column names.
/// Empty and "NA" numeric cells become missing values; any other
/// unparseable cell raises a parse error naming the row.
std::vector<SurveyRecord> load_survey(const std::string& path, const CsvSchema& schema);

/// Realized value for one (variable, period) cell, from a side file.
struct ActualRecord {
    std::string variable;
    Period period;
    double value = 0.0;
};

/// Schema for a side file of realized values.
struct ActualsSchema {
    std::string variable;
    std::string year;
    std::string season;
    std::string value;
};

std::vector<ActualRecord> load_actuals(const std::string& path, const ActualsSchema& schema);

/// Attach side-file actuals to every record matching (variable, period).
void merge_actuals(std::vector<SurveyRecord>& records, const std::vector<ActualRecord>& actuals);

/// Apply the fill-then-exclude policy per (variable, forecaster).
/// Idempotent; never raises.
std::vector<SurveyRecord> apply_fill_policy(std::vector<SurveyRecord> records,
                                            const FillPolicy& policy);

/// Build one balanced panel per season for `variable` over the year
/// window [first, last], keeping only forecasters with a one-step value
/// for every year of that season. Raises EmptyPanel when fewer than two
/// forecasters are complete or a realized value is missing.
std::vector<ForecastPanel> split_panels(const std::vector<SurveyRecord>& records,
                                        const std::string& variable, int first_year,
                                        int last_year);

std::string panel_to_json(const ForecastPanel& panel);
ForecastPanel panel_from_json(const std::string& text);

}  // namespace scomb
