#include "simplex_combine.h"

#include <cstdio>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "scomb/coda.hpp"
#include "scomb/combine.hpp"
#include "scomb/errors.hpp"
#include "scomb/eval.hpp"
#include "scomb/run.hpp"
#include "scomb/select.hpp"

using namespace scomb;

namespace {

thread_local std::string last_error_message = "no error";

sc_status map_errc(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return SC_INVALID_ARGUMENT;
        case Errc::dimension_mismatch: return SC_DIMENSION_MISMATCH;
        case Errc::non_positive_entry: return SC_NON_POSITIVE_ENTRY;
        case Errc::not_zero_sum: return SC_NOT_ZERO_SUM;
        case Errc::insufficient_rows: return SC_INSUFFICIENT_ROWS;
        case Errc::zero_variation: return SC_ZERO_VARIATION;
        case Errc::invalid_k: return SC_INVALID_K;
        case Errc::zero_msfe: return SC_ZERO_MSFE;
        case Errc::zero_mean: return SC_ZERO_MEAN;
        case Errc::io_error: return SC_IO_ERROR;
        case Errc::schema_error: return SC_SCHEMA_ERROR;
        case Errc::parse_error: return SC_PARSE_ERROR;
        case Errc::empty_panel: return SC_EMPTY_PANEL;
        case Errc::missing_run: return SC_MISSING_RUN;
        case Errc::config_error: return SC_CONFIG_ERROR;
    }
    return SC_INTERNAL_ERROR;
}

template <typename F>
sc_status guarded(F&& body) {
    try {
        body();
        return SC_OK;
    } catch (const Error& e) {
        last_error_message = e.what();
        return map_errc(e.code());
    } catch (const std::exception& e) {
        last_error_message = e.what();
        return SC_INTERNAL_ERROR;
    } catch (...) {
        last_error_message = "unknown failure";
        return SC_INTERNAL_ERROR;
    }
}

sc_status fail_null(const char* what) {
    last_error_message = std::string(what) + " must not be null";
    return SC_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

CompositionMatrix matrix_from_rows(const double* rows, size_t t, size_t j) {
    if (t == 0 || j == 0) fail(Errc::invalid_argument, "matrix must be non-empty");
    std::vector<Composition> comps;
    comps.reserve(t);
    for (size_t r = 0; r < t; ++r) {
        comps.push_back(closure(std::span<const double>(rows + r * j, j)));
    }
    return CompositionMatrix(std::move(comps));
}

}  // namespace

extern "C" {

const char* sc_status_name(sc_status status) {
    switch (status) {
        case SC_OK: return "ok";
        case SC_INTERNAL_ERROR: return "internal_error";
        default: break;
    }
    // Remaining codes mirror the library error enum one-to-one.
    return errc_name(static_cast<Errc>(static_cast<int>(status) - 1));
}

const char* sc_last_error(void) { return last_error_message.c_str(); }

const char* sc_version(void) { return "1.0.0"; }

void sc_string_free(char* s) { delete[] s; }

sc_status sc_closure(const double* in, size_t n, double* out) {
    if (!in) return fail_null("in");
    if (!out) return fail_null("out");
    return guarded([&] {
        Composition c = closure(std::span<const double>(in, n));
        for (size_t i = 0; i < n; ++i) out[i] = c[i];
    });
}

sc_status sc_clr(const double* in, size_t n, double* out) {
    if (!in) return fail_null("in");
    if (!out) return fail_null("out");
    return guarded([&] {
        ClrVector v = clr(closure(std::span<const double>(in, n)));
        for (size_t i = 0; i < n; ++i) out[i] = v.coords[i];
    });
}

sc_status sc_clr_inv(const double* in, size_t n, double* out) {
    if (!in) return fail_null("in");
    if (!out) return fail_null("out");
    return guarded([&] {
        Composition c = clr_inv(ClrVector{std::vector<double>(in, in + n)});
        for (size_t i = 0; i < n; ++i) out[i] = c[i];
    });
}

sc_status sc_center(const double* rows, size_t t, size_t j, double* out) {
    if (!rows) return fail_null("rows");
    if (!out) return fail_null("out");
    return guarded([&] {
        Composition g = center(matrix_from_rows(rows, t, j));
        for (size_t i = 0; i < j; ++i) out[i] = g[i];
    });
}

sc_status sc_variation(const double* rows, size_t t, size_t j, double* out_matrix,
                       double* out_total) {
    if (!rows) return fail_null("rows");
    return guarded([&] {
        VariationMatrix v = variation_matrix(matrix_from_rows(rows, t, j));
        if (out_matrix) {
            for (size_t a = 0; a < j; ++a) {
                for (size_t b = 0; b < j; ++b) out_matrix[a * j + b] = v(a, b);
            }
        }
        if (out_total) *out_total = v.total;
    });
}

sc_status sc_center_and_scale(const double* rows, size_t t, size_t j, double* out_rows) {
    if (!rows) return fail_null("rows");
    if (!out_rows) return fail_null("out_rows");
    return guarded([&] {
        CompositionMatrix m = center_and_scale(matrix_from_rows(rows, t, j));
        for (size_t r = 0; r < t; ++r) {
            for (size_t c = 0; c < j; ++c) out_rows[r * j + c] = m.row(r)[c];
        }
    });
}

sc_status sc_cas_threshold(const double* g, size_t j, int* out_included,
                           double* out_weights, size_t* out_count) {
    if (!g) return fail_null("g");
    return guarded([&] {
        Selection sel = cas_select(closure(std::span<const double>(g, j)));
        if (out_included) {
            for (size_t i = 0; i < j; ++i) out_included[i] = 0;
            for (size_t idx : sel.included) out_included[idx] = 1;
        }
        if (out_weights) {
            for (size_t i = 0; i < j; ++i) out_weights[i] = 0.0;
            for (size_t i = 0; i < sel.included.size(); ++i) {
                out_weights[sel.included[i]] = sel.sub_weights[i];
            }
        }
        if (out_count) *out_count = sel.included.size();
    });
}

sc_status sc_cluster_weights(const double* rows, size_t t, size_t j, int ward, size_t k,
                             int* out_assignment, double* out_weights) {
    if (!rows) return fail_null("rows");
    return guarded([&] {
        CompositionMatrix w = matrix_from_rows(rows, t, j);
        Dendrogram d = cluster_forecasts(pairwise_distance(w),
                                         ward ? Linkage::ward : Linkage::complete);
        ClusterWeights cw = cluster_cas(w, d, k);
        if (out_assignment) {
            for (size_t i = 0; i < j; ++i) out_assignment[i] = cw.assignment[i];
        }
        if (out_weights) {
            for (size_t i = 0; i < j; ++i) out_weights[i] = cw.weights[i];
        }
    });
}

sc_status sc_biplot(const double* rows, size_t t, size_t j, int covariance,
                    double* out_scores, double* out_loadings, double* out_singular,
                    double* out_variance_explained) {
    if (!rows) return fail_null("rows");
    return guarded([&] {
        BiplotResult b = biplot(matrix_from_rows(rows, t, j),
                                covariance ? BiplotScaling::covariance : BiplotScaling::form);
        if (out_scores) {
            for (size_t r = 0; r < t; ++r) {
                out_scores[r * 2] = b.scores[r][0];
                out_scores[r * 2 + 1] = b.scores[r][1];
            }
        }
        if (out_loadings) {
            for (size_t c = 0; c < j; ++c) {
                out_loadings[c * 2] = b.loadings[c][0];
                out_loadings[c * 2 + 1] = b.loadings[c][1];
            }
        }
        if (out_singular) {
            out_singular[0] = b.singular_values[0];
            out_singular[1] = b.singular_values[1];
        }
        if (out_variance_explained) *out_variance_explained = b.variance_explained;
    });
}

sc_status sc_accuracy_metrics(const double* forecasts, const double* actuals, size_t n,
                              double* out_me, double* out_rmse, double* out_mape,
                              double* out_mdape, int* out_has_ape) {
    if (!forecasts) return fail_null("forecasts");
    if (!actuals) return fail_null("actuals");
    return guarded([&] {
        Metrics m = accuracy_metrics(std::vector<double>(forecasts, forecasts + n),
                                     std::vector<double>(actuals, actuals + n));
        if (out_me) *out_me = m.me;
        if (out_rmse) *out_rmse = m.rmse;
        if (m.mape && out_mape) *out_mape = *m.mape;
        if (m.mdape && out_mdape) *out_mdape = *m.mdape;
        if (out_has_ape) *out_has_ape = m.mape.has_value() ? 1 : 0;
    });
}

sc_status sc_msfe_decomposition(const double* forecasts, const double* actuals, size_t n,
                                double* out) {
    if (!forecasts) return fail_null("forecasts");
    if (!actuals) return fail_null("actuals");
    if (!out) return fail_null("out");
    return guarded([&] {
        MsfeDecomposition d =
            msfe_decomposition(std::vector<double>(forecasts, forecasts + n),
                               std::vector<double>(actuals, actuals + n));
        out[0] = d.msfe;
        out[1] = d.bias_prop;
        out[2] = d.var_prop;
        out[3] = d.cov_prop;
    });
}

sc_status sc_classify_case(double bias_prop, double var_prop, double bias_cut,
                           double var_cut, int* out_case) {
    if (!out_case) return fail_null("out_case");
    return guarded([&] {
        MsfeDecomposition d;
        d.bias_prop = bias_prop;
        d.var_prop = var_prop;
        d.cov_prop = 1.0 - bias_prop - var_prop;
        *out_case = classify_case(d, bias_cut, var_cut);
    });
}

sc_status sc_coefficient_of_variation(const double* values, size_t n, double* out) {
    if (!values) return fail_null("values");
    if (!out) return fail_null("out");
    return guarded(
        [&] { *out = coefficient_of_variation(std::vector<double>(values, values + n)); });
}

struct sc_config {
    RunConfig config;
};

sc_status sc_config_load(const char* path, sc_config** out) {
    if (!path) return fail_null("path");
    if (!out) return fail_null("out");
    return guarded([&] { *out = new sc_config{load_config(path)}; });
}

sc_status sc_config_parse(const char* json_text, const char* base_dir, sc_config** out) {
    if (!json_text) return fail_null("json_text");
    if (!out) return fail_null("out");
    return guarded(
        [&] { *out = new sc_config{parse_config(json_text, base_dir ? base_dir : "")}; });
}

sc_status sc_config_override(sc_config* config, const char* key, const char* value) {
    if (!config) return fail_null("config");
    if (!key) return fail_null("key");
    if (!value) return fail_null("value");
    return guarded([&] { apply_override(config->config, key, value); });
}

sc_status sc_config_get(const sc_config* config, const char* key, char** out_value) {
    if (!config) return fail_null("config");
    if (!key) return fail_null("key");
    if (!out_value) return fail_null("out_value");
    return guarded([&] {
        const RunConfig& c = config->config;
        const std::string k(key);
        std::string value;
        if (k == "out_dir") {
            value = c.out_dir;
        } else if (k == "epsilon") {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.15g", c.epsilon);
            value = buf;
        } else if (k == "jobs") {
            value = std::to_string(c.jobs);
        } else if (k == "train_end_year") {
            value = std::to_string(c.train_end_year);
        } else if (k == "cas.k") {
            value = std::to_string(c.cas.k);
        } else if (k == "cas.mode") {
            switch (c.cas.mode) {
                case CasMode::threshold: value = "threshold"; break;
                case CasMode::cluster: value = "cluster"; break;
                case CasMode::biplot: value = "biplot"; break;
            }
        } else if (k == "cas.linkage") {
            value = c.cas.linkage == Linkage::ward ? "ward" : "complete";
        } else if (k == "methods") {
            for (size_t i = 0; i < c.methods.size(); ++i) {
                if (i) value += ",";
                value += method_name(c.methods[i]);
            }
        } else {
            fail(Errc::config_error, "unknown config key '" + k + "'");
        }
        *out_value = dup_string(value);
    });
}

void sc_config_free(sc_config* config) { delete config; }

sc_status sc_ingest(const sc_config* config, size_t* out_records,
                    size_t* out_panels_written) {
    if (!config) return fail_null("config");
    return guarded([&] {
        IngestSummary s = cmd_ingest(config->config);
        if (out_records) *out_records = s.records_after_fill;
        if (out_panels_written) *out_panels_written = s.panels_written;
    });
}

sc_status sc_run(const sc_config* config, size_t* out_panels, size_t* out_failed) {
    if (!config) return fail_null("config");
    return guarded([&] {
        RunSummary s = cmd_run(config->config);
        if (out_panels) *out_panels = s.panels;
        if (out_failed) *out_failed = s.failed;
    });
}

sc_status sc_report(const char* run_dir, char** out_report_path) {
    if (!run_dir) return fail_null("run_dir");
    return guarded([&] {
        std::string path = cmd_report(run_dir);
        if (out_report_path) *out_report_path = dup_string(path);
    });
}

sc_status sc_panel_biplot(const char* panel_json_path, const char* out_path,
                          int covariance_scaling, double epsilon, char** out_path_written) {
    if (!panel_json_path) return fail_null("panel_json_path");
    if (!out_path) return fail_null("out_path");
    return guarded([&] {
        std::string path =
            panel_biplot(panel_json_path, out_path, covariance_scaling != 0, epsilon);
        if (out_path_written) *out_path_written = dup_string(path);
    });
}

sc_status sc_panel_cluster(const char* panel_json_path, const char* out_path,
                           const char* linkage, size_t k, double epsilon,
                           char** out_path_written) {
    if (!panel_json_path) return fail_null("panel_json_path");
    if (!out_path) return fail_null("out_path");
    if (!linkage) return fail_null("linkage");
    return guarded([&] {
        Linkage l;
        if (std::string(linkage) == "ward") {
            l = Linkage::ward;
        } else if (std::string(linkage) == "complete") {
            l = Linkage::complete;
        } else {
            fail(Errc::invalid_argument,
                 "linkage must be ward or complete, got '" + std::string(linkage) + "'");
        }
        std::string path = panel_cluster(panel_json_path, out_path, l, k, epsilon);
        if (out_path_written) *out_path_written = dup_string(path);
    });
}

}  // extern "C"
