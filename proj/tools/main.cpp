// Command-line front end over the C API: ingest, run, report, biplot,
// cluster. Exit codes: 0 success, 1 partial or runtime failure,
// 2 usage or configuration error.
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simplex_combine.h"

namespace {

int rc_of(sc_status status) {
    if (status == SC_OK) return 0;
    if (status == SC_CONFIG_ERROR || status == SC_INVALID_ARGUMENT) return 2;
    return 1;
}

int fail(sc_status status) {
    std::fprintf(stderr, "error: %s\n", sc_last_error());
    return rc_of(status);
}

// One settable override: config key plus the CLI option that feeds it.
struct Override {
    const char* key = nullptr;
    CLI::Option* option = nullptr;
    std::string value;
};

// Per-subcommand storage for --config plus the shared override flags.
struct CommonOpts {
    std::string config_path;
    std::vector<Override> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    opts.overrides.reserve(7);  // bound references must never reallocate
    const auto add = [&](const char* key, const char* flag, const char* help) {
        opts.overrides.push_back({key, nullptr, {}});
        Override& o = opts.overrides.back();
        o.option = cmd->add_option(flag, o.value, help);
        return o.option;
    };
    add("out_dir", "--out", "Output directory");
    add("jobs", "--jobs", "Parallel panel evaluations");
    add("methods", "--methods", "Comma-separated method list");
    add("cas.mode", "--cas-mode", "Selection mode")
        ->check(CLI::IsMember({"threshold", "cluster", "biplot"}));
    add("cas.linkage", "--linkage", "Cluster linkage")
        ->check(CLI::IsMember({"ward", "complete"}));
    add("cas.k", "--k", "Cluster count");
    add("epsilon", "--epsilon", "Accuracy floor for zero errors");
}

// Load the config, apply the supplied overrides, run `body`, clean up.
int with_config(const CommonOpts& opts, const std::function<int(sc_config*)>& body) {
    sc_config* config = nullptr;
    const sc_status loaded = sc_config_load(opts.config_path.c_str(), &config);
    if (loaded != SC_OK) return fail(loaded);
    for (const Override& o : opts.overrides) {
        if (o.option->count() == 0) continue;
        const sc_status set = sc_config_override(config, o.key, o.value.c_str());
        if (set != SC_OK) {
            sc_config_free(config);
            return fail(set);
        }
    }
    const int rc = body(config);
    sc_config_free(config);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecast combination in the simplex: compositional weights, "
                 "selection, and rolling evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sc_version());

    CLI::App* ingest = app.add_subcommand("ingest", "Load the survey and write panel files");
    CommonOpts ingest_opts;
    add_common(ingest, ingest_opts);

    CLI::App* run = app.add_subcommand("run", "Evaluate every ingested panel");
    CommonOpts run_opts;
    add_common(run, run_opts);

    CLI::App* report = app.add_subcommand("report", "Render a markdown summary of a run");
    std::string report_dir;
    report->add_option("run_dir", report_dir, "Run output directory")->required();

    CLI::App* biplot =
        app.add_subcommand("biplot", "Factorize one panel's weight matrix for plotting");
    std::string biplot_panel, biplot_out;
    bool covariance = false;
    double biplot_epsilon = 1e-8;
    biplot->add_option("panel", biplot_panel, "Panel JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    biplot->add_option("--out", biplot_out, "Output CSV path")->required();
    biplot->add_flag("--covariance", covariance,
                     "Put the singular values on the loadings instead of the scores");
    biplot->add_option("--epsilon", biplot_epsilon, "Accuracy floor for zero errors");

    CLI::App* cluster =
        app.add_subcommand("cluster", "Cluster one panel's forecasters for plotting");
    std::string cluster_panel, cluster_out, cluster_linkage = "ward";
    std::size_t cluster_k = 0;
    double cluster_epsilon = 1e-8;
    cluster->add_option("panel", cluster_panel, "Panel JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cluster->add_option("--out", cluster_out, "Output JSON path")->required();
    cluster->add_option("--linkage", cluster_linkage, "Cluster linkage")
        ->check(CLI::IsMember({"ward", "complete"}));
    cluster->add_option("--k", cluster_k, "Cluster count; 0 writes the dendrogram only");
    cluster->add_option("--epsilon", cluster_epsilon, "Accuracy floor for zero errors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (ingest->parsed()) {
        return with_config(ingest_opts, [](sc_config* config) {
            size_t records = 0, panels = 0;
            const sc_status status = sc_ingest(config, &records, &panels);
            if (status != SC_OK) return fail(status);
            std::printf("ingested %zu records into %zu panels\n", records, panels);
            return 0;
        });
    }

    if (run->parsed()) {
        return with_config(run_opts, [](sc_config* config) {
            size_t panels = 0, failed = 0;
            const sc_status status = sc_run(config, &panels, &failed);
            if (status != SC_OK) return fail(status);
            std::printf("evaluated %zu panels (%zu failed)\n", panels, failed);
            return failed > 0 ? 1 : 0;
        });
    }

    if (report->parsed()) {
        char* path = nullptr;
        const sc_status status = sc_report(report_dir.c_str(), &path);
        if (status != SC_OK) return fail(status);
        std::printf("%s\n", path);
        sc_string_free(path);
        return 0;
    }

    if (biplot->parsed()) {
        char* path = nullptr;
        const sc_status status = sc_panel_biplot(biplot_panel.c_str(), biplot_out.c_str(),
                                                 covariance ? 1 : 0, biplot_epsilon, &path);
        if (status != SC_OK) return fail(status);
        std::printf("%s\n", path);
        sc_string_free(path);
        return 0;
    }

    if (cluster->parsed()) {
        char* path = nullptr;
        const sc_status status =
            sc_panel_cluster(cluster_panel.c_str(), cluster_out.c_str(),
                             cluster_linkage.c_str(), cluster_k, cluster_epsilon, &path);
        if (status != SC_OK) return fail(status);
        std::printf("%s\n", path);
        sc_string_free(path);
        return 0;
    }

    return 2;
}
