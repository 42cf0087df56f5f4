#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sure_omt/cli.hpp"

namespace {

using namespace sure_omt;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    return in;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online multiple testing with super-uniformity rewards"};
    app.require_subcommand(1);

    std::string config_path, input, trace_out, report_out, json_out, trace_in, transform = "loglog", plot_out;
    std::vector<std::string> overrides;
    long trial = 0;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, std::string("JSON config (default: $") + kConfigEnvVar + ")");
        sub->add_option("--set", overrides, "Override a config key, e.g. --set simulate.pi_a=0.5");
    };

    auto* analyze = app.add_subcommand("analyze", "Run a procedure over a CSV of 2x2 tables");
    add_config(analyze);
    analyze->add_option("--input", input, "CSV with columns a,b,c,d (and optionally id)")->required();
    analyze->add_option("--out-trace", trace_out, "Per-step trace CSV")->required();

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo evaluation of the configured procedures");
    add_config(simulate);
    simulate->add_option("--out", report_out, "Report CSV")->required();
    simulate->add_option("--json", json_out, "Also write the report as JSON");

    auto* plotdata = app.add_subcommand("plotdata", "Long-format plot data from a trace");
    plotdata->add_option("--trace", trace_in, "Trace CSV written by analyze")->required();
    plotdata->add_option("--transform", transform, "raw or loglog")->check(CLI::IsMember({"raw", "loglog"}));
    plotdata->add_option("--out", plot_out, "Plot CSV")->required();

    auto* stream = app.add_subcommand("stream", "Dump one simulated stream as t,a,b,c,d,label");
    add_config(stream);
    stream->add_option("--trial", trial, "Trial index");
    stream->add_option("--out", report_out, "Stream CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    const std::optional<std::string> cfg_path = config_path.empty() ? std::nullopt : std::optional(config_path);
    try {
        if (analyze->parsed()) {
            const auto cfg = parse_analysis_config(load_config(cfg_path, overrides));
            auto in = open_in(input);
            auto trace = open_out(trace_out);
            const auto summary = analyze_tables(cfg, in, trace);
            std::cout << summary_json(summary).dump(2) << '\n';
            return summary.audit.passed ? kExitOk : kExitAudit;
        }
        if (simulate->parsed()) {
            const auto cfg = parse_simulate_config(load_config(cfg_path, overrides));
            const auto result = simulate_reports(cfg);
            auto out = open_out(report_out);
            write_report_csv(out, result.reports);
            if (!json_out.empty()) {
                auto js = open_out(json_out);
                js << report_json(result.reports).dump(2) << '\n';
            }
            const int code = simulate_exit_code(result);
            if (code != kExitOk) {
                std::cerr << "budget audit or containment check failed; see audit_failures and "
                             "containment_violations rows\n";
            }
            return code;
        }
        if (plotdata->parsed()) {
            auto in = open_in(trace_in);
            auto out = open_out(plot_out);
            trace_plotdata(in, parse_transform(transform), out);
            return kExitOk;
        }
        if (stream->parsed()) {
            const auto cfg = parse_simulate_config(load_config(cfg_path, overrides));
            auto out = open_out(report_out);
            write_stream_csv(out, generate_trial(cfg.settings.scenario, trial));
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
