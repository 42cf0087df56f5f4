#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sure_omt/audit.hpp"
#include "sure_omt/config.hpp"
#include "sure_omt/discrete.hpp"
#include "sure_omt/evaluate.hpp"
#include "sure_omt/io.hpp"
#include "sure_omt/procedures.hpp"
#include "sure_omt/simulate.hpp"

namespace sure_omt {

enum ExitCode : int { kExitOk = 0, kExitAudit = 1, kExitInput = 2 };

struct AnalyzeSummary {
    std::string procedure;
    long rows = 0;
    long discoveries = 0;
    BudgetAudit audit;
};

inline nlohmann::json summary_json(const AnalyzeSummary& s) {
    return {{"procedure", s.procedure},
            {"rows", s.rows},
            {"discoveries", s.discoveries},
            {"audit_passed", s.audit.passed},
            {"audit_first_violation", s.audit.first_violation},
            {"audit_max_excess", s.audit.max_excess}};
}

inline constexpr const char* kTraceHeader = "t,id,p,alpha,base,sure,epsilon,rho,reject,R";

/// Streams 2x2 tables (header naming a,b,c,d and optionally id or t) through
/// the configured procedure in file order, writing one trace row per table.
inline AnalyzeSummary analyze_tables(const AnalysisConfig& cfg, std::istream& in, std::ostream& trace) {
    AnalyzeSummary summary;
    summary.procedure = std::string(to_string(cfg.procedure));
    trace << kTraceHeader << '\n';
    CsvReader reader(in);
    if (!reader.has_header()) {
        return summary;
    }
    const long ca = reader.column("a"), cb = reader.column("b"), cc = reader.column("c"), cd = reader.column("d");
    if (ca < 0 || cb < 0 || cc < 0 || cd < 0) {
        throw InputError(reader.line(), "header must name columns a, b, c and d");
    }
    long cid = reader.column("id");
    if (cid < 0) {
        cid = reader.column("t");
    }
    OnlineProcedure proc = make_procedure(cfg.procedure, cfg.params);
    std::vector<std::string> row;
    while ((cfg.max_rows == 0 || summary.rows < cfg.max_rows) && reader.next(row)) {
        const long line = reader.line();
        const ContingencyTable2x2 table{parse_count(row[static_cast<std::size_t>(ca)], line),
                                        parse_count(row[static_cast<std::size_t>(cb)], line),
                                        parse_count(row[static_cast<std::size_t>(cc)], line),
                                        parse_count(row[static_cast<std::size_t>(cd)], line)};
        if (table.a < 0 || table.b < 0 || table.c < 0 || table.d < 0) {
            throw InputError(line, "negative count");
        }
        const auto test = fisher_two_sided(table);
        const Decision d = proc.step(test.p_value, test.null_bound);
        ++summary.rows;
        summary.discoveries += d.reject ? 1 : 0;
        const std::string id = cid >= 0 ? row[static_cast<std::size_t>(cid)] : std::to_string(summary.rows);
        trace << d.t << ',' << id << ',' << format_double(d.p) << ',' << format_double(d.alpha) << ','
              << format_double(d.base) << ',' << format_double(d.sure) << ',' << format_double(d.epsilon) << ','
              << format_double(d.rho) << ',' << (d.reject ? 1 : 0) << ',' << summary.discoveries << '\n';
    }
    summary.audit = audit_procedure(cfg.procedure, proc.history(), cfg.params);
    return summary;
}

enum class PlotTransform { raw, loglog };

inline PlotTransform parse_transform(const std::string& s) {
    if (s == "raw") {
        return PlotTransform::raw;
    }
    if (s == "loglog") {
        return PlotTransform::loglog;
    }
    throw std::invalid_argument("unknown transform '" + s + "' (expected raw or loglog)");
}

/// y -> -log(-log(y)); nullopt where undefined (y outside (0, 1)).
inline std::optional<double> loglog_transform(double y) {
    if (!(y > 0.0 && y < 1.0)) {
        return std::nullopt;
    }
    const double v = -std::log(-std::log(y));
    if (!std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

/// Long-format (t, series, value) rows from a trace. raw copies every
/// non-t column verbatim; loglog keeps p and alpha, transformed, with an empty
/// cell where the transform is undefined.
inline void trace_plotdata(std::istream& trace, PlotTransform transform, std::ostream& out) {
    out << "t,series,value\n";
    CsvReader reader(trace);
    if (!reader.has_header()) {
        return;
    }
    const long ct = reader.column("t");
    if (ct < 0) {
        throw InputError(reader.line(), "trace has no t column");
    }
    std::vector<std::size_t> cols;
    const auto& header = reader.header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (static_cast<long>(i) == ct) {
            continue;
        }
        if (transform == PlotTransform::raw || header[i] == "p" || header[i] == "alpha") {
            cols.push_back(i);
        }
    }
    std::vector<std::string> row;
    while (reader.next(row)) {
        const std::string& t = row[static_cast<std::size_t>(ct)];
        for (std::size_t i : cols) {
            out << t << ',' << header[i] << ',';
            if (transform == PlotTransform::raw) {
                out << row[i];
            } else if (auto v = loglog_transform(parse_real(row[i], reader.line()))) {
                out << format_double(*v);
            }
            out << '\n';
        }
    }
}

/// Reports for the configured point, or the whole sweep when one is set.
inline SweepResult simulate_reports(const SimulateConfig& cfg) {
    if (cfg.sweep_axis) {
        return run_sweep(cfg.settings, *cfg.sweep_axis, cfg.sweep_values);
    }
    return {evaluate_point(cfg.settings)};
}

inline int simulate_exit_code(const SweepResult& r) {
    return r.audits_passed() && r.containment_holds() ? kExitOk : kExitAudit;
}

}  // namespace sure_omt
