#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sure_omt/core.hpp"
#include "sure_omt/io.hpp"
#include "sure_omt/procedures.hpp"
#include "sure_omt/spending.hpp"

namespace sure_omt {

struct CheckpointCounts {
    long T = 0;
    long false_rejections = 0;  // |H0 ∩ R(T)|
    long rejections = 0;        // |R(T)|
    long true_rejections = 0;   // |H1 ∩ R(T)|
};

/// Result of one procedure on one simulated stream.
struct TrialOutcome {
    std::vector<bool> reject;
    std::vector<Label> labels;  // empty when ground truth is unknown
    std::vector<CheckpointCounts> counts;
    long n_alternatives = 0;

    bool has_labels() const noexcept { return !labels.empty(); }

    const CheckpointCounts& at(long T) const {
        for (const auto& c : counts) {
            if (c.T == T) {
                return c;
            }
        }
        throw std::out_of_range("checkpoint " + std::to_string(T) + " not recorded");
    }
};

/// Tallies rejections at each checkpoint (checkpoints beyond the stream are
/// clamped to its length).
inline TrialOutcome make_outcome(std::span<const Decision> history, std::span<const Label> labels,
                                 std::span<const long> checkpoints) {
    if (!labels.empty() && labels.size() != history.size()) {
        throw std::invalid_argument("labels and decisions differ in length");
    }
    TrialOutcome out;
    out.reject.reserve(history.size());
    for (const auto& d : history) {
        out.reject.push_back(d.reject);
    }
    out.labels.assign(labels.begin(), labels.end());
    out.n_alternatives = std::count(labels.begin(), labels.end(), Label::alternative);
    std::vector<long> cps(checkpoints.begin(), checkpoints.end());
    std::sort(cps.begin(), cps.end());
    CheckpointCounts running;
    std::size_t t = 0;
    for (long cp : cps) {
        const long stop = std::min<long>(cp, static_cast<long>(history.size()));
        for (; static_cast<long>(t) < stop; ++t) {
            if (!out.reject[t]) {
                continue;
            }
            ++running.rejections;
            if (!labels.empty()) {
                (labels[t] == Label::null ? running.false_rejections : running.true_rejections) += 1;
            }
        }
        running.T = cp;
        out.counts.push_back(running);
    }
    return out;
}

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Fraction of trials with at least one false rejection by T; binomial SE.
inline Estimate estimate_fwer(std::span<const TrialOutcome> trials, long T) {
    if (trials.empty()) {
        throw std::invalid_argument("no trials");
    }
    long hits = 0;
    for (const auto& tr : trials) {
        hits += tr.at(T).false_rejections >= 1 ? 1 : 0;
    }
    const double n = static_cast<double>(trials.size());
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

/// Mean false rejections over mean (1 v rejections), 0/0 = 0. The SE is the
/// first-order delta-method approximation for a ratio of means.
inline Estimate estimate_mfdr(std::span<const TrialOutcome> trials, long T) {
    if (trials.empty()) {
        throw std::invalid_argument("no trials");
    }
    long sx = 0, sy = 0;
    for (const auto& tr : trials) {
        const auto& c = tr.at(T);
        sx += c.false_rejections;
        sy += std::max(1L, c.rejections);
    }
    const double n = static_cast<double>(trials.size());
    const double mx = static_cast<double>(sx) / n;
    const double my = static_cast<double>(sy) / n;
    if (sx == 0) {
        return {0.0, 0.0};
    }
    double vxx = 0.0, vyy = 0.0, vxy = 0.0;
    for (const auto& tr : trials) {
        const auto& c = tr.at(T);
        const double dx = static_cast<double>(c.false_rejections) - mx;
        const double dy = static_cast<double>(std::max(1L, c.rejections)) - my;
        vxx += dx * dx;
        vyy += dy * dy;
        vxy += dx * dy;
    }
    const double denom = n > 1.0 ? n - 1.0 : 1.0;
    vxx /= denom;
    vyy /= denom;
    vxy /= denom;
    const double r = mx / my;
    const double var = (vxx - 2.0 * r * vxy + r * r * vyy) / (my * my * n);
    return {r, std::sqrt(std::max(0.0, var))};
}

/// Trial mean of |H1 ∩ R(T)| / (1 v |H1|).
inline Estimate estimate_power(std::span<const TrialOutcome> trials, long T) {
    if (trials.empty()) {
        throw std::invalid_argument("no trials");
    }
    std::vector<double> share;
    share.reserve(trials.size());
    for (const auto& tr : trials) {
        if (!tr.has_labels()) {
            throw std::invalid_argument("power needs ground-truth labels");
        }
        share.push_back(static_cast<double>(tr.at(T).true_rejections) /
                        static_cast<double>(std::max(1L, tr.n_alternatives)));
    }
    const double n = static_cast<double>(share.size());
    double mean = 0.0;
    for (double s : share) {
        mean += s;
    }
    mean /= n;
    double var = 0.0;
    for (double s : share) {
        var += (s - mean) * (s - mean);
    }
    var = n > 1.0 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

/// Expectation-of-ratio FDR; diagnostic column only.
inline double estimate_fdr(std::span<const TrialOutcome> trials, long T) {
    double acc = 0.0;
    for (const auto& tr : trials) {
        const auto& c = tr.at(T);
        acc += static_cast<double>(c.false_rejections) / static_cast<double>(std::max(1L, c.rejections));
    }
    return trials.empty() ? 0.0 : acc / static_cast<double>(trials.size());
}

struct CheckpointEstimate {
    long T = 0;
    Estimate value;
};

/// Monte-Carlo summary for one procedure at one parameter point.
struct EvalReport {
    std::string procedure;
    std::string axis;        ///< swept parameter, empty for a single point
    std::string point;       ///< its value, as text
    long n_trials = 0;
    std::vector<long> checkpoints;
    Estimate fwer;                         ///< at the final checkpoint
    std::vector<CheckpointEstimate> mfdr;  ///< at every checkpoint
    Estimate power;                        ///< at the final checkpoint
    double mean_discoveries = 0.0;
    double fdr = 0.0;
    long audit_failures = 0;           ///< trials whose budget audit failed
    long containment_violations = 0;   ///< trials where the base rejected outside this procedure's set
};

inline EvalReport summarize(std::string procedure, std::span<const TrialOutcome> trials,
                            std::span<const long> checkpoints) {
    if (checkpoints.empty()) {
        throw std::invalid_argument("no checkpoints");
    }
    EvalReport r;
    r.procedure = std::move(procedure);
    r.n_trials = static_cast<long>(trials.size());
    r.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    std::sort(r.checkpoints.begin(), r.checkpoints.end());
    const long last = r.checkpoints.back();
    r.fwer = estimate_fwer(trials, last);
    for (long cp : r.checkpoints) {
        r.mfdr.push_back({cp, estimate_mfdr(trials, cp)});
    }
    if (!trials.empty() && trials.front().has_labels()) {
        r.power = estimate_power(trials, last);
    }
    long total = 0;
    for (const auto& tr : trials) {
        total += tr.at(last).rejections;
    }
    r.mean_discoveries = static_cast<double>(total) / static_cast<double>(std::max<std::size_t>(1, trials.size()));
    r.fdr = estimate_fdr(trials, last);
    return r;
}

/// One flat row of a report export.
struct ReportRow {
    std::string procedure, axis, point, metric;
    long checkpoint = 0;
    double estimate = 0.0;
    double se = 0.0;
    long n_trials = 0;
};

inline std::vector<ReportRow> report_rows(std::span<const EvalReport> reports) {
    std::vector<ReportRow> rows;
    for (const auto& r : reports) {
        const long last = r.checkpoints.empty() ? 0 : r.checkpoints.back();
        auto add = [&](const char* metric, long cp, double est, double se) {
            rows.push_back({r.procedure, r.axis, r.point, metric, cp, est, se, r.n_trials});
        };
        add("fwer", last, r.fwer.value, r.fwer.se);
        for (const auto& m : r.mfdr) {
            add("mfdr", m.T, m.value.value, m.value.se);
        }
        add("power", last, r.power.value, r.power.se);
        add("discoveries", last, r.mean_discoveries, 0.0);
        add("fdr", last, r.fdr, 0.0);
        add("audit_failures", last, static_cast<double>(r.audit_failures), 0.0);
        add("containment_violations", last, static_cast<double>(r.containment_violations), 0.0);
    }
    return rows;
}

inline void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
    out << "procedure,axis,value,metric,checkpoint,estimate,se,n_trials\n";
    for (const auto& row : report_rows(reports)) {
        out << row.procedure << ',' << row.axis << ',' << row.point << ',' << row.metric << ',' << row.checkpoint
            << ',' << format_double(row.estimate) << ',' << format_double(row.se) << ',' << row.n_trials << '\n';
    }
}

inline nlohmann::json report_json(std::span<const EvalReport> reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : report_rows(reports)) {
        arr.push_back({{"procedure", row.procedure},
                       {"axis", row.axis},
                       {"value", row.point},
                       {"metric", row.metric},
                       {"checkpoint", row.checkpoint},
                       {"estimate", row.estimate},
                       {"se", row.se},
                       {"n_trials", row.n_trials}});
    }
    return arr;
}

/// Remaining budget trajectories for online Bonferroni and its rewarded form.
struct WealthCurves {
    std::vector<double> nominal;             ///< alpha - sum alpha gamma_t
    std::vector<double> effective;           ///< alpha - sum F_t(alpha gamma_t)
    std::vector<double> effective_rewarded;  ///< alpha - sum F_t(alpha_t) along the rewarded levels
};

/// `bounds` must hold at least `horizon` entries. Rewarded levels use
/// gamma_prime; they do not depend on the p-values since lambda = 0.
inline WealthCurves wealth_curves(const SpendingSequence& gamma, const SpendingSequence& gamma_prime, double alpha,
                                  std::span<const StepCdf> bounds, long horizon) {
    if (horizon < 1 || static_cast<std::size_t>(horizon) > bounds.size()) {
        throw std::invalid_argument("wealth_curves: horizon outside the bound list");
    }
    ProcedureConfig cfg;
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.gamma_prime = gamma_prime;
    OnlineProcedure rewarded = make_procedure(ProcedureKind::rho_ob, cfg);
    WealthCurves w;
    double nominal_spent = 0.0, effective_spent = 0.0, rewarded_spent = 0.0;
    for (long t = 1; t <= horizon; ++t) {
        const StepCdf& F = bounds[static_cast<std::size_t>(t - 1)];
        const double level = alpha * gamma(t);
        nominal_spent += level;
        effective_spent += F(level);
        rewarded_spent += rewarded.step(1.0, F).spent;
        w.nominal.push_back(alpha - nominal_spent);
        w.effective.push_back(alpha - effective_spent);
        w.effective_rewarded.push_back(alpha - rewarded_spent);
    }
    return w;
}

}  // namespace sure_omt
