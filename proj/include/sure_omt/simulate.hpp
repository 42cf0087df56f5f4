#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sure_omt/audit.hpp"
#include "sure_omt/core.hpp"
#include "sure_omt/discrete.hpp"
#include "sure_omt/evaluate.hpp"
#include "sure_omt/io.hpp"
#include "sure_omt/procedures.hpp"
#include "sure_omt/spending.hpp"

namespace sure_omt {

enum class Placement { B, E, BM, BE, ME, Random };

inline constexpr std::array<Placement, 6> kAllPlacements = {Placement::B,  Placement::E,  Placement::BM,
                                                             Placement::BE, Placement::ME, Placement::Random};

inline std::string_view to_string(Placement p) {
    switch (p) {
        case Placement::B: return "B";
        case Placement::E: return "E";
        case Placement::BM: return "BM";
        case Placement::BE: return "BE";
        case Placement::ME: return "ME";
        case Placement::Random: return "Random";
    }
    return "?";
}

inline Placement parse_placement(std::string_view s) {
    for (auto p : kAllPlacements) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw std::invalid_argument("unknown placement '" + std::string(s) + "'");
}

/// Two-sample binary experiment. Null positions are Bernoulli(p_null_low) or
/// Bernoulli(p_null_mid) in both groups; alternatives are Bernoulli(p_null_mid)
/// in group A and Bernoulli(p3) in group B.
struct ScenarioConfig {
    long m = 500;
    double pi_a = 0.3;
    long n_subjects = 25;
    double p3 = 0.4;
    double p_null_low = 0.01;
    double p_null_mid = 0.10;
    Placement placement = Placement::Random;
    std::uint64_t seed = 1;
    long n_trials = 1000;

    long m3() const { return std::lround(pi_a * static_cast<double>(m)); }
    long m2() const { return (m - m3()) / 2; }
    long m1() const { return m - m3() - m2(); }

    void validate() const {
        auto prob = [](double x, const char* name) {
            if (!(x >= 0.0 && x <= 1.0)) {
                throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
            }
        };
        if (m < 1) {
            throw std::invalid_argument("m must be positive");
        }
        if (n_subjects < 1) {
            throw std::invalid_argument("n_subjects must be positive");
        }
        if (n_trials < 1) {
            throw std::invalid_argument("n_trials must be positive");
        }
        prob(pi_a, "pi_a");
        prob(p3, "p3");
        prob(p_null_low, "p_null_low");
        prob(p_null_mid, "p_null_mid");
    }
};

/// Engine for one (seed, trial, position) cell. Position 0 drives the
/// per-trial layout; positions 1..m drive the data.
inline std::mt19937_64 cell_engine(std::uint64_t seed, long trial, long position) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(position)};
    return std::mt19937_64(seq);
}

/// 1-based indices of the alternatives, increasing. Two-block schemes put
/// ceil(m3/2) in the first block and floor(m3/2) in the second; blocks start at
/// 1, floor(m/2) and m - block + 1, shifted only to avoid overlap.
template <class Rng>
std::vector<long> place_signal(long m, long m3, Placement scheme, Rng& rng) {
    if (m3 < 0 || m3 > m) {
        throw std::invalid_argument("m3 outside [0, m]");
    }
    std::vector<long> idx;
    auto block = [&](long start, long len) {
        for (long i = 0; i < len; ++i) {
            idx.push_back(start + i);
        }
    };
    const long s1 = (m3 + 1) / 2;
    const long s2 = m3 / 2;
    switch (scheme) {
        case Placement::B: block(1, m3); break;
        case Placement::E: block(m - m3 + 1, m3); break;
        case Placement::BM:
            block(1, s1);
            block(std::max(m / 2, s1 + 1), s2);
            break;
        case Placement::BE:
            block(1, s1);
            block(m - s2 + 1, s2);
            break;
        case Placement::ME:
            block(std::max(1L, std::min(m / 2, m - s2 - s1 + 1)), s1);
            block(m - s2 + 1, s2);
            break;
        case Placement::Random: {
            std::vector<long> all(static_cast<std::size_t>(m));
            std::iota(all.begin(), all.end(), 1L);
            std::shuffle(all.begin(), all.end(), rng);
            idx.assign(all.begin(), all.begin() + m3);
            break;
        }
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

struct TrialStream {
    std::vector<ContingencyTable2x2> tables;
    std::vector<Label> labels;
    std::vector<double> p;
    std::vector<StepCdf> bounds;

    std::size_t size() const noexcept { return tables.size(); }
};

/// Deterministic in (config.seed, trial_index) and independent of call order.
inline TrialStream generate_trial(const ScenarioConfig& config, long trial_index) {
    config.validate();
    const long m = config.m;
    auto layout = cell_engine(config.seed, trial_index, 0);
    const auto alt = place_signal(m, config.m3(), config.placement, layout);

    TrialStream s;
    s.labels.assign(static_cast<std::size_t>(m), Label::null);
    for (long i : alt) {
        s.labels[static_cast<std::size_t>(i - 1)] = Label::alternative;
    }
    // Null positions split into low and mid rate groups at random.
    std::vector<std::size_t> nulls;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i] == Label::null) {
            nulls.push_back(i);
        }
    }
    std::shuffle(nulls.begin(), nulls.end(), layout);
    std::vector<char> low(static_cast<std::size_t>(m), 0);
    for (long k = 0; k < config.m1() && k < static_cast<long>(nulls.size()); ++k) {
        low[nulls[static_cast<std::size_t>(k)]] = 1;
    }

    s.tables.reserve(static_cast<std::size_t>(m));
    s.p.reserve(static_cast<std::size_t>(m));
    s.bounds.reserve(static_cast<std::size_t>(m));
    const long n = config.n_subjects;
    for (long i = 1; i <= m; ++i) {
        const auto k = static_cast<std::size_t>(i - 1);
        double pa = config.p_null_mid, pb = config.p_null_mid;
        if (s.labels[k] == Label::alternative) {
            pb = config.p3;
        } else if (low[k]) {
            pa = pb = config.p_null_low;
        }
        auto eng = cell_engine(config.seed, trial_index, i);
        const long a = std::binomial_distribution<long>(n, pa)(eng);
        const long c = std::binomial_distribution<long>(n, pb)(eng);
        const ContingencyTable2x2 table{a, n - a, c, n - c};
        auto test = fisher_two_sided(table);
        s.tables.push_back(table);
        s.p.push_back(test.p_value);
        s.bounds.push_back(std::move(test.null_bound));
    }
    return s;
}

/// CSV dump with columns t,a,b,c,d,label (label is 0 for null, 1 otherwise).
inline void write_stream_csv(std::ostream& out, const TrialStream& s) {
    out << "t,a,b,c,d,label\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& tb = s.tables[i];
        out << (i + 1) << ',' << tb.a << ',' << tb.b << ',' << tb.c << ',' << tb.d << ','
            << (s.labels[i] == Label::alternative ? 1 : 0) << '\n';
    }
}

/// Shared parameters from which each procedure's configuration is derived.
struct ProcedureDefaults {
    double alpha = 0.2;
    double lambda = 0.5;
    std::optional<double> w0;  ///< alpha / 2 when unset
    SpendingSequence gamma = SpendingSequence::power_law(1.6);
    SpendingSequence gamma_prime_fwer = SpendingSequence::kernel(100);
    SpendingSequence gamma_prime_mfdr = SpendingSequence::kernel(10);
    bool saffron_capping = false;

    ProcedureConfig config_for(ProcedureKind kind) const {
        ProcedureConfig c;
        c.alpha = alpha;
        c.lambda = lambda;
        c.w0 = w0.value_or(alpha / 2.0);
        c.gamma = gamma;
        c.saffron_capping = saffron_capping || kind == ProcedureKind::saffron_capped;
        if (is_rewarded(kind)) {
            c.gamma_prime = is_investing(kind) ? gamma_prime_mfdr : gamma_prime_fwer;
        }
        return c;
    }
};

/// FWER procedures are audited against the fixed budget, investing ones
/// against the rejection-scaled budget.
inline BudgetAudit audit_procedure(ProcedureKind kind, std::span<const Decision> history, const ProcedureConfig& c) {
    const double lambda = is_adaptive(kind) ? c.lambda : 0.0;
    const AuditMode mode = is_rewarded(kind) ? AuditMode::rewarded : AuditMode::base;
    return is_investing(kind) ? audit_mfdr_budget(history, lambda, c.alpha, mode)
                              : audit_fwer_budget(history, lambda, c.alpha, mode);
}

struct SimulationSettings {
    ScenarioConfig scenario;
    ProcedureDefaults procedures;
    std::vector<ProcedureKind> kinds{kAllProcedures.begin(), kAllProcedures.end()};
    long checkpoint_step = 50;  ///< mFDR grid spacing; m is always included
    unsigned threads = 1;

    std::vector<long> checkpoints() const {
        std::vector<long> cps;
        if (checkpoint_step > 0) {
            for (long t = checkpoint_step; t < scenario.m; t += checkpoint_step) {
                cps.push_back(t);
            }
        }
        cps.push_back(scenario.m);
        return cps;
    }
};

/// Per-trial results for every configured procedure.
struct TrialResult {
    std::vector<TrialOutcome> outcomes;  ///< indexed like SimulationSettings::kinds
    std::vector<char> audit_ok;
    std::vector<char> contained;         ///< base rejections within this procedure's set
};

inline TrialResult run_trial(const SimulationSettings& settings, const TrialStream& stream) {
    const auto cps = settings.checkpoints();
    const std::size_t K = settings.kinds.size();
    TrialResult r;
    r.outcomes.reserve(K);
    r.audit_ok.assign(K, 1);
    r.contained.assign(K, 1);
    for (std::size_t k = 0; k < K; ++k) {
        const ProcedureKind kind = settings.kinds[k];
        const ProcedureConfig cfg = settings.procedures.config_for(kind);
        OnlineProcedure proc = make_procedure(kind, cfg);
        const auto history = run_stream(proc, stream.p, stream.bounds);
        r.audit_ok[k] = audit_procedure(kind, history, cfg).passed ? 1 : 0;
        r.outcomes.push_back(make_outcome(history, stream.labels, cps));
    }
    for (std::size_t k = 0; k < K; ++k) {
        const ProcedureKind kind = settings.kinds[k];
        if (!is_rewarded(kind)) {
            continue;
        }
        const auto base = std::find(settings.kinds.begin(), settings.kinds.end(), base_of(kind));
        if (base == settings.kinds.end()) {
            continue;
        }
        const auto& rb = r.outcomes[static_cast<std::size_t>(base - settings.kinds.begin())].reject;
        const auto& rr = r.outcomes[k].reject;
        for (std::size_t t = 0; t < rb.size(); ++t) {
            if (rb[t] && !rr[t]) {
                r.contained[k] = 0;
                break;
            }
        }
    }
    return r;
}

/// Reports for one parameter point, one per configured procedure. Trials may
/// run on several threads; the reduction is always in trial order.
inline std::vector<EvalReport> evaluate_point(const SimulationSettings& settings, const std::string& axis = "",
                                              const std::string& point = "") {
    settings.scenario.validate();
    for (auto kind : settings.kinds) {
        settings.procedures.config_for(kind).validate(kind);
    }
    const long n = settings.scenario.n_trials;
    std::vector<TrialResult> results(static_cast<std::size_t>(n));
    auto work = [&](long first, long stride) {
        for (long i = first; i < n; i += stride) {
            results[static_cast<std::size_t>(i)] = run_trial(settings, generate_trial(settings.scenario, i));
        }
    };
    const long workers = std::max<long>(1, std::min<long>(settings.threads, n));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (long w = 0; w < workers; ++w) {
            pool.emplace_back(work, w, workers);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    const auto cps = settings.checkpoints();
    std::vector<EvalReport> reports;
    for (std::size_t k = 0; k < settings.kinds.size(); ++k) {
        std::vector<TrialOutcome> outcomes;
        outcomes.reserve(results.size());
        long audit_failures = 0, violations = 0;
        for (auto& tr : results) {
            outcomes.push_back(std::move(tr.outcomes[k]));
            audit_failures += tr.audit_ok[k] ? 0 : 1;
            violations += tr.contained[k] ? 0 : 1;
        }
        EvalReport rep = summarize(std::string(to_string(settings.kinds[k])), outcomes, cps);
        rep.axis = axis;
        rep.point = point;
        rep.audit_failures = audit_failures;
        rep.containment_violations = violations;
        reports.push_back(std::move(rep));
    }
    return reports;
}

inline constexpr std::array<std::string_view, 6> kSweepAxes = {"placement", "pi_a", "N", "p3", "lambda", "h"};

/// Copy of `base` with one axis set to `value`.
inline SimulationSettings apply_axis(SimulationSettings base, const std::string& axis, const std::string& value) {
    auto real = [&] { return parse_real(value, 0); };
    if (axis == "placement") {
        base.scenario.placement = parse_placement(value);
    } else if (axis == "pi_a") {
        base.scenario.pi_a = real();
    } else if (axis == "N") {
        base.scenario.n_subjects = parse_count(value, 0);
    } else if (axis == "p3") {
        base.scenario.p3 = real();
    } else if (axis == "lambda") {
        base.procedures.lambda = real();
    } else if (axis == "h") {
        const long h = parse_count(value, 0);
        base.procedures.gamma_prime_fwer = SpendingSequence::kernel(h);
        base.procedures.gamma_prime_mfdr = SpendingSequence::kernel(h);
    } else {
        throw std::invalid_argument("unknown sweep axis '" + axis + "'");
    }
    return base;
}

struct SweepResult {
    std::vector<EvalReport> reports;  ///< value-major, procedures in configured order

    bool audits_passed() const {
        return std::all_of(reports.begin(), reports.end(), [](const EvalReport& r) { return r.audit_failures == 0; });
    }
    bool containment_holds() const {
        return std::all_of(reports.begin(), reports.end(),
                           [](const EvalReport& r) { return r.containment_violations == 0; });
    }
};

inline SweepResult run_sweep(const SimulationSettings& base, const std::string& axis,
                             const std::vector<std::string>& values) {
    if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end()) {
        throw std::invalid_argument("unknown sweep axis '" + axis + "'");
    }
    SweepResult out;
    for (const auto& v : values) {
        auto reports = evaluate_point(apply_axis(base, axis, v), axis, v);
        out.reports.insert(out.reports.end(), std::make_move_iterator(reports.begin()),
                           std::make_move_iterator(reports.end()));
    }
    return out;
}

}  // namespace sure_omt
