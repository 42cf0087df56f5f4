#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sure_omt/core.hpp"
#include "sure_omt/spending.hpp"

namespace sure_omt {

enum class ProcedureKind { ob, rho_ob, aob, rho_aob, lord, rho_lord, alord, rho_alord, saffron_capped };

inline constexpr std::array<ProcedureKind, 9> kAllProcedures = {
    ProcedureKind::ob,   ProcedureKind::rho_ob,   ProcedureKind::aob,
    ProcedureKind::rho_aob, ProcedureKind::lord,  ProcedureKind::rho_lord,
    ProcedureKind::alord, ProcedureKind::rho_alord, ProcedureKind::saffron_capped};

inline std::string_view to_string(ProcedureKind k) {
    switch (k) {
        case ProcedureKind::ob: return "ob";
        case ProcedureKind::rho_ob: return "rho-ob";
        case ProcedureKind::aob: return "aob";
        case ProcedureKind::rho_aob: return "rho-aob";
        case ProcedureKind::lord: return "lord";
        case ProcedureKind::rho_lord: return "rho-lord";
        case ProcedureKind::alord: return "alord";
        case ProcedureKind::rho_alord: return "rho-alord";
        case ProcedureKind::saffron_capped: return "saffron-capped";
    }
    return "?";
}

inline ProcedureKind parse_procedure(std::string_view name) {
    for (auto k : kAllProcedures) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown procedure '" + std::string(name) + "'");
}

inline bool is_rewarded(ProcedureKind k) {
    return k == ProcedureKind::rho_ob || k == ProcedureKind::rho_aob || k == ProcedureKind::rho_lord ||
           k == ProcedureKind::rho_alord;
}

inline bool is_adaptive(ProcedureKind k) {
    return k == ProcedureKind::aob || k == ProcedureKind::rho_aob || k == ProcedureKind::alord ||
           k == ProcedureKind::rho_alord || k == ProcedureKind::saffron_capped;
}

/// mFDR family (alpha-investing); the others target the FWER.
inline bool is_investing(ProcedureKind k) {
    return k == ProcedureKind::lord || k == ProcedureKind::rho_lord || k == ProcedureKind::alord ||
           k == ProcedureKind::rho_alord || k == ProcedureKind::saffron_capped;
}

/// Un-rewarded counterpart of a procedure (identity for base procedures).
inline ProcedureKind base_of(ProcedureKind k) {
    switch (k) {
        case ProcedureKind::rho_ob: return ProcedureKind::ob;
        case ProcedureKind::rho_aob: return ProcedureKind::aob;
        case ProcedureKind::rho_lord: return ProcedureKind::lord;
        case ProcedureKind::rho_alord: return ProcedureKind::alord;
        default: return k;
    }
}

struct ProcedureConfig {
    double alpha = 0.2;
    double lambda = 0.5;
    double w0 = 0.1;
    SpendingSequence gamma = SpendingSequence::power_law(1.6);
    std::optional<SpendingSequence> gamma_prime;
    bool saffron_capping = false;

    void validate(ProcedureKind kind) const {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("alpha must lie in (0, 1)");
        }
        if (!(lambda >= 0.0 && lambda < 1.0)) {
            throw std::invalid_argument("lambda must lie in [0, 1)");
        }
        if (is_investing(kind) && !(w0 > 0.0 && w0 < alpha)) {
            throw std::invalid_argument("w0 must lie in (0, alpha)");
        }
        if (is_rewarded(kind) && !gamma_prime) {
            throw std::invalid_argument(std::string(to_string(kind)) + " needs a reward spending sequence");
        }
    }
};

/// Sum over the eligible reward ledger of gamma'_{T-t} rho_t, t < T.
///
/// The rectangular kernel keeps the window total in a two-stack queue, so the
/// sum is O(1) amortised and built from additions only. Other sequences are
/// convolved directly over their nonzero range.
class RewardSmoother {
public:
    explicit RewardSmoother(SpendingSequence gamma_prime) : gamma_prime_(std::move(gamma_prime)) {
        kernel_ = gamma_prime_.kind() == SpendingSequence::Kind::kernel;
    }

    const SpendingSequence& gamma_prime() const noexcept { return gamma_prime_; }

    /// Value for the next time index.
    double value() const {
        if (kernel_) {
            const double front = front_.empty() ? 0.0 : front_.back().second;
            return (front + back_sum_) / static_cast<double>(gamma_prime_.bandwidth());
        }
        const long T = static_cast<long>(ledger_.size()) + 1;
        const long len = gamma_prime_.support_length();
        const long first = len > 0 ? std::max(1L, T - len) : 1L;
        double acc = 0.0;
        for (long t = first; t < T; ++t) {
            const double r = ledger_[static_cast<std::size_t>(t - 1)];
            if (r != 0.0) {
                acc += gamma_prime_(T - t) * r;
            }
        }
        return acc;
    }

    /// Appends the contribution of the step just observed (0 when ineligible).
    void push(double contribution) {
        if (!kernel_) {
            ledger_.push_back(contribution);
            return;
        }
        back_.push_back(contribution);
        back_sum_ += contribution;
        ++window_;
        if (window_ > gamma_prime_.bandwidth()) {
            pop_oldest();
        }
    }

private:
    void pop_oldest() {
        if (front_.empty()) {
            // newest first, so front_.back() ends up holding the oldest entry
            double agg = 0.0;
            while (!back_.empty()) {
                agg += back_.back();
                front_.emplace_back(back_.back(), agg);
                back_.pop_back();
            }
            back_sum_ = 0.0;
        }
        front_.pop_back();
        --window_;
    }

    SpendingSequence gamma_prime_;
    bool kernel_ = false;
    std::vector<double> ledger_;
    std::vector<std::pair<double, double>> front_;  // (value, sum of this and older entries below)
    std::vector<double> back_;
    double back_sum_ = 0.0;
    long window_ = 0;
};

/// Evolving state of one online procedure.
///
/// Tracks the decision history, rejection times tau_j, the re-indexation
/// clocks T_j(.) and, for rewarded procedures, the reward ledger and adaptive
/// carry. All queries refer to the upcoming time index next_time().
class ProcedureState {
public:
    ProcedureState(double lambda, std::optional<SpendingSequence> gamma_prime) : lambda_(lambda) {
        if (gamma_prime) {
            smoother_.emplace(std::move(*gamma_prime));
        }
    }

    long next_time() const noexcept { return static_cast<long>(history_.size()) + 1; }
    double lambda() const noexcept { return lambda_; }
    bool rewarded() const noexcept { return smoother_.has_value(); }

    const std::vector<Decision>& history() const noexcept { return history_; }
    const std::vector<long>& rejection_times() const noexcept { return taus_; }

    /// R(T-1): rejections strictly before the upcoming time.
    long rejections() const noexcept { return static_cast<long>(taus_.size()); }

    /// T_j(T) at the upcoming time T; j = 0 is the global clock, 0 when j > R.
    long clock(long j) const {
        if (j == 0) {
            return clock0_;
        }
        if (j < 0 || j > rejections()) {
            return 0;
        }
        return 1 + clock0_ - clock_start_[static_cast<std::size_t>(j - 1)];
    }

    /// Smoothed reward for the upcoming time (0 for base procedures).
    double sure_sum() const { return smoother_ ? smoother_->value() : 0.0; }

    /// epsilon_{T-1}: the previous step's reward surplus, carried when p_{T-1} < lambda.
    double epsilon() const noexcept { return epsilon_; }

    void record(const Decision& d) {
        const long T = next_time();
        history_.push_back(d);
        const bool large = d.p >= lambda_;
        if (large) {
            ++clock0_;
        }
        if (d.reject) {
            taus_.push_back(T);
            clock_start_.push_back(clock0_);  // T_0(tau_j + 1)
        }
        if (smoother_) {
            smoother_->push(large ? d.rho : 0.0);
            epsilon_ = large ? 0.0 : d.alpha - d.base;
        }
    }

private:
    double lambda_;
    std::vector<Decision> history_;
    std::vector<long> taus_;
    std::vector<long> clock_start_;
    long clock0_ = 1;
    std::optional<RewardSmoother> smoother_;
    double epsilon_ = 0.0;
};

/// T_j(T) recomputed from a recorded stream. Independent of the incremental
/// clocks kept by ProcedureState. `p` holds p_1..p_{T-1} (or more); `taus`
/// the rejection times in increasing order.
inline long reindex_clock(std::span<const double> p, std::span<const long> taus, double lambda, long j,
                          long T) {
    long start = 2;
    if (j >= 1) {
        if (j > static_cast<long>(taus.size())) {
            return 0;
        }
        const long tau = taus[static_cast<std::size_t>(j - 1)];
        if (T <= tau) {
            return 0;
        }
        start = tau + 2;
    }
    long clock = 1;
    for (long t = start; t <= T; ++t) {
        if (p[static_cast<std::size_t>(t - 2)] >= lambda) {
            ++clock;
        }
    }
    return clock;
}

// Base critical values alpha^0_T, evaluated on a state's own history.

inline double next_alpha_ob(const ProcedureState& s, const ProcedureConfig& c) {
    return c.alpha * c.gamma(s.next_time());
}

inline double next_alpha_aob(const ProcedureState& s, const ProcedureConfig& c) {
    return c.alpha * (1.0 - s.lambda()) * c.gamma(s.clock(0));
}

inline double next_alpha_lord(const ProcedureState& s, const ProcedureConfig& c) {
    const long T = s.next_time();
    const auto& taus = s.rejection_times();
    double acc = c.w0 * c.gamma(T);
    for (std::size_t j = 0; j < taus.size(); ++j) {
        acc += (j == 0 ? c.alpha - c.w0 : c.alpha) * c.gamma(T - taus[j]);
    }
    return acc;
}

/// Adaptive LORD; capped at lambda when c.saffron_capping is set.
inline double next_alpha_alord(const ProcedureState& s, const ProcedureConfig& c) {
    double acc = c.w0 * c.gamma(s.clock(0));
    const long R = s.rejections();
    for (long j = 1; j <= R; ++j) {
        acc += (j == 1 ? c.alpha - c.w0 : c.alpha) * c.gamma(s.clock(j));
    }
    const double level = (1.0 - s.lambda()) * acc;
    return c.saffron_capping ? std::min(s.lambda(), level) : level;
}

/// Base rule emitting alpha^0_T from the history strictly before T.
using BaseRule = std::function<double(const ProcedureState&)>;

inline BaseRule base_rule(ProcedureKind kind, const ProcedureConfig& c) {
    switch (base_of(kind)) {
        case ProcedureKind::ob: return [c](const ProcedureState& s) { return next_alpha_ob(s, c); };
        case ProcedureKind::aob: return [c](const ProcedureState& s) { return next_alpha_aob(s, c); };
        case ProcedureKind::lord: return [c](const ProcedureState& s) { return next_alpha_lord(s, c); };
        case ProcedureKind::saffron_capped: {
            ProcedureConfig capped = c;
            capped.saffron_capping = true;
            return [capped](const ProcedureState& s) { return next_alpha_alord(s, capped); };
        }
        default: return [c](const ProcedureState& s) { return next_alpha_alord(s, c); };
    }
}

/// Online procedure driven one hypothesis at a time: emit_alpha() fixes
/// alpha_T, then observe() reveals p_T and its null bound.
class OnlineProcedure {
public:
    /// Base procedure when gamma_prime is empty, rewarded otherwise.
    OnlineProcedure(BaseRule base, double lambda, std::optional<SpendingSequence> gamma_prime)
        : base_(std::move(base)), state_(lambda, std::move(gamma_prime)) {
        if (!(lambda >= 0.0 && lambda < 1.0)) {
            throw std::invalid_argument("lambda must lie in [0, 1)");
        }
    }

    double emit_alpha() {
        if (pending_) {
            throw std::logic_error("emit_alpha called twice without observe");
        }
        pending_.emplace();
        Decision& d = *pending_;
        d.t = state_.next_time();
        d.base = base_(state_);
        if (state_.rewarded()) {
            d.sure = state_.sure_sum();
            d.epsilon = state_.epsilon();
            d.alpha = d.base + d.sure + d.epsilon;
        } else {
            d.alpha = d.base;
        }
        return d.alpha;
    }

    Decision observe(double p, const StepCdf& bound) {
        if (!pending_) {
            throw std::logic_error("observe called before emit_alpha");
        }
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("p-value outside [0, 1]");
        }
        Decision d = *pending_;
        pending_.reset();
        d.p = p;
        d.reject = p <= d.alpha;
        d.spent = bound(d.alpha);
        d.rho = sure_reward(d.alpha, bound);
        state_.record(d);
        return d;
    }

    Decision step(double p, const StepCdf& bound) {
        emit_alpha();
        return observe(p, bound);
    }

    const ProcedureState& state() const noexcept { return state_; }
    const std::vector<Decision>& history() const noexcept { return state_.history(); }
    double lambda() const noexcept { return state_.lambda(); }
    bool rewarded() const noexcept { return state_.rewarded(); }

private:
    BaseRule base_;
    ProcedureState state_;
    std::optional<Decision> pending_;
};

/// Rewards any base rule: alpha^0_T + smoothed eligible rewards + adaptive carry.
inline OnlineProcedure generic_reward(BaseRule base, SpendingSequence gamma_prime, double lambda) {
    return OnlineProcedure(std::move(base), lambda, std::move(gamma_prime));
}

/// Builds one of the named procedures. Non-adaptive procedures run with
/// lambda = 0 whatever the configured value.
inline OnlineProcedure make_procedure(ProcedureKind kind, const ProcedureConfig& c) {
    c.validate(kind);
    const double lambda = is_adaptive(kind) ? c.lambda : 0.0;
    std::optional<SpendingSequence> gp;
    if (is_rewarded(kind)) {
        gp = *c.gamma_prime;
    }
    return OnlineProcedure(base_rule(kind, c), lambda, std::move(gp));
}

/// Runs a procedure over a whole stream of (p, bound) pairs.
inline std::vector<Decision> run_stream(OnlineProcedure& proc, std::span<const double> p,
                                        std::span<const StepCdf> bounds) {
    if (p.size() != bounds.size()) {
        throw std::invalid_argument("p-values and bounds differ in length");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        proc.step(p[i], bounds[i]);
    }
    return proc.history();
}

}  // namespace sure_omt
