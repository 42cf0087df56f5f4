#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "sure_omt/core.hpp"
#include "sure_omt/spending.hpp"

namespace sure_omt {

/// Which budget inequality to check.
///  - base: alpha^0_T + sum_{t<T, p_t >= lambda} alpha^0_t <= bound
///  - rewarded: alpha_T + sum_{t<T, p_t >= lambda} F_t(alpha_t) <= bound
enum class AuditMode { base, rewarded };

struct BudgetAudit {
    bool passed = true;
    long first_violation = 0;   ///< earliest offending T, 0 when none
    double max_excess = 0.0;    ///< max over T of lhs - rhs (may be negative)
    long checked = 0;
};

namespace detail {

inline BudgetAudit audit_budget(std::span<const Decision> history, double lambda, double alpha, AuditMode mode,
                                bool scale_by_rejections) {
    BudgetAudit report;
    report.max_excess = -1.0;
    double spent_so_far = 0.0;  // sum over eligible t < T
    long rejections = 0;
    for (const Decision& d : history) {
        if (d.reject) {
            ++rejections;  // R(T) includes T itself
        }
        const double current = mode == AuditMode::base ? d.base : d.alpha;
        const double lhs = current + spent_so_far;
        const double rhs =
            (1.0 - lambda) * alpha * (scale_by_rejections ? static_cast<double>(std::max(1L, rejections)) : 1.0);
        const double excess = lhs - rhs;
        report.max_excess = std::max(report.max_excess, excess);
        if (excess > 1e-12 * rhs && report.passed) {
            report.passed = false;
            report.first_violation = d.t;
        }
        if (d.p >= lambda) {
            spent_so_far += mode == AuditMode::base ? d.base : d.spent;
        }
        ++report.checked;
    }
    if (history.empty()) {
        report.max_excess = 0.0;
    }
    return report;
}

}  // namespace detail

/// Sufficient condition for online FWER control, checked on a realised history.
inline BudgetAudit audit_fwer_budget(std::span<const Decision> history, double lambda, double alpha,
                                     AuditMode mode = AuditMode::rewarded) {
    return detail::audit_budget(history, lambda, alpha, mode, false);
}

/// Sufficient condition for online mFDR control: the bound scales with 1 v R(T).
inline BudgetAudit audit_mfdr_budget(std::span<const Decision> history, double lambda, double alpha,
                                     AuditMode mode = AuditMode::rewarded) {
    return detail::audit_budget(history, lambda, alpha, mode, true);
}

/// Dual form of the rewarded recursion, written through the cumulative reward
/// schedule a_T = sum_{t<=T} gamma'_t:
///
///   x_T = b_T + sum_{t<T, p_t >= lambda} b_t
///             - sum_{t<T, p_t >= lambda} [(1 - a_{T-t}) x_t + a_{T-t} F_t(x_t)]
///
/// with b the base critical values. Returns x_1..x_T; quadratic cost, used as
/// an oracle for the incremental implementation.
inline std::vector<double> alpha_tilde_sequence(std::span<const double> base_values, std::span<const double> p_values,
                                                std::span<const StepCdf> bounds, const SpendingSequence& gamma_prime,
                                                double lambda, long T) {
    if (T < 1 || static_cast<std::size_t>(T) > base_values.size() ||
        static_cast<std::size_t>(T - 1) > p_values.size() || static_cast<std::size_t>(T - 1) > bounds.size()) {
        throw std::invalid_argument("alpha_tilde: prefixes shorter than T");
    }
    std::vector<double> a(static_cast<std::size_t>(T) + 1, 0.0);
    for (long t = 1; t <= T; ++t) {
        a[static_cast<std::size_t>(t)] = a[static_cast<std::size_t>(t - 1)] + gamma_prime(t);
    }
    std::vector<double> x(static_cast<std::size_t>(T), 0.0);
    for (long n = 1; n <= T; ++n) {
        double value = base_values[static_cast<std::size_t>(n - 1)];
        for (long t = 1; t < n; ++t) {
            const auto i = static_cast<std::size_t>(t - 1);
            if (p_values[i] >= lambda) {
                const double at = a[static_cast<std::size_t>(n - t)];
                value += base_values[i] - ((1.0 - at) * x[i] + at * bounds[i](x[i]));
            }
        }
        x[static_cast<std::size_t>(n - 1)] = value;
    }
    return x;
}

inline double alpha_tilde_oracle(std::span<const double> base_values, std::span<const double> p_values,
                                 std::span<const StepCdf> bounds, const SpendingSequence& gamma_prime,
                                 double lambda, long T) {
    return alpha_tilde_sequence(base_values, p_values, bounds, gamma_prime, lambda, T).back();
}

}  // namespace sure_omt
