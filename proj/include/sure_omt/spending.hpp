#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sure_omt {

/// Convergence record for the normalising constant of an infinite family.
///
/// The constant is partial_sum + tail_estimate; the true series value lies in
/// [partial_sum + tail_lower, partial_sum + tail_upper] because the summand is
/// decreasing and convex past the truncation horizon.
struct NormalizationCertificate {
    long horizon = 0;
    double partial_sum = 0.0;
    double tail_estimate = 0.0;
    double tail_lower = 0.0;
    double tail_upper = 0.0;

    double constant() const noexcept { return partial_sum + tail_estimate; }
};

namespace detail {

// Unnormalised summands of the three infinite families, evaluated on a
// continuous argument x >= 1, with derivative and integral tail.
struct PowerLawTerm {
    double q;
    double f(double x) const { return std::pow(x, -q); }
    double df(double x) const { return -q * std::pow(x, -q - 1.0); }
    double tail(double x) const { return std::pow(x, 1.0 - q) / (q - 1.0); }
};

struct LogFamilyTerm {
    double q;
    double f(double x) const {
        const double y = x + 1.0;
        return 1.0 / (y * std::pow(std::log(y), q));
    }
    double df(double x) const {
        const double y = x + 1.0;
        const double l = std::log(y);
        return -(1.0 + q / l) / (y * y * std::pow(l, q));
    }
    double tail(double x) const { return std::pow(std::log(x + 1.0), 1.0 - q) / (q - 1.0); }
};

struct JmFamilyTerm {
    double f(double x) const {
        const double y = x + 1.0;
        const double u = std::log(std::max(y, 2.0));
        return u / (y * std::exp(std::sqrt(std::log(y))));
    }
    double df(double x) const {
        const double y = x + 1.0;
        const double u = std::log(y);
        const double r = std::sqrt(u);
        return std::exp(-r) * (1.0 - r / 2.0 - u) / (y * y);
    }
    double tail(double x) const {
        const double r = std::sqrt(std::log(x + 1.0));
        return 2.0 * std::exp(-r) * (((r + 3.0) * r + 6.0) * r + 6.0);
    }
};

// Partial sum to `horizon` plus an Euler-Maclaurin tail (integral, half term
// and first-derivative correction).
template <class Term>
NormalizationCertificate certify(const Term& term, long horizon) {
    long double partial = 0.0L;
    for (long t = horizon; t >= 1; --t) {
        partial += term.f(static_cast<double>(t));
    }
    const double n = static_cast<double>(horizon);
    NormalizationCertificate cert;
    cert.horizon = horizon;
    cert.partial_sum = static_cast<double>(partial);
    cert.tail_estimate = term.tail(n) - term.f(n) / 2.0 - term.df(n) / 12.0;
    cert.tail_lower = term.tail(n + 1.0);
    cert.tail_upper = term.tail(n + 0.5);
    return cert;
}

inline NormalizationCertificate cached_certificate(int family, double q) {
    static std::mutex mutex;
    static std::map<std::pair<int, double>, NormalizationCertificate> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(family, q);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    constexpr long kHorizon = 100000;
    NormalizationCertificate cert;
    switch (family) {
        case 0: cert = certify(PowerLawTerm{q}, kHorizon); break;
        case 1: cert = certify(LogFamilyTerm{q}, kHorizon); break;
        default: cert = certify(JmFamilyTerm{}, kHorizon); break;
    }
    cache.emplace(key, cert);
    return cert;
}

inline constexpr long kTermTableSize = 1L << 17;

// Normalised leading terms of an infinite family, shared by all copies.
template <class Term>
std::shared_ptr<const std::vector<double>> cached_terms(int family, double q, const Term& term, double norm) {
    static std::mutex mutex;
    static std::map<std::pair<int, double>, std::shared_ptr<const std::vector<double>>> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(family, q);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(kTermTableSize));
    for (long t = 1; t <= kTermTableSize; ++t) {
        (*table)[static_cast<std::size_t>(t - 1)] = term.f(static_cast<double>(t)) / norm;
    }
    cache.emplace(key, table);
    return table;
}

}  // namespace detail

/// Nonnegative sequence gamma_1, gamma_2, ... with sum at most 1; gamma_t = 0
/// for t <= 0. Used both as the spending sequence of a base procedure and as
/// the schedule along which rewards are redistributed.
class SpendingSequence {
public:
    enum class Kind { power_law, log_family, jm_family, kernel, greedy, explicit_values };

    static SpendingSequence power_law(double q) {
        if (!(q > 1.0)) {
            throw std::invalid_argument("power-law spending needs q > 1");
        }
        SpendingSequence s(Kind::power_law);
        s.q_ = q;
        s.cert_ = detail::cached_certificate(0, q);
        s.norm_ = s.cert_.constant();
        s.table_ = detail::cached_terms(0, q, detail::PowerLawTerm{q}, s.norm_);
        return s;
    }

    static SpendingSequence log_family(double q) {
        if (!(q > 1.0)) {
            throw std::invalid_argument("log-family spending needs q > 1");
        }
        SpendingSequence s(Kind::log_family);
        s.q_ = q;
        s.cert_ = detail::cached_certificate(1, q);
        s.norm_ = s.cert_.constant();
        s.table_ = detail::cached_terms(1, q, detail::LogFamilyTerm{q}, s.norm_);
        return s;
    }

    static SpendingSequence jm_family() {
        SpendingSequence s(Kind::jm_family);
        s.cert_ = detail::cached_certificate(2, 0.0);
        s.norm_ = s.cert_.constant();
        s.table_ = detail::cached_terms(2, 0.0, detail::JmFamilyTerm{}, s.norm_);
        return s;
    }

    /// Rectangular kernel: 1/h on 1..h.
    static SpendingSequence kernel(long h) {
        if (h < 1) {
            throw std::invalid_argument("kernel bandwidth must be >= 1");
        }
        SpendingSequence s(Kind::kernel);
        s.h_ = h;
        return s;
    }

    /// (1, 0, 0, ...): the whole reward goes to the next step.
    static SpendingSequence greedy() {
        SpendingSequence s = explicit_values({1.0});
        s.kind_ = Kind::greedy;
        return s;
    }

    /// Finite list, zero afterwards. Not checked here; see validate_sequence.
    static SpendingSequence explicit_values(std::vector<double> values) {
        SpendingSequence s(Kind::explicit_values);
        s.prefix_.resize(values.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            acc += values[i];
            s.prefix_[i] = acc;
        }
        s.values_ = std::move(values);
        return s;
    }

    Kind kind() const noexcept { return kind_; }
    double q() const noexcept { return q_; }
    long bandwidth() const noexcept { return h_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Normalising constant (1 for finite kinds).
    double normalization() const noexcept { return norm_; }
    const NormalizationCertificate& certificate() const noexcept { return cert_; }

    /// Number of leading terms that can be nonzero; 0 means unbounded.
    long support_length() const noexcept {
        switch (kind_) {
            case Kind::kernel: return h_;
            case Kind::greedy:
            case Kind::explicit_values: return static_cast<long>(values_.size());
            default: return 0;
        }
    }

    double operator()(long t) const {
        if (t <= 0) {
            return 0.0;
        }
        if (table_ && t <= detail::kTermTableSize) {
            return (*table_)[static_cast<std::size_t>(t - 1)];
        }
        const double x = static_cast<double>(t);
        switch (kind_) {
            case Kind::power_law: return detail::PowerLawTerm{q_}.f(x) / norm_;
            case Kind::log_family: return detail::LogFamilyTerm{q_}.f(x) / norm_;
            case Kind::jm_family: return detail::JmFamilyTerm{}.f(x) / norm_;
            case Kind::kernel: return t <= h_ ? 1.0 / static_cast<double>(h_) : 0.0;
            case Kind::greedy:
            case Kind::explicit_values:
                return static_cast<std::size_t>(t) <= values_.size() ? values_[t - 1] : 0.0;
        }
        return 0.0;
    }

    /// a_T = sum_{t <= T} gamma_t.
    double prefix_sum(long T) const {
        if (T <= 0) {
            return 0.0;
        }
        switch (kind_) {
            case Kind::kernel:
                return static_cast<double>(std::min(T, h_)) / static_cast<double>(h_);
            case Kind::greedy:
            case Kind::explicit_values:
                if (values_.empty()) {
                    return 0.0;
                }
                return prefix_[std::min<std::size_t>(static_cast<std::size_t>(T), prefix_.size()) - 1];
            default: {
                long double acc = 0.0L;
                for (long t = T; t >= 1; --t) {
                    acc += (*this)(t);
                }
                return static_cast<double>(acc);
            }
        }
    }

    /// Upper bound on sum_{t > T} gamma_t. For the infinite families each
    /// term is at most the integral over [t - 1/2, t + 1/2] by convexity (the
    /// JM summand is convex from about t = 1.7 on, so use T >= 2 there).
    double tail_bound(long T) const {
        const double x = static_cast<double>(std::max<long>(T, 1)) + 0.5;
        switch (kind_) {
            case Kind::power_law: return detail::PowerLawTerm{q_}.tail(x) / norm_;
            case Kind::log_family: return detail::LogFamilyTerm{q_}.tail(x) / norm_;
            case Kind::jm_family: return detail::JmFamilyTerm{}.tail(x) / norm_;
            default: return T >= support_length() ? 0.0 : prefix_sum(support_length()) - prefix_sum(T);
        }
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::power_law: return "power(q=" + std::to_string(q_) + ")";
            case Kind::log_family: return "log(q=" + std::to_string(q_) + ")";
            case Kind::jm_family: return "jm";
            case Kind::kernel: return "kernel(h=" + std::to_string(h_) + ")";
            case Kind::greedy: return "greedy";
            case Kind::explicit_values: return "explicit(n=" + std::to_string(values_.size()) + ")";
        }
        return "?";
    }

private:
    explicit SpendingSequence(Kind kind) : kind_(kind) {}

    Kind kind_;
    double q_ = 0.0;
    long h_ = 0;
    double norm_ = 1.0;
    NormalizationCertificate cert_{};
    std::vector<double> values_;
    std::vector<double> prefix_;
    std::shared_ptr<const std::vector<double>> table_;
};

inline double spending_eval(const SpendingSequence& seq, long t) { return seq(t); }

inline SpendingSequence make_power_law(double q) { return SpendingSequence::power_law(q); }
inline SpendingSequence make_log_family(double q) { return SpendingSequence::log_family(q); }
inline SpendingSequence make_jm_family() { return SpendingSequence::jm_family(); }
inline SpendingSequence make_kernel(long h) { return SpendingSequence::kernel(h); }

struct SequenceValidation {
    bool passed = false;
    long horizon = 0;
    long first_negative = 0;     ///< 0 when all terms are nonnegative
    double prefix_at_horizon = 0.0;
    double max_prefix = 0.0;
    double tail_bound = 0.0;     ///< certified bound on the remaining mass
    double total_bound = 0.0;    ///< max_prefix + tail_bound
};

/// Checks nonnegativity and that the running total never exceeds 1 (+1e-9),
/// up to `horizon` and through the analytic tail where one exists.
inline SequenceValidation validate_sequence(const SpendingSequence& seq, long horizon) {
    constexpr double kSlack = 1e-9;
    SequenceValidation v;
    v.horizon = horizon;
    long double acc = 0.0L;
    const long stop = seq.support_length() > 0 ? std::min(horizon, seq.support_length()) : horizon;
    for (long t = 1; t <= stop; ++t) {
        const double g = seq(t);
        if (g < 0.0 && v.first_negative == 0) {
            v.first_negative = t;
        }
        acc += g;
        v.max_prefix = std::max(v.max_prefix, static_cast<double>(acc));
    }
    v.prefix_at_horizon = static_cast<double>(acc);
    if (seq.support_length() > 0) {
        // remaining finite terms beyond the horizon, if any
        long double rest = 0.0L;
        for (long t = stop + 1; t <= seq.support_length(); ++t) {
            if (seq(t) < 0.0 && v.first_negative == 0) {
                v.first_negative = t;
            }
            rest += std::max(seq(t), 0.0);
        }
        v.tail_bound = static_cast<double>(rest);
    } else {
        v.tail_bound = seq.tail_bound(horizon);
    }
    v.total_bound = std::max(v.max_prefix, v.prefix_at_horizon + v.tail_bound);
    v.passed = v.first_negative == 0 && v.total_bound <= 1.0 + kSlack;
    return v;
}

}  // namespace sure_omt
