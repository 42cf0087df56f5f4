#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sure_omt/core.hpp"

namespace sure_omt {

/// 2x2 table of counts: row 1 is group A (success a, failure b), row 2 is
/// group B (success c, failure d).
struct ContingencyTable2x2 {
    long a = 0;
    long b = 0;
    long c = 0;
    long d = 0;

    long row1() const noexcept { return a + b; }
    long row2() const noexcept { return c + d; }
    long col1() const noexcept { return a + c; }
    long total() const noexcept { return a + b + c + d; }

    friend bool operator==(const ContingencyTable2x2&, const ContingencyTable2x2&) = default;
};

/// Fixed margins of a 2x2 table; cell a then follows a hypergeometric law.
struct Margins {
    long row1 = 0;
    long row2 = 0;
    long col1 = 0;

    long min_k() const noexcept { return std::max(0L, col1 - row2); }
    long max_k() const noexcept { return std::min(row1, col1); }

    friend auto operator<=>(const Margins&, const Margins&) = default;
};

inline Margins margins_of(const ContingencyTable2x2& t) { return {t.row1(), t.row2(), t.col1()}; }

struct ExactTestResult {
    double p_value = 1.0;
    std::vector<double> support;  ///< achievable p-values, increasing, last = 1
    StepCdf null_bound = StepCdf::identity();
};

namespace detail {

inline double log_choose(long n, long k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline void check_margins(const Margins& m) {
    if (m.row1 < 0 || m.row2 < 0 || m.col1 < 0 || m.col1 > m.row1 + m.row2) {
        throw std::invalid_argument("inconsistent margins");
    }
}

}  // namespace detail

/// P(a = k) given the margins.
inline double hypergeom_pmf(long k, const Margins& m) {
    detail::check_margins(m);
    if (k < m.min_k() || k > m.max_k()) {
        throw std::out_of_range("cell count " + std::to_string(k) + " outside feasible range [" +
                                std::to_string(m.min_k()) + ", " + std::to_string(m.max_k()) + "]");
    }
    const double lp = detail::log_choose(m.row1, k) + detail::log_choose(m.row2, m.col1 - k) -
                      detail::log_choose(m.row1 + m.row2, m.col1);
    return std::exp(lp);
}

/// Two-sided Fisher test for every feasible cell value of one margin triple.
///
/// The p-value of k is the total probability of outcomes no more likely than k,
/// with a relative tolerance of 1e-7 when comparing probabilities. Sums run in
/// ascending probability order.
class FisherDistribution {
public:
    static constexpr double kRelTol = 1e-7;

    explicit FisherDistribution(const Margins& m) : margins_(m) {
        detail::check_margins(m);
        const long lo = m.min_k();
        const long hi = m.max_k();
        const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
        std::vector<double> pmf(n);
        for (std::size_t i = 0; i < n; ++i) {
            pmf[i] = hypergeom_pmf(lo + static_cast<long>(i), m);
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return pmf[x] < pmf[y]; });
        std::vector<double> sorted(n), cumulative(n);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sorted[j] = pmf[order[j]];
            acc += sorted[j];
            cumulative[j] = acc;
        }
        p_by_k_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double threshold = pmf[i] * (1.0 + kRelTol);
            const auto last = std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin() - 1;
            const auto idx = static_cast<std::size_t>(last);
            p_by_k_[i] = idx + 1 == n ? 1.0 : std::min(1.0, cumulative[idx]);
        }
        support_ = p_by_k_;
        std::sort(support_.begin(), support_.end());
        support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
    }

    const Margins& margins() const noexcept { return margins_; }

    double p_value(long k) const {
        if (k < margins_.min_k() || k > margins_.max_k()) {
            throw std::out_of_range("cell count outside feasible range");
        }
        return p_by_k_[static_cast<std::size_t>(k - margins_.min_k())];
    }

    const std::vector<double>& support() const noexcept { return support_; }

private:
    Margins margins_;
    std::vector<double> p_by_k_;
    std::vector<double> support_;
};

/// Per-thread cache of Fisher distributions keyed by margins.
inline std::shared_ptr<const FisherDistribution> fisher_distribution(const Margins& m) {
    thread_local std::map<Margins, std::shared_ptr<const FisherDistribution>> cache;
    auto it = cache.find(m);
    if (it == cache.end()) {
        it = cache.emplace(m, std::make_shared<const FisherDistribution>(m)).first;
    }
    return it->second;
}

/// Step bound whose jumps are the given achievable p-values (1 appended when
/// absent, {1} when empty).
inline StepCdf support_to_bound(const std::vector<double>& support) { return StepCdf(support); }

inline ExactTestResult fisher_two_sided(const ContingencyTable2x2& table) {
    if (table.a < 0 || table.b < 0 || table.c < 0 || table.d < 0) {
        throw std::invalid_argument("negative cell count");
    }
    const auto dist = fisher_distribution(margins_of(table));
    ExactTestResult r;
    r.p_value = dist->p_value(table.a);
    r.support = dist->support();
    r.null_bound = support_to_bound(r.support);
    return r;
}

}  // namespace sure_omt
