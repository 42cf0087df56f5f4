#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sure_omt {

/// Ground-truth status of a hypothesis; only used for evaluation.
enum class Label { null, alternative };

/// Right-continuous step function bounding the CDF of a discrete null p-value.
///
/// F(u) is the largest support point <= min(u, 1), or 0 when no support point
/// qualifies. The value 1 is always part of the support since any valid bound
/// must reach F(1) = 1. The identity bound F(u) = min(u, 1) is a distinct flag
/// rather than a dense support, so un-rewarded behaviour stays bit-exact.
class StepCdf {
public:
    /// Builds a step bound from jump points in (0, 1]. Input may be unsorted and
    /// may contain duplicates; 1 is appended when absent.
    explicit StepCdf(std::vector<double> support) : support_(std::move(support)) {
        for (double s : support_) {
            if (!(s > 0.0 && s <= 1.0)) {
                throw std::invalid_argument("StepCdf: support point outside (0, 1]");
            }
        }
        std::sort(support_.begin(), support_.end());
        support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
        if (support_.empty() || support_.back() != 1.0) {
            support_.push_back(1.0);
        }
    }

    StepCdf(std::initializer_list<double> support) : StepCdf(std::vector<double>(support)) {}

    static StepCdf identity() {
        StepCdf cdf(std::vector<double>{1.0});
        cdf.identity_ = true;
        return cdf;
    }

    bool is_identity() const noexcept { return identity_; }

    /// Jump points, strictly increasing, last element 1. For the identity
    /// bound this is {1} and carries no information.
    const std::vector<double>& support() const noexcept { return support_; }

    double operator()(double u) const noexcept {
        if (!(u > 0.0)) {
            return 0.0;
        }
        const double v = std::min(u, 1.0);
        if (identity_) {
            return v;
        }
        auto it = std::upper_bound(support_.begin(), support_.end(), v);
        return it == support_.begin() ? 0.0 : *std::prev(it);
    }

    friend bool operator==(const StepCdf& a, const StepCdf& b) {
        return a.identity_ == b.identity_ && a.support_ == b.support_;
    }

private:
    std::vector<double> support_;
    bool identity_ = false;
};

/// Evaluates a null bound at u (values above 1 read as F(1)).
inline double step_cdf_eval(const StepCdf& cdf, double u) { return cdf(u); }

/// Super-uniformity reward: the part of the nominal level a test cannot spend.
inline double sure_reward(double alpha, const StepCdf& cdf) {
    if (cdf.is_identity()) {
        // alpha - min(alpha, 1), exactly zero for alpha <= 1
        return alpha > 1.0 ? alpha - 1.0 : 0.0;
    }
    return alpha - cdf(alpha);
}

/// One element of a p-value stream.
struct StreamRecord {
    long t = 0;
    double p = 1.0;
    StepCdf null_bound = StepCdf::identity();
    std::optional<Label> label;
};

/// Outcome of one step of an online procedure.
///
/// alpha = base + sure + epsilon, where base is the un-rewarded critical value
/// computed on this procedure's own history.
struct Decision {
    long t = 0;
    double p = 1.0;
    double alpha = 0.0;
    bool reject = false;
    double rho = 0.0;      ///< alpha - F_t(alpha)
    double base = 0.0;     ///< alpha^0_t
    double sure = 0.0;     ///< smoothed reward from earlier steps
    double epsilon = 0.0;  ///< adaptive carry from step t-1
    double spent = 0.0;    ///< F_t(alpha_t)
};

}  // namespace sure_omt
