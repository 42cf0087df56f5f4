#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "sure_omt/evaluate.hpp"
#include "test_support.hpp"

using namespace sure_omt;

namespace {

Decision decision(long t, bool reject) {
    Decision d;
    d.t = t;
    d.reject = reject;
    return d;
}

// Outcome for a stream of length n with the given rejections and alternatives.
TrialOutcome outcome(long n, const std::vector<long>& rejected, const std::vector<long>& alternatives,
                     const std::vector<long>& checkpoints) {
    std::vector<Decision> h;
    std::vector<Label> labels;
    for (long t = 1; t <= n; ++t) {
        h.push_back(decision(t, std::find(rejected.begin(), rejected.end(), t) != rejected.end()));
        labels.push_back(std::find(alternatives.begin(), alternatives.end(), t) != alternatives.end()
                             ? Label::alternative
                             : Label::null);
    }
    return make_outcome(h, labels, checkpoints);
}

}  // namespace

TEST(Outcome, CountsAccumulateOverCheckpoints) {
    const auto o = outcome(10, {2, 5, 9}, {5, 9}, {3, 6, 10});
    EXPECT_EQ(o.at(3).rejections, 1);
    EXPECT_EQ(o.at(3).false_rejections, 1);
    EXPECT_EQ(o.at(6).rejections, 2);
    EXPECT_EQ(o.at(6).true_rejections, 1);
    EXPECT_EQ(o.at(10).true_rejections, 2);
    EXPECT_EQ(o.n_alternatives, 2);
    EXPECT_THROW(o.at(4), std::out_of_range);
}

TEST(Estimators, PerfectDetectorHasFullPowerAndNoErrors) {
    const std::vector<long> cps{20};
    std::vector<TrialOutcome> trials(5, outcome(20, {3, 7, 11}, {3, 7, 11}, cps));
    EXPECT_EQ(estimate_power(trials, 20).value, 1.0);
    EXPECT_EQ(estimate_fwer(trials, 20).value, 0.0);
    EXPECT_EQ(estimate_mfdr(trials, 20).value, 0.0);
}

TEST(Estimators, NoAlternativesGiveZeroPower) {
    const std::vector<long> cps{5};
    std::vector<TrialOutcome> trials(3, outcome(5, {1}, {}, cps));
    EXPECT_EQ(estimate_power(trials, 5).value, 0.0);
    EXPECT_EQ(estimate_fwer(trials, 5).value, 1.0);
}

TEST(Estimators, AllNullNoRejectionsIsZeroMfdr) {
    const std::vector<long> cps{5};
    std::vector<TrialOutcome> trials(4, outcome(5, {}, {}, cps));
    const auto m = estimate_mfdr(trials, 5);
    EXPECT_EQ(m.value, 0.0);
    EXPECT_EQ(m.se, 0.0);
}

TEST(Estimators, HandComputedValues) {
    const std::vector<long> cps{4};
    std::vector<TrialOutcome> trials = {outcome(4, {1, 2}, {2}, cps), outcome(4, {}, {2}, cps),
                                        outcome(4, {1, 3, 4}, {4}, cps), outcome(4, {2}, {2}, cps)};
    // FWER: trials 1 and 3 have a false rejection
    EXPECT_DOUBLE_EQ(estimate_fwer(trials, 4).value, 0.5);
    EXPECT_DOUBLE_EQ(estimate_fwer(trials, 4).se, std::sqrt(0.25 / 4));
    // mFDR: (1 + 0 + 2 + 0) / (2 + 1 + 3 + 1)
    EXPECT_DOUBLE_EQ(estimate_mfdr(trials, 4).value, 3.0 / 7.0);
    // power: mean(1, 0, 1, 1)
    EXPECT_DOUBLE_EQ(estimate_power(trials, 4).value, 0.75);
    EXPECT_DOUBLE_EQ(estimate_power(trials, 4).se, 0.25);
}

TEST(Estimators, MfdrInvariantToTrialOrder) {
    std::mt19937_64 rng(31);
    std::bernoulli_distribution coin(0.2);
    const std::vector<long> cps{25, 50};
    std::vector<TrialOutcome> trials;
    for (int i = 0; i < 200; ++i) {
        std::vector<long> rej, alt;
        for (long t = 1; t <= 50; ++t) {
            if (coin(rng)) rej.push_back(t);
            if (coin(rng)) alt.push_back(t);
        }
        trials.push_back(outcome(50, rej, alt, cps));
    }
    const auto a = estimate_mfdr(trials, 50);
    std::shuffle(trials.begin(), trials.end(), rng);
    const auto b = estimate_mfdr(trials, 50);
    EXPECT_EQ(a.value, b.value);
    EXPECT_GT(a.se, 0.0);
}

TEST(Estimators, MissingLabelsRejectedForPower) {
    std::vector<Decision> h{decision(1, true)};
    const std::vector<long> cps{1};
    std::vector<TrialOutcome> trials{make_outcome(h, {}, cps)};
    EXPECT_THROW(estimate_power(trials, 1), std::invalid_argument);
    EXPECT_EQ(estimate_fwer(trials, 1).value, 0.0);
}

TEST(Estimators, MonotoneInCheckpointPerTrial) {
    const auto o = outcome(30, {2, 9, 15, 22}, {9, 22}, {10, 20, 30});
    EXPECT_LE(o.at(10).false_rejections, o.at(20).false_rejections);
    EXPECT_LE(o.at(20).false_rejections, o.at(30).false_rejections);
    EXPECT_LE(o.at(10).true_rejections, o.at(30).true_rejections);
}

TEST(Report, CsvRowsCoverEveryMetric) {
    const std::vector<long> cps{2, 4};
    std::vector<TrialOutcome> trials = {outcome(4, {1}, {1}, cps), outcome(4, {2}, {1}, cps)};
    auto r = summarize("rho-ob", trials, cps);
    r.axis = "pi_a";
    r.point = "0.3";
    std::ostringstream out;
    const std::vector<EvalReport> reps{r};
    write_report_csv(out, reps);
    const std::string text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "procedure,axis,value,metric,checkpoint,estimate,se,n_trials");
    EXPECT_NE(text.find("rho-ob,pi_a,0.3,fwer,4,0.5,"), std::string::npos);
    EXPECT_NE(text.find("rho-ob,pi_a,0.3,mfdr,2,"), std::string::npos);
    EXPECT_NE(text.find("rho-ob,pi_a,0.3,power,4,0.5,"), std::string::npos);
    const auto js = report_json(reps);
    EXPECT_EQ(js.size(), report_rows(reps).size());
    EXPECT_EQ(js[0]["metric"], "fwer");
}

TEST(Wealth, IdentityBoundsNominalEqualsEffective) {
    const std::vector<StepCdf> bounds(200, StepCdf::identity());
    const auto w = wealth_curves(SpendingSequence::power_law(1.6), SpendingSequence::kernel(10), 0.2, bounds, 200);
    EXPECT_EQ(w.nominal, w.effective);
    EXPECT_EQ(w.nominal, w.effective_rewarded);
}

TEST(Wealth, SupportOneKeepsFullWealth) {
    const std::vector<StepCdf> bounds(100, StepCdf({1.0}));
    const auto w = wealth_curves(SpendingSequence::power_law(1.6), SpendingSequence::kernel(10), 0.2, bounds, 100);
    for (double x : w.effective) {
        EXPECT_EQ(x, 0.2);
    }
    EXPECT_LT(w.nominal.back(), 0.2);
}

TEST(Wealth, NominalNeverAboveEffectiveAndStaysNonnegative) {
    std::mt19937_64 rng(32);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<StepCdf> bounds;
        for (int t = 0; t < 300; ++t) {
            bounds.push_back(test::random_bound(rng));
        }
        const auto w =
            wealth_curves(SpendingSequence::power_law(1.6), SpendingSequence::kernel(100), 0.2, bounds, 300);
        for (std::size_t t = 0; t < 300; ++t) {
            ASSERT_LE(w.nominal[t], w.effective[t]);
            ASSERT_GE(w.nominal[t], 0.0);
            ASSERT_GE(w.effective_rewarded[t], 0.0);
        }
    }
}

TEST(Wealth, HorizonBeyondBoundsThrows) {
    const std::vector<StepCdf> bounds(3, StepCdf::identity());
    EXPECT_THROW(wealth_curves(SpendingSequence::power_law(1.6), SpendingSequence::greedy(), 0.2, bounds, 4),
                 std::invalid_argument);
}
