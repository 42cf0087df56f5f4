#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "sure_omt/audit.hpp"
#include "sure_omt/procedures.hpp"
#include "test_support.hpp"

using namespace sure_omt;

namespace {

// gamma_t = 2^{-t}, truncated where it underflows to nothing useful
SpendingSequence halving() {
    std::vector<double> v;
    for (int t = 1; t <= 60; ++t) {
        v.push_back(std::ldexp(1.0, -t));
    }
    return SpendingSequence::explicit_values(v);
}

ProcedureConfig config(SpendingSequence gp = SpendingSequence::kernel(10)) {
    ProcedureConfig c;
    c.alpha = 0.2;
    c.lambda = 0.5;
    c.w0 = 0.1;
    c.gamma = SpendingSequence::power_law(1.6);
    c.gamma_prime = std::move(gp);
    return c;
}

std::vector<Decision> run(ProcedureKind kind, const ProcedureConfig& c, const test::Stream& s) {
    auto proc = make_procedure(kind, c);
    return run_stream(proc, s.p, s.bounds);
}

constexpr ProcedureKind kRewarded[] = {ProcedureKind::rho_ob, ProcedureKind::rho_aob, ProcedureKind::rho_lord,
                                       ProcedureKind::rho_alord};

// Worked example stream: filled = p < lambda, and rejections at 4, 8, 9.
constexpr bool kSmall[] = {true, true, false, false, true, false, false, true, false};
constexpr bool kReject[] = {false, false, false, true, false, false, false, true, true};

}  // namespace

TEST(Names, RoundTrip) {
    for (auto k : kAllProcedures) {
        EXPECT_EQ(parse_procedure(to_string(k)), k);
    }
    EXPECT_EQ(to_string(ProcedureKind::rho_alord), "rho-alord");
    EXPECT_THROW(parse_procedure("addis"), std::invalid_argument);
}

TEST(Names, Classification) {
    EXPECT_TRUE(is_rewarded(ProcedureKind::rho_aob));
    EXPECT_FALSE(is_rewarded(ProcedureKind::saffron_capped));
    EXPECT_TRUE(is_adaptive(ProcedureKind::saffron_capped));
    EXPECT_FALSE(is_adaptive(ProcedureKind::rho_lord));
    EXPECT_TRUE(is_investing(ProcedureKind::alord));
    EXPECT_FALSE(is_investing(ProcedureKind::rho_ob));
    EXPECT_EQ(base_of(ProcedureKind::rho_alord), ProcedureKind::alord);
}

TEST(Config, Validation) {
    auto c = config();
    EXPECT_NO_THROW(c.validate(ProcedureKind::rho_lord));
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(ProcedureKind::ob), std::invalid_argument);
    c = config();
    c.lambda = 1.0;
    EXPECT_THROW(c.validate(ProcedureKind::aob), std::invalid_argument);
    c = config();
    c.w0 = 0.2;
    EXPECT_THROW(c.validate(ProcedureKind::lord), std::invalid_argument);
    EXPECT_NO_THROW(c.validate(ProcedureKind::ob));
    c = config();
    c.gamma_prime.reset();
    EXPECT_THROW(c.validate(ProcedureKind::rho_ob), std::invalid_argument);
    EXPECT_NO_THROW(c.validate(ProcedureKind::ob));
}

TEST(StepProtocol, OutOfOrderCallsThrow) {
    auto proc = make_procedure(ProcedureKind::ob, config());
    EXPECT_THROW(proc.observe(0.5, StepCdf::identity()), std::logic_error);
    proc.emit_alpha();
    EXPECT_THROW(proc.emit_alpha(), std::logic_error);
    EXPECT_THROW(proc.observe(1.5, StepCdf::identity()), std::invalid_argument);
    EXPECT_NO_THROW(proc.observe(0.5, StepCdf::identity()));
    EXPECT_EQ(proc.history().size(), 1u);
}

TEST(Golden, RewardedOnlineBonferroniGreedy) {
    auto c = config(SpendingSequence::greedy());
    c.gamma = halving();
    auto proc = make_procedure(ProcedureKind::rho_ob, c);
    const StepCdf F({0.15});
    EXPECT_DOUBLE_EQ(proc.step(1.0, F).alpha, 0.1);
    EXPECT_DOUBLE_EQ(proc.step(1.0, F).alpha, 0.15);
    // 0.05 + 0.1 rounds just above 0.15, leaving a reward of one ulp
    EXPECT_NEAR(proc.step(1.0, F).alpha, 0.025, 1e-15);
}

TEST(Golden, RewardedOnlineBonferroniKernelTwo) {
    auto c = config(SpendingSequence::kernel(2));
    c.gamma = halving();
    auto proc = make_procedure(ProcedureKind::rho_ob, c);
    const StepCdf F({0.15});
    EXPECT_DOUBLE_EQ(proc.step(1.0, F).alpha, 0.1);
    EXPECT_DOUBLE_EQ(proc.step(1.0, F).alpha, 0.1);
    EXPECT_DOUBLE_EQ(proc.step(1.0, F).alpha, 0.125);
}

TEST(Golden, Lord) {
    auto c = config();
    c.gamma = halving();
    auto proc = make_procedure(ProcedureKind::lord, c);
    const auto I = StepCdf::identity();
    const auto d1 = proc.step(0.9, I);
    EXPECT_DOUBLE_EQ(d1.alpha, 0.05);
    const auto d2 = proc.step(0.01, I);
    EXPECT_DOUBLE_EQ(d2.alpha, 0.025);
    EXPECT_TRUE(d2.reject);
    const auto d3 = proc.step(0.06, I);
    EXPECT_DOUBLE_EQ(d3.alpha, 0.0625);
    EXPECT_TRUE(d3.reject);
    EXPECT_DOUBLE_EQ(proc.step(0.9, I).alpha, 0.13125);
}

TEST(Golden, RewardedLordFirstStepMatchesLord) {
    const StepCdf F({0.1});
    auto rl = make_procedure(ProcedureKind::rho_lord, config());
    auto l = make_procedure(ProcedureKind::lord, config());
    const double a = rl.emit_alpha();
    EXPECT_EQ(a, l.emit_alpha());
    EXPECT_EQ(a, 0.1 * SpendingSequence::power_law(1.6)(1));
    EXPECT_FALSE(rl.observe(0.1, F).reject);
}

TEST(Golden, AdaptiveBonferroniOnWorkedExample) {
    auto c = config();
    c.gamma = halving();
    ProcedureState s(0.5, std::nullopt);
    for (int t = 0; t < 3; ++t) {
        Decision d;
        d.t = t + 1;
        d.p = kSmall[t] ? 0.1 : 0.7;
        d.reject = kReject[t];
        s.record(d);
    }
    EXPECT_EQ(s.clock(0), 2);
    EXPECT_DOUBLE_EQ(next_alpha_aob(s, c), 0.025);
}

TEST(Clocks, WorkedExampleTable) {
    const long T0[] = {1, 1, 1, 2, 3, 3, 4, 5, 5};
    const long T1[] = {0, 0, 0, 0, 1, 1, 2, 3, 3};
    const long T2[] = {0, 0, 0, 0, 0, 0, 0, 0, 1};
    ProcedureState s(0.5, std::nullopt);
    std::vector<double> p;
    std::vector<long> taus = {4, 8, 9};
    for (int t = 0; t < 9; ++t) {
        EXPECT_EQ(s.clock(0), T0[t]) << "t=" << t + 1;
        EXPECT_EQ(s.clock(1), T1[t]) << "t=" << t + 1;
        EXPECT_EQ(s.clock(2), T2[t]) << "t=" << t + 1;
        Decision d;
        d.t = t + 1;
        d.p = kSmall[t] ? 0.1 : 0.7;
        d.reject = kReject[t];
        s.record(d);
        p.push_back(d.p);
    }
    for (long T = 1; T <= 9; ++T) {
        EXPECT_EQ(reindex_clock(p, taus, 0.5, 0, T), T0[T - 1]);
        EXPECT_EQ(reindex_clock(p, taus, 0.5, 1, T), T1[T - 1]);
        EXPECT_EQ(reindex_clock(p, taus, 0.5, 2, T), T2[T - 1]);
    }
}

TEST(Clocks, IncrementalMatchesRecomputation) {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const auto s = test::random_stream(rng, 150);
        auto proc = make_procedure(ProcedureKind::rho_alord, config());
        std::vector<double> p;
        std::vector<long> taus;
        for (std::size_t i = 0; i < s.p.size(); ++i) {
            const long T = static_cast<long>(i) + 1;
            for (long j = 0; j <= static_cast<long>(taus.size()) + 1; ++j) {
                ASSERT_EQ(proc.state().clock(j), reindex_clock(p, taus, 0.5, j, T)) << "j=" << j << " T=" << T;
            }
            const auto d = proc.step(s.p[i], s.bounds[i]);
            p.push_back(d.p);
            if (d.reject) {
                taus.push_back(T);
            }
        }
    }
}

TEST(Reductions, IdentityBoundsGiveBaseProcedureBitExactly) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        const auto s = test::identity_stream(rng, 200);
        for (auto kind : kRewarded) {
            const auto a = test::alphas(run(kind, config(), s));
            const auto b = test::alphas(run(base_of(kind), config(), s));
            ASSERT_EQ(a, b) << to_string(kind);
        }
    }
}

TEST(Reductions, LambdaZeroCollapsesAdaptiveForms) {
    std::mt19937_64 rng(4);
    auto c = config();
    c.lambda = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
        const auto s = test::random_stream(rng, 200);
        EXPECT_EQ(test::alphas(run(ProcedureKind::rho_aob, c, s)), test::alphas(run(ProcedureKind::rho_ob, c, s)));
        EXPECT_EQ(test::alphas(run(ProcedureKind::rho_alord, c, s)),
                  test::alphas(run(ProcedureKind::rho_lord, c, s)));
        EXPECT_EQ(test::alphas(run(ProcedureKind::aob, c, s)), test::alphas(run(ProcedureKind::ob, c, s)));
        EXPECT_EQ(test::alphas(run(ProcedureKind::alord, c, s)), test::alphas(run(ProcedureKind::lord, c, s)));
    }
}

TEST(Reductions, NonAdaptiveIgnoresLambda) {
    std::mt19937_64 rng(5);
    const auto s = test::random_stream(rng, 200);
    auto c0 = config();
    auto c1 = config();
    c1.lambda = 0.3;
    EXPECT_EQ(test::alphas(run(ProcedureKind::rho_lord, c0, s)), test::alphas(run(ProcedureKind::rho_lord, c1, s)));
}

TEST(Domination, RewardedLevelsNeverBelowBase) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 60; ++rep) {
        const auto s = test::random_stream(rng, 300);
        for (const auto& gp : {SpendingSequence::kernel(10), SpendingSequence::greedy(),
                               SpendingSequence::power_law(2.0)}) {
            for (auto kind : kRewarded) {
                const auto r = run(kind, config(gp), s);
                const auto b = run(base_of(kind), config(gp), s);
                for (std::size_t t = 0; t < r.size(); ++t) {
                    ASSERT_GE(r[t].alpha, b[t].alpha) << to_string(kind) << " t=" << t + 1;
                    ASSERT_GE(r[t].alpha, r[t].base);
                    if (b[t].reject) {
                        ASSERT_TRUE(r[t].reject);
                    }
                }
            }
        }
    }
}

TEST(Decomposition, AlphaIsBasePlusRewardPlusCarry) {
    std::mt19937_64 rng(8);
    const auto s = test::random_stream(rng, 300);
    for (auto kind : kRewarded) {
        const auto h = run(kind, config(), s);
        for (std::size_t t = 0; t < h.size(); ++t) {
            EXPECT_EQ(h[t].alpha, h[t].base + h[t].sure + h[t].epsilon);
            EXPECT_EQ(h[t].spent, s.bounds[t](h[t].alpha));
            EXPECT_EQ(h[t].rho, sure_reward(h[t].alpha, s.bounds[t]));
            if (t > 0) {
                const double carry = h[t - 1].p < config().lambda && is_adaptive(kind)
                                         ? h[t - 1].alpha - h[t - 1].base
                                         : 0.0;
                EXPECT_EQ(h[t].epsilon, carry) << to_string(kind) << " t=" << t + 1;
            }
        }
    }
}

TEST(Smoother, KernelWindowMatchesDirectConvolution) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (long h : {1L, 3L, 10L, 100L}) {
        RewardSmoother fast(SpendingSequence::kernel(h));
        RewardSmoother slow(SpendingSequence::explicit_values(std::vector<double>(static_cast<std::size_t>(h),
                                                                                  1.0 / static_cast<double>(h))));
        for (int t = 0; t < 2000; ++t) {
            const double a = fast.value(), b = slow.value();
            ASSERT_NEAR(a, b, 1e-14 * std::max(1.0, b)) << "h=" << h << " t=" << t;
            ASSERT_GE(a, 0.0);
            const double r = u(rng) < 0.3 ? 0.0 : u(rng);
            fast.push(r);
            slow.push(r);
        }
    }
}

TEST(DualRecursion, MatchesIncrementalForm) {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<long> len(1, 200);
    for (int rep = 0; rep < 100; ++rep) {
        const auto s = test::random_stream(rng, len(rng));
        for (const auto& gp : {SpendingSequence::kernel(7), SpendingSequence::greedy(),
                               SpendingSequence::power_law(1.6)}) {
            for (auto kind : kRewarded) {
                auto proc = make_procedure(kind, config(gp));
                const auto h = run_stream(proc, s.p, s.bounds);
                std::vector<double> base;
                for (const auto& d : h) {
                    base.push_back(d.base);
                }
                const auto x = alpha_tilde_sequence(base, s.p, s.bounds, gp, proc.lambda(),
                                                    static_cast<long>(h.size()));
                for (std::size_t t = 0; t < h.size(); ++t) {
                    ASSERT_NEAR(x[t], h[t].alpha, 1e-12) << to_string(kind) << " t=" << t + 1;
                }
            }
        }
    }
}

TEST(DualRecursion, IdentityGreedyLambdaZeroIsBase) {
    std::mt19937_64 rng(12);
    const auto s = test::identity_stream(rng, 100);
    std::vector<double> base(100);
    std::uniform_real_distribution<double> u(0.0, 0.01);
    for (auto& b : base) {
        b = u(rng);
    }
    const auto x = alpha_tilde_sequence(base, s.p, s.bounds, SpendingSequence::greedy(), 0.0, 100);
    for (std::size_t t = 0; t < x.size(); ++t) {
        EXPECT_NEAR(x[t], base[t], 1e-15);
    }
}

TEST(Reindexation, ClockSumsTelescopeExactly) {
    std::mt19937_64 rng(13);
    const auto gamma = SpendingSequence::power_law(1.6);
    for (int rep = 0; rep < 100; ++rep) {
        const auto s = test::random_stream(rng, 200);
        auto proc = make_procedure(ProcedureKind::rho_alord, config());
        run_stream(proc, s.p, s.bounds);
        const auto& taus = proc.state().rejection_times();
        const double lambda = proc.lambda();
        const long T = static_cast<long>(s.p.size());
        for (long j = 0; j <= static_cast<long>(taus.size()); ++j) {
            for (long n = (j == 0 ? 1 : taus[static_cast<std::size_t>(j - 1)] + 1); n <= T; ++n) {
                double lhs = 0.0;
                for (long t = 1; t <= n; ++t) {
                    if (s.p[static_cast<std::size_t>(t - 1)] >= lambda) {
                        lhs += gamma(reindex_clock(s.p, taus, lambda, j, t));
                    }
                }
                double rhs = 0.0;
                const long top = reindex_clock(s.p, taus, lambda, j, n + 1) - 1;
                for (long t = 1; t <= top; ++t) {
                    rhs += gamma(t);
                }
                ASSERT_EQ(lhs, rhs) << "j=" << j << " n=" << n;
            }
        }
    }
}

TEST(Predictability, LevelIgnoresCurrentAndFutureData) {
    std::mt19937_64 rng(14);
    const auto s = test::random_stream(rng, 120);
    for (auto kind : kAllProcedures) {
        auto ref = run(kind, config(), s);
        for (std::size_t cut : {0u, 17u, 63u}) {
            auto altered = s;
            for (std::size_t i = cut; i < altered.p.size(); ++i) {
                altered.p[i] = 1.0 - altered.p[i] * 0.5;
                altered.bounds[i] = StepCdf({0.5});
            }
            const auto h = run(kind, config(), altered);
            ASSERT_EQ(h[cut].alpha, ref[cut].alpha) << to_string(kind);
        }
    }
}

TEST(Saffron, CapHoldsAndDominatedByUncapped) {
    std::mt19937_64 rng(15);
    auto c = config();
    c.alpha = 0.9;
    c.w0 = 0.8;
    c.lambda = 0.1;
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = test::random_stream(rng, 200);
        const auto capped = run(ProcedureKind::saffron_capped, c, s);
        for (const auto& d : capped) {
            ASSERT_LE(d.alpha, c.lambda);
        }
    }
}

TEST(Performance, ThirtyThousandStepsUnderOneSecond) {
    std::mt19937_64 rng(16);
    const auto s = test::random_stream(rng, 30000);
    for (auto kind : {ProcedureKind::rho_lord, ProcedureKind::rho_alord, ProcedureKind::rho_aob}) {
        const auto start = std::chrono::steady_clock::now();
        const auto h = run(kind, config(SpendingSequence::kernel(10)), s);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        EXPECT_EQ(h.size(), 30000u);
        EXPECT_LT(secs, 1.0) << to_string(kind);
    }
}
