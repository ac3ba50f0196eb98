#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "adjfas/score.hpp"
#include "adjfas/sim.hpp"
#include "test_util.hpp"

using namespace adjfas;
using score::Hypothesis;

namespace {

data::Arm arm(int x, std::vector<std::int64_t> counts) {
    data::Arm a;
    a.x_value = x;
    a.total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    a.outcome_counts = std::move(counts);
    return a;
}

// log of the Dirichlet-multinomial probability of an ordered sequence.
double dirichlet_multinomial(const std::vector<double>& alpha, const std::vector<std::int64_t>& n) {
    double a0 = 0.0, n0 = 0.0, s = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        a0 += alpha[k];
        n0 += static_cast<double>(n[k]);
        s += std::lgamma(alpha[k] + n[k]) - std::lgamma(alpha[k]);
    }
    return s + std::lgamma(a0) - std::lgamma(a0 + n0);
}

sim::SimConfig preset(sim::WorldMode mode, int per_arm, std::uint64_t seed) {
    sim::SimConfig c;
    c.mode = mode;
    c.n_per_arm = per_arm;
    c.seed = seed;
    return c;
}

struct Scenario {
    sim::GroundTruth gt;
    sim::Datasets ds;
};

Scenario make(const sim::SimConfig& cfg, std::uint64_t r) {
    Rng rng(derive_seed(cfg.seed, {r}));
    Scenario s;
    s.gt = sim::generate_world(cfg, rng);
    s.ds = sim::sample_datasets(s.gt, cfg, rng);
    return s;
}

std::vector<int> arm_values(const data::ExperimentSummary& e) {
    std::vector<int> v;
    for (const auto& a : e.arms) v.push_back(a.x_value);
    return v;
}

}  // namespace

TEST(NotExistsScore, HandValues) {
    EXPECT_NEAR(score::score_not_exists(arm(0, {1, 1})), std::log(1.0 / 6.0), 1e-12);
    EXPECT_NEAR(score::score_not_exists(arm(0, {2, 0})), std::log(1.0 / 3.0), 1e-12);
    EXPECT_EQ(score::score_not_exists(arm(0, {0, 0})), 0.0);
    EXPECT_NEAR(score::score_not_exists(arm(0, {1, 0, 0})), std::log(1.0 / 3.0), 1e-12);
}

TEST(Prior, UniformOverSubsetsAndNotExists) {
    std::vector<std::string> pool{"A", "B"};
    EXPECT_NEAR(score::prior_log_prob(Hypothesis::adjustment_set({"A"}), pool), std::log(0.2), 1e-15);
    EXPECT_NEAR(score::prior_log_prob(Hypothesis::not_exists(), pool), std::log(0.2), 1e-15);
    EXPECT_NEAR(score::prior_log_prob(Hypothesis::adjustment_set({}), {}), std::log(0.5), 1e-15);
    EXPECT_THROW(score::prior_log_prob(Hypothesis::adjustment_set({"C"}), pool), ValidationError);
    score::FasConfig cfg;
    double total = 0.0;
    for (const auto& h : score::enumerate_hypotheses({"A", "B", "C"}, cfg))
        total += std::exp(score::prior_log_prob(h, {"A", "B", "C"}));
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Hypotheses, EnumerationOrderAndRefusal) {
    score::FasConfig cfg;
    auto hs = score::enumerate_hypotheses({"A", "B"}, cfg);
    ASSERT_EQ(hs.size(), 5u);
    EXPECT_EQ(hs[0].label(), "{}");
    EXPECT_EQ(hs[1].label(), "{A}");
    EXPECT_EQ(hs[2].label(), "{B}");
    EXPECT_EQ(hs[3].label(), "{A,B}");
    EXPECT_EQ(hs[4].label(), "NotExists");
    std::vector<std::string> big;
    for (int i = 0; i < 17; ++i) big.push_back("V" + std::to_string(i));
    EXPECT_THROW(score::enumerate_hypotheses(big, cfg), EnumerationRefused);
    cfg.max_subset_size = 1;
    EXPECT_EQ(score::enumerate_hypotheses(big, cfg).size(), 19u);
}

TEST(Hypotheses, TieBreakPrefersSmallerThenLexicographicThenExists) {
    EXPECT_TRUE(score::preferred(Hypothesis::adjustment_set({}), Hypothesis::adjustment_set({"A"})));
    EXPECT_TRUE(score::preferred(Hypothesis::adjustment_set({"A"}), Hypothesis::adjustment_set({"B"})));
    EXPECT_TRUE(score::preferred(Hypothesis::adjustment_set({"A", "B"}), Hypothesis::not_exists()));
    EXPECT_FALSE(score::preferred(Hypothesis::not_exists(), Hypothesis::adjustment_set({})));
}

TEST(ScoreExpArm, EmptySetConvergesToDirichletMultinomial) {
    Rng rng(10);
    bayesnet::ParamInstantiation truth{graph::Admg::from_names({"X", "Y"}, {{"X", "Y"}}), {2, 2},
                                       {{0.5, 0.5}, {0.7, 0.3, 0.2, 0.8}}, std::nullopt};
    auto t = testutil::sample_table(truth, 200, rng);
    auto post = bayesnet::fit_posterior(truth.dag, t, 1.0);
    auto a = arm(1, {12, 18});
    auto s = score::score_exp_arm(post, 0, 1, {}, a, 20000, 3);
    std::vector<double> alpha(post.pseudo_counts[1].begin() + 2, post.pseudo_counts[1].begin() + 4);
    const double exact = dirichlet_multinomial(alpha, a.outcome_counts);
    EXPECT_NEAR(s.log_marginal, exact, 0.01 * std::abs(exact));
    ASSERT_TRUE(s.id_estimate);
    EXPECT_NEAR((*s.id_estimate)[0], alpha[0] / (alpha[0] + alpha[1]), 0.01);
}

TEST(ScoreExpArm, EmptyArmScoresZero) {
    Rng rng(11);
    bayesnet::ParamInstantiation truth{graph::Admg::from_names({"X", "Y"}, {{"X", "Y"}}), {2, 2},
                                       {{0.5, 0.5}, {0.7, 0.3, 0.2, 0.8}}, std::nullopt};
    auto post = bayesnet::fit_posterior(truth.dag, testutil::sample_table(truth, 50, rng), 1.0);
    EXPECT_EQ(score::score_exp_arm(post, 0, 1, {}, arm(0, {0, 0}), 50, 1).log_marginal, 0.0);
}

TEST(ScoreExpArm, ConcentratedPosteriorGivesPlugInLikelihood) {
    bayesnet::BayesNetPosterior post{graph::Admg::from_names({"X", "Y"}, {{"X", "Y"}}), {2, 2},
                                     {{1e9, 1e9}, {3e9, 7e9, 6e9, 4e9}}, 1.0};
    auto a = arm(0, {40, 60});
    auto s = score::score_exp_arm(post, 0, 1, {}, a, 50, 5);
    EXPECT_NEAR(s.log_marginal, 40 * std::log(0.3) + 60 * std::log(0.7), 1e-2);
    EXPECT_NEAR((*s.id_estimate)[0], 0.3, 1e-4);
}

TEST(CandidatePool, KeepsStrongConfounderDropsNoise) {
    Rng rng(20);
    bayesnet::ParamInstantiation p{
        graph::Admg::from_names({"X", "Y", "C", "N"}, {{"C", "X"}, {"C", "Y"}, {"X", "Y"}}), {2, 2, 2, 2},
        {{0.8, 0.2, 0.2, 0.8}, {0.9, 0.1, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9}, {0.5, 0.5}, {0.3, 0.7}}, std::nullopt};
    auto t = testutil::sample_table(p, 10000, rng);
    EXPECT_EQ(score::candidate_pool(t, "X", "Y", 0.05), std::vector<std::string>{"C"});
}

TEST(Fas, ConfounderScenarioPicksConfounder) {
    auto cfg = preset(sim::WorldMode::Confounded, 1000, 1);
    double fas_err = 0.0, unadj_err = 0.0, emp_err = 0.0;
    for (std::uint64_t r = 0; r < 10; ++r) {
        auto s = make(cfg, r);
        score::FasConfig fc;
        fc.seed = 2 + r;
        auto res = score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc);
        EXPECT_EQ(res.best.label(), "{C}") << r;
        EXPECT_EQ(score::kl_select(res, s.ds.experiment).label(), "{C}") << r;
        const auto arms = arm_values(s.ds.experiment);
        fas_err += *sim::delta_theta(res.estimate, arms, s.gt);
        std::vector<std::optional<Distribution>> unadj;
        for (const auto& a : res.score_of(Hypothesis::adjustment_set({})).arms) unadj.push_back(a.id_estimate);
        unadj_err += *sim::delta_theta(unadj, arms, s.gt);
        emp_err += *sim::delta_theta(score::empirical_estimate(s.ds.experiment), arms, s.gt);
        for (const auto& h : res.ranked)
            for (const auto& a : h.arms)
                if (a.id_estimate)
                    EXPECT_NEAR(std::accumulate(a.id_estimate->begin(), a.id_estimate->end(), 0.0), 1.0, 1e-9);
    }
    EXPECT_LT(fas_err, unadj_err);
    EXPECT_LT(fas_err, emp_err);
}

TEST(Fas, LatentConfounderMostlyNotExists) {
    auto cfg = preset(sim::WorldMode::Latent, 5000, 3);
    int not_exists = 0;
    for (int r = 0; r < 20; ++r) {
        auto s = make(cfg, r);
        score::FasConfig fc;
        fc.seed = r;
        auto res = score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc);
        not_exists += !res.best.exists;
        EXPECT_TRUE(score::kl_select(res, s.ds.experiment).exists);
    }
    EXPECT_GT(not_exists, 10);
}

TEST(Fas, NoCovariatesUnconfounded) {
    sim::SimConfig cfg;
    cfg.n_observed = 0;
    cfg.n_latent = 0;
    cfg.n_per_arm = 2000;
    cfg.seed = 4;
    auto s = make(cfg, 0);
    auto res = score::find_adjustment_set(s.ds.observational, s.ds.experiment, {});
    EXPECT_TRUE(res.pool.empty());
    EXPECT_EQ(res.ranked.size(), 2u);
    EXPECT_EQ(res.best.label(), "{}");
    for (std::size_t a = 0; a < res.estimate.size(); ++a)
        for (std::size_t k = 0; k < res.estimate[a]->size(); ++k)
            EXPECT_NEAR((*res.estimate[a])[k], s.gt.true_id[res.arm_x_values[a]][k], 0.02);
}

TEST(Fas, DeterministicAcrossThreadCounts) {
    auto s = make(preset(sim::WorldMode::Random, 500, 5), 1);
    score::FasConfig fc;
    fc.seed = 9;
    fc.niters = 40;
    fc.threads = 1;
    auto a = score::result_to_json(score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc));
    fc.threads = 4;
    auto b = score::result_to_json(score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc));
    EXPECT_EQ(a, b);
}

TEST(Fas, ScoreHypothesisMatchesFullRun) {
    auto s = make(preset(sim::WorldMode::Confounded, 500, 6), 0);
    score::FasConfig fc;
    fc.seed = 1;
    auto full = score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc);
    auto one = score::score_hypothesis(s.ds.observational, s.ds.experiment, Hypothesis::adjustment_set({"C"}), fc);
    ASSERT_EQ(one.ranked.size(), 1u);
    EXPECT_NEAR(one.ranked[0].total, full.score_of(Hypothesis::adjustment_set({"C"})).total, 1e-9);
}

TEST(Fas, RejectsBadInputs) {
    auto s = make(preset(sim::WorldMode::Confounded, 100, 6), 0);
    auto e = s.ds.experiment;
    e.arms[0].x_value = 7;
    EXPECT_THROW(score::find_adjustment_set(s.ds.observational, e, {}), ValidationError);
    e = s.ds.experiment;
    e.treatment = "Q";
    EXPECT_THROW(score::find_adjustment_set(s.ds.observational, e, {}), LookupError);
}

TEST(Kl, ZeroWhenPredictionEqualsEmpirical) {
    data::ExperimentSummary e;
    e.treatment = "X";
    e.outcome = "Y";
    e.arms = {arm(0, {30, 70})};
    score::ArmScore a;
    a.predicted = Distribution{0.3, 0.7};
    EXPECT_NEAR(score::kl_divergence(e, {a}), 0.0, 1e-15);
}

// More trial data should separate the true set from a false one.
TEST(Fas, MoreEvidenceWidensGap) {
    auto cfg = preset(sim::WorldMode::Confounded, 500, 8);
    double gap1 = 0.0, gap4 = 0.0;
    for (int r = 0; r < 20; ++r) {
        auto s = make(cfg, r);
        score::FasConfig fc;
        fc.seed = r;
        auto gap = [&](const data::ExperimentSummary& e) {
            auto t = score::score_hypothesis(s.ds.observational, e, Hypothesis::adjustment_set({"C"}), fc).ranked[0].total;
            auto f = score::score_hypothesis(s.ds.observational, e, Hypothesis::adjustment_set({}), fc).ranked[0].total;
            return t - f;
        };
        auto scaled = s.ds.experiment;
        for (auto& a : scaled.arms) {
            for (auto& c : a.outcome_counts) c *= 4;
            a.total *= 4;
        }
        gap1 += gap(s.ds.experiment);
        gap4 += gap(scaled);
    }
    EXPECT_GE(gap4, gap1);
}

// Replacing the uniform prior by one within [0.1, 10]x uniform keeps the argmax.
TEST(Fas, PriorWashesOutWithLargeArms) {
    for (auto mode : {sim::WorldMode::Confounded, sim::WorldMode::Latent}) {
        auto cfg = preset(mode, 5000, 12);
        for (int r = 0; r < 5; ++r) {
            auto s = make(cfg, r);
            score::FasConfig fc;
            fc.seed = r;
            auto res = score::find_adjustment_set(s.ds.observational, s.ds.experiment, fc);
            Rng rng(r);
            std::uniform_real_distribution<double> u(std::log(0.1), std::log(10.0));
            for (int k = 0; k < 20; ++k) {
                std::size_t best = 0;
                double best_score = -INFINITY;
                for (std::size_t i = 0; i < res.ranked.size(); ++i) {
                    const double sc = res.ranked[i].total + u(rng);
                    if (sc > best_score) {
                        best_score = sc;
                        best = i;
                    }
                }
                EXPECT_EQ(res.ranked[best].hypothesis, res.best);
            }
        }
    }
}

TEST(Report, JsonHasRankedHypothesesAndNullsForNonFinite) {
    auto s = make(preset(sim::WorldMode::Confounded, 200, 2), 0);
    auto res = score::find_adjustment_set(s.ds.observational, s.ds.experiment, {});
    auto text = score::result_to_json(res);
    EXPECT_NE(text.find("\"hypotheses\""), std::string::npos);
    EXPECT_NE(text.find("NotExists"), std::string::npos);
    EXPECT_EQ(text.find("inf"), std::string::npos);
    EXPECT_EQ(text.find("nan"), std::string::npos);
}
