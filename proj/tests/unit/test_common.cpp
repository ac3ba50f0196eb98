#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "adjfas/common.hpp"

using namespace adjfas;

TEST(DeriveSeed, DeterministicAndPathSensitive) {
    EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
    EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
    EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
    EXPECT_NE(derive_seed(7, {0}), derive_seed(7, {0, 0}));
}

TEST(LogSumExp, MatchesDirectSum) {
    std::vector<double> v{-1.0, -2.0, -0.5};
    double direct = std::log(std::exp(-1.0) + std::exp(-2.0) + std::exp(-0.5));
    EXPECT_NEAR(log_sum_exp(v), direct, 1e-14);
    EXPECT_NEAR(log_sum_exp({-1000.0, -1000.0}), -1000.0 + std::log(2.0), 1e-12);
    EXPECT_EQ(log_sum_exp({}), -INFINITY);
    EXPECT_EQ(log_sum_exp({-INFINITY, -INFINITY}), -INFINITY);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (int threads : {1, 3, 8}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) ASSERT_EQ(h, 1);
    }
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    auto run = [](int threads) {
        try {
            parallel_for(50, threads, [](std::size_t i) {
                if (i == 13 || i == 40) throw std::runtime_error("fail " + std::to_string(i));
            });
        } catch (const std::runtime_error& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_EQ(run(1), "fail 13");
    EXPECT_EQ(run(4), "fail 13");
}

TEST(ResolveThreads, ExplicitThenEnvThenOne) {
    ::unsetenv("ADJFAS_THREADS");
    EXPECT_EQ(resolve_threads(0), 1);
    EXPECT_EQ(resolve_threads(5), 5);
    ::setenv("ADJFAS_THREADS", "3", 1);
    EXPECT_EQ(resolve_threads(0), 3);
    EXPECT_EQ(resolve_threads(2), 2);
    ::setenv("ADJFAS_THREADS", "junk", 1);
    EXPECT_EQ(resolve_threads(0), 1);
    ::unsetenv("ADJFAS_THREADS");
}

TEST(Errors, InfeasibleSelectionCarriesLocation) {
    InfeasibleSelection e("bad", "V1", 2);
    EXPECT_EQ(e.variable(), "V1");
    EXPECT_EQ(e.category(), 2);
    EXPECT_NE(dynamic_cast<const Error*>(&e), nullptr);
}
