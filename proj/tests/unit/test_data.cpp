#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "adjfas/data.hpp"

using namespace adjfas;
using data::CategoricalTable;

namespace {

CategoricalTable from_rows(const std::vector<std::string>& names, const std::vector<int>& cards,
                           const std::vector<std::vector<int>>& rows) {
    std::vector<std::vector<std::uint8_t>> cols(names.size());
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) cols[j].push_back(static_cast<std::uint8_t>(r[j]));
    return CategoricalTable(names, cards, cols);
}

CategoricalTable random_table(int n, int ca, int cb, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> da(0, ca - 1), db(0, cb - 1);
    std::vector<std::vector<std::uint8_t>> cols(2);
    for (int i = 0; i < n; ++i) {
        cols[0].push_back(static_cast<std::uint8_t>(da(rng)));
        cols[1].push_back(static_cast<std::uint8_t>(db(rng)));
    }
    return CategoricalTable({"A", "B"}, {ca, cb}, cols);
}

}  // namespace

TEST(ReadObservational, ReadsCodesAndInfersCardinalities) {
    std::istringstream in("A,B,C\n0,1,0\n1,1,0\n0,0,1\n1,0,0\n0,1,1\n");
    auto t = data::read_observational(in);
    EXPECT_EQ(t.num_vars(), 3u);
    EXPECT_EQ(t.num_rows(), 5u);
    EXPECT_EQ(t.cardinalities(), (std::vector<int>{2, 2, 2}));
    EXPECT_EQ(t.at(2, 2), 1);
}

TEST(ReadObservational, EmptyFileIsParseError) {
    std::istringstream in("");
    EXPECT_THROW(data::read_observational(in), ParseError);
}

TEST(ReadObservational, CodeAboveSchemaCardinalityIsSchemaError) {
    std::istringstream in("A,B\n0,1\n2,0\n");
    EXPECT_THROW(data::read_observational(in, std::vector<int>{2, 2}), SchemaError);
}

TEST(ReadObservational, MalformedCellNamesRowAndColumn) {
    std::istringstream in("A,B\n0,1\n1,x\n");
    try {
        data::read_observational(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("B"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2"), std::string::npos) << msg;
    }
}

TEST(ReadObservational, RejectsDuplicateNames) {
    std::istringstream in("A,A\n0,1\n");
    EXPECT_THROW(data::read_observational(in), Error);
}

TEST(ReadObservational, RoundTripsExactly) {
    auto t = random_table(300, 3, 2, 5);
    std::ostringstream out;
    data::write_observational(out, t);
    std::istringstream in(out.str());
    auto u = data::read_observational(in, t.cardinalities());
    std::ostringstream out2;
    data::write_observational(out2, u);
    EXPECT_EQ(out.str(), out2.str());
    for (std::size_t v = 0; v < 2; ++v)
        EXPECT_TRUE(std::equal(t.column(v).begin(), t.column(v).end(), u.column(v).begin()));
}

TEST(Table, LookupOfUnknownVariableThrows) {
    auto t = random_table(10, 2, 2, 1);
    EXPECT_THROW(t.index_of("Q"), LookupError);
    EXPECT_TRUE(t.has("A"));
}

TEST(Experiment, ParsesArms) {
    auto e = data::parse_experiment(R"({"treatment":"X","outcome":"Y","population":"same",
        "arms":[{"x":0,"counts":[30,70]},{"x":1,"counts":[60,40]}]})");
    ASSERT_EQ(e.arms.size(), 2u);
    EXPECT_EQ(e.arms[0].total, 100);
    EXPECT_EQ(e.arms[1].total, 100);
    EXPECT_EQ(e.arms[1].outcome_counts[0], 60);
    EXPECT_EQ(e.population, data::Population::Same);
}

TEST(Experiment, MarginalNotSummingToOneIsRejected) {
    EXPECT_THROW(data::parse_experiment(R"({"treatment":"X","outcome":"Y","population":"same",
        "arms":[{"x":0,"counts":[1,1]}],"marginals":{"V":[0.5,0.6]}})"),
                 ValidationError);
}

TEST(Experiment, SelectedWithoutMarginalsIsRejected) {
    EXPECT_THROW(data::parse_experiment(R"({"treatment":"X","outcome":"Y","population":"selected",
        "arms":[{"x":0,"counts":[1,1]}]})"),
                 ValidationError);
}

TEST(Experiment, MalformedJsonIsParseError) {
    EXPECT_THROW(data::parse_experiment("{\"treatment\":"), ParseError);
}

TEST(Experiment, RoundTrips) {
    auto e = data::parse_experiment(R"({"treatment":"X","outcome":"Y","population":"selected",
        "arms":[{"x":0,"counts":[3,7]},{"x":1,"counts":[6,4]}],"marginals":{"V":[0.25,0.75]}})");
    auto text = data::experiment_to_json(e);
    EXPECT_EQ(data::experiment_to_json(data::parse_experiment(text)), text);
}

TEST(ContingencyCounts, HandCount) {
    auto t = from_rows({"A", "B"}, {2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 0}});
    auto c = data::contingency_counts(t, std::vector<std::string>{"A", "B"});
    EXPECT_EQ(c.counts, (std::vector<std::int64_t>{1, 1, 2, 0}));
}

TEST(ContingencyCounts, EmptyVarsGivesScalarN) {
    auto t = random_table(17, 2, 3, 2);
    auto c = data::contingency_counts(t, std::vector<std::string>{});
    ASSERT_EQ(c.counts.size(), 1u);
    EXPECT_EQ(c.counts[0], 17);
}

TEST(ContingencyCounts, ConstantColumn) {
    auto t = from_rows({"A"}, {2}, {{1}, {1}, {1}});
    auto c = data::contingency_counts(t, std::vector<std::string>{"A"});
    EXPECT_EQ(c.counts, (std::vector<std::int64_t>{0, 3}));
}

TEST(ContingencyCounts, PermutationTransposes) {
    auto t = random_table(500, 3, 2, 9);
    auto ab = data::contingency_counts(t, std::vector<std::string>{"A", "B"});
    auto ba = data::contingency_counts(t, std::vector<std::string>{"B", "A"});
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 2; ++b) EXPECT_EQ(ab.counts[a * 2 + b], ba.counts[b * 3 + a]);
}

TEST(G2, PerfectCopyIsHighlySignificant) {
    auto t = random_table(1000, 2, 2, 3);
    std::vector<std::vector<std::uint8_t>> cols{std::vector<std::uint8_t>(t.column(0).begin(), t.column(0).end()),
                                                std::vector<std::uint8_t>(t.column(0).begin(), t.column(0).end())};
    CategoricalTable copy({"A", "B"}, {2, 2}, cols);
    EXPECT_LT(data::g2_independence_test(copy, "A", "B"), 1e-6);
}

TEST(G2, EmptyTableGivesPOne) {
    CategoricalTable t({"A", "B", "C"}, {2, 2, 2}, {{}, {}, {}});
    EXPECT_EQ(data::g2_independence_test(t, "A", "B", {"C"}), 1.0);
}

TEST(G2, StatisticMatchesHandComputation) {
    // 2x2 table [[10, 20], [30, 40]].
    std::vector<std::vector<int>> rows;
    const int n[2][2] = {{10, 20}, {30, 40}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int k = 0; k < n[a][b]; ++k) rows.push_back({a, b});
    auto t = from_rows({"A", "B"}, {2, 2}, rows);
    double g = 0.0;
    const double N = 100.0, ra[2] = {30, 70}, cb[2] = {40, 60};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) g += 2.0 * n[a][b] * std::log(n[a][b] * N / (ra[a] * cb[b]));
    std::array<std::size_t, 0> none{};
    auto r = data::g2_statistic(t, 0, 1, none);
    EXPECT_NEAR(r.statistic, g, 1e-10);
    EXPECT_EQ(r.df, 1.0);
    EXPECT_NEAR(r.p_value, std::erfc(std::sqrt(g / 2.0)), 1e-12);
}

TEST(G2, PValueForTwoDegreesOfFreedomIsExponential) {
    auto t = random_table(400, 3, 2, 11);
    std::array<std::size_t, 0> none{};
    auto r = data::g2_statistic(t, 0, 1, none);
    ASSERT_EQ(r.df, 2.0);
    EXPECT_NEAR(r.p_value, std::exp(-r.statistic / 2.0), 1e-12);
}

TEST(G2, InvariantUnderCategoryRelabeling) {
    auto t = random_table(800, 3, 3, 21);
    std::vector<std::vector<std::uint8_t>> cols(2);
    const int perm[3] = {2, 0, 1};
    for (std::size_t i = 0; i < t.num_rows(); ++i) {
        cols[0].push_back(static_cast<std::uint8_t>(perm[t.at(i, 0)]));
        cols[1].push_back(static_cast<std::uint8_t>(t.at(i, 1)));
    }
    CategoricalTable u({"A", "B"}, {3, 3}, cols);
    EXPECT_NEAR(data::g2_independence_test(t, "A", "B"), data::g2_independence_test(u, "A", "B"), 1e-12);
}

TEST(G2, NullPValuesAreUniform) {
    std::vector<double> p;
    for (int r = 0; r < 200; ++r) p.push_back(data::g2_independence_test(random_table(10000, 2, 3, 1000 + r), "A", "B"));
    std::sort(p.begin(), p.end());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double n = static_cast<double>(p.size());
        d = std::max({d, std::abs((i + 1) / n - p[i]), std::abs(p[i] - i / n)});
    }
    // Kolmogorov-Smirnov critical value at the 1% level.
    EXPECT_LT(d, 1.628 / std::sqrt(200.0));
}
