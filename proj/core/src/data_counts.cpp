#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "adjfas/data.hpp"

namespace adjfas::data {

std::int64_t CountTensor::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::vector<std::size_t> strides_for(std::span<const int> shape) {
    std::vector<std::size_t> s(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * static_cast<std::size_t>(shape[i]);
    return s;
}

CountTensor contingency_counts(const CategoricalTable& table, std::span<const std::size_t> vars) {
    CountTensor t;
    std::size_t cells = 1;
    for (auto v : vars) {
        if (v >= table.num_vars()) throw LookupError("variable index out of range");
        t.shape.push_back(table.cardinality(v));
        cells *= static_cast<std::size_t>(table.cardinality(v));
    }
    t.counts.assign(cells, 0);
    const auto strides = strides_for(t.shape);
    std::vector<std::size_t> idx(table.num_rows(), 0);
    for (std::size_t k = 0; k < vars.size(); ++k) {
        auto col = table.column(vars[k]);
        for (std::size_t r = 0; r < idx.size(); ++r) idx[r] += col[r] * strides[k];
    }
    for (auto i : idx) ++t.counts[i];
    return t;
}

CountTensor contingency_counts(const CategoricalTable& table, const std::vector<std::string>& vars) {
    auto idx = table.indices_of(vars);
    return contingency_counts(table, std::span<const std::size_t>(idx));
}

G2Result g2_statistic(const CategoricalTable& table, std::size_t a, std::size_t b,
                      std::span<const std::size_t> cond) {
    if (a == b) throw ValidationError("g2 test: a and b must differ");
    for (auto c : cond)
        if (c == a || c == b) throw ValidationError("g2 test: conditioning set contains a tested variable");

    std::vector<std::size_t> vars(cond.begin(), cond.end());
    vars.push_back(a);
    vars.push_back(b);
    const auto t = contingency_counts(table, std::span<const std::size_t>(vars));
    const int ra = table.cardinality(a);
    const int rb = table.cardinality(b);
    const std::size_t block = static_cast<std::size_t>(ra) * rb;
    const std::size_t strata = t.counts.size() / block;

    double g2 = 0.0;
    std::vector<double> row(ra), col(rb);
    for (std::size_t s = 0; s < strata; ++s) {
        const auto* cell = t.counts.data() + s * block;
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(col.begin(), col.end(), 0.0);
        double n = 0.0;
        for (int i = 0; i < ra; ++i)
            for (int j = 0; j < rb; ++j) {
                const double c = static_cast<double>(cell[i * rb + j]);
                row[i] += c;
                col[j] += c;
                n += c;
            }
        if (n == 0.0) continue;
        for (int i = 0; i < ra; ++i)
            for (int j = 0; j < rb; ++j) {
                const double c = static_cast<double>(cell[i * rb + j]);
                if (c > 0.0) g2 += 2.0 * c * std::log(c * n / (row[i] * col[j]));
            }
    }

    G2Result res;
    res.statistic = std::max(0.0, g2);
    res.df = static_cast<double>(ra - 1) * (rb - 1) * static_cast<double>(strata);
    if (res.df <= 0.0 || res.statistic == 0.0) {
        res.p_value = 1.0;
    } else {
        res.p_value = boost::math::gamma_q(res.df / 2.0, res.statistic / 2.0);
    }
    return res;
}

double g2_independence_test(const CategoricalTable& table, const std::string& a, const std::string& b,
                            const std::vector<std::string>& cond) {
    auto ci = table.indices_of(cond);
    return g2_statistic(table, table.index_of(a), table.index_of(b), std::span<const std::size_t>(ci)).p_value;
}

}  // namespace adjfas::data
