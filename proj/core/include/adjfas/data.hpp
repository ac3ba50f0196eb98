#ifndef ADJFAS_DATA_HPP
#define ADJFAS_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adjfas/common.hpp"

namespace adjfas::data {

/// Observational dataset of integer-coded categorical variables.
///
/// Codes are dense in [0, cardinality). Columns are stored contiguously so
/// that counting over a handful of variables touches only those columns.
class CategoricalTable {
public:
    CategoricalTable() = default;

    /// Builds a table from column-major codes. Throws SchemaError when a code
    /// is out of range and ValidationError on shape or naming problems.
    CategoricalTable(std::vector<std::string> names, std::vector<int> cardinalities,
                     std::vector<std::vector<std::uint8_t>> columns);

    std::size_t num_vars() const { return names_.size(); }
    std::size_t num_rows() const { return columns_.empty() ? 0 : columns_.front().size(); }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<int>& cardinalities() const { return cards_; }
    int cardinality(std::size_t var) const { return cards_.at(var); }
    const std::string& name(std::size_t var) const { return names_.at(var); }

    /// Column index of a variable. Throws LookupError.
    std::size_t index_of(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<std::size_t> indices_of(const std::vector<std::string>& names) const;

    std::span<const std::uint8_t> column(std::size_t var) const { return columns_.at(var); }
    int at(std::size_t row, std::size_t var) const { return columns_[var][row]; }

    /// Sub-table over the named variables, in the given order.
    CategoricalTable select(const std::vector<std::string>& names) const;

private:
    std::vector<std::string> names_;
    std::vector<int> cards_;
    std::vector<std::vector<std::uint8_t>> columns_;
};

/// One experimental arm: outcome counts under do(X = x_value).
struct Arm {
    int x_value = 0;
    std::vector<std::int64_t> outcome_counts;
    std::int64_t total = 0;
};

enum class Population { Same, Selected };

/// Summary-level experimental data as reported by a trial publication.
struct ExperimentSummary {
    std::string treatment;
    std::string outcome;
    std::vector<Arm> arms;
    std::map<std::string, Distribution> reported_marginals;
    Population population = Population::Same;

    /// Checks every invariant of the type. Throws ValidationError.
    void validate() const;
};

// I/O for the observational CSV and the experiment JSON.

CategoricalTable read_observational(std::istream& in,
                                    const std::optional<std::vector<int>>& schema = std::nullopt);
CategoricalTable load_observational(const std::filesystem::path& path,
                                    const std::optional<std::vector<int>>& schema = std::nullopt);
void write_observational(std::ostream& out, const CategoricalTable& table);
void save_observational(const std::filesystem::path& path, const CategoricalTable& table);

ExperimentSummary parse_experiment(const std::string& json_text);
ExperimentSummary load_experiment(const std::filesystem::path& path);
std::string experiment_to_json(const ExperimentSummary& exp);
void save_experiment(const std::filesystem::path& path, const ExperimentSummary& exp);

/// Dense count tensor over the joint categories of a variable list.
/// Cells are row-major in the given variable order (last variable fastest).
struct CountTensor {
    std::vector<int> shape;
    std::vector<std::int64_t> counts;

    std::int64_t total() const;
};

/// Row-major strides for a shape.
std::vector<std::size_t> strides_for(std::span<const int> shape);

CountTensor contingency_counts(const CategoricalTable& table, const std::vector<std::string>& vars);
CountTensor contingency_counts(const CategoricalTable& table, std::span<const std::size_t> vars);

/// G^2 likelihood-ratio test of a independent of b given cond. Returns the
/// p-value under the chi-squared null with df = (|a|-1)(|b|-1) prod |c|.
/// Strata with no observations contribute nothing to the statistic.
double g2_independence_test(const CategoricalTable& table, const std::string& a,
                            const std::string& b, const std::vector<std::string>& cond = {});

struct G2Result {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};
G2Result g2_statistic(const CategoricalTable& table, std::size_t a, std::size_t b,
                      std::span<const std::size_t> cond);

}  // namespace adjfas::data

#endif  // ADJFAS_DATA_HPP
