#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adjfas/data.hpp"

namespace adjfas::data {

using nlohmann::json;

void ExperimentSummary::validate() const {
    if (treatment.empty() || outcome.empty()) throw ValidationError("experiment: treatment and outcome are required");
    if (treatment == outcome) throw ValidationError("experiment: treatment and outcome must differ");
    if (arms.empty()) throw ValidationError("experiment: at least one arm is required");
    std::set<int> xs;
    const std::size_t ny = arms.front().outcome_counts.size();
    for (const auto& arm : arms) {
        if (arm.x_value < 0) throw ValidationError("experiment: negative arm x value");
        if (!xs.insert(arm.x_value).second)
            throw ValidationError("experiment: duplicate arm x = " + std::to_string(arm.x_value));
        if (arm.outcome_counts.size() != ny || ny < 1)
            throw ValidationError("experiment: arms disagree on the number of outcome categories");
        std::int64_t sum = 0;
        for (auto c : arm.outcome_counts) {
            if (c < 0) throw ValidationError("experiment: negative count in arm x = " + std::to_string(arm.x_value));
            sum += c;
        }
        if (sum != arm.total)
            throw ValidationError("experiment: counts of arm x = " + std::to_string(arm.x_value) + " sum to " +
                                  std::to_string(sum) + " but total is " + std::to_string(arm.total));
    }
    for (const auto& [var, p] : reported_marginals) {
        if (var == treatment || var == outcome)
            throw ValidationError("experiment: marginal reported for treatment/outcome '" + var + "'");
        if (p.empty()) throw ValidationError("experiment: empty marginal for '" + var + "'");
        double s = 0.0;
        for (double v : p) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("experiment: marginal of '" + var + "' has an invalid entry");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("experiment: marginal of '" + var + "' sums to " + std::to_string(s));
    }
    if (population == Population::Selected && reported_marginals.empty())
        throw ValidationError("experiment: population is 'selected' but no marginals are reported");
}

ExperimentSummary parse_experiment(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("experiment JSON: ") + e.what());
    }
    ExperimentSummary exp;
    try {
        exp.treatment = j.at("treatment").get<std::string>();
        exp.outcome = j.at("outcome").get<std::string>();
        const auto pop = j.value("population", std::string("same"));
        if (pop == "same") {
            exp.population = Population::Same;
        } else if (pop == "selected") {
            exp.population = Population::Selected;
        } else {
            throw ValidationError("experiment: population must be 'same' or 'selected', got '" + pop + "'");
        }
        for (const auto& a : j.at("arms")) {
            Arm arm;
            arm.x_value = a.at("x").get<int>();
            arm.outcome_counts = a.at("counts").get<std::vector<std::int64_t>>();
            std::int64_t sum = 0;
            for (auto c : arm.outcome_counts) sum += c;
            arm.total = a.contains("total") ? a.at("total").get<std::int64_t>() : sum;
            exp.arms.push_back(std::move(arm));
        }
        if (j.contains("marginals")) {
            for (const auto& [k, v] : j.at("marginals").items())
                exp.reported_marginals[k] = v.get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment JSON: ") + e.what());
    }
    exp.validate();
    return exp;
}

ExperimentSummary load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open experiment JSON '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str());
}

std::string experiment_to_json(const ExperimentSummary& exp) {
    json j;
    j["treatment"] = exp.treatment;
    j["outcome"] = exp.outcome;
    j["population"] = exp.population == Population::Same ? "same" : "selected";
    j["arms"] = json::array();
    for (const auto& arm : exp.arms) j["arms"].push_back({{"x", arm.x_value}, {"counts", arm.outcome_counts}});
    j["marginals"] = json::object();
    for (const auto& [k, v] : exp.reported_marginals) j["marginals"][k] = v;
    return j.dump(2) + "\n";
}

void save_experiment(const std::filesystem::path& path, const ExperimentSummary& exp) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << experiment_to_json(exp);
}

}  // namespace adjfas::data
