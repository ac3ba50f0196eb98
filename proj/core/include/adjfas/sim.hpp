#ifndef ADJFAS_SIM_HPP
#define ADJFAS_SIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adjfas/bayesnet.hpp"
#include "adjfas/data.hpp"
#include "adjfas/score.hpp"

namespace adjfas::sim {

enum class WorldMode {
    Random,        ///< random DAG over X, Y and all covariates
    Pretreatment,  ///< every covariate precedes X; X's only child is Y
    Confounded,    ///< fixed C -> X, C -> Y, X -> Y with strong effects
    Latent,        ///< X -> Y confounded by a latent L, plus an irrelevant W
};

enum class SelectionMode { None, Observed, Latent };

struct SimConfig {
    int n_observed = 6;
    int n_latent = 4;
    double mean_in_degree = 2.0;
    int min_card = 2;
    int max_card = 3;
    int n_obs = 10000;
    int n_per_arm = 500;
    WorldMode mode = WorldMode::Random;
    SelectionMode selection = SelectionMode::None;
    /// Upper bound on the number of selected-upon variables.
    int max_selected = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Ground-truth world: a DAG with explicit latent nodes (observed flags)
/// and its CPTs.
struct GroundTruth {
    bayesnet::ParamInstantiation world;
    int x = 0;
    int y = 1;
    /// P(S_i = 1 | V_i) per selected-upon node.
    std::map<int, Distribution> selection;
    /// Exact P(Y | do(X = x)) for every category of X, unselected population.
    std::vector<Distribution> true_id;

    const graph::Admg& dag() const { return world.dag; }
};

GroundTruth generate_world(const SimConfig& cfg, Rng& rng);

/// Exact P(Y | do(X = x_value)) by summing the truncated factorization over
/// all other variables. Throws EnumerationRefused beyond `max_states`.
Distribution true_interventional(const GroundTruth& gt, int x_value, std::size_t max_states = 1u << 22);

struct Datasets {
    data::CategoricalTable observational;
    data::ExperimentSummary experiment;
};

/// Forward-samples the observational table (latents dropped) and the trial
/// arms from the mutilated graph, applying rejection-based selection.
Datasets sample_datasets(const GroundTruth& gt, const SimConfig& cfg, Rng& rng);

/// Mean absolute difference over arms and outcome categories against the
/// unselected truth. Empty when any arm estimate is N/A.
std::optional<double> delta_theta(const std::vector<std::optional<Distribution>>& estimate,
                                  const std::vector<int>& arm_x_values, const GroundTruth& gt);
/// Plain version used for symmetric comparisons.
double delta_theta(const std::vector<Distribution>& a, const std::vector<Distribution>& b);

/// Observed causes of X or Y, excluding X, Y and descendants of X.
std::vector<std::string> vws_baseline(const GroundTruth& gt);

/// Every subset of observed covariates that satisfies the adjustment criterion.
std::vector<std::vector<std::string>> valid_adjustment_sets(const GroundTruth& gt);
/// Criterion validity of a hypothesis; NotExists is valid iff no observed set is.
bool hypothesis_valid(const GroundTruth& gt, const score::Hypothesis& h);

/// Plug-in adjustment estimate from the observational table with add-`pseudo`
/// smoothing of P(y | x, z).
std::vector<Distribution> plugin_adjustment(const data::CategoricalTable& table, const std::string& x,
                                            const std::string& y, const std::vector<std::string>& z,
                                            const std::vector<int>& arm_x_values, double pseudo = 0.5);

std::string truth_to_json(const GroundTruth& gt);

enum class Method { Fas, Kl, Dexp, Vws };
std::string method_name(Method m);
Method parse_method(const std::string& s);

struct BenchmarkRow {
    int replicate = 0;
    Method method = Method::Fas;
    std::optional<double> delta;
    std::string selected;
    std::optional<bool> valid;
    bool not_exists = false;
    std::string error;
    double seconds = 0.0;
};

struct MethodSummary {
    Method method = Method::Fas;
    int n = 0;
    int missing = 0;
    int failures = 0;
    double median = 0.0, q1 = 0.0, q3 = 0.0;
    int not_exists = 0;
    int valid = 0;
    int valid_known = 0;
    double mean_seconds = 0.0;
};

struct BenchmarkReport {
    SimConfig sim;
    score::FasConfig fas;
    int replicates = 0;
    std::vector<Method> methods;
    std::vector<BenchmarkRow> rows;  // sorted by replicate, then method order

    std::vector<MethodSummary> summarize() const;
};

BenchmarkReport run_benchmark(const SimConfig& cfg, int replicates, const std::vector<Method>& methods,
                              const score::FasConfig& fas, int threads = 1);

/// Linear-interpolation quantile of a sample (q in [0, 1]).
double quantile(std::vector<double> v, double q);

/// CSV columns: replicate,method,delta_theta,selected,criterion_valid,not_exists,error
std::string report_csv(const BenchmarkReport& report);
std::string report_summary_json(const BenchmarkReport& report);

std::string world_mode_name(WorldMode m);
WorldMode parse_world_mode(const std::string& s);
std::string selection_mode_name(SelectionMode m);
SelectionMode parse_selection_mode(const std::string& s);

}  // namespace adjfas::sim

#endif  // ADJFAS_SIM_HPP
