#ifndef ADJFAS_SCORE_HPP
#define ADJFAS_SCORE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adjfas/bayesnet.hpp"
#include "adjfas/common.hpp"
#include "adjfas/data.hpp"

namespace adjfas::score {

/// "Z is an adjustment set for (X, Y)" or "no adjustment set exists among
/// the measured variables".
struct Hypothesis {
    bool exists = true;
    std::vector<std::string> z;

    static Hypothesis not_exists() { return {false, {}}; }
    static Hypothesis adjustment_set(std::vector<std::string> z) { return {true, std::move(z)}; }

    /// "{A,B}", "{}" or "NotExists".
    std::string label() const;
    bool operator==(const Hypothesis&) const = default;
};

/// Preference order used to break score ties: smaller sets first, then
/// lexicographic names; NotExists last.
bool preferred(const Hypothesis& a, const Hypothesis& b);

struct ArmScore {
    int x_value = 0;
    /// log P(D_x | D_obs, H), multinomial coefficient omitted.
    double log_marginal = 0.0;
    /// Posterior-mean interventional distribution reported for this arm.
    /// Empty for NotExists under selection.
    std::optional<Distribution> id_estimate;
    /// Posterior-mean of the distribution the arm was scored against. Equals
    /// id_estimate unless the trial population is selected.
    std::optional<Distribution> predicted;
    /// Iterations with a defined adjusted distribution.
    int valid_iterations = 0;
};

struct HypothesisScore {
    Hypothesis hypothesis;
    double log_prior = 0.0;
    /// Sum of arm log-marginals plus the log prior.
    double total = 0.0;
    std::vector<ArmScore> arms;
};

struct FasConfig {
    double alpha = 0.05;
    int niters = 100;
    double ess = 1.0;
    std::uint64_t seed = 0;
    /// Limits enumerated subsets to this size; required when |Z_XY| > 16.
    std::optional<int> max_subset_size;
    int max_parents = 4;
    int restarts = 5;
    int threads = 1;
    /// Marginal tolerance of the selection-parameter solver.
    double selection_tol = 1e-6;
};

struct FasResult {
    std::string treatment;
    std::string outcome;
    bool selected_population = false;
    Hypothesis best;
    /// All scored hypotheses, best first (score descending, ties by preference).
    std::vector<HypothesisScore> ranked;
    /// Per arm; empty optional means N/A.
    std::vector<int> arm_x_values;
    std::vector<std::optional<Distribution>> estimate;
    std::vector<std::string> pool;
    FasConfig config;
    std::string learned_dag_json;

    const HypothesisScore& score_of(const Hypothesis& h) const;
};

/// Variables marginally dependent (G^2, level alpha) on both x and y, in table order.
std::vector<std::string> candidate_pool(const data::CategoricalTable& table, const std::string& x,
                                        const std::string& y, double alpha);

/// Uniform prior over the 2^|pool| subsets and NotExists.
double prior_log_prob(const Hypothesis& h, const std::vector<std::string>& pool);

/// Closed-form log marginal likelihood of an arm under a uniform
/// Dirichlet(1) prior on its outcome distribution.
double score_not_exists(const data::Arm& arm);

/// Adjustment-formula distribution sum_z P(Y | x, z) P(z) for one
/// instantiation. Empty when some z with P(z) > 0 has P(x, z) = 0.
std::optional<Distribution> adjusted_distribution(const bayesnet::ParamInstantiation& params, int x, int y,
                                                  const std::vector<int>& z, int x_value);

/// One Monte-Carlo iteration: the distribution used to score the arm and the
/// one reported as the estimate.
struct IterationDraw {
    std::optional<Distribution> scored;
    std::optional<Distribution> reported;
};

/// Averages likelihoods (in linear space, via log-sum-exp) and reported
/// distributions over niters draws. Throws DegenerateScore when no
/// iteration produced a scored distribution.
ArmScore average_arm(const data::Arm& arm, int niters, const std::function<IterationDraw(int iteration)>& draw);

/// Monte-Carlo estimate of P(D_x | D_obs, H_Z). Iteration i samples the
/// network from derive_seed(seed, {i}).
ArmScore score_exp_arm(const bayesnet::BayesNetPosterior& post, int x, int y, const std::vector<int>& z,
                       const data::Arm& arm, int niters, std::uint64_t seed);

/// Subsets of the pool (size ascending, then pool order) followed by NotExists.
std::vector<Hypothesis> enumerate_hypotheses(const std::vector<std::string>& pool, const FasConfig& config);

/// Per-iteration model: maps a sampled network, the adjustment set (node
/// indices) and the arm's x value to the scored/reported distributions.
using IterationModel =
    std::function<IterationDraw(const bayesnet::ParamInstantiation& sampled, const std::vector<int>& z, int x_value)>;

/// Shared driver for both population settings. `extra_vars` are added to the
/// learned network alongside the pool; `make_model` is called once with the
/// learned posterior.
FasResult run_fas(const data::CategoricalTable& table, const data::ExperimentSummary& exp, const FasConfig& config,
                  const std::vector<std::string>& extra_vars, bool selected_population,
                  const std::function<IterationModel(const bayesnet::BayesNetPosterior&, int x, int y)>& make_model,
                  const std::optional<Hypothesis>& only = std::nullopt);

/// Finds the highest-scoring adjustment set (or NotExists) for a trial run
/// on the same population as the observational data.
FasResult find_adjustment_set(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                              const FasConfig& config = {});

/// Scores a single named hypothesis (plus nothing else). The result's
/// `ranked` holds exactly that hypothesis.
FasResult score_hypothesis(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                           const Hypothesis& h, const FasConfig& config = {});

/// KL(empirical || predicted) summed over arms. Zero empirical cells
/// contribute nothing.
double kl_divergence(const data::ExperimentSummary& exp, const std::vector<ArmScore>& arms);

/// Baseline: the adjustment set whose posterior-mean prediction is closest
/// in KL to the empirical arm distributions. Never returns NotExists.
Hypothesis kl_select(const FasResult& scored, const data::ExperimentSummary& exp);
Hypothesis kl_select(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                     const FasConfig& config = {});

/// Empirical N^y_x / N_x per arm (empty optional for an empty arm).
std::vector<std::optional<Distribution>> empirical_estimate(const data::ExperimentSummary& exp);

std::string result_to_json(const FasResult& result);
/// Human-readable ranked table.
std::string result_table(const FasResult& result, std::size_t max_rows = 20);

}  // namespace adjfas::score

#endif  // ADJFAS_SCORE_HPP
