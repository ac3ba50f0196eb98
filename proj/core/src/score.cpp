#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "adjfas/score.hpp"

namespace adjfas::score {

std::string Hypothesis::label() const {
    if (!exists) return "NotExists";
    std::string s = "{";
    for (std::size_t i = 0; i < z.size(); ++i) s += (i ? "," : "") + z[i];
    return s + "}";
}

bool preferred(const Hypothesis& a, const Hypothesis& b) {
    if (a.exists != b.exists) return a.exists;
    if (a.z.size() != b.z.size()) return a.z.size() < b.z.size();
    auto sa = a.z, sb = b.z;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa < sb;
}

const HypothesisScore& FasResult::score_of(const Hypothesis& h) const {
    for (const auto& s : ranked)
        if (s.hypothesis.exists == h.exists) {
            auto a = s.hypothesis.z, b = h.z;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a == b) return s;
        }
    throw LookupError("hypothesis " + h.label() + " was not scored");
}

std::vector<std::string> candidate_pool(const data::CategoricalTable& table, const std::string& x,
                                        const std::string& y, double alpha) {
    if (x == y) throw ValidationError("candidate_pool: treatment and outcome must differ");
    const auto xi = table.index_of(x);
    const auto yi = table.index_of(y);
    std::vector<std::string> pool;
    for (std::size_t v = 0; v < table.num_vars(); ++v) {
        if (v == xi || v == yi) continue;
        const auto px = data::g2_statistic(table, v, xi, {}).p_value;
        if (px >= alpha) continue;
        const auto py = data::g2_statistic(table, v, yi, {}).p_value;
        if (py < alpha) pool.push_back(table.name(v));
    }
    return pool;
}

double prior_log_prob(const Hypothesis& h, const std::vector<std::string>& pool) {
    for (const auto& v : h.z)
        if (std::find(pool.begin(), pool.end(), v) == pool.end())
            throw ValidationError("prior: '" + v + "' is not in the candidate pool");
    return -std::log(std::ldexp(1.0, static_cast<int>(pool.size())) + 1.0);
}

double score_not_exists(const data::Arm& arm) {
    const double ny = static_cast<double>(arm.outcome_counts.size());
    double s = std::lgamma(ny) - std::lgamma(static_cast<double>(arm.total) + ny);
    for (auto n : arm.outcome_counts) s += std::lgamma(static_cast<double>(n) + 1.0);
    return s;
}

std::optional<Distribution> adjusted_distribution(const bayesnet::ParamInstantiation& params, int x, int y,
                                                  const std::vector<int>& z, int x_value) {
    std::vector<int> vars{x, y};
    vars.insert(vars.end(), z.begin(), z.end());
    const auto joint = bayesnet::joint_with_evidence(params, vars);
    const std::size_t nx = static_cast<std::size_t>(params.cards[x]);
    const std::size_t ny = static_cast<std::size_t>(params.cards[y]);
    const std::size_t nz = joint.size() / (nx * ny);
    auto at = [&](std::size_t xv, std::size_t yv, std::size_t zc) { return joint[(xv * ny + yv) * nz + zc]; };

    Distribution out(ny, 0.0);
    double total = 0.0;
    for (double p : joint) total += p;
    if (!(total > 0.0)) return std::nullopt;
    const auto xv = static_cast<std::size_t>(x_value);
    for (std::size_t zc = 0; zc < nz; ++zc) {
        double pz = 0.0, pxz = 0.0;
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = 0; b < ny; ++b) pz += at(a, b, zc);
        if (pz <= 0.0) continue;
        for (std::size_t b = 0; b < ny; ++b) pxz += at(xv, b, zc);
        if (!(pxz > 0.0)) return std::nullopt;
        const double w = pz / total / pxz;
        for (std::size_t b = 0; b < ny; ++b) out[b] += w * at(xv, b, zc);
    }
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= s;
    return out;
}

ArmScore average_arm(const data::Arm& arm, int niters, const std::function<IterationDraw(int)>& draw) {
    if (niters < 1) throw ValidationError("niters must be at least 1");
    ArmScore out;
    out.x_value = arm.x_value;
    std::vector<double> loglik(static_cast<std::size_t>(niters), -INFINITY);
    Distribution sum_rep, sum_pred;
    int n_rep = 0;
    for (int it = 0; it < niters; ++it) {
        const auto d = draw(it);
        if (d.scored) {
            const auto& th = *d.scored;
            if (th.size() != arm.outcome_counts.size())
                throw ValidationError("arm outcome counts do not match the outcome cardinality");
            double ll = 0.0;
            for (std::size_t k = 0; k < th.size(); ++k) {
                const auto n = arm.outcome_counts[k];
                if (n == 0) continue;
                ll += th[k] > 0.0 ? static_cast<double>(n) * std::log(th[k]) : -INFINITY;
            }
            loglik[static_cast<std::size_t>(it)] = ll;
            if (sum_pred.empty()) sum_pred.assign(th.size(), 0.0);
            for (std::size_t k = 0; k < th.size(); ++k) sum_pred[k] += th[k];
            ++out.valid_iterations;
            if (d.reported) {
                if (sum_rep.empty()) sum_rep.assign(d.reported->size(), 0.0);
                for (std::size_t k = 0; k < sum_rep.size(); ++k) sum_rep[k] += (*d.reported)[k];
                ++n_rep;
            }
        }
    }
    if (out.valid_iterations == 0)
        throw DegenerateScore("every iteration hit a zero-probability stratum for arm x = " +
                              std::to_string(arm.x_value));
    out.log_marginal = log_sum_exp(loglik) - std::log(static_cast<double>(niters));
    for (auto& v : sum_pred) v /= out.valid_iterations;
    out.predicted = std::move(sum_pred);
    if (n_rep > 0) {
        for (auto& v : sum_rep) v /= n_rep;
        out.id_estimate = std::move(sum_rep);
    }
    return out;
}

ArmScore score_exp_arm(const bayesnet::BayesNetPosterior& post, int x, int y, const std::vector<int>& z,
                       const data::Arm& arm, int niters, std::uint64_t seed) {
    return average_arm(arm, niters, [&](int it) {
        const auto params = bayesnet::sample_parameters(post, derive_seed(seed, {static_cast<std::uint64_t>(it)}));
        auto th = adjusted_distribution(params, x, y, z, arm.x_value);
        return IterationDraw{th, th};
    });
}

std::vector<Hypothesis> enumerate_hypotheses(const std::vector<std::string>& pool, const FasConfig& config) {
    const int k = static_cast<int>(pool.size());
    if (k > 16 && !config.max_subset_size)
        throw EnumerationRefused("candidate pool has " + std::to_string(k) +
                                 " variables (2^" + std::to_string(k) +
                                 " subsets); set max_subset_size to bound the enumeration");
    if (k > 62) throw EnumerationRefused("candidate pool too large");
    const int max_size = std::min(k, config.max_subset_size.value_or(k));
    std::vector<Hypothesis> out;
    for (int size = 0; size <= max_size; ++size) {
        // Combinations of `size` pool entries in lexicographic index order.
        std::vector<int> idx(static_cast<std::size_t>(size));
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            std::vector<std::string> z;
            for (int i : idx) z.push_back(pool[static_cast<std::size_t>(i)]);
            out.push_back(Hypothesis::adjustment_set(std::move(z)));
            int pos = size - 1;
            while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == k - size + pos) --pos;
            if (pos < 0) break;
            ++idx[static_cast<std::size_t>(pos)];
            for (int j = pos + 1; j < size; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    out.push_back(Hypothesis::not_exists());
    return out;
}

std::vector<std::optional<Distribution>> empirical_estimate(const data::ExperimentSummary& exp) {
    std::vector<std::optional<Distribution>> out;
    for (const auto& arm : exp.arms) {
        if (arm.total <= 0) {
            out.emplace_back(std::nullopt);
            continue;
        }
        Distribution d;
        for (auto c : arm.outcome_counts) d.push_back(static_cast<double>(c) / static_cast<double>(arm.total));
        out.emplace_back(std::move(d));
    }
    return out;
}

namespace {

void check_inputs(const data::CategoricalTable& table, const data::ExperimentSummary& exp) {
    exp.validate();
    if (!table.has(exp.treatment)) throw LookupError("treatment '" + exp.treatment + "' is not in the table");
    if (!table.has(exp.outcome)) throw LookupError("outcome '" + exp.outcome + "' is not in the table");
    const int nx = table.cardinality(table.index_of(exp.treatment));
    const int ny = table.cardinality(table.index_of(exp.outcome));
    for (const auto& arm : exp.arms) {
        if (arm.x_value >= nx)
            throw ValidationError("arm x = " + std::to_string(arm.x_value) + " is outside the treatment's categories");
        if (static_cast<int>(arm.outcome_counts.size()) != ny)
            throw ValidationError("arm x = " + std::to_string(arm.x_value) + " has " +
                                  std::to_string(arm.outcome_counts.size()) + " outcome counts but '" + exp.outcome +
                                  "' has " + std::to_string(ny) + " categories");
    }
}

// Stable across enumeration order so a hypothesis scores the same alone or in a full run.
std::uint64_t hypothesis_key(const Hypothesis& h) {
    std::uint64_t k = 14695981039346656037ull;
    for (const unsigned char c : h.label()) k = (k ^ c) * 1099511628211ull;
    return k;
}

}  // namespace

FasResult run_fas(const data::CategoricalTable& table, const data::ExperimentSummary& exp, const FasConfig& config,
                  const std::vector<std::string>& extra_vars, bool selected_population,
                  const std::function<IterationModel(const bayesnet::BayesNetPosterior&, int, int)>& make_model,
                  const std::optional<Hypothesis>& only) {
    check_inputs(table, exp);
    if (config.niters < 1) throw ValidationError("niters must be at least 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
    if (!(config.ess > 0.0)) throw ValidationError("ess must be positive");

    FasResult res;
    res.treatment = exp.treatment;
    res.outcome = exp.outcome;
    res.selected_population = selected_population;
    res.config = config;
    res.pool = candidate_pool(table, exp.treatment, exp.outcome, config.alpha);

    std::vector<Hypothesis> hyps;
    std::vector<std::string> prior_pool = res.pool;
    if (only) {
        if (only->exists) {
            for (const auto& v : only->z) {
                if (v == exp.treatment || v == exp.outcome)
                    throw ValidationError("adjustment set must exclude treatment and outcome");
                table.index_of(v);
                if (std::find(prior_pool.begin(), prior_pool.end(), v) == prior_pool.end()) prior_pool.push_back(v);
            }
        }
        hyps.push_back(*only);
    } else {
        hyps = enumerate_hypotheses(res.pool, config);
    }

    // Network over pool, hypothesis variables, extras and (X, Y), table order.
    std::vector<std::string> vars;
    for (const auto& name : table.names()) {
        const bool keep = name == exp.treatment || name == exp.outcome ||
                          std::find(prior_pool.begin(), prior_pool.end(), name) != prior_pool.end() ||
                          std::find(extra_vars.begin(), extra_vars.end(), name) != extra_vars.end();
        if (keep) vars.push_back(name);
    }
    const auto sub = table.select(vars);
    bayesnet::StructureConfig sc{config.ess, config.max_parents, config.restarts, derive_seed(config.seed, {0})};
    const auto dag = bayesnet::learn_structure(sub, sc);
    res.learned_dag_json = graph::admg_to_json(dag);
    const auto post = bayesnet::fit_posterior(dag, sub, config.ess);
    const int xi = static_cast<int>(sub.index_of(exp.treatment));
    const int yi = static_cast<int>(sub.index_of(exp.outcome));
    const auto model = make_model(post, xi, yi);
    const auto empirical = empirical_estimate(exp);

    std::vector<HypothesisScore> scores(hyps.size());
    parallel_for(hyps.size(), config.threads, [&](std::size_t h) {
        auto& hs = scores[h];
        hs.hypothesis = hyps[h];
        const auto key = hypothesis_key(hyps[h]);
        hs.log_prior = prior_log_prob(hyps[h], prior_pool);
        std::vector<int> z;
        for (const auto& v : hyps[h].z) z.push_back(static_cast<int>(sub.index_of(v)));
        double total = hs.log_prior;
        for (std::size_t a = 0; a < exp.arms.size(); ++a) {
            const auto& arm = exp.arms[a];
            ArmScore as;
            as.x_value = arm.x_value;
            if (hyps[h].exists) {
                try {
                    as = average_arm(arm, config.niters, [&](int it) {
                        const auto seed = derive_seed(config.seed, {1, key, a, static_cast<std::uint64_t>(it)});
                        return model(bayesnet::sample_parameters(post, seed), z, arm.x_value);
                    });
                } catch (const DegenerateScore&) {
                    as.log_marginal = -INFINITY;
                }
            } else {
                as.log_marginal = score_not_exists(arm);
                as.predicted = empirical[a];
                if (!selected_population) as.id_estimate = empirical[a];
            }
            total += as.log_marginal;
            hs.arms.push_back(std::move(as));
        }
        hs.total = total;
    });

    double top = -INFINITY;
    for (const auto& s : scores) top = std::max(top, s.total);
    const HypothesisScore* best = nullptr;
    for (const auto& s : scores)
        if (s.total >= top - 1e-9 && (!best || preferred(s.hypothesis, best->hypothesis))) best = &s;
    if (!best) best = &scores.back();
    res.best = best->hypothesis;
    for (const auto& arm : best->arms) {
        res.arm_x_values.push_back(arm.x_value);
        res.estimate.push_back(arm.id_estimate);
    }

    res.ranked = std::move(scores);
    const auto best_h = res.best;
    std::stable_sort(res.ranked.begin(), res.ranked.end(), [&](const HypothesisScore& a, const HypothesisScore& b) {
        const bool a_best = a.hypothesis == best_h, b_best = b.hypothesis == best_h;
        if (a_best != b_best) return a_best;
        if (a.total != b.total) return a.total > b.total;
        return preferred(a.hypothesis, b.hypothesis);
    });
    return res;
}

namespace {

IterationModel plain_model(int x, int y) {
    return [x, y](const bayesnet::ParamInstantiation& p, const std::vector<int>& z, int x_value) {
        auto th = adjusted_distribution(p, x, y, z, x_value);
        return IterationDraw{th, th};
    };
}

}  // namespace

FasResult find_adjustment_set(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                              const FasConfig& config) {
    if (exp.population != data::Population::Same)
        throw ValidationError("find_adjustment_set: population is 'selected'; use the selection-aware variant");
    return run_fas(table, exp, config, {}, false,
                   [](const bayesnet::BayesNetPosterior&, int x, int y) { return plain_model(x, y); });
}

FasResult score_hypothesis(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                           const Hypothesis& h, const FasConfig& config) {
    if (exp.population != data::Population::Same)
        throw ValidationError("score_hypothesis: population is 'selected'; use the selection-aware variant");
    return run_fas(
        table, exp, config, {}, false,
        [](const bayesnet::BayesNetPosterior&, int x, int y) { return plain_model(x, y); }, h);
}

double kl_divergence(const data::ExperimentSummary& exp, const std::vector<ArmScore>& arms) {
    const auto emp = empirical_estimate(exp);
    double kl = 0.0;
    for (std::size_t a = 0; a < exp.arms.size() && a < arms.size(); ++a) {
        if (!emp[a]) continue;
        if (!arms[a].predicted) return INFINITY;
        const auto& p = *emp[a];
        const auto& q = *arms[a].predicted;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (p[k] <= 0.0) continue;
            if (q[k] <= 0.0) return INFINITY;
            kl += p[k] * std::log(p[k] / q[k]);
        }
    }
    return kl;
}

Hypothesis kl_select(const FasResult& scored, const data::ExperimentSummary& exp) {
    const HypothesisScore* best = nullptr;
    double best_kl = INFINITY;
    for (const auto& s : scored.ranked) {
        if (!s.hypothesis.exists) continue;
        const double kl = kl_divergence(exp, s.arms);
        const bool better = !best || kl < best_kl - 1e-12 ||
                            (std::abs(kl - best_kl) <= 1e-12 && preferred(s.hypothesis, best->hypothesis));
        if (better) {
            best = &s;
            best_kl = kl;
        }
    }
    if (!best) throw ValidationError("kl_select: no adjustment set was scored");
    return best->hypothesis;
}

Hypothesis kl_select(const data::CategoricalTable& table, const data::ExperimentSummary& exp, const FasConfig& config) {
    return kl_select(find_adjustment_set(table, exp, config), exp);
}

namespace {

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json dist(const std::optional<Distribution>& d) {
    return d ? nlohmann::json(*d) : nlohmann::json(nullptr);
}

nlohmann::json hyp_json(const Hypothesis& h) {
    if (!h.exists) return {{"type", "not_exists"}, {"label", h.label()}};
    return {{"type", "set"}, {"z", h.z}, {"label", h.label()}};
}

}  // namespace

std::string result_to_json(const FasResult& r) {
    nlohmann::json j;
    j["treatment"] = r.treatment;
    j["outcome"] = r.outcome;
    j["population"] = r.selected_population ? "selected" : "same";
    j["best"] = hyp_json(r.best);
    j["estimate"] = nlohmann::json::array();
    for (std::size_t a = 0; a < r.estimate.size(); ++a)
        j["estimate"].push_back({{"x", r.arm_x_values[a]}, {"distribution", dist(r.estimate[a])}});
    j["pool"] = r.pool;
    j["hypotheses"] = nlohmann::json::array();
    int rank = 1;
    for (const auto& s : r.ranked) {
        auto h = hyp_json(s.hypothesis);
        h["rank"] = rank++;
        h["log_prior"] = num(s.log_prior);
        h["log_score"] = num(s.total);
        h["arms"] = nlohmann::json::array();
        for (const auto& a : s.arms)
            h["arms"].push_back({{"x", a.x_value},
                                 {"log_marginal", num(a.log_marginal)},
                                 {"id_estimate", dist(a.id_estimate)},
                                 {"predicted", dist(a.predicted)},
                                 {"valid_iterations", a.valid_iterations}});
        j["hypotheses"].push_back(std::move(h));
    }
    const auto& c = r.config;
    j["config"] = {{"alpha", c.alpha},           {"niters", c.niters},
                   {"ess", c.ess},               {"seed", c.seed},
                   {"max_parents", c.max_parents}, {"restarts", c.restarts},
                   {"selection_tol", c.selection_tol}};
    j["config"]["max_subset_size"] = c.max_subset_size ? nlohmann::json(*c.max_subset_size) : nlohmann::json(nullptr);
    j["learned_dag"] = nlohmann::json::parse(r.learned_dag_json.empty() ? "null" : r.learned_dag_json);
    return j.dump(2) + "\n";
}

std::string result_table(const FasResult& r, std::size_t max_rows) {
    std::ostringstream os;
    os << "treatment " << r.treatment << ", outcome " << r.outcome << " ("
       << (r.selected_population ? "selected" : "same") << " population)\n";
    os << "candidate pool: {";
    for (std::size_t i = 0; i < r.pool.size(); ++i) os << (i ? "," : "") << r.pool[i];
    os << "}\n";
    os << "best: " << r.best.label() << "\n\n";
    os << std::left << std::setw(6) << "rank" << std::setw(28) << "hypothesis" << std::right << std::setw(14)
       << "log score" << "\n";
    std::size_t rank = 0;
    for (const auto& s : r.ranked) {
        if (rank >= max_rows) break;
        os << std::left << std::setw(6) << ++rank << std::setw(28) << s.hypothesis.label() << std::right
           << std::setw(14) << std::fixed << std::setprecision(4) << s.total << "\n";
    }
    os << "\nestimate:\n";
    for (std::size_t a = 0; a < r.estimate.size(); ++a) {
        os << "  do(" << r.treatment << "=" << r.arm_x_values[a] << "): ";
        if (!r.estimate[a]) {
            os << "N/A\n";
            continue;
        }
        os << "[";
        for (std::size_t k = 0; k < r.estimate[a]->size(); ++k)
            os << (k ? ", " : "") << std::fixed << std::setprecision(4) << (*r.estimate[a])[k];
        os << "]\n";
    }
    return os.str();
}

}  // namespace adjfas::score
