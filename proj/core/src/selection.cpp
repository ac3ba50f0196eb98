#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "adjfas/selection.hpp"

namespace adjfas::selection {

bayesnet::ParamInstantiation SelectionBn::expanded() const {
    const int n = base.size();
    const int k = static_cast<int>(selected_vars.size());
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < k; ++i) {
        names.push_back("S_" + base.dag.name(selected_vars[static_cast<std::size_t>(i)]));
        edges.emplace_back(selected_vars[static_cast<std::size_t>(i)], n + i);
        edges.emplace_back(n + i, n + k);
    }
    names.push_back("S");
    bayesnet::ParamInstantiation out;
    out.dag = base.dag.with_nodes(names, std::vector<bool>(names.size(), false), edges);
    out.cards = base.cards;
    out.cpts = base.cpts;
    out.seed = base.seed;
    for (int i = 0; i < k; ++i) {
        out.cards.push_back(2);
        std::vector<double> cpt;
        for (double t : theta_s[static_cast<std::size_t>(i)]) {
            cpt.push_back(1.0 - t);
            cpt.push_back(t);
        }
        out.cpts.push_back(std::move(cpt));
    }
    // S = AND of all S_i; parents are S_1..S_k in ascending order, last fastest.
    out.cards.push_back(2);
    const std::size_t configs = std::size_t{1} << k;
    std::vector<double> s_cpt(2 * configs, 0.0);
    for (std::size_t c = 0; c < configs; ++c) {
        const bool all = c == configs - 1;
        s_cpt[2 * c] = all ? 0.0 : 1.0;
        s_cpt[2 * c + 1] = all ? 1.0 : 0.0;
    }
    out.cpts.push_back(std::move(s_cpt));
    return out;
}

namespace {

// Weighted joint over the selected variables and its per-variable marginals.
struct Raking {
    std::vector<int> cards;
    std::vector<double> joint;  // P(V_sel)

    std::vector<Distribution> marginals(const std::vector<Distribution>& theta, double* p_sel) const {
        std::vector<Distribution> m(cards.size());
        for (std::size_t i = 0; i < cards.size(); ++i) m[i].assign(static_cast<std::size_t>(cards[i]), 0.0);
        std::vector<int> idx(cards.size(), 0);
        double total = 0.0;
        for (std::size_t c = 0; c < joint.size(); ++c) {
            double w = joint[c];
            for (std::size_t i = 0; i < cards.size() && w != 0.0; ++i) w *= theta[i][static_cast<std::size_t>(idx[i])];
            if (w != 0.0) {
                for (std::size_t i = 0; i < cards.size(); ++i) m[i][static_cast<std::size_t>(idx[i])] += w;
                total += w;
            }
            for (std::size_t i = cards.size(); i-- > 0;) {
                if (++idx[i] < cards[i]) break;
                idx[i] = 0;
            }
        }
        if (p_sel) *p_sel = total;
        if (total > 0.0)
            for (auto& d : m)
                for (auto& v : d) v /= total;
        return m;
    }
};

double residual_of(const std::vector<Distribution>& m, const std::vector<Distribution>& target) {
    double r = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t v = 0; v < m[i].size(); ++v) r = std::max(r, std::abs(m[i][v] - target[i][v]));
    return r;
}

void rescale(Distribution& theta) {
    const double mx = *std::max_element(theta.begin(), theta.end());
    if (mx > 0.0)
        for (auto& t : theta) t /= mx;
}

}  // namespace

SelectionBn build_selection_bn(const bayesnet::ParamInstantiation& params,
                               const std::map<std::string, Distribution>& marginals, const SolverOptions& options) {
    if (marginals.empty()) throw ValidationError("selection: no reported marginals");
    if (!(options.damping > 0.0 && options.damping <= 1.0)) throw ValidationError("selection: damping must be in (0, 1]");
    SelectionBn sbn;
    sbn.base = params;

    std::vector<std::pair<int, Distribution>> items;
    for (const auto& [name, p] : marginals) {
        const int v = params.dag.index_of(name);
        const auto card = static_cast<std::size_t>(params.cards[v]);
        Distribution target(card, 0.0);
        for (std::size_t c = 0; c < p.size(); ++c) {
            if (c < card) {
                target[c] = p[c];
            } else if (p[c] > 0.0) {
                throw InfeasibleSelection("selection: reported marginal of '" + name + "' puts mass on category " +
                                              std::to_string(c) + " which has no observational support",
                                          name, static_cast<int>(c));
            }
        }
        const double s = std::accumulate(target.begin(), target.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-6) throw ValidationError("selection: marginal of '" + name + "' does not sum to 1");
        for (auto& t : target) t /= s;
        items.emplace_back(v, std::move(target));
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    Raking rk;
    std::vector<Distribution> target;
    for (auto& [v, t] : items) {
        sbn.selected_vars.push_back(v);
        rk.cards.push_back(params.cards[v]);
        target.push_back(t);
    }
    rk.joint = bayesnet::joint_marginal(params, sbn.selected_vars);

    // Support check against the unselected marginals.
    std::vector<Distribution> ones;
    for (int c : rk.cards) ones.emplace_back(static_cast<std::size_t>(c), 1.0);
    const auto base_marg = rk.marginals(ones, nullptr);
    for (std::size_t i = 0; i < target.size(); ++i)
        for (std::size_t c = 0; c < target[i].size(); ++c)
            if (target[i][c] > 0.0 && base_marg[i][c] <= 0.0) {
                const auto& name = params.dag.name(sbn.selected_vars[i]);
                throw InfeasibleSelection("selection: reported marginal of '" + name + "' puts mass on category " +
                                              std::to_string(c) + " which has zero observational probability",
                                          name, static_cast<int>(c));
            }

    std::vector<Distribution> theta(target.size());
    Rng rng(options.init_seed.value_or(0));
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (std::size_t i = 0; i < target.size(); ++i) {
        theta[i].assign(target[i].size(), 1.0);
        if (options.init_seed)
            for (auto& t : theta[i]) t = unif(rng);
        for (std::size_t c = 0; c < target[i].size(); ++c)
            if (target[i][c] == 0.0) theta[i][c] = 0.0;
        rescale(theta[i]);
    }

    double p_sel = 0.0;
    auto m = rk.marginals(theta, &p_sel);
    double res = residual_of(m, target);
    int sweep = 0;
    while (res >= options.tol * 1e-3 && sweep < options.max_sweeps) {
        ++sweep;
        for (std::size_t i = 0; i < target.size(); ++i) {
            for (std::size_t c = 0; c < target[i].size(); ++c) {
                if (target[i][c] == 0.0) {
                    theta[i][c] = 0.0;
                } else if (m[i][c] > 0.0) {
                    theta[i][c] *= std::pow(target[i][c] / m[i][c], options.damping);
                } else {
                    const auto& name = params.dag.name(sbn.selected_vars[i]);
                    throw InfeasibleSelection("selection: category " + std::to_string(c) + " of '" + name +
                                                  "' cannot be reached under the other selection constraints",
                                              name, static_cast<int>(c));
                }
            }
            rescale(theta[i]);
            m = rk.marginals(theta, &p_sel);
        }
        res = residual_of(m, target);
    }
    if (!(p_sel > 0.0)) throw InfeasibleSelection("selection: P(S=1) is zero", "S", 1);
    if (res > options.tol)
        throw InfeasibleSelection("selection: solver did not reach tolerance after " + std::to_string(sweep) +
                                      " sweeps (residual " + std::to_string(res) + ")",
                                  "", -1);
    sbn.theta_s = std::move(theta);
    sbn.sweeps = sweep;

    // Residual measured by exact inference on the expanded network.
    double r = 0.0;
    const auto ex = sbn.expanded();
    for (std::size_t i = 0; i < target.size(); ++i) {
        auto q = bayesnet::infer_conditional(ex, sbn.selected_vars[i], {{sbn.s_node(), 1}});
        if (!q) throw InfeasibleSelection("selection: P(S=1) is zero", "S", 1);
        for (std::size_t c = 0; c < q->size(); ++c) r = std::max(r, std::abs((*q)[c] - target[i][c]));
    }
    sbn.residual = r;
    return sbn;
}

std::optional<Distribution> selected_conditional(const SelectionBn& sbn, int target, const bayesnet::Assignment& evidence) {
    if (target < 0 || target >= sbn.base.size()) throw LookupError("selected_conditional: target out of range");
    auto ev = evidence;
    ev[sbn.s_node()] = 1;
    return bayesnet::infer_conditional(sbn.expanded(), target, ev);
}

std::vector<double> selected_joint(const SelectionBn& sbn, const std::vector<int>& vars) {
    auto j = bayesnet::joint_with_evidence(sbn.expanded(), vars, {{sbn.s_node(), 1}});
    const double s = std::accumulate(j.begin(), j.end(), 0.0);
    if (!(s > 0.0)) throw InfeasibleSelection("selection: P(S=1) is zero", "S", 1);
    for (auto& v : j) v /= s;
    return j;
}

std::optional<Distribution> selected_adjusted_distribution(const SelectionBn& sbn, int x, int y,
                                                           const std::vector<int>& z, int x_value) {
    std::vector<int> vars{x, y};
    vars.insert(vars.end(), z.begin(), z.end());
    const auto joint = bayesnet::joint_with_evidence(sbn.expanded(), vars, {{sbn.s_node(), 1}});
    const auto nx = static_cast<std::size_t>(sbn.base.cards[x]);
    const auto ny = static_cast<std::size_t>(sbn.base.cards[y]);
    const std::size_t nz = joint.size() / (nx * ny);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) { return joint[(a * ny + b) * nz + c]; };
    const double total = std::accumulate(joint.begin(), joint.end(), 0.0);
    if (!(total > 0.0)) return std::nullopt;
    const auto xv = static_cast<std::size_t>(x_value);
    Distribution out(ny, 0.0);
    for (std::size_t c = 0; c < nz; ++c) {
        double pz = 0.0, pxz = 0.0;
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = 0; b < ny; ++b) pz += at(a, b, c);
        if (pz <= 0.0) continue;
        for (std::size_t b = 0; b < ny; ++b) pxz += at(xv, b, c);
        if (!(pxz > 0.0)) return std::nullopt;
        for (std::size_t b = 0; b < ny; ++b) out[b] += pz / total * at(xv, b, c) / pxz;
    }
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= s;
    return out;
}

void check_support(const data::CategoricalTable& table, const std::map<std::string, Distribution>& marginals) {
    for (const auto& [name, p] : marginals) {
        if (!table.has(name))
            throw ValidationError("reported marginal for '" + name + "', which is not in the observational data");
        const auto counts = data::contingency_counts(table, std::vector<std::string>{name});
        for (std::size_t c = 0; c < p.size(); ++c) {
            const bool observed = c < counts.counts.size() && counts.counts[c] > 0;
            if (p[c] > 0.0 && !observed)
                throw InfeasibleSelection("reported marginal of '" + name + "' puts mass on category " +
                                              std::to_string(c) + ", never observed in the observational data",
                                          name, static_cast<int>(c));
        }
    }
}

namespace {

std::vector<std::string> marginal_vars(const data::ExperimentSummary& exp) {
    std::vector<std::string> out;
    for (const auto& [k, v] : exp.reported_marginals) out.push_back(k);
    return out;
}

score::IterationModel selected_model(const bayesnet::BayesNetPosterior& post, int x, int y,
                                     const data::ExperimentSummary& exp, const score::FasConfig& config) {
    SolverOptions opt;
    opt.tol = config.selection_tol;
    auto solved = build_selection_bn(bayesnet::posterior_mean(post), exp.reported_marginals, opt);
    return [solved = std::move(solved), x, y](const bayesnet::ParamInstantiation& sampled, const std::vector<int>& z,
                                             int x_value) {
        SelectionBn sbn = solved;
        sbn.base = sampled;
        score::IterationDraw d;
        d.scored = selected_adjusted_distribution(sbn, x, y, z, x_value);
        d.reported = score::adjusted_distribution(sampled, x, y, z, x_value);
        return d;
    };
}

}  // namespace

score::FasResult find_adjustment_set_selected(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                                              const score::FasConfig& config) {
    if (exp.population != data::Population::Selected)
        throw ValidationError("find_adjustment_set_selected: population is not 'selected'");
    exp.validate();
    check_support(table, exp.reported_marginals);
    return score::run_fas(table, exp, config, marginal_vars(exp), true,
                          [&](const bayesnet::BayesNetPosterior& post, int x, int y) {
                              return selected_model(post, x, y, exp, config);
                          });
}

score::FasResult score_hypothesis_selected(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                                           const score::Hypothesis& h, const score::FasConfig& config) {
    if (exp.population != data::Population::Selected)
        throw ValidationError("score_hypothesis_selected: population is not 'selected'");
    exp.validate();
    check_support(table, exp.reported_marginals);
    return score::run_fas(
        table, exp, config, marginal_vars(exp), true,
        [&](const bayesnet::BayesNetPosterior& post, int x, int y) { return selected_model(post, x, y, exp, config); },
        h);
}

SelectionBn selection_from_data(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                                const score::FasConfig& config) {
    exp.validate();
    if (exp.reported_marginals.empty()) throw ValidationError("selection-check: the experiment reports no marginals");
    check_support(table, exp.reported_marginals);
    const auto vars = marginal_vars(exp);
    std::vector<std::string> ordered;
    for (const auto& n : table.names())
        if (std::find(vars.begin(), vars.end(), n) != vars.end()) ordered.push_back(n);
    const auto sub = table.select(ordered);
    bayesnet::StructureConfig sc{config.ess, config.max_parents, config.restarts, derive_seed(config.seed, {0})};
    const auto post = bayesnet::fit_posterior(bayesnet::learn_structure(sub, sc), sub, config.ess);
    SolverOptions opt;
    opt.tol = config.selection_tol;
    return build_selection_bn(bayesnet::posterior_mean(post), exp.reported_marginals, opt);
}

std::string selection_to_json(const SelectionBn& sbn, const std::map<std::string, Distribution>& reported) {
    nlohmann::json j = nlohmann::json::parse(bayesnet::instantiation_to_json(sbn.base));
    j["theta_s"] = nlohmann::json::object();
    j["selected_marginals"] = nlohmann::json::object();
    const auto ex = sbn.expanded();
    for (std::size_t i = 0; i < sbn.selected_vars.size(); ++i) {
        const auto& name = sbn.base.dag.name(sbn.selected_vars[i]);
        j["theta_s"][name] = sbn.theta_s[i];
        auto q = bayesnet::infer_conditional(ex, sbn.selected_vars[i], {{sbn.s_node(), 1}});
        j["selected_marginals"][name] = q ? nlohmann::json(*q) : nlohmann::json(nullptr);
    }
    if (!reported.empty()) j["reported_marginals"] = reported;
    j["residual"] = sbn.residual;
    j["sweeps"] = sbn.sweeps;
    return j.dump(2) + "\n";
}

}  // namespace adjfas::selection
