#include <cmath>

#include <json.hpp>

#include "adjfas/bayesnet.hpp"

namespace adjfas::bayesnet {

namespace {

std::size_t configs_of(const graph::Admg& dag, const std::vector<int>& cards, int node) {
    std::size_t q = 1;
    for (int p : dag.parents(node)) q *= static_cast<std::size_t>(cards.at(p));
    return q;
}

}  // namespace

std::size_t ParamInstantiation::parent_configs(int node) const { return configs_of(dag, cards, node); }
std::size_t BayesNetPosterior::parent_configs(int node) const { return configs_of(dag, cards, node); }

void ParamInstantiation::validate() const {
    if (static_cast<int>(cards.size()) != size() || static_cast<int>(cpts.size()) != size())
        throw ValidationError("network: cards/cpts do not match the DAG");
    for (int v = 0; v < size(); ++v) {
        const std::size_t r = static_cast<std::size_t>(cards[v]);
        const std::size_t q = parent_configs(v);
        if (cpts[v].size() != r * q)
            throw ValidationError("network: CPT of '" + dag.name(v) + "' has the wrong shape");
        for (std::size_t j = 0; j < q; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r; ++k) {
                const double p = cpts[v][j * r + k];
                if (!(p >= 0.0)) throw ValidationError("network: negative CPT entry in '" + dag.name(v) + "'");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw ValidationError("network: CPT row of '" + dag.name(v) + "' does not sum to 1");
        }
    }
}

BayesNetPosterior fit_posterior(const graph::Admg& dag, const data::CategoricalTable& table, double ess) {
    if (!(ess > 0.0)) throw ValidationError("fit_posterior: ess must be positive");
    if (static_cast<std::size_t>(dag.size()) != table.num_vars())
        throw ValidationError("fit_posterior: DAG and table disagree on variables");
    for (int v = 0; v < dag.size(); ++v)
        if (dag.name(v) != table.name(v)) throw ValidationError("fit_posterior: DAG node order must match the table");

    BayesNetPosterior post;
    post.dag = dag;
    post.cards = table.cardinalities();
    post.ess = ess;
    post.pseudo_counts.resize(dag.size());
    for (int v = 0; v < dag.size(); ++v) {
        std::vector<std::size_t> vars;
        for (int p : dag.parents(v)) vars.push_back(static_cast<std::size_t>(p));
        vars.push_back(static_cast<std::size_t>(v));
        const auto t = data::contingency_counts(table, std::span<const std::size_t>(vars));
        const double prior = ess / static_cast<double>(t.counts.size());
        auto& a = post.pseudo_counts[v];
        a.resize(t.counts.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = prior + static_cast<double>(t.counts[i]);
    }
    return post;
}

ParamInstantiation posterior_mean(const BayesNetPosterior& post) {
    ParamInstantiation p{post.dag, post.cards, post.pseudo_counts, std::nullopt};
    for (int v = 0; v < post.size(); ++v) {
        const std::size_t r = static_cast<std::size_t>(post.cards[v]);
        auto& cpt = p.cpts[v];
        for (std::size_t j = 0; j < cpt.size(); j += r) {
            double s = 0.0;
            for (std::size_t k = 0; k < r; ++k) s += cpt[j + k];
            for (std::size_t k = 0; k < r; ++k) cpt[j + k] /= s;
        }
    }
    return p;
}

Distribution sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
    // log G_k with G_k ~ Gamma(a_k). For a_k < 1 use G = G' * U^(1/a) with
    // G' ~ Gamma(a + 1), which stays representable for tiny a.
    std::vector<double> logg(alpha.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        const double a = alpha[k];
        if (a >= 1.0) {
            std::gamma_distribution<double> gd(a, 1.0);
            double g = gd(rng);
            logg[k] = std::log(g);
        } else {
            std::gamma_distribution<double> gd(a + 1.0, 1.0);
            double g = gd(rng);
            double u = unif(rng);
            while (u <= 0.0) u = unif(rng);
            logg[k] = std::log(g) + std::log(u) / a;
        }
    }
    const double lse = log_sum_exp(logg);
    Distribution out(alpha.size());
    double s = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) s += (out[k] = std::exp(logg[k] - lse));
    for (auto& v : out) v /= s;
    return out;
}

ParamInstantiation sample_parameters(const BayesNetPosterior& post, Rng& rng) {
    ParamInstantiation p{post.dag, post.cards, {}, std::nullopt};
    p.cpts.resize(post.size());
    std::vector<double> alpha;
    for (int v = 0; v < post.size(); ++v) {
        const std::size_t r = static_cast<std::size_t>(post.cards[v]);
        const auto& a = post.pseudo_counts[v];
        auto& cpt = p.cpts[v];
        cpt.resize(a.size());
        for (std::size_t j = 0; j < a.size(); j += r) {
            alpha.assign(a.begin() + j, a.begin() + j + r);
            auto row = sample_dirichlet(alpha, rng);
            std::copy(row.begin(), row.end(), cpt.begin() + j);
        }
    }
    return p;
}

ParamInstantiation sample_parameters(const BayesNetPosterior& post, std::uint64_t seed) {
    Rng rng(seed);
    auto p = sample_parameters(post, rng);
    p.seed = seed;
    return p;
}

std::string posterior_to_json(const BayesNetPosterior& post) {
    nlohmann::json j;
    j["dag"] = nlohmann::json::parse(graph::admg_to_json(post.dag));
    j["cardinalities"] = post.cards;
    j["ess"] = post.ess;
    j["pseudo_counts"] = post.pseudo_counts;
    return j.dump(2) + "\n";
}

BayesNetPosterior posterior_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        BayesNetPosterior post;
        post.dag = graph::admg_from_json(j.at("dag").dump());
        post.cards = j.at("cardinalities").get<std::vector<int>>();
        post.ess = j.at("ess").get<double>();
        post.pseudo_counts = j.at("pseudo_counts").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(post.cards.size()) != post.size() ||
            static_cast<int>(post.pseudo_counts.size()) != post.size())
            throw ValidationError("BN JSON: shape mismatch");
        for (int v = 0; v < post.size(); ++v) {
            if (post.pseudo_counts[v].size() != post.parent_configs(v) * post.cards[v])
                throw ValidationError("BN JSON: pseudo-count tensor of '" + post.dag.name(v) + "' has the wrong size");
            for (double a : post.pseudo_counts[v])
                if (!(a > 0.0)) throw ValidationError("BN JSON: pseudo-counts must be positive");
        }
        return post;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("BN JSON: ") + e.what());
    }
}

std::string instantiation_to_json(const ParamInstantiation& params) {
    nlohmann::json j;
    j["dag"] = nlohmann::json::parse(graph::admg_to_json(params.dag));
    j["cardinalities"] = params.cards;
    j["cpts"] = params.cpts;
    if (params.seed) {
        j["seed"] = *params.seed;
    } else {
        j["seed"] = nullptr;
    }
    return j.dump(2) + "\n";
}

}  // namespace adjfas::bayesnet
