#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "adjfas/selection.hpp"
#include "adjfas/sim.hpp"

namespace adjfas::sim {

void SimConfig::validate() const {
    if (n_observed < 0 || n_latent < 0) throw ValidationError("sim: variable counts must be non-negative");
    if (!(mean_in_degree > 0.0)) throw ValidationError("sim: mean in-degree must be positive");
    if (min_card < 2 || max_card < min_card || max_card > 16) throw ValidationError("sim: invalid cardinality range");
    if (n_obs < 1 || n_per_arm < 1) throw ValidationError("sim: sample sizes must be positive");
    if (max_selected < 1) throw ValidationError("sim: max_selected must be positive");
}

namespace {

// Fills every CPT row of `p` with an independent Dirichlet(1) draw.
void random_cpts(bayesnet::ParamInstantiation& p, Rng& rng) {
    p.cpts.assign(p.size(), {});
    for (int v = 0; v < p.size(); ++v) {
        const auto r = static_cast<std::size_t>(p.cards[v]);
        const std::vector<double> ones(r, 1.0);
        const std::size_t q = p.parent_configs(v);
        for (std::size_t j = 0; j < q; ++j) {
            auto row = bayesnet::sample_dirichlet(ones, rng);
            p.cpts[v].insert(p.cpts[v].end(), row.begin(), row.end());
        }
    }
}

// Network with X's mechanism replaced by a point mass at x_value.
bayesnet::ParamInstantiation mutilate(const bayesnet::ParamInstantiation& w, int x, int x_value) {
    std::vector<std::pair<int, int>> incoming;
    for (int p : w.dag.parents(x)) incoming.emplace_back(p, x);
    bayesnet::ParamInstantiation m{w.dag.without_directed(incoming), w.cards, w.cpts, std::nullopt};
    m.cpts[x].assign(static_cast<std::size_t>(w.cards[x]), 0.0);
    m.cpts[x][static_cast<std::size_t>(x_value)] = 1.0;
    return m;
}

std::vector<int> forward_sample(const bayesnet::ParamInstantiation& p, const std::vector<int>& topo, Rng& rng) {
    std::vector<int> x(static_cast<std::size_t>(p.size()), 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int v : topo) {
        std::size_t cfg = 0;
        for (int pa : p.dag.parents(v)) cfg = cfg * static_cast<std::size_t>(p.cards[pa]) + static_cast<std::size_t>(x[pa]);
        const auto r = static_cast<std::size_t>(p.cards[v]);
        const double* row = p.cpts[v].data() + cfg * r;
        double u = unif(rng), acc = 0.0;
        int val = static_cast<int>(r) - 1;
        for (std::size_t k = 0; k < r; ++k) {
            acc += row[k];
            if (u < acc) {
                val = static_cast<int>(k);
                break;
            }
        }
        // Never land on a zero-probability category through rounding.
        while (row[static_cast<std::size_t>(val)] <= 0.0 && val > 0) --val;
        x[v] = val;
    }
    return x;
}

bool has_directed_path(const graph::Admg& g, int from, int to) { return g.descendants({from}).count(to) > 0; }

GroundTruth fixed_confounded_world() {
    // C -> X, C -> Y, X -> Y with strong confounding.
    auto dag = graph::Admg::from_names({"X", "Y", "C"}, {{"C", "X"}, {"C", "Y"}, {"X", "Y"}});
    GroundTruth gt;
    gt.world.dag = dag;
    gt.world.cards = {2, 2, 2};
    gt.world.cpts.resize(3);
    gt.world.cpts[2] = {0.5, 0.5};                          // P(C)
    gt.world.cpts[0] = {0.85, 0.15, 0.2, 0.8};              // P(X | C)
    gt.world.cpts[1] = {0.8, 0.2, 0.6, 0.4, 0.35, 0.65, 0.1, 0.9};  // P(Y | X, C), parents (X, C)
    return gt;
}

}  // namespace

GroundTruth generate_world(const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    std::uniform_int_distribution<int> card_dist(cfg.min_card, cfg.max_card);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int attempt = 0; attempt < 10000; ++attempt) {
        GroundTruth gt;
        if (cfg.mode == WorldMode::Confounded) {
            gt = fixed_confounded_world();
        } else if (cfg.mode == WorldMode::Latent) {
            auto g = graph::Admg({"X", "Y", "W", "L"}, {true, true, true, false}, {{3, 0}, {3, 1}, {0, 1}});
            gt.world.dag = g;
            for (int v = 0; v < 4; ++v) gt.world.cards.push_back(card_dist(rng));
            random_cpts(gt.world, rng);
        } else {
            const int n = 2 + cfg.n_observed + cfg.n_latent;
            std::vector<std::string> names{"X", "Y"};
            std::vector<bool> obs{true, true};
            for (int i = 1; i <= cfg.n_observed; ++i) {
                names.push_back("V" + std::to_string(i));
                obs.push_back(true);
            }
            for (int i = 1; i <= cfg.n_latent; ++i) {
                names.push_back("L" + std::to_string(i));
                obs.push_back(false);
            }
            const double p = n > 1 ? std::min(1.0, 2.0 * cfg.mean_in_degree / (n - 1)) : 0.0;
            std::vector<std::pair<int, int>> edges;
            if (cfg.mode == WorldMode::Random) {
                std::vector<int> order(static_cast<std::size_t>(n));
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), rng);
                auto px = std::find(order.begin(), order.end(), 0);
                auto py = std::find(order.begin(), order.end(), 1);
                if (py < px) std::iter_swap(px, py);
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j)
                        if (unif(rng) < p) edges.emplace_back(order[i], order[j]);
            } else {
                std::vector<int> order;
                for (int v = 2; v < n; ++v) order.push_back(v);
                std::shuffle(order.begin(), order.end(), rng);
                order.push_back(0);
                order.push_back(1);
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) {
                        if (order[i] == 0) continue;  // X's only child is Y
                        if (unif(rng) < p) edges.emplace_back(order[i], order[j]);
                    }
                edges.emplace_back(0, 1);
            }
            gt.world.dag = graph::Admg(names, obs, edges);
            if (!has_directed_path(gt.world.dag, 0, 1)) continue;
            for (int v = 0; v < n; ++v) gt.world.cards.push_back(card_dist(rng));
            random_cpts(gt.world, rng);
        }
        gt.x = 0;
        gt.y = 1;

        if (cfg.selection != SelectionMode::None) {
            const auto dx = gt.dag().descendants({gt.x});
            std::vector<int> cand;
            int n_cov = 0;
            for (int v = 2; v < gt.world.size(); ++v) {
                if (!gt.dag().observed(v)) continue;
                ++n_cov;
                if (!dx.count(v)) cand.push_back(v);
            }
            if (cand.empty()) continue;
            if (cfg.selection == SelectionMode::Latent && n_cov < 2) continue;
            std::shuffle(cand.begin(), cand.end(), rng);
            int kmax = std::min<int>(cfg.max_selected, static_cast<int>(cand.size()));
            // Latent selection must leave some covariate to report.
            if (cfg.selection == SelectionMode::Latent) kmax = std::min(kmax, n_cov - 1);
            std::uniform_int_distribution<int> kd(1, kmax);
            const int k = kd(rng);
            std::uniform_real_distribution<double> sel(0.2, 1.0);
            for (int i = 0; i < k; ++i) {
                const int v = cand[static_cast<std::size_t>(i)];
                Distribution th(static_cast<std::size_t>(gt.world.cards[v]));
                for (auto& t : th) t = sel(rng);
                gt.selection[v] = th;
            }
        }
        for (int xv = 0; xv < gt.world.cards[gt.x]; ++xv) gt.true_id.push_back(true_interventional(gt, xv));
        return gt;
    }
    throw Error("sim: could not draw a world satisfying the constraints");
}

Distribution true_interventional(const GroundTruth& gt, int x_value, std::size_t max_states) {
    if (x_value < 0 || x_value >= gt.world.cards[gt.x]) throw ValidationError("true_interventional: x out of range");
    const auto m = mutilate(gt.world, gt.x, x_value);
    const auto joint = bayesnet::enumerate_joint(m, max_states);
    // Marginalize onto Y: node order is row-major with the last node fastest.
    std::size_t inner = 1;
    for (int v = gt.y + 1; v < m.size(); ++v) inner *= static_cast<std::size_t>(m.cards[v]);
    const auto ny = static_cast<std::size_t>(m.cards[gt.y]);
    Distribution out(ny, 0.0);
    for (std::size_t i = 0; i < joint.size(); ++i) out[(i / inner) % ny] += joint[i];
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= s;
    return out;
}

namespace {

double selection_weight(const GroundTruth& gt, const std::vector<int>& state) {
    double w = 1.0;
    for (const auto& [v, th] : gt.selection) w *= th[static_cast<std::size_t>(state[v])];
    return w;
}

// Exact P(V | S = 1) for one node; P(V) when there is no selection.
Distribution selected_marginal(const GroundTruth& gt, int v) {
    std::vector<int> vars;
    for (const auto& [s, th] : gt.selection) vars.push_back(s);
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    const auto joint = bayesnet::joint_marginal(gt.world, vars);
    std::vector<int> cards;
    for (int u : vars) cards.push_back(gt.world.cards[u]);
    const auto pos = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin());
    Distribution out(static_cast<std::size_t>(gt.world.cards[v]), 0.0);
    std::vector<int> idx(vars.size(), 0);
    for (std::size_t c = 0; c < joint.size(); ++c) {
        double w = joint[c];
        for (std::size_t k = 0; k < vars.size(); ++k) {
            auto it = gt.selection.find(vars[k]);
            if (it != gt.selection.end()) w *= it->second[static_cast<std::size_t>(idx[k])];
        }
        out[static_cast<std::size_t>(idx[pos])] += w;
        for (std::size_t k = vars.size(); k-- > 0;) {
            if (++idx[k] < cards[k]) break;
            idx[k] = 0;
        }
    }
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& x : out) x /= s;
    return out;
}

double acceptance_probability(const GroundTruth& gt) {
    if (gt.selection.empty()) return 1.0;
    std::vector<int> vars;
    for (const auto& [s, th] : gt.selection) vars.push_back(s);
    const auto joint = bayesnet::joint_marginal(gt.world, vars);
    std::vector<int> idx(vars.size(), 0);
    double acc = 0.0;
    for (std::size_t c = 0; c < joint.size(); ++c) {
        double w = joint[c];
        for (std::size_t k = 0; k < vars.size(); ++k) w *= gt.selection.at(vars[k])[static_cast<std::size_t>(idx[k])];
        acc += w;
        for (std::size_t k = vars.size(); k-- > 0;) {
            if (++idx[k] < gt.world.cards[vars[k]]) break;
            idx[k] = 0;
        }
    }
    return acc;
}

}  // namespace

Datasets sample_datasets(const GroundTruth& gt, const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto& g = gt.dag();
    const auto topo = g.topological_order();
    const auto observed = g.observed_nodes();

    std::vector<std::string> names;
    std::vector<int> cards;
    for (int v : observed) {
        names.push_back(g.name(v));
        cards.push_back(gt.world.cards[v]);
    }
    std::vector<std::vector<std::uint8_t>> cols(observed.size());
    for (auto& c : cols) c.reserve(static_cast<std::size_t>(cfg.n_obs));
    for (int i = 0; i < cfg.n_obs; ++i) {
        const auto s = forward_sample(gt.world, topo, rng);
        for (std::size_t k = 0; k < observed.size(); ++k) cols[k].push_back(static_cast<std::uint8_t>(s[observed[k]]));
    }
    Datasets ds;
    ds.observational = data::CategoricalTable(names, cards, std::move(cols));

    auto& exp = ds.experiment;
    exp.treatment = g.name(gt.x);
    exp.outcome = g.name(gt.y);
    exp.population = gt.selection.empty() ? data::Population::Same : data::Population::Selected;

    if (acceptance_probability(gt) < 1e-6) throw ValidationError("sim: selection acceptance probability below 1e-6");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int xv = 0; xv < gt.world.cards[gt.x]; ++xv) {
        const auto m = mutilate(gt.world, gt.x, xv);
        const auto mtopo = m.dag.topological_order();
        data::Arm arm;
        arm.x_value = xv;
        arm.outcome_counts.assign(static_cast<std::size_t>(gt.world.cards[gt.y]), 0);
        int accepted = 0;
        while (accepted < cfg.n_per_arm) {
            const auto s = forward_sample(m, mtopo, rng);
            if (!gt.selection.empty() && unif(rng) >= selection_weight(gt, s)) continue;
            ++arm.outcome_counts[static_cast<std::size_t>(s[gt.y])];
            ++accepted;
        }
        arm.total = accepted;
        exp.arms.push_back(std::move(arm));
    }

    // Reported covariate marginals.
    std::vector<int> covariates;
    for (int v : observed)
        if (v != gt.x && v != gt.y) covariates.push_back(v);
    std::vector<int> reported;
    auto coin = [&] { return unif(rng) < 0.5; };
    if (cfg.selection == SelectionMode::Latent && !gt.selection.empty()) {
        std::vector<int> sel;
        for (const auto& [v, th] : gt.selection) sel.push_back(v);
        // Every selected-upon variable stays unreported.
        const std::vector<int>& hidden = sel;
        std::vector<int> rest;
        for (int v : covariates)
            if (std::find(hidden.begin(), hidden.end(), v) == hidden.end()) rest.push_back(v);
        if (rest.empty()) throw ValidationError("sim: latent selection leaves no covariate to report");
        for (int v : rest)
            if (coin()) reported.push_back(v);
        if (reported.empty()) reported.push_back(rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)]);
    } else {
        for (int v : covariates) {
            const bool selected = gt.selection.count(v) > 0;
            if (coin() || selected) reported.push_back(v);
        }
    }
    std::sort(reported.begin(), reported.end());
    for (int v : reported) exp.reported_marginals[g.name(v)] = selected_marginal(gt, v);
    exp.validate();
    return ds;
}

double delta_theta(const std::vector<Distribution>& a, const std::vector<Distribution>& b) {
    if (a.size() != b.size()) throw ValidationError("delta_theta: arm counts differ");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw ValidationError("delta_theta: category counts differ");
        for (std::size_t k = 0; k < a[i].size(); ++k) {
            s += std::abs(a[i][k] - b[i][k]);
            ++n;
        }
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

std::optional<double> delta_theta(const std::vector<std::optional<Distribution>>& estimate,
                                  const std::vector<int>& arm_x_values, const GroundTruth& gt) {
    std::vector<Distribution> est, truth;
    for (std::size_t a = 0; a < estimate.size(); ++a) {
        if (!estimate[a]) return std::nullopt;
        est.push_back(*estimate[a]);
        truth.push_back(gt.true_id.at(static_cast<std::size_t>(arm_x_values.at(a))));
    }
    return delta_theta(est, truth);
}

std::vector<std::string> vws_baseline(const GroundTruth& gt) {
    const auto& g = gt.dag();
    const auto causes = g.ancestors({gt.x, gt.y});
    const auto dx = g.descendants({gt.x});
    std::vector<std::string> out;
    for (int v : causes)
        if (v != gt.x && v != gt.y && !dx.count(v) && g.observed(v)) out.push_back(g.name(v));
    return out;
}

std::vector<std::vector<std::string>> valid_adjustment_sets(const GroundTruth& gt) {
    const auto& g = gt.dag();
    std::vector<int> cov;
    for (int v : g.observed_nodes())
        if (v != gt.x && v != gt.y) cov.push_back(v);
    if (cov.size() > 20) throw EnumerationRefused("valid_adjustment_sets: too many covariates");
    std::vector<std::vector<std::string>> out;
    for (std::uint32_t mask = 0; mask < (1u << cov.size()); ++mask) {
        graph::NodeSet z;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < cov.size(); ++i)
            if (mask >> i & 1u) {
                z.insert(cov[i]);
                names.push_back(g.name(cov[i]));
            }
        if (graph::satisfies_adjustment_criterion(g, gt.x, gt.y, z)) out.push_back(names);
    }
    return out;
}

bool hypothesis_valid(const GroundTruth& gt, const score::Hypothesis& h) {
    if (!h.exists) return valid_adjustment_sets(gt).empty();
    return graph::satisfies_adjustment_criterion(gt.dag(), gt.x, gt.y, gt.dag().indices_of(h.z));
}

std::vector<Distribution> plugin_adjustment(const data::CategoricalTable& table, const std::string& x,
                                            const std::string& y, const std::vector<std::string>& z,
                                            const std::vector<int>& arm_x_values, double pseudo) {
    std::vector<std::string> vars = z;
    vars.push_back(x);
    vars.push_back(y);
    const auto t = data::contingency_counts(table, vars);
    const auto nx = static_cast<std::size_t>(table.cardinality(table.index_of(x)));
    const auto ny = static_cast<std::size_t>(table.cardinality(table.index_of(y)));
    const std::size_t nz = t.counts.size() / (nx * ny);
    const double n = static_cast<double>(t.total());
    std::vector<Distribution> out;
    for (int xv : arm_x_values) {
        Distribution d(ny, 0.0);
        for (std::size_t c = 0; c < nz; ++c) {
            double pz = 0.0, nxz = 0.0;
            for (std::size_t a = 0; a < nx; ++a)
                for (std::size_t b = 0; b < ny; ++b) pz += static_cast<double>(t.counts[(c * nx + a) * ny + b]);
            if (pz == 0.0) continue;
            for (std::size_t b = 0; b < ny; ++b)
                nxz += static_cast<double>(t.counts[(c * nx + static_cast<std::size_t>(xv)) * ny + b]);
            for (std::size_t b = 0; b < ny; ++b) {
                const double nxyz = static_cast<double>(t.counts[(c * nx + static_cast<std::size_t>(xv)) * ny + b]);
                d[b] += pz / n * (nxyz + pseudo) / (nxz + pseudo * static_cast<double>(ny));
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::string truth_to_json(const GroundTruth& gt) {
    nlohmann::json j = nlohmann::json::parse(bayesnet::instantiation_to_json(gt.world));
    j["treatment"] = gt.dag().name(gt.x);
    j["outcome"] = gt.dag().name(gt.y);
    j["selection"] = nlohmann::json::object();
    for (const auto& [v, th] : gt.selection) j["selection"][gt.dag().name(v)] = th;
    j["true_id"] = gt.true_id;
    return j.dump(2) + "\n";
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Fas: return "FAS";
        case Method::Kl: return "KL";
        case Method::Dexp: return "DEXP";
        case Method::Vws: return "VWS";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (u == "FAS") return Method::Fas;
    if (u == "KL") return Method::Kl;
    if (u == "DEXP" || u == "D_EXP") return Method::Dexp;
    if (u == "VWS") return Method::Vws;
    throw ValidationError("unknown method '" + s + "' (expected FAS, KL, DEXP or VWS)");
}

std::string world_mode_name(WorldMode m) {
    switch (m) {
        case WorldMode::Random: return "random";
        case WorldMode::Pretreatment: return "pretreatment";
        case WorldMode::Confounded: return "confounded";
        case WorldMode::Latent: return "latent-confounder";
    }
    return "?";
}

WorldMode parse_world_mode(const std::string& s) {
    if (s == "random") return WorldMode::Random;
    if (s == "pretreatment") return WorldMode::Pretreatment;
    if (s == "confounded") return WorldMode::Confounded;
    if (s == "latent-confounder") return WorldMode::Latent;
    throw ValidationError("unknown world mode '" + s + "'");
}

std::string selection_mode_name(SelectionMode m) {
    switch (m) {
        case SelectionMode::None: return "none";
        case SelectionMode::Observed: return "observed";
        case SelectionMode::Latent: return "latent";
    }
    return "?";
}

SelectionMode parse_selection_mode(const std::string& s) {
    if (s == "none") return SelectionMode::None;
    if (s == "observed") return SelectionMode::Observed;
    if (s == "latent") return SelectionMode::Latent;
    throw ValidationError("unknown selection mode '" + s + "'");
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

std::vector<BenchmarkRow> run_replicate(const SimConfig& cfg, int r, const std::vector<Method>& methods,
                                        const score::FasConfig& fas_base) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchmarkRow> rows;
    for (auto m : methods) {
        BenchmarkRow row;
        row.replicate = r;
        row.method = m;
        rows.push_back(row);
    }
    auto fail_all = [&](const std::string& msg) {
        for (auto& row : rows) row.error = msg;
        return rows;
    };

    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)}));
    GroundTruth gt;
    Datasets ds;
    try {
        gt = generate_world(cfg, rng);
        ds = sample_datasets(gt, cfg, rng);
    } catch (const std::exception& e) {
        return fail_all(e.what());
    }
    const auto& exp = ds.experiment;
    std::vector<int> arm_x;
    for (const auto& a : exp.arms) arm_x.push_back(a.x_value);

    score::FasConfig fas = fas_base;
    fas.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), 0xFA5});
    fas.threads = 1;

    std::optional<score::FasResult> fas_result;
    std::string fas_error;
    double fas_seconds = 0.0;
    const bool need_fas = std::any_of(methods.begin(), methods.end(),
                                      [](Method m) { return m == Method::Fas || m == Method::Kl; });
    if (need_fas) {
        const auto t0 = clock::now();
        try {
            fas_result = exp.population == data::Population::Same
                             ? score::find_adjustment_set(ds.observational, exp, fas)
                             : selection::find_adjustment_set_selected(ds.observational, exp, fas);
        } catch (const std::exception& e) {
            fas_error = e.what();
        }
        fas_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }

    for (auto& row : rows) {
        const auto t0 = clock::now();
        try {
            switch (row.method) {
                case Method::Fas: {
                    row.seconds = fas_seconds;
                    if (!fas_result) throw Error(fas_error);
                    row.selected = fas_result->best.label();
                    row.not_exists = !fas_result->best.exists;
                    row.valid = hypothesis_valid(gt, fas_result->best);
                    row.delta = delta_theta(fas_result->estimate, fas_result->arm_x_values, gt);
                    break;
                }
                case Method::Kl: {
                    row.seconds = fas_seconds;
                    if (!fas_result) throw Error(fas_error);
                    const auto h = score::kl_select(*fas_result, exp);
                    row.selected = h.label();
                    row.valid = hypothesis_valid(gt, h);
                    row.delta = delta_theta(fas_result->score_of(h).arms.empty()
                                                ? std::vector<std::optional<Distribution>>{}
                                                : [&] {
                                                      std::vector<std::optional<Distribution>> e;
                                                      for (const auto& a : fas_result->score_of(h).arms)
                                                          e.push_back(a.id_estimate);
                                                      return e;
                                                  }(),
                                            arm_x, gt);
                    break;
                }
                case Method::Dexp: {
                    row.selected = "-";
                    row.delta = delta_theta(score::empirical_estimate(exp), arm_x, gt);
                    row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
                    break;
                }
                case Method::Vws: {
                    const auto z = vws_baseline(gt);
                    const auto h = score::Hypothesis::adjustment_set(z);
                    row.selected = h.label();
                    row.valid = hypothesis_valid(gt, h);
                    const auto est = plugin_adjustment(ds.observational, exp.treatment, exp.outcome, z, arm_x);
                    std::vector<std::optional<Distribution>> e(est.begin(), est.end());
                    row.delta = delta_theta(e, arm_x, gt);
                    row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
                    break;
                }
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    }
    return rows;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

BenchmarkReport run_benchmark(const SimConfig& cfg, int replicates, const std::vector<Method>& methods,
                              const score::FasConfig& fas, int threads) {
    cfg.validate();
    if (replicates < 1) throw ValidationError("benchmark: replicates must be at least 1");
    if (methods.empty()) throw ValidationError("benchmark: no methods selected");
    BenchmarkReport report;
    report.sim = cfg;
    report.fas = fas;
    report.replicates = replicates;
    report.methods = methods;
    std::vector<std::vector<BenchmarkRow>> per(static_cast<std::size_t>(replicates));
    parallel_for(per.size(), threads,
                 [&](std::size_t r) { per[r] = run_replicate(cfg, static_cast<int>(r), methods, fas); });
    for (auto& rows : per)
        for (auto& row : rows) report.rows.push_back(std::move(row));
    return report;
}

std::vector<MethodSummary> BenchmarkReport::summarize() const {
    std::vector<MethodSummary> out;
    for (auto m : methods) {
        MethodSummary s;
        s.method = m;
        std::vector<double> deltas;
        double secs = 0.0;
        for (const auto& row : rows) {
            if (row.method != m) continue;
            ++s.n;
            secs += row.seconds;
            if (!row.error.empty()) {
                ++s.failures;
                continue;
            }
            if (row.delta) {
                deltas.push_back(*row.delta);
            } else {
                ++s.missing;
            }
            if (row.not_exists) ++s.not_exists;
            if (row.valid) {
                ++s.valid_known;
                if (*row.valid) ++s.valid;
            }
        }
        s.median = quantile(deltas, 0.5);
        s.q1 = quantile(deltas, 0.25);
        s.q3 = quantile(deltas, 0.75);
        s.mean_seconds = s.n ? secs / s.n : 0.0;
        out.push_back(s);
    }
    return out;
}

std::string report_csv(const BenchmarkReport& report) {
    std::ostringstream os;
    os << "replicate,method,delta_theta,selected,criterion_valid,not_exists,error\n";
    for (const auto& row : report.rows) {
        os << row.replicate << ',' << method_name(row.method) << ',' << (row.delta ? fmt_double(*row.delta) : "NA")
           << ',' << csv_field(row.selected) << ',' << (row.valid ? (*row.valid ? "1" : "0") : "NA") << ','
           << (row.not_exists ? 1 : 0) << ',' << csv_field(row.error) << '\n';
    }
    return os.str();
}

std::string report_summary_json(const BenchmarkReport& report) {
    nlohmann::json j;
    const auto& c = report.sim;
    j["config"] = {{"n_observed", c.n_observed}, {"n_latent", c.n_latent},   {"mean_in_degree", c.mean_in_degree},
                   {"min_card", c.min_card},     {"max_card", c.max_card},   {"n_obs", c.n_obs},
                   {"n_per_arm", c.n_per_arm},   {"mode", world_mode_name(c.mode)},
                   {"selection", selection_mode_name(c.selection)},          {"seed", c.seed},
                   {"replicates", report.replicates}, {"niters", report.fas.niters},
                   {"alpha", report.fas.alpha},  {"ess", report.fas.ess}};
    j["methods"] = nlohmann::json::object();
    for (const auto& s : report.summarize()) {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        j["methods"][method_name(s.method)] = {{"replicates", s.n},
                                               {"estimates", s.n - s.missing - s.failures},
                                               {"missing", s.missing},
                                               {"failures", s.failures},
                                               {"median_delta", num(s.median)},
                                               {"q1_delta", num(s.q1)},
                                               {"q3_delta", num(s.q3)},
                                               {"not_exists", s.not_exists},
                                               {"not_exists_rate", s.n ? double(s.not_exists) / s.n : 0.0},
                                               {"criterion_valid", s.valid},
                                               {"criterion_known", s.valid_known},
                                               {"mean_seconds", s.mean_seconds}};
    }
    j["errors"] = nlohmann::json::array();
    for (const auto& row : report.rows)
        if (!row.error.empty())
            j["errors"].push_back({{"replicate", row.replicate}, {"method", method_name(row.method)}, {"error", row.error}});
    return j.dump(2) + "\n";
}

}  // namespace adjfas::sim
