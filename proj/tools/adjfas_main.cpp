#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adjfas/data.hpp"
#include "adjfas/graph.hpp"
#include "adjfas/score.hpp"
#include "adjfas/selection.hpp"
#include "adjfas/sim.hpp"

namespace fs = std::filesystem;
using namespace adjfas;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kInfeasible = 3, kRefused = 4 };

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    int niters = 100;
    double alpha = 0.05;
    double ess = 1.0;
};

struct SimFlags {
    std::string mode = "random";
    std::string selection = "none";
    int n_observed = 6;
    int n_latent = 4;
    double in_degree = 2.0;
    int min_card = 2;
    int max_card = 3;
    int n_obs = 10000;
    int n_per_arm = 500;
    int max_selected = 2;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
    cmd->add_option("--mode", f.mode, "World generator: random, pretreatment, confounded, latent-confounder")
        ->capture_default_str();
    cmd->add_option("--selection", f.selection, "Trial selection: none, observed, latent")->capture_default_str();
    cmd->add_option("--n-observed", f.n_observed, "Observed covariates besides X and Y")->capture_default_str();
    cmd->add_option("--n-latent", f.n_latent, "Latent variables")->capture_default_str();
    cmd->add_option("--in-degree", f.in_degree, "Mean in-degree of random DAGs")->capture_default_str();
    cmd->add_option("--min-card", f.min_card, "Smallest variable cardinality")->capture_default_str();
    cmd->add_option("--max-card", f.max_card, "Largest variable cardinality")->capture_default_str();
    cmd->add_option("--n-obs", f.n_obs, "Observational sample size")->capture_default_str();
    cmd->add_option("--n-per-arm", f.n_per_arm, "Accepted trial units per arm")->capture_default_str();
    cmd->add_option("--max-selected", f.max_selected, "Most variables the trial selects on")->capture_default_str();
}

sim::SimConfig to_sim_config(const SimFlags& f, std::uint64_t seed) {
    sim::SimConfig c;
    c.mode = sim::parse_world_mode(f.mode);
    c.selection = sim::parse_selection_mode(f.selection);
    c.n_observed = f.n_observed;
    c.n_latent = f.n_latent;
    c.mean_in_degree = f.in_degree;
    c.min_card = f.min_card;
    c.max_card = f.max_card;
    c.n_obs = f.n_obs;
    c.n_per_arm = f.n_per_arm;
    c.max_selected = f.max_selected;
    c.seed = seed;
    c.validate();
    return c;
}

score::FasConfig to_fas_config(const Globals& g) {
    if (g.niters < 1) throw ValidationError("--niters must be at least 1");
    if (!(g.alpha > 0.0 && g.alpha < 1.0)) throw ValidationError("--alpha must lie in (0, 1)");
    if (!(g.ess > 0.0)) throw ValidationError("--ess must be positive");
    score::FasConfig c;
    c.niters = g.niters;
    c.alpha = g.alpha;
    c.ess = g.ess;
    c.seed = g.seed;
    c.threads = resolve_threads(g.threads);
    return c;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

// Writes to --out when given, otherwise to stdout.
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file(out, text);
        std::cerr << "wrote " << out << "\n";
    }
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"adjfas: find covariate adjustment sets from observational data and trial summaries"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed; equal seeds give byte-identical outputs")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0: ADJFAS_THREADS or 1)")->capture_default_str();
    app.add_option("--out", g.out, "Output file (fas, score, selection-check) or directory (simulate, benchmark)");
    app.add_option("--niters", g.niters, "Monte-Carlo draws per arm score")->capture_default_str();
    app.add_option("--alpha", g.alpha, "Significance level of the candidate-pool tests")->capture_default_str();
    app.add_option("--ess", g.ess, "BDeu equivalent sample size")->capture_default_str();

    std::string obs_path, exp_path;
    std::optional<int> max_subset;

    auto* fas = app.add_subcommand("fas", "Score every candidate adjustment set and NotExists; report the best");
    fas->add_option("observational", obs_path, "Observational CSV")->required()->check(CLI::ExistingFile);
    fas->add_option("experiment", exp_path, "Experiment summary JSON")->required()->check(CLI::ExistingFile);
    fas->add_option("--max-subset-size", max_subset, "Largest subset scored (needed for pools above 16)");

    std::string set_names;
    bool not_exists = false;
    auto* sc = app.add_subcommand("score", "Score one named hypothesis");
    sc->add_option("observational", obs_path, "Observational CSV")->required()->check(CLI::ExistingFile);
    sc->add_option("experiment", exp_path, "Experiment summary JSON")->required()->check(CLI::ExistingFile);
    auto* set_opt = sc->add_option("--set", set_names, "Comma-separated adjustment set (empty string for {})");
    auto* ne_opt = sc->add_flag("--not-exists", not_exists, "Score the NotExists hypothesis");
    set_opt->excludes(ne_opt);

    auto* selc = app.add_subcommand("selection-check", "Solve the selection model for a selected trial population");
    selc->add_option("observational", obs_path, "Observational CSV")->required()->check(CLI::ExistingFile);
    selc->add_option("experiment", exp_path, "Experiment summary JSON")->required()->check(CLI::ExistingFile);

    SimFlags simf;
    auto* simc = app.add_subcommand("simulate", "Draw a ground-truth world and write its datasets");
    add_sim_flags(simc, simf);

    SimFlags benchf;
    int replicates = 20;
    std::string methods = "FAS,KL,DEXP,VWS";
    auto* bench = app.add_subcommand("benchmark", "Compare FAS with baselines over simulated worlds");
    add_sim_flags(bench, benchf);
    bench->add_option("--replicates", replicates, "Number of simulated worlds")->capture_default_str();
    bench->add_option("--methods", methods, "Comma-separated subset of FAS, KL, DEXP, VWS")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    if (*fas) {
        auto cfg = to_fas_config(g);
        cfg.max_subset_size = max_subset;
        const auto table = data::load_observational(obs_path);
        const auto exp = data::load_experiment(exp_path);
        const auto res = exp.population == data::Population::Selected
                             ? selection::find_adjustment_set_selected(table, exp, cfg)
                             : score::find_adjustment_set(table, exp, cfg);
        write_file(g.out.empty() ? "fas_report.json" : g.out, score::result_to_json(res));
        std::cout << score::result_table(res);
        return kOk;
    }
    if (*sc) {
        if (!*set_opt && !not_exists) throw ValidationError("score: give --set or --not-exists");
        const auto cfg = to_fas_config(g);
        const auto table = data::load_observational(obs_path);
        const auto exp = data::load_experiment(exp_path);
        const auto h = not_exists ? score::Hypothesis::not_exists()
                                  : score::Hypothesis::adjustment_set(split_names(set_names));
        const auto res = exp.population == data::Population::Selected
                             ? selection::score_hypothesis_selected(table, exp, h, cfg)
                             : score::score_hypothesis(table, exp, h, cfg);
        emit(g.out, score::result_to_json(res));
        if (!g.out.empty()) std::cout << score::result_table(res);
        return kOk;
    }
    if (*selc) {
        const auto cfg = to_fas_config(g);
        const auto table = data::load_observational(obs_path);
        const auto exp = data::load_experiment(exp_path);
        const auto sbn = selection::selection_from_data(table, exp, cfg);
        emit(g.out, selection::selection_to_json(sbn, exp.reported_marginals));
        std::cerr << "residual " << sbn.residual << " after " << sbn.sweeps << " sweeps\n";
        return kOk;
    }
    if (*simc) {
        const auto cfg = to_sim_config(simf, g.seed);
        Rng rng(derive_seed(g.seed, {0}));
        const auto gt = sim::generate_world(cfg, rng);
        const auto ds = sim::sample_datasets(gt, cfg, rng);
        const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
        fs::create_directories(dir);
        write_file(dir / "graph.json", graph::admg_to_json(gt.dag()));
        write_file(dir / "truth.json", sim::truth_to_json(gt));
        data::save_observational(dir / "observational.csv", ds.observational);
        data::save_experiment(dir / "experiment.json", ds.experiment);
        std::cout << "wrote graph.json, truth.json, observational.csv, experiment.json to " << dir.string() << "\n";
        return kOk;
    }
    if (*bench) {
        const auto cfg = to_sim_config(benchf, g.seed);
        auto fcfg = to_fas_config(g);
        std::vector<sim::Method> ms;
        for (const auto& m : split_names(methods)) ms.push_back(sim::parse_method(m));
        const auto report = sim::run_benchmark(cfg, replicates, ms, fcfg, fcfg.threads);
        const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
        fs::create_directories(dir);
        write_file(dir / "benchmark.csv", sim::report_csv(report));
        write_file(dir / "benchmark_summary.json", sim::report_summary_json(report));
        std::cout << "method  n  median|dtheta|  q1      q3      NotExists  valid   failures\n";
        for (const auto& s : report.summarize()) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-6s %3d  %-13.5f %-7.4f %-7.4f %3d        %d/%d  %3d\n",
                          sim::method_name(s.method).c_str(), s.n, s.median, s.q1, s.q3, s.not_exists, s.valid,
                          s.valid_known, s.failures);
            std::cout << buf;
        }
        return kOk;
    }
    return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const InfeasibleSelection& e) {
        std::cerr << "infeasible selection: " << e.what() << "\n";
        return kInfeasible;
    } catch (const EnumerationRefused& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return kRefused;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kValidation;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kValidation;
    } catch (const LookupError& e) {
        std::cerr << "unknown variable: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
