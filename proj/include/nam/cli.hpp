#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "nam/harness.hpp"

namespace nam::cli {

/// Exit codes: 0 ok, 2 bad configuration, 3 I/O failure, 4 non-convergence,
/// 1 anything else.
enum ExitCode { kOk = 0, kOther = 1, kBadConfig = 2, kIo = 3, kNotConverged = 4 };

namespace detail {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    int threads = 0;
};

inline void attach_common(CLI::App* cmd, CommonOpts& opts, bool need_config, bool need_out) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (need_config) c->required();
    cmd->add_option("--seed", opts.seed, "override the config seed");
    auto* o = cmd->add_option("--out", opts.out_path, "output path");
    if (need_out) o->required();
    cmd->add_option("--threads", opts.threads, "worker thread cap (default from config)");
}

inline ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg =
        opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    cfg.validate();
    return cfg;
}

inline TrainingSet make_training_set(const ExperimentConfig& cfg) {
    Rng rng = make_rng(derive_seed(cfg.seed, 0, 1));
    const GeneratorMatrix G = generate_generator_matrix(cfg.model(), cfg.gamma, cfg.dstar, rng);
    return build_training_set(cfg.model(), G, cfg.upsilon, cfg.c_sample, rng,
                              derive_seed(cfg.seed, 0, 1));
}

/// Recall trials + bounds on an explicit (graph, training set) pair; same row
/// schema as run_scenario.
inline ExperimentReport recall_on_files(const ExperimentConfig& cfg, const NeuralGraph& g,
                                        const std::vector<Pattern>& patterns) {
    ExperimentReport report;
    report.config = config_echo(cfg);
    double max_residual = 0.0;
    for (const auto& x : patterns)
        for (int i = 0; i < g.m(); ++i) {
            double acc = 0.0;
            for (int j : g.row_support(i)) acc += g.at(i, j) * x[j];
            max_residual = std::max(max_residual, std::fabs(acc));
        }
    const double h_tol = cfg.h_tol > 0.0 ? cfg.h_tol : recommended_h_tol(g, max_residual);

    const DegreeDistribution dd = degree_distributions(g);
    RecallConfig proto;
    proto.variant = cfg.variant;
    proto.phi = cfg.phi;
    proto.tmax = cfg.tmax_factor;
    proto.h_tol = h_tol;

    for (int e0 : cfg.error_counts) {
        AnalysisInput ai;
        ai.dd = dd;
        ai.m = g.m();
        ai.n = g.n();
        ai.phi = cfg.phi;
        ai.e0 = e0;
        const double bound = error_bound(ai).pE_bound;
        const auto c =
            nam::detail::run_trials(g, patterns, proto, e0, cfg.trials, cfg.seed, 0, cfg.threads);
        ReportRow row;
        row.scenario = cfg.scenario;
        row.n = g.n();
        row.k = g.n() - g.m();
        row.m = g.m();
        row.variant = variant_name(cfg.variant);
        row.phi = cfg.phi;
        row.e0 = e0;
        row.trials = c.trials;
        row.per_first = c.trials ? static_cast<double>(c.first_errors) / c.trials : 0.0;
        row.per_final = c.trials ? static_cast<double>(c.final_errors) / c.trials : 0.0;
        row.bound = bound;
        row.ci_halfwidth =
            c.trials ? 1.96 * std::sqrt(row.per_first * (1.0 - row.per_first) / c.trials) : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace detail

/// Programmatic entry point used by main() and by the test suite.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"subspace associative memory: data generation, constraint learning, "
                 "noise-removal recall, and error-bound analysis"};
    app.require_subcommand(1);

    detail::CommonOpts gen_opts, learn_opts, recall_opts, analyze_opts, exp_opts;
    std::string learn_train, recall_weights, recall_train, analyze_weights;
    std::string exp_graph_path;
    double exp_alpha = 0.1, exp_beta = 0.75;
    int exp_Q = 2;
    bool exp_mindist = false;

    auto* gen = app.add_subcommand("gen-data", "write a training set and generator matrix");
    detail::attach_common(gen, gen_opts, true, true);

    auto* learn = app.add_subcommand("learn", "learn a constraint graph, write a weights file");
    detail::attach_common(learn, learn_opts, true, true);
    learn->add_option("--train", learn_train, "training-set file (default: regenerate from config)");

    auto* recall =
        app.add_subcommand("recall-sim", "run recall trials on a weights + patterns pair");
    detail::attach_common(recall, recall_opts, true, true);
    recall->add_option("--weights", recall_weights, "weights file")->required();
    recall->add_option("--train", recall_train, "training-set file")->required();

    auto* analyze = app.add_subcommand("analyze", "theoretical bounds from a weights file");
    detail::attach_common(analyze, analyze_opts, true, true);
    analyze->add_option("--weights", analyze_weights, "weights file")->required();

    auto* expander = app.add_subcommand("expander-check", "expansion and distance checks on an "
                                                          "edge-list graph");
    expander->add_option("--graph", exp_graph_path, "edge-list file")->required();
    expander->add_option("--alpha", exp_alpha, "subset fraction alpha")->required();
    expander->add_option("--beta", exp_beta, "expansion factor beta")->required();
    expander->add_option("--Q", exp_Q, "alphabet size for pattern enumeration");
    expander->add_flag("--mindist", exp_mindist, "also report the minimum-distance bound");

    auto* experiment = app.add_subcommand("experiment", "full generate/learn/recall pipeline");
    detail::attach_common(experiment, exp_opts, true, true);

    try {
        app.parse(argc, argv);

        if (*gen) {
            const ExperimentConfig cfg = detail::resolve_config(gen_opts);
            const TrainingSet ts = detail::make_training_set(cfg);
            save_training_set(ts, gen_opts.out_path + ".train");
            GeneratorMatrix G = ts.generator;
            G.seed = ts.seed;
            save_generator_matrix(G, gen_opts.out_path + ".gmat");
            std::cout << "wrote " << gen_opts.out_path << ".train (" << ts.rows.size()
                      << " patterns) and " << gen_opts.out_path << ".gmat\n";
        } else if (*learn) {
            const ExperimentConfig cfg = detail::resolve_config(learn_opts);
            const TrainingSet ts =
                learn_train.empty() ? detail::make_training_set(cfg) : load_training_set(learn_train);
            Rng rng = make_rng(derive_seed(cfg.seed, 0, 2));
            LearningConfig lc = cfg.learning();
            lc.m = ts.spec.n - ts.spec.k;
            const GraphLearnResult glr = learn_graph(ts, lc, rng, cfg.threads);
            if (glr.distinct == 0 && glr.requested > 0)
                throw NotConvergedError("learn: no constraint converged");
            save_graph(glr.graph, learn_opts.out_path);
            std::cout << "wrote " << learn_opts.out_path << " (" << glr.distinct << "/"
                      << glr.requested << " constraints, rank " << glr.achieved_rank << ")\n";
        } else if (*recall) {
            const ExperimentConfig cfg = detail::resolve_config(recall_opts);
            const NeuralGraph g = load_graph(recall_weights);
            const TrainingSet ts = load_training_set(recall_train);
            emit_report(detail::recall_on_files(cfg, g, ts.rows), recall_opts.out_path);
            std::cout << "wrote " << recall_opts.out_path << '\n';
        } else if (*analyze) {
            const ExperimentConfig cfg = detail::resolve_config(analyze_opts);
            const NeuralGraph g = load_graph(analyze_weights);
            ExperimentConfig stub = cfg;
            stub.trials = 0;
            ExperimentReport report;
            report.config = config_echo(stub);
            const DegreeDistribution dd = degree_distributions(g);
            for (int e0 : cfg.error_counts) {
                AnalysisInput ai;
                ai.dd = dd;
                ai.m = g.m();
                ai.n = g.n();
                ai.phi = cfg.phi;
                ai.e0 = e0;
                const ErrorBoundReport b = error_bound(ai);
                ReportRow row;
                row.scenario = cfg.scenario;
                row.n = g.n();
                row.k = g.n() - g.m();
                row.m = g.m();
                row.variant = variant_name(cfg.variant);
                row.phi = cfg.phi;
                row.e0 = e0;
                row.trials = 0;
                row.bound = b.pE_bound;
                report.rows.push_back(row);
            }
            emit_report(report, analyze_opts.out_path);
            std::cout << "wrote " << analyze_opts.out_path << '\n';
        } else if (*expander) {
            const NeuralGraph g = load_edge_list(exp_graph_path, exp_Q);
            const bool ok = is_expander(g, exp_alpha, exp_beta);
            std::cout << "graph: n = " << g.n() << ", m = " << g.m() << ", edges = "
                      << g.edge_count() << '\n';
            std::cout << "is_expander(alpha = " << exp_alpha << ", beta = " << exp_beta
                      << "): " << (ok ? "yes" : "no") << '\n';
            if (g.pattern_side_regular() && g.m() > 0) {
                const int dp = g.pattern_degree(0);
                const int dc = g.constraint_degree(0);
                std::cout << "expansion_lower_bound = "
                          << expansion_lower_bound(g.n(), dp, dc, exp_alpha) << '\n';
                if (exp_mindist) {
                    const auto bound = min_distance_bound(dp, exp_beta, exp_alpha, g.n());
                    if (bound)
                        std::cout << "min_distance_bound = " << *bound << '\n';
                    else
                        std::cout << "min_distance_bound: condition not met\n";
                }
            }
            if (!ok) return kOther;
        } else if (*experiment) {
            const ExperimentConfig cfg = detail::resolve_config(exp_opts);
            emit_report(run_scenario(cfg), exp_opts.out_path);
            std::cout << "wrote " << exp_opts.out_path << '\n';
        }
        return kOk;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const BudgetError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const NotConvergedError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return kNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
}

}  // namespace nam::cli
