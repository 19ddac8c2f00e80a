#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nam/analysis.hpp"
#include "nam/errors.hpp"
#include "nam/learning.hpp"
#include "nam/patterns.hpp"
#include "nam/recall.hpp"

namespace nam {

/// One experiment: generate data, learn the graph, run recall trials per
/// error count, attach the theoretical bound. Loaded from a flat
/// "key = value" text file; every module-level guard is re-validated here.
struct ExperimentConfig {
    std::string scenario = "scenario";

    // model + generator
    int n = 100, k = 50, Q = 11;
    int gamma = 2, upsilon = 2, dstar = 1;
    long long c_sample = 500;  // kAllPatterns enumerates everything

    // learning
    double alpha0 = 1.4, eta = 0.35, theta0 = 0.031, epsilon = 1e-3;
    int max_passes = 10;
    double schedule_tau = 3.0;
    double init_density = 0.2;
    double dedup_cosine = 0.95;
    int retry_cap = 8;

    // recall
    RecallVariant variant = RecallVariant::MV;
    double phi = 1.0;
    int tmax_factor = 20;  // tmax = max(1, tmax_factor * e0)
    double h_tol = 0.0;    // 0 = derive from the learned graph

    // trials
    int trials = 100;
    std::vector<int> error_counts = {1, 2};
    int ensemble_size = 1;
    std::uint64_t seed = 1;
    int threads = 1;

    ModelSpec model() const { return ModelSpec{Q, n, k}; }

    LearningConfig learning() const {
        LearningConfig c;
        c.alpha0 = alpha0;
        c.eta = eta;
        c.theta0 = theta0;
        c.epsilon = epsilon;
        c.max_passes = max_passes;
        c.m = n - k;
        c.schedule_tau = schedule_tau;
        c.init_density = init_density;
        c.dedup_cosine = dedup_cosine;
        c.retry_cap = retry_cap;
        return c;
    }

    void validate() const {
        model().validate();
        learning().validate();
        if (gamma < 2) throw ConfigError("config: gamma must be >= 2");
        if (upsilon < 2) throw ConfigError("config: upsilon must be >= 2");
        if (dstar < 1) throw ConfigError("config: dstar must be >= 1");
        if (c_sample != kAllPatterns && c_sample < 1)
            throw ConfigError("config: c_sample must be >= 1 (or 'all')");
        if (phi <= 0.0 || phi > 1.0) throw ConfigError("config: phi must be in (0,1]");
        if (tmax_factor < 1) throw ConfigError("config: tmax_factor must be >= 1");
        if (trials < 0) throw ConfigError("config: trials must be >= 0");
        if (ensemble_size < 1) throw ConfigError("config: ensemble_size must be >= 1");
        if (threads < 1) throw ConfigError("config: threads must be >= 1");
        for (int e : error_counts)
            if (e < 0 || e > n) throw ConfigError("config: error_counts entries must be in [0,n]");
    }
};

inline std::string variant_name(RecallVariant v) {
    switch (v) {
        case RecallVariant::WTA: return "wta";
        case RecallVariant::MV: return "mv";
        case RecallVariant::MV_L1: return "mv_l1";
    }
    return "mv";
}

inline RecallVariant variant_from_name(const std::string& s) {
    if (s == "wta") return RecallVariant::WTA;
    if (s == "mv") return RecallVariant::MV;
    if (s == "mv_l1") return RecallVariant::MV_L1;
    throw ConfigError("unknown recall variant: " + s);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(std::istream& in, const std::string& origin) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            if (key == "scenario") cfg.scenario = val;
            else if (key == "n") cfg.n = std::stoi(val);
            else if (key == "k") cfg.k = std::stoi(val);
            else if (key == "Q") cfg.Q = std::stoi(val);
            else if (key == "gamma") cfg.gamma = std::stoi(val);
            else if (key == "upsilon") cfg.upsilon = std::stoi(val);
            else if (key == "dstar") cfg.dstar = std::stoi(val);
            else if (key == "c_sample") cfg.c_sample = val == "all" ? kAllPatterns : std::stoll(val);
            else if (key == "alpha0") cfg.alpha0 = std::stod(val);
            else if (key == "eta") cfg.eta = std::stod(val);
            else if (key == "theta0") cfg.theta0 = std::stod(val);
            else if (key == "epsilon") cfg.epsilon = std::stod(val);
            else if (key == "max_passes") cfg.max_passes = std::stoi(val);
            else if (key == "schedule_tau") cfg.schedule_tau = std::stod(val);
            else if (key == "init_density") cfg.init_density = std::stod(val);
            else if (key == "dedup_cosine") cfg.dedup_cosine = std::stod(val);
            else if (key == "retry_cap") cfg.retry_cap = std::stoi(val);
            else if (key == "variant") cfg.variant = variant_from_name(val);
            else if (key == "phi") cfg.phi = std::stod(val);
            else if (key == "tmax_factor") cfg.tmax_factor = std::stoi(val);
            else if (key == "h_tol") cfg.h_tol = std::stod(val);
            else if (key == "trials") cfg.trials = std::stoi(val);
            else if (key == "error_counts") cfg.error_counts = detail::parse_int_list(val);
            else if (key == "ensemble_size") cfg.ensemble_size = std::stoi(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "threads") cfg.threads = std::stoi(val);
            else throw ConfigError(origin + ": unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad value for '" + key +
                              "'");
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    return parse_config_text(in, path);
}

/// Resolved key/value echo, in a fixed order, for report provenance.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&kv](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    add("scenario", c.scenario);
    add("n", std::to_string(c.n));
    add("k", std::to_string(c.k));
    add("Q", std::to_string(c.Q));
    add("gamma", std::to_string(c.gamma));
    add("upsilon", std::to_string(c.upsilon));
    add("dstar", std::to_string(c.dstar));
    add("c_sample", c.c_sample == kAllPatterns ? "all" : std::to_string(c.c_sample));
    add("alpha0", detail::format_double(c.alpha0));
    add("eta", detail::format_double(c.eta));
    add("theta0", detail::format_double(c.theta0));
    add("epsilon", detail::format_double(c.epsilon));
    add("max_passes", std::to_string(c.max_passes));
    add("schedule_tau", detail::format_double(c.schedule_tau));
    add("init_density", detail::format_double(c.init_density));
    add("dedup_cosine", detail::format_double(c.dedup_cosine));
    add("retry_cap", std::to_string(c.retry_cap));
    add("variant", variant_name(c.variant));
    add("phi", detail::format_double(c.phi));
    add("tmax_factor", std::to_string(c.tmax_factor));
    add("h_tol", detail::format_double(c.h_tol));
    add("trials", std::to_string(c.trials));
    {
        std::string list;
        for (std::size_t i = 0; i < c.error_counts.size(); ++i)
            list += (i ? "," : "") + std::to_string(c.error_counts[i]);
        add("error_counts", list);
    }
    add("ensemble_size", std::to_string(c.ensemble_size));
    add("seed", std::to_string(c.seed));
    add("threads", std::to_string(c.threads));
    return kv;
}

/// One aggregated result line per (scenario, e0).
struct ReportRow {
    std::string scenario;
    int n = 0, k = 0, m = 0;
    std::string variant;
    double phi = 1.0;
    int e0 = 0;
    long long trials = 0;
    double per_first = 0.0;
    double per_final = 0.0;
    double bound = 0.0;
    double ci_halfwidth = 0.0;
};

/// Learning diagnostics for one ensemble member.
struct MemberDiagnostics {
    int member = 0;
    int requested = 0;
    int distinct = 0;
    int rank = 0;
    int passes_max = 0;
    double passes_mean = 0.0;
    double sparsity_mean = 0.0;  // mean kappa/n over learned rows
    double theta_final = 0.0;
    double min_weight = 0.0;
    double max_residual = 0.0;  // max |(W x)_i| over the training set
    double h_tol = 0.0;
};

struct ExperimentReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<MemberDiagnostics> diagnostics;
    std::vector<ReportRow> rows;
};

namespace detail {

struct TrialCounts {
    long long trials = 0;
    long long first_errors = 0;
    long long final_errors = 0;
};

/// Runs `trials` independent recall trials at a fixed error count. Each trial
/// draws its own seed from (master, member, e0, trial), so the outcome set is
/// independent of thread count and execution order.
inline TrialCounts run_trials(const NeuralGraph& g, const std::vector<Pattern>& patterns,
                              const RecallConfig& proto, int e0, int trials,
                              std::uint64_t master, int member, int threads) {
    TrialCounts counts;
    counts.trials = trials;
    if (trials == 0 || patterns.empty()) return counts;

    RecallConfig cfg = proto;
    cfg.tmax = std::max(1, e0 * proto.tmax);  // proto.tmax carries tmax_factor
    Decoder decoder(g, cfg);

    std::vector<char> first_err(trials), final_err(trials);
    nam::detail::parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng = make_rng(derive_seed(master, static_cast<std::uint64_t>(member),
                                       1000 + static_cast<std::uint64_t>(e0), t));
        std::uniform_int_distribution<std::size_t> pick(0, patterns.size() - 1);
        const Pattern& truth = patterns[pick(rng)];
        auto [corrupted, noise] = inject_noise(truth, e0, g.Q(), rng);
        RecallOutcome out = decoder.run(corrupted, &truth);
        first_err[t] = out.bit_errors_first_iter > 0;
        final_err[t] = out.bit_errors_final > 0;
    });
    for (int t = 0; t < trials; ++t) {
        counts.first_errors += first_err[t];
        counts.final_errors += final_err[t];
    }
    return counts;
}

}  // namespace detail

/// Full pipeline for one configuration: per ensemble member, generate a
/// generator matrix and training set, learn the graph, then decode `trials`
/// corrupted memorized patterns per error count. Results pool across members;
/// the theoretical bound is the ensemble mean of per-member bounds computed
/// from each learned graph's measured degree data. Fully determined by
/// cfg.seed.
inline ExperimentReport run_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.config = config_echo(cfg);

    std::map<int, detail::TrialCounts> totals;
    std::map<int, double> bound_sum;

    for (int member = 0; member < cfg.ensemble_size; ++member) {
        Rng gen_rng = make_rng(derive_seed(cfg.seed, member, 1));
        const GeneratorMatrix G =
            generate_generator_matrix(cfg.model(), cfg.gamma, cfg.dstar, gen_rng);
        const TrainingSet ts = build_training_set(cfg.model(), G, cfg.upsilon, cfg.c_sample,
                                                  gen_rng, derive_seed(cfg.seed, member, 1));

        Rng learn_rng = make_rng(derive_seed(cfg.seed, member, 2));
        const GraphLearnResult glr = learn_graph(ts, cfg.learning(), learn_rng, cfg.threads);
        const NeuralGraph& g = glr.graph;

        MemberDiagnostics diag;
        diag.member = member;
        diag.requested = glr.requested;
        diag.distinct = glr.distinct;
        diag.rank = glr.achieved_rank;
        double pass_sum = 0.0, sparsity_sum = 0.0;
        int converged_rows = 0;
        for (const auto& row : glr.rows) {
            if (!row.converged) continue;
            ++converged_rows;
            diag.passes_max = std::max(diag.passes_max, row.passes);
            pass_sum += row.passes;
        }
        for (int i = 0; i < g.m(); ++i) {
            std::vector<double> row(g.n());
            for (int j = 0; j < g.n(); ++j) row[j] = g.at(i, j);
            sparsity_sum += sparsity_measure(row);
        }
        diag.passes_mean = converged_rows ? pass_sum / converged_rows : 0.0;
        diag.sparsity_mean = g.m() ? sparsity_sum / g.m() : 0.0;
        diag.theta_final = g.theta_final();
        diag.min_weight = g.min_nonzero_weight();
        for (const auto& x : ts.rows)
            for (int i = 0; i < g.m(); ++i) {
                double acc = 0.0;
                for (int j : g.row_support(i)) acc += g.at(i, j) * x[j];
                diag.max_residual = std::max(diag.max_residual, std::fabs(acc));
            }
        const double h_tol =
            cfg.h_tol > 0.0 ? cfg.h_tol : recommended_h_tol(g, diag.max_residual);
        diag.h_tol = h_tol;
        report.diagnostics.push_back(diag);

        if (cfg.trials == 0 || g.m() == 0) continue;

        const DegreeDistribution dd = degree_distributions(g);
        RecallConfig proto;
        proto.variant = cfg.variant;
        proto.phi = cfg.phi;
        proto.tmax = cfg.tmax_factor;  // scaled per-e0 inside run_trials
        proto.h_tol = h_tol;

        for (int e0 : cfg.error_counts) {
            AnalysisInput ai;
            ai.dd = dd;
            ai.m = g.m();
            ai.n = g.n();
            ai.phi = cfg.phi;
            ai.e0 = e0;
            bound_sum[e0] += error_bound(ai).pE_bound;

            const auto c = detail::run_trials(g, ts.rows, proto, e0, cfg.trials, cfg.seed,
                                              member, cfg.threads);
            totals[e0].trials += c.trials;
            totals[e0].first_errors += c.first_errors;
            totals[e0].final_errors += c.final_errors;
        }
    }

    for (int e0 : cfg.error_counts) {
        if (!totals.count(e0)) continue;
        const auto& c = totals.at(e0);
        ReportRow row;
        row.scenario = cfg.scenario;
        row.n = cfg.n;
        row.k = cfg.k;
        row.m = cfg.n - cfg.k;
        row.variant = variant_name(cfg.variant);
        row.phi = cfg.phi;
        row.e0 = e0;
        row.trials = c.trials;
        row.per_first = c.trials ? static_cast<double>(c.first_errors) / c.trials : 0.0;
        row.per_final = c.trials ? static_cast<double>(c.final_errors) / c.trials : 0.0;
        row.bound = bound_sum[e0] / cfg.ensemble_size;
        row.ci_halfwidth =
            c.trials ? 1.96 * std::sqrt(row.per_first * (1.0 - row.per_first) / c.trials) : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

/// CSV with provenance comments, a fixed header, and one row per
/// (scenario, e0) in deterministic order. Identical reports produce
/// byte-identical files.
inline void emit_report(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& [k, v] : report.config) out << "# " << k << " = " << v << '\n';
    for (const auto& d : report.diagnostics)
        out << "# member " << d.member << ": distinct = " << d.distinct << "/" << d.requested
            << ", rank = " << d.rank << ", passes_max = " << d.passes_max
            << ", passes_mean = " << detail::format_double(d.passes_mean)
            << ", sparsity_mean = " << detail::format_double(d.sparsity_mean)
            << ", theta_final = " << detail::format_double(d.theta_final)
            << ", min_weight = " << detail::format_double(d.min_weight)
            << ", max_residual = " << detail::format_double(d.max_residual)
            << ", h_tol = " << detail::format_double(d.h_tol) << '\n';
    out << "scenario,n,k,m,variant,phi,e0,trials,per_first,per_final,bound,ci_halfwidth\n";
    for (const auto& r : report.rows) {
        out << r.scenario << ',' << r.n << ',' << r.k << ',' << r.m << ',' << r.variant << ','
            << detail::format_double(r.phi) << ',' << r.e0 << ',' << r.trials << ','
            << detail::format_double(r.per_first) << ',' << detail::format_double(r.per_final)
            << ',' << detail::format_double(r.bound) << ','
            << detail::format_double(r.ci_halfwidth) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

/// Parses the tabular part of an emitted report (comments skipped).
inline std::vector<ReportRow> parse_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<ReportRow> rows;
    std::string line;
    bool seen_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 12) throw IoError("bad report row in " + path);
        ReportRow r;
        r.scenario = fields[0];
        r.n = std::stoi(fields[1]);
        r.k = std::stoi(fields[2]);
        r.m = std::stoi(fields[3]);
        r.variant = fields[4];
        r.phi = std::stod(fields[5]);
        r.e0 = std::stoi(fields[6]);
        r.trials = std::stoll(fields[7]);
        r.per_first = std::stod(fields[8]);
        r.per_final = std::stod(fields[9]);
        r.bound = std::stod(fields[10]);
        r.ci_halfwidth = std::stod(fields[11]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace nam
