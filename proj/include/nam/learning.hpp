#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "nam/errors.hpp"
#include "nam/graph.hpp"
#include "nam/patterns.hpp"
#include "nam/random.hpp"

namespace nam {

/// Parameters of the stochastic constraint learner. The step size follows
/// alpha_t = alpha0 * tau / (tau + t - 1) over pass index t (tau = 1 gives
/// the plain alpha0/t schedule; either way sum(alpha_t) diverges while
/// sum(alpha_t^2) stays finite). The shrink threshold follows
/// theta_t = theta0 / t.
struct LearningConfig {
    double alpha0 = 0.45;
    double eta = 0.45;
    double theta0 = 0.031;
    double epsilon = 1e-3;
    int max_passes = 50;
    int m = 1;

    double schedule_tau = 1.0;    // 1 = exact alpha0/t
    double init_density = 0.2;    // P(entry nonzero) in the sparse random start
    double dedup_cosine = 0.95;   // |cos| above this marks a duplicate row
    int retry_cap = 8;            // fresh starts per row before giving up
    bool normalize_samples = true;  // scale-free per-sample steps

    double alpha_at(int pass) const {
        return alpha0 * schedule_tau / (schedule_tau + pass - 1);
    }
    double theta_at(int pass) const { return theta0 / pass; }

    void validate() const {
        if (alpha0 <= 0.0) throw ConfigError("LearningConfig: alpha0 must be > 0");
        if (eta < 0.0) throw ConfigError("LearningConfig: eta must be >= 0");
        if (2.0 * alpha0 * eta >= 1.0)
            throw ConfigError("LearningConfig: all-zero-avoidance guard 2*alpha*eta < 1 fails");
        if (theta0 <= 0.0) throw ConfigError("LearningConfig: theta0 must be > 0");
        if (epsilon <= 0.0) throw ConfigError("LearningConfig: epsilon must be > 0");
        if (max_passes < 1) throw ConfigError("LearningConfig: max_passes must be >= 1");
        if (m < 0) throw ConfigError("LearningConfig: m must be >= 0");
        if (schedule_tau < 1.0) throw ConfigError("LearningConfig: schedule_tau must be >= 1");
        if (init_density <= 0.0 || init_density > 1.0)
            throw ConfigError("LearningConfig: init_density must be in (0,1]");
    }
};

/// A converged constraint vector and how it was reached.
struct LearnedConstraint {
    std::vector<double> w;
    int passes = 0;
    double theta_final = 0.0;
    double residual = 0.0;
};

inline double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Inner product of a pattern with a constraint vector.
inline double project(const Pattern& x, const std::vector<double>& w) {
    if (x.size() != w.size()) throw ConfigError("project: dimension mismatch");
    double y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) y += x[i] * w[i];
    return y;
}

/// Thresholded sparsity gradient: component i is w_i when |w_i| <= theta_t,
/// else 0.
inline std::vector<double> sparsity_gradient(const std::vector<double>& w, double theta_t) {
    if (theta_t <= 0.0) throw ConfigError("sparsity_gradient: theta_t must be > 0");
    std::vector<double> g(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (std::fabs(w[i]) <= theta_t) g[i] = w[i];
    return g;
}

/// One stochastic update:
///   w' = w - alpha_t * ( y (x - y w / ||w||^2) + eta * Gamma(w) ),  y = x.w
/// Requires the all-zero-avoidance guard 2 alpha_t eta < 1 and ||w|| > 0.
inline std::vector<double> learning_step(const std::vector<double>& w, const Pattern& x,
                                         double alpha_t, double eta, double theta_t) {
    if (2.0 * alpha_t * eta >= 1.0)
        throw ConfigError("learning_step: guard 2*alpha_t*eta < 1 violated");
    double wn2 = 0.0;
    for (double v : w) wn2 += v * v;
    if (wn2 <= 0.0) throw ConfigError("learning_step: ||w|| must be > 0");
    const double y = project(x, w);
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gamma = std::fabs(w[i]) <= theta_t ? w[i] : 0.0;
        out[i] = w[i] - alpha_t * (y * (x[i] - y * w[i] / wn2) + eta * gamma);
    }
    return out;
}

/// Sum of squared projections of every training pattern onto w.
inline double residual_energy(const std::vector<Pattern>& X, const std::vector<double>& w) {
    double acc = 0.0;
    for (const auto& x : X) {
        const double y = project(x, w);
        acc += y * y;
    }
    return acc;
}

inline double residual_energy(const TrainingSet& X, const std::vector<double>& w) {
    return residual_energy(X.rows, w);
}

namespace detail {

inline std::vector<double> sparse_random_start(int n, double density, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::vector<double> w(n, 0.0);
    for (int redraw = 0; redraw < 1000; ++redraw) {
        double norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            w[i] = unit(rng) < density ? value(rng) : 0.0;
            norm2 += w[i] * w[i];
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& v : w) v *= inv;
            return w;
        }
    }
    throw NotConvergedError("sparse_random_start: could not draw a nonzero start");
}

/// Normalize, zero entries with |.| <= theta, renormalize. Surviving entries
/// keep magnitude > theta, so none can land in (0, theta/2) afterwards.
inline std::optional<std::vector<double>> pruned_candidate(const std::vector<double>& w,
                                                           double theta) {
    const double norm = l2_norm(w);
    if (norm <= 0.0) return std::nullopt;
    std::vector<double> c(w.size());
    double pn2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = w[i] / norm;
        c[i] = std::fabs(v) <= theta ? 0.0 : v;
        pn2 += c[i] * c[i];
    }
    if (pn2 <= 0.0) return std::nullopt;
    const double inv = 1.0 / std::sqrt(pn2);
    for (auto& v : c) v *= inv;
    return c;
}

/// Flat row-major copy of the training patterns plus unit-norm copies used
/// for the scale-free update steps. Shared across rows in learn_graph.
struct SampleBuffer {
    int n = 0;
    std::size_t count = 0;
    std::vector<double> raw;   // count x n
    std::vector<double> unit;  // count x n, zero rows left as zero

    explicit SampleBuffer(const std::vector<Pattern>& X) {
        count = X.size();
        n = count ? static_cast<int>(X[0].size()) : 0;
        raw.resize(count * n);
        unit.resize(count * n);
        for (std::size_t r = 0; r < count; ++r) {
            double norm2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double v = static_cast<double>(X[r][j]);
                raw[r * n + j] = v;
                norm2 += v * v;
            }
            const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
            for (int j = 0; j < n; ++j) unit[r * n + j] = raw[r * n + j] * inv;
        }
    }

    double raw_residual(const std::vector<double>& w) const {
        double acc = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            double y = 0.0;
            const double* x = raw.data() + r * n;
            for (int j = 0; j < n; ++j) y += x[j] * w[j];
            acc += y * y;
        }
        return acc;
    }
};

inline std::optional<LearnedConstraint> learn_constraint_impl(const SampleBuffer& data,
                                                              const LearningConfig& cfg,
                                                              Rng& rng) {
    const int n = data.n;
    std::vector<double> w = sparse_random_start(n, cfg.init_density, rng);

    if (data.raw_residual(w) <= cfg.epsilon)
        return LearnedConstraint{w, 0, 0.0, data.raw_residual(w)};

    std::vector<std::size_t> order(data.count);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int pass = 1; pass <= cfg.max_passes; ++pass) {
        const double alpha = cfg.alpha_at(pass);
        const double theta = cfg.theta_at(pass);
        // visit every pattern once per pass, in a fresh random order
        for (std::size_t i = order.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        const std::vector<double>& samples = cfg.normalize_samples ? data.unit : data.raw;
        for (std::size_t idx : order) {
            const double* x = samples.data() + idx * n;
            double y = 0.0, wn2 = 0.0;
            for (int j = 0; j < n; ++j) {
                y += x[j] * w[j];
                wn2 += w[j] * w[j];
            }
            if (wn2 <= 0.0) throw NotConvergedError("learn_constraint: iterate norm collapsed");
            const double inv_wn2 = 1.0 / wn2;
            for (int j = 0; j < n; ++j) {
                const double gamma = std::fabs(w[j]) <= theta ? w[j] : 0.0;
                w[j] -= alpha * (y * (x[j] - y * w[j] * inv_wn2) + cfg.eta * gamma);
            }
        }
        if (auto cand = pruned_candidate(w, theta)) {
            const double res = data.raw_residual(*cand);
            if (res <= cfg.epsilon) return LearnedConstraint{std::move(*cand), pass, theta, res};
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Learns one constraint vector orthogonal to the training set: sparse random
/// start, per-pass shuffled visits, candidate accepted once its residual
/// energy drops to epsilon. Returns nullopt when max_passes is exhausted
/// (expected when k = n, where no nonzero orthogonal vector exists).
inline std::optional<LearnedConstraint> learn_constraint(const std::vector<Pattern>& X,
                                                         const LearningConfig& cfg, Rng& rng) {
    cfg.validate();
    if (X.empty()) {
        auto w = detail::sparse_random_start(X.empty() ? 1 : static_cast<int>(X[0].size()),
                                             cfg.init_density, rng);
        return LearnedConstraint{std::move(w), 0, 0.0, 0.0};
    }
    detail::SampleBuffer data(X);
    return detail::learn_constraint_impl(data, cfg, rng);
}

inline std::optional<LearnedConstraint> learn_constraint(const TrainingSet& X,
                                                         const LearningConfig& cfg, Rng& rng) {
    return learn_constraint(X.rows, cfg, rng);
}

/// Per-row outcome of learn_graph.
struct RowOutcome {
    int index = 0;
    bool converged = false;
    int passes = 0;
    int attempts = 0;
    double theta_final = 0.0;
    double residual = 0.0;
};

struct GraphLearnResult {
    NeuralGraph graph;
    std::vector<RowOutcome> rows;
    int requested = 0;
    int distinct = 0;
    int achieved_rank = 0;
};

namespace detail {

inline double abs_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::fabs(dot) / std::sqrt(na * nb);
}

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const int nthreads = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += nthreads) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Learns m constraints in parallel from independent seed streams. Rows that
/// duplicate an earlier accepted row (|cosine| above the dedup threshold) are
/// re-learned from a fresh start up to retry_cap times. The result may carry
/// fewer than m rows; recall can proceed with any distinct subset. The graph
/// records the smallest per-row prune threshold as its theta_final.
inline GraphLearnResult learn_graph(const std::vector<Pattern>& X, const LearningConfig& cfg,
                                    Rng& rng, int Q, int threads = 1) {
    cfg.validate();
    const int n = X.empty() ? 1 : static_cast<int>(X[0].size());
    const std::uint64_t master = rng();

    GraphLearnResult result;
    result.requested = cfg.m;
    if (cfg.m == 0) {
        result.graph = NeuralGraph(0, n, Q, {}, 0.0, master);
        return result;
    }

    detail::SampleBuffer data(X);

    // first attempt for every row, embarrassingly parallel
    std::vector<std::optional<LearnedConstraint>> first(cfg.m);
    detail::parallel_for(cfg.m, threads, [&](std::size_t i) {
        Rng row_rng = make_rng(derive_seed(master, i, 0));
        first[i] = X.empty() ? learn_constraint(X, cfg, row_rng)
                             : detail::learn_constraint_impl(data, cfg, row_rng);
    });

    std::vector<std::vector<double>> accepted;
    double theta_final = 0.0;
    bool theta_set = false;
    for (int i = 0; i < cfg.m; ++i) {
        RowOutcome out;
        out.index = i;
        std::optional<LearnedConstraint> cand = std::move(first[i]);
        int attempt = 0;
        while (true) {
            ++attempt;
            if (cand) {
                bool dup = false;
                for (const auto& row : accepted)
                    if (detail::abs_cosine(cand->w, row) > cfg.dedup_cosine) {
                        dup = true;
                        break;
                    }
                if (!dup) {
                    out.converged = true;
                    out.passes = cand->passes;
                    out.theta_final = cand->theta_final;
                    out.residual = cand->residual;
                    if (!theta_set || cand->theta_final < theta_final)
                        theta_final = cand->theta_final;
                    theta_set = true;
                    accepted.push_back(std::move(cand->w));
                    break;
                }
            }
            if (attempt > cfg.retry_cap) break;
            Rng row_rng = make_rng(derive_seed(master, i, attempt));
            cand = X.empty() ? learn_constraint(X, cfg, row_rng)
                             : detail::learn_constraint_impl(data, cfg, row_rng);
        }
        out.attempts = attempt;
        result.rows.push_back(out);
    }

    result.distinct = static_cast<int>(accepted.size());
    result.graph = NeuralGraph::from_rows(accepted, n, Q, theta_set ? theta_final : 0.0, master);
    result.achieved_rank = result.graph.m() > 0 ? result.graph.row_rank() : 0;
    return result;
}

inline GraphLearnResult learn_graph(const TrainingSet& X, const LearningConfig& cfg, Rng& rng,
                                    int threads = 1) {
    return learn_graph(X.rows, cfg, rng, X.spec.Q, threads);
}

}  // namespace nam
