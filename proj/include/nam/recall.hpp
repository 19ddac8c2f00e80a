#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nam/errors.hpp"
#include "nam/graph.hpp"
#include "nam/patterns.hpp"
#include "nam/random.hpp"

namespace nam {

/// Additive +-1 noise; z records the signs before clipping, so its support
/// size always equals the requested error count.
struct NoiseVector {
    std::vector<int> z;

    bool operator==(const NoiseVector&) const = default;

    int weight() const {
        int w = 0;
        for (int v : z) w += v != 0;
        return w;
    }
};

enum class RecallVariant { WTA, MV, MV_L1 };

struct RecallConfig {
    RecallVariant variant = RecallVariant::MV;
    double phi = 1.0;  // update threshold; >= 1 means "full-neighborhood feedback"
    int tmax = 1;
    /// |h| at or below this counts as a satisfied constraint. The default
    /// suits graphs whose memorized patterns are exactly orthogonal; learned
    /// graphs want a tolerance above their residual floor (see
    /// recommended_h_tol).
    double h_tol = 1e-9;

    void validate() const {
        if (tmax < 1) throw ConfigError("RecallConfig: tmax must be >= 1");
        if (phi <= 0.0 || phi > 1.0) throw ConfigError("RecallConfig: phi must be in (0,1]");
        if (h_tol < 0.0) throw ConfigError("RecallConfig: h_tol must be >= 0");
    }
};

struct RecallOutcome {
    Pattern x_out;
    bool converged = false;
    int iterations = 0;
    /// Coordinate disagreements with the reference pattern; -1 when no
    /// reference was supplied.
    int bit_errors_first_iter = -1;
    int bit_errors_final = -1;
};

/// Flips exactly e distinct positions by +-1 (uniform sign), then clips the
/// state to [0, Q-1]. Returns the corrupted pattern and the pre-clip noise.
inline std::pair<Pattern, NoiseVector> inject_noise(const Pattern& x, int e, int Q, Rng& rng) {
    const int n = static_cast<int>(x.size());
    if (e < 0 || e > n) throw ConfigError("inject_noise: need 0 <= e <= n");
    NoiseVector nv;
    nv.z.assign(n, 0);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::uniform_int_distribution<int> sign(0, 1);
    for (int i = 0; i < e; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        nv.z[idx[i]] = sign(rng) ? 1 : -1;
    }
    Pattern corrupted = x;
    for (int j = 0; j < n; ++j)
        corrupted[j] = std::clamp(corrupted[j] + nv.z[j], 0, Q - 1);
    return {std::move(corrupted), std::move(nv)};
}

/// Constraint-side half of a round: h_i = sum_j Wb_ij x_j and
/// y_i = 1 if h_i < 0, 0 if h_i = 0 (within h_tol), -1 otherwise.
inline std::pair<std::vector<double>, std::vector<int>> forward_iteration(
    const BackwardWeights& wb, const Pattern& x, double h_tol = 1e-9) {
    if (static_cast<int>(x.size()) != wb.n)
        throw ConfigError("forward_iteration: dimension mismatch");
    std::vector<double> h(wb.m, 0.0);
    std::vector<int> y(wb.m, 0);
    for (int i = 0; i < wb.m; ++i) {
        double acc = 0.0;
        const double* row = wb.wb.data() + static_cast<std::size_t>(i) * wb.n;
        for (int j = 0; j < wb.n; ++j) acc += row[j] * x[j];
        h[i] = acc;
        if (acc < -h_tol)
            y[i] = 1;
        else if (acc > h_tol)
            y[i] = -1;
    }
    return {std::move(h), std::move(y)};
}

enum class FeedbackNorm { L0, L1 };

/// Pattern-side half of a round. With D_j the column degree (L0) or the
/// column l1 norm (L1):
///   g1_j = sum_i Wb_ij y_i / D_j,  g2_j = sum_i |Wb_ij y_i| / D_j.
/// Columns with D_j = 0 yield zeros.
inline std::pair<std::vector<double>, std::vector<double>> backward_feedback(
    const BackwardWeights& wb, const std::vector<int>& y, FeedbackNorm norm) {
    if (static_cast<int>(y.size()) != wb.m)
        throw ConfigError("backward_feedback: dimension mismatch");
    std::vector<double> g1(wb.n, 0.0), g2(wb.n, 0.0), denom(wb.n, 0.0);
    for (int i = 0; i < wb.m; ++i) {
        const double* row = wb.wb.data() + static_cast<std::size_t>(i) * wb.n;
        for (int j = 0; j < wb.n; ++j) {
            if (row[j] == 0.0) continue;
            denom[j] += norm == FeedbackNorm::L0 ? 1.0 : std::fabs(row[j]);
            if (y[i] != 0) {
                g1[j] += row[j] * y[i];
                g2[j] += std::fabs(row[j] * y[i]);
            }
        }
    }
    for (int j = 0; j < wb.n; ++j) {
        if (denom[j] == 0.0) {
            g1[j] = g2[j] = 0.0;
        } else {
            g1[j] /= denom[j];
            g2[j] /= denom[j];
        }
    }
    return {std::move(g1), std::move(g2)};
}

/// Reusable decoder state for one (graph, variant) pair. Construction cost is
/// one pass over the weights; trials afterwards touch only the support.
///
/// The constraint sums h are always computed from the real weights W (for a
/// memorized pattern they vanish up to the learning residual); the feedback
/// messages use the mode weights of the variant: sign/L0 for WTA and MV,
/// symmetric/L1 for MV_L1.
class Decoder {
public:
    Decoder(const NeuralGraph& g, const RecallConfig& cfg) : g_(&g), cfg_(cfg) {
        cfg_.validate();
        sign_mode_ = cfg.variant != RecallVariant::MV_L1;
        norm_ = sign_mode_ ? FeedbackNorm::L0 : FeedbackNorm::L1;
        denom_.assign(g.n(), 0.0);
        for (int j = 0; j < g.n(); ++j) {
            for (int i : g.col_support(j))
                denom_[j] += norm_ == FeedbackNorm::L0 ? 1.0 : std::fabs(g.at(i, j));
        }
    }

    RecallOutcome run(const Pattern& x0, const Pattern* reference = nullptr) const {
        const NeuralGraph& g = *g_;
        if (static_cast<int>(x0.size()) != g.n())
            throw ConfigError("Decoder::run: pattern length mismatch");
        Pattern x = x0;
        RecallOutcome out;
        std::vector<int> y(g.m(), 0);
        std::vector<double> g1(g.n(), 0.0), g2(g.n(), 0.0);
        bool first_recorded = false;

        for (int t = 0;; ++t) {
            // forward: real-weight sums decide which constraints are violated
            bool any = false;
            for (int i = 0; i < g.m(); ++i) {
                double acc = 0.0;
                for (int j : g.row_support(i)) acc += g.at(i, j) * x[j];
                y[i] = acc < -cfg_.h_tol ? 1 : (acc > cfg_.h_tol ? -1 : 0);
                any = any || y[i] != 0;
            }
            if (!any) {
                out.converged = true;
                out.iterations = t;
                break;
            }
            if (t == cfg_.tmax) {
                out.iterations = cfg_.tmax;
                break;
            }

            // backward: accumulate feedback over the support
            std::fill(g1.begin(), g1.end(), 0.0);
            std::fill(g2.begin(), g2.end(), 0.0);
            for (int i = 0; i < g.m(); ++i) {
                if (y[i] == 0) continue;
                for (int j : g.row_support(i)) {
                    const double wij = g.at(i, j);
                    const double b = sign_mode_ ? ((wij > 0.0) - (wij < 0.0)) : wij;
                    g1[j] += b * y[i];
                    g2[j] += std::fabs(b);
                }
            }
            for (int j = 0; j < g.n(); ++j) {
                if (denom_[j] == 0.0) continue;
                g1[j] /= denom_[j];
                g2[j] /= denom_[j];
            }

            if (cfg_.variant == RecallVariant::WTA) {
                int best = 0;
                for (int j = 1; j < g.n(); ++j)
                    if (g2[j] > g2[best]) best = j;  // ties keep the lowest index
                const int step = (g1[best] > 0.0) - (g1[best] < 0.0);
                if (step != 0) x[best] = std::clamp(x[best] + step, 0, g.Q() - 1);
            } else {
                for (int j = 0; j < g.n(); ++j) {
                    const bool fires =
                        cfg_.phi >= 1.0 ? g2[j] >= 1.0 - 1e-12 : g2[j] > cfg_.phi;
                    if (!fires) continue;
                    const int step = (g1[j] > 0.0) - (g1[j] < 0.0);
                    if (step != 0) x[j] = std::clamp(x[j] + step, 0, g.Q() - 1);
                }
            }
            if (!first_recorded && reference) {
                out.bit_errors_first_iter = hamming(x, *reference);
                first_recorded = true;
            }
        }
        out.x_out = std::move(x);
        if (reference) {
            out.bit_errors_final = hamming(out.x_out, *reference);
            if (!first_recorded) out.bit_errors_first_iter = out.bit_errors_final;
        }
        return out;
    }

private:
    static int hamming(const Pattern& a, const Pattern& b) {
        int d = 0;
        for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
        return d;
    }

    const NeuralGraph* g_;
    RecallConfig cfg_;
    bool sign_mode_ = true;
    FeedbackNorm norm_ = FeedbackNorm::L0;
    std::vector<double> denom_;
};

/// Winner-take-all recall: per round, only the pattern node with maximal
/// normalized feedback (lowest index on ties) moves, by +-1, clipped to the
/// state range. Exits as converged once no constraint is violated.
inline RecallOutcome wta_recall(const NeuralGraph& g, const Pattern& x0, RecallConfig cfg,
                                const Pattern* reference = nullptr) {
    cfg.variant = RecallVariant::WTA;
    return Decoder(g, cfg).run(x0, reference);
}

/// Majority-voting recall: every pattern node whose feedback fraction
/// exceeds phi moves by the sign of its net feedback. phi = 1 means "all
/// neighbors agree" (compared as >= 1). cfg.variant selects sign/L0 (MV)
/// or symmetric/L1 (MV_L1) feedback.
inline RecallOutcome mv_recall(const NeuralGraph& g, const Pattern& x0, RecallConfig cfg,
                               const Pattern* reference = nullptr) {
    if (cfg.variant == RecallVariant::WTA)
        throw ConfigError("mv_recall: config selects the WTA variant");
    return Decoder(g, cfg).run(x0, reference);
}

/// Constraint tolerance for recall on a learned graph: above the residual
/// floor left by learning, below the smallest step a single +-1 error can
/// cause. max_residual is max_i,mu |(W x^mu)_i| over the training set (pass 0
/// when unknown).
inline double recommended_h_tol(const NeuralGraph& g, double max_residual = 0.0) {
    return std::max({1e-9, 0.45 * g.min_nonzero_weight(), 2.0 * max_residual});
}

}  // namespace nam
