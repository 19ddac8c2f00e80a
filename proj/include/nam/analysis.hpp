#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "nam/errors.hpp"
#include "nam/graph.hpp"
#include "nam/random.hpp"

namespace nam {

/// Inputs of the first-iteration error bound: measured degree data of the
/// (pruned) graph, network dimensions, update threshold and initial error
/// count.
struct AnalysisInput {
    DegreeDistribution dd;
    int m = 1;
    int n = 1;
    double phi = 1.0;
    int e0 = 0;

    void validate() const {
        if (m < 1 || n < 1) throw ConfigError("AnalysisInput: bad dimensions");
        if (e0 < 0 || e0 > n) throw ConfigError("AnalysisInput: need 0 <= e0 <= n");
        if (phi <= 0.0 || phi > 1.0) throw ConfigError("AnalysisInput: phi must be in (0,1]");
    }
};

struct ErrorBoundReport {
    double pe1 = 0.0;       // type-1: a correct node updates
    double pe2 = 0.0;       // type-2 bound: an erroneous node moves the wrong way
    double pb = 0.0;        // bit error probability at the first iteration
    double pe_block = 0.0;  // 1 - (1 - pb)^n
    double pE_bound = 0.0;  // overall bound = pe_block at t = 1
};

/// Expected number of constraint nodes adjacent to e erroneous pattern
/// nodes: m * (1 - (1 - dbar/m)^e).
inline double neighborhood_size(int e, double dbar, int m) {
    if (e < 0) throw ConfigError("neighborhood_size: e must be >= 0");
    if (dbar <= 0.0 || dbar > m) throw ConfigError("neighborhood_size: need 0 < dbar <= m");
    return m * (1.0 - std::pow(1.0 - dbar / m, e));
}

namespace detail {

/// sum_{i=lo}^{trials} C(trials, i) q^i (1-q)^{trials-i}, in log space so
/// large degrees do not overflow.
inline double binomial_tail(int trials, int lo, double q) {
    if (lo <= 0) return 1.0;
    if (lo > trials) return 0.0;
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    const double lq = std::log(q), l1q = std::log1p(-q);
    double acc = 0.0;
    for (int i = lo; i <= trials; ++i) {
        const double lc = std::lgamma(trials + 1.0) - std::lgamma(i + 1.0) -
                          std::lgamma(trials - i + 1.0);
        acc += std::exp(lc + i * lq + (trials - i) * l1q);
    }
    return std::min(acc, 1.0 + 1e-12);
}

}  // namespace detail

/// Probability that a correct degree-dx node receives threshold-many
/// violated-constraint messages: binomial tail from ceil(phi*dx) with hit
/// probability S/m.
inline double p1x(int dx, double S, int m, double phi) {
    if (S < 0.0 || S > m) throw ConfigError("p1x: need 0 <= S <= m");
    if (dx < 0) throw ConfigError("p1x: dx must be >= 0");
    const int lo = static_cast<int>(std::ceil(phi * dx));
    return detail::binomial_tail(dx, lo, S / m);
}

/// Type-1 error probability: expectation of p1x over the edge-perspective
/// degree distribution, counting each node's other dx-1 edges. At phi = 1
/// this reduces exactly to lambda(S/m).
inline double pe1(const DegreeDistribution& dd, double S, int m, double phi) {
    double acc = 0.0;
    for (const auto& [d, frac] : dd.lambda) acc += frac * p1x(d - 1, S, m, phi);
    return acc;
}

/// Probability that a degree-dx erroneous node shares at least half of its
/// neighbors with the other errors.
inline double p2x(int dx, double S_star, int m) {
    if (S_star < 0.0 || S_star > m) throw ConfigError("p2x: need 0 <= S* <= m");
    const int lo = (dx + 1) / 2;  // ceil(dx/2)
    return detail::binomial_tail(dx, lo, S_star / m);
}

/// Upper bound on the type-2 error probability: expectation of p2x with
/// S* = neighborhood_size(e0 - 1).
inline double p2x_and_pe2(const DegreeDistribution& dd, int e0, double dbar, int m) {
    if (e0 < 1) throw ConfigError("p2x_and_pe2: e0 must be >= 1");
    const double S_star = e0 == 1 ? 0.0 : neighborhood_size(e0 - 1, dbar, m);
    double acc = 0.0;
    for (const auto& [d, frac] : dd.lambda) acc += frac * p2x(d, S_star, m);
    return acc;
}

namespace detail {

inline ErrorBoundReport bound_at(const AnalysisInput& ai, double e) {
    ErrorBoundReport r;
    if (e <= 0.0) return r;
    const double S = ai.m * (1.0 - std::pow(1.0 - ai.dd.dbar / ai.m, e));
    r.pe1 = pe1(ai.dd, S, ai.m, ai.phi);
    // below one error there is nothing left to collide with
    const double S_star =
        e > 1.0 ? ai.m * (1.0 - std::pow(1.0 - ai.dd.dbar / ai.m, e - 1.0)) : 0.0;
    double pe2_acc = 0.0;
    for (const auto& [d, frac] : ai.dd.lambda) pe2_acc += frac * p2x(d, S_star, ai.m);
    r.pe2 = pe2_acc;
    const double n = ai.n;
    r.pb = ((n - e) / n) * r.pe1 + (e / n) * r.pe2;
    r.pe_block = 1.0 - std::pow(1.0 - r.pb, n);
    r.pE_bound = r.pe_block;
    return r;
}

}  // namespace detail

/// First-iteration bound: S = neighborhood_size(e0), P_b(1) combines the two
/// error types weighted by the correct/erroneous node fractions, and the
/// block bound is P_e(1) = 1 - (1 - P_b(1))^n.
inline ErrorBoundReport error_bound(const AnalysisInput& ai) {
    ai.validate();
    return detail::bound_at(ai, static_cast<double>(ai.e0));
}

/// Diagnostic multi-iteration recursion: propagates the expected error count
/// |E_{t+1}| ~ n * P_b(t+1) and reports the bound at each step. The headline
/// bound remains the t = 1 entry.
inline std::vector<ErrorBoundReport> error_bound_iterated(const AnalysisInput& ai, int steps) {
    ai.validate();
    if (steps < 1) throw ConfigError("error_bound_iterated: steps must be >= 1");
    std::vector<ErrorBoundReport> out;
    double e = static_cast<double>(ai.e0);
    for (int t = 0; t < steps; ++t) {
        ErrorBoundReport r = detail::bound_at(ai, e);
        out.push_back(r);
        e = ai.n * r.pb;
    }
    return out;
}

/// Draws one pattern-node degree per attachment round.
using DegreeSampler = std::function<int(Rng&)>;

inline DegreeSampler uniform_degree_sampler(int lo, int hi) {
    if (lo < 0 || hi < lo) throw ConfigError("uniform_degree_sampler: bad range");
    return [lo, hi](Rng& rng) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(rng);
    };
}

/// Node-perspective sampler derived from an edge-perspective distribution
/// (node fraction of degree d is proportional to lambda_d / d).
inline DegreeSampler node_degree_sampler(const DegreeDistribution& dd) {
    std::vector<int> degrees;
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& [d, frac] : dd.lambda) {
        if (d <= 0) continue;
        total += frac / d;
        degrees.push_back(d);
        cumulative.push_back(total);
    }
    if (degrees.empty()) throw ConfigError("node_degree_sampler: empty distribution");
    for (auto& c : cumulative) c /= total;
    return [degrees, cumulative](Rng& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double r = u(rng);
        for (std::size_t i = 0; i < cumulative.size(); ++i)
            if (r <= cumulative[i]) return degrees[i];
        return degrees.back();
    };
}

/// Monte Carlo check of the neighborhood-size law. Builds `trials` random
/// graphs by attaching n pattern nodes one at a time, each with a sampled
/// degree and neighbors drawn uniformly with replacement, and returns the
/// mean distinct-neighbor count after every round (index e-1 holds round e).
inline std::vector<double> monte_carlo_neighborhood(int n, int m, const DegreeSampler& sampler,
                                                    int trials, Rng& rng) {
    if (trials < 1) throw ConfigError("monte_carlo_neighborhood: trials must be >= 1");
    if (n < 1 || m < 1) throw ConfigError("monte_carlo_neighborhood: bad dimensions");
    std::vector<double> mean(n, 0.0);
    std::vector<char> hit(m);
    std::uniform_int_distribution<int> constraint(0, m - 1);
    for (int t = 0; t < trials; ++t) {
        std::fill(hit.begin(), hit.end(), 0);
        int distinct = 0;
        for (int e = 0; e < n; ++e) {
            const int dx = sampler(rng);
            for (int d = 0; d < dx; ++d) {
                const int c = constraint(rng);
                if (!hit[c]) {
                    hit[c] = 1;
                    ++distinct;
                }
            }
            mean[e] += distinct;
        }
    }
    for (auto& v : mean) v /= trials;
    return mean;
}

}  // namespace nam
