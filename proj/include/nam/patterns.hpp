#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nam/errors.hpp"
#include "nam/random.hpp"
#include "nam/rank.hpp"

namespace nam {

/// A stored or queried state vector: n integers in [0, Q-1].
using Pattern = std::vector<int>;

/// Network dimensions: alphabet size Q, pattern length n, subspace
/// dimension k. The number of constraints to learn is m = n - k.
struct ModelSpec {
    int Q = 2;
    int n = 1;
    int k = 1;

    int m() const { return n - k; }

    void validate() const {
        if (Q < 2) throw ConfigError("ModelSpec: Q must be >= 2");
        if (n < 1) throw ConfigError("ModelSpec: n must be >= 1");
        if (k < 1 || k > n) throw ConfigError("ModelSpec: need 1 <= k <= n");
    }
};

/// k x n integer matrix whose row space carries the stored patterns.
/// Entries lie in [0, gamma-1]; every column has at most dstar nonzeros.
struct GeneratorMatrix {
    int k = 0;
    int n = 0;
    int gamma = 2;
    int dstar = 1;
    std::uint64_t seed = 0;
    std::vector<std::vector<int>> rows;  // k rows of length n

    int max_column_weight() const {
        int best = 0;
        for (int j = 0; j < n; ++j) {
            int w = 0;
            for (int i = 0; i < k; ++i) w += rows[i][j] != 0;
            best = std::max(best, w);
        }
        return best;
    }
};

/// Message vectors alongside the patterns they generated.
struct TrainingSet {
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::vector<Pattern> rows;                // C x n
    GeneratorMatrix generator;                // provenance
    std::vector<std::vector<int>> messages;   // provenance, C x k

    std::size_t size() const { return rows.size(); }
};

/// Request every message vector instead of a sampled count.
inline constexpr long long kAllPatterns = -1;

/// Worst-case guarantee that u * G stays below Q for all admissible
/// messages: Q - 1 >= dstar * (gamma - 1) * (upsilon - 1).
inline bool capacity_check(int dstar, int gamma, int upsilon, int Q) {
    return static_cast<long long>(Q) - 1 >=
           static_cast<long long>(dstar) * (gamma - 1) * (upsilon - 1);
}

/// Draws G with exactly min(dstar, k) nonzeros per column, values uniform in
/// [1, gamma-1], redrawing until rank k. Weight-1 draws are repaired to full
/// row coverage instead of redrawn, since they reach it by chance only with
/// vanishing probability near n = 2k.
inline GeneratorMatrix generate_generator_matrix(const ModelSpec& spec, int gamma, int dstar,
                                                 Rng& rng, int redraw_cap = 100) {
    spec.validate();
    if (gamma < 2) throw ConfigError("generate_generator_matrix: gamma must be >= 2");
    if (dstar < 1) throw ConfigError("generate_generator_matrix: dstar must be >= 1");

    const int k = spec.k, n = spec.n;
    const int colw = std::min(dstar, k);
    GeneratorMatrix g;
    g.k = k;
    g.n = n;
    g.gamma = gamma;
    g.dstar = dstar;

    std::uniform_int_distribution<int> value(1, gamma - 1);
    std::vector<int> positions(k);
    for (int i = 0; i < k; ++i) positions[i] = i;

    for (int attempt = 0; attempt < redraw_cap; ++attempt) {
        g.rows.assign(k, std::vector<int>(n, 0));
        std::vector<int> target(n, -1);  // row of the single nonzero when colw == 1
        for (int j = 0; j < n; ++j) {
            // partial Fisher-Yates: first colw entries become the support
            for (int i = 0; i < colw; ++i) {
                std::uniform_int_distribution<int> pick(i, k - 1);
                std::swap(positions[i], positions[pick(rng)]);
                g.rows[positions[i]][j] = value(rng);
                target[j] = positions[i];
            }
        }
        if (colw == 1 && n >= k) {
            // Full rank means every row is covered, which a plain redraw loop
            // almost never achieves near n = 2k. Redirect columns from
            // multiply-hit rows onto the uncovered ones; there are always
            // enough spares.
            std::vector<int> count(k, 0);
            for (int j = 0; j < n; ++j) ++count[target[j]];
            std::vector<int> uncovered, spare;
            for (int i = 0; i < k; ++i)
                if (count[i] == 0) uncovered.push_back(i);
            for (int j = 0; j < n; ++j)
                if (count[target[j]] > 1) {
                    --count[target[j]];
                    spare.push_back(j);
                }
            for (std::size_t i = spare.size(); i > 1; --i) {
                std::uniform_int_distribution<std::size_t> pick(0, i - 1);
                std::swap(spare[i - 1], spare[pick(rng)]);
            }
            for (std::size_t u = 0; u < uncovered.size(); ++u) {
                const int j = spare[u];
                g.rows[target[j]][j] = 0;
                g.rows[uncovered[u]][j] = value(rng);
            }
        }
        std::vector<std::vector<long long>> m(k, std::vector<long long>(n));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) m[i][j] = g.rows[i][j];
        if (rank_mod_p(m) == k) return g;
    }
    throw NotConvergedError("generate_generator_matrix: rank " + std::to_string(k) +
                            " not reached after " + std::to_string(redraw_cap) + " redraws");
}

/// x = u * G, accepted only if every entry is below Q. Rejection is a value,
/// not an error; with capacity_check satisfied it never happens.
inline std::optional<Pattern> synthesize_pattern(const std::vector<int>& u,
                                                 const GeneratorMatrix& g, int Q) {
    if (static_cast<int>(u.size()) != g.k)
        throw ConfigError("synthesize_pattern: message length != k");
    Pattern x(g.n, 0);
    for (int i = 0; i < g.k; ++i) {
        const int ui = u[i];
        if (ui == 0) continue;
        const auto& row = g.rows[i];
        for (int j = 0; j < g.n; ++j) x[j] += ui * row[j];
    }
    for (int v : x)
        if (v >= Q) return std::nullopt;
    return x;
}

namespace detail {

inline bool next_message(std::vector<int>& u, int upsilon) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (++u[i] < upsilon) return true;
        u[i] = 0;
    }
    return false;
}

}  // namespace detail

/// Builds a training set of distinct accepted patterns. count == kAllPatterns
/// enumerates every one of the upsilon^k messages (desk scale only).
inline TrainingSet build_training_set(const ModelSpec& spec, const GeneratorMatrix& g,
                                      int upsilon, long long count, Rng& rng,
                                      std::uint64_t seed = 0) {
    spec.validate();
    if (upsilon < 1) throw ConfigError("build_training_set: upsilon must be >= 1");
    if (g.n != spec.n || g.k != spec.k)
        throw ConfigError("build_training_set: generator shape does not match spec");

    TrainingSet ts;
    ts.spec = spec;
    ts.seed = seed;
    ts.generator = g;

    const int k = spec.k;
    // upsilon^k, saturating at a budget we would never enumerate anyway
    long long total = 1;
    constexpr long long kEnumBudget = 1LL << 22;
    for (int i = 0; i < k; ++i) {
        if (total > kEnumBudget / upsilon + 1) {
            total = -1;  // too large to represent; sampling still fine
            break;
        }
        total *= upsilon;
    }

    if (count == kAllPatterns) {
        if (total < 0 || total > kEnumBudget)
            throw ConfigError("build_training_set: upsilon^k too large to enumerate");
        std::vector<int> u(k, 0);
        do {
            if (auto x = synthesize_pattern(u, g, spec.Q)) {
                ts.messages.push_back(u);
                ts.rows.push_back(std::move(*x));
            }
        } while (detail::next_message(u, upsilon));
        return ts;
    }

    if (count < 1) throw ConfigError("build_training_set: count must be >= 1");
    if (total >= 0 && count > total)
        throw ConfigError("build_training_set: count exceeds upsilon^k");

    std::uniform_int_distribution<int> digit(0, upsilon - 1);
    std::set<std::vector<int>> seen;
    const long long max_attempts = 1000 + 60 * count;
    long long attempts = 0;
    std::vector<int> u(k);
    while (static_cast<long long>(ts.rows.size()) < count) {
        if (++attempts > max_attempts)
            throw NotConvergedError("build_training_set: could not collect " +
                                    std::to_string(count) + " distinct accepted patterns");
        for (int i = 0; i < k; ++i) u[i] = digit(rng);
        if (!seen.insert(u).second) continue;
        if (auto x = synthesize_pattern(u, g, spec.Q)) {
            ts.messages.push_back(u);
            ts.rows.push_back(std::move(*x));
        }
    }
    return ts;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

/// Text format: header "n k Q C seed", then C lines of n integers.
inline void save_training_set(const TrainingSet& ts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << ts.spec.n << ' ' << ts.spec.k << ' ' << ts.spec.Q << ' ' << ts.rows.size() << ' '
        << ts.seed << '\n';
    for (const auto& row : ts.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline TrainingSet load_training_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    TrainingSet ts;
    long long C = 0;
    if (!(in >> ts.spec.n >> ts.spec.k >> ts.spec.Q >> C >> ts.seed))
        throw IoError("bad training-set header: " + path);
    ts.spec.validate();
    ts.rows.assign(C, Pattern(ts.spec.n));
    for (long long i = 0; i < C; ++i)
        for (int j = 0; j < ts.spec.n; ++j)
            if (!(in >> ts.rows[i][j])) throw IoError("truncated training set: " + path);
    for (const auto& row : ts.rows)
        for (int v : row)
            if (v < 0 || v >= ts.spec.Q) throw IoError("pattern entry out of range: " + path);
    return ts;
}

/// Text format: header "k n gamma dstar seed", then k lines of n integers.
inline void save_generator_matrix(const GeneratorMatrix& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << g.k << ' ' << g.n << ' ' << g.gamma << ' ' << g.dstar << ' ' << g.seed << '\n';
    for (const auto& row : g.rows) {
        for (int j = 0; j < g.n; ++j) out << (j ? " " : "") << row[j];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline GeneratorMatrix load_generator_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    GeneratorMatrix g;
    if (!(in >> g.k >> g.n >> g.gamma >> g.dstar >> g.seed))
        throw IoError("bad generator header: " + path);
    g.rows.assign(g.k, std::vector<int>(g.n));
    for (int i = 0; i < g.k; ++i)
        for (int j = 0; j < g.n; ++j)
            if (!(in >> g.rows[i][j])) throw IoError("truncated generator matrix: " + path);
    return g;
}

/// Exact rank of a training set over the rationals (desk scale).
inline int training_set_rank(const TrainingSet& ts) {
    std::vector<std::vector<long long>> m(ts.rows.size(),
                                          std::vector<long long>(ts.spec.n));
    for (std::size_t i = 0; i < ts.rows.size(); ++i)
        for (int j = 0; j < ts.spec.n; ++j) m[i][j] = ts.rows[i][j];
    return exact_rank(m);
}

}  // namespace nam
