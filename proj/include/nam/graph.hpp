#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nam/errors.hpp"
#include "nam/patterns.hpp"
#include "nam/rank.hpp"

namespace nam {

/// Bipartite neural graph: m constraint rows over n pattern nodes. The edge
/// set is the nonzero support of the real weight matrix. Adjacency indices
/// are built once at construction; the object is immutable afterwards and
/// safe to share across threads.
class NeuralGraph {
public:
    NeuralGraph() = default;

    NeuralGraph(int m, int n, int Q, std::vector<double> weights, double theta_final = 0.0,
                std::uint64_t seed = 0)
        : m_(m), n_(n), Q_(Q), theta_final_(theta_final), seed_(seed), w_(std::move(weights)) {
        if (m_ < 0 || n_ <= 0) throw ConfigError("NeuralGraph: bad dimensions");
        if (w_.size() != static_cast<std::size_t>(m_) * n_)
            throw ConfigError("NeuralGraph: weight buffer size mismatch");
        build_supports();
    }

    static NeuralGraph from_rows(const std::vector<std::vector<double>>& rows, int n, int Q,
                                 double theta_final = 0.0, std::uint64_t seed = 0) {
        std::vector<double> w;
        w.reserve(rows.size() * n);
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != n)
                throw ConfigError("NeuralGraph::from_rows: row length mismatch");
            w.insert(w.end(), r.begin(), r.end());
        }
        return NeuralGraph(static_cast<int>(rows.size()), n, Q, std::move(w), theta_final, seed);
    }

    int m() const { return m_; }
    int n() const { return n_; }
    int Q() const { return Q_; }
    double theta_final() const { return theta_final_; }
    std::uint64_t seed() const { return seed_; }

    double at(int i, int j) const { return w_[static_cast<std::size_t>(i) * n_ + j]; }
    const std::vector<double>& weights() const { return w_; }

    const std::vector<int>& row_support(int i) const { return row_support_[i]; }
    const std::vector<int>& col_support(int j) const { return col_support_[j]; }

    int pattern_degree(int j) const { return static_cast<int>(col_support_[j].size()); }
    int constraint_degree(int i) const { return static_cast<int>(row_support_[i].size()); }

    std::size_t edge_count() const { return edges_; }

    /// Smallest nonzero |weight|; 0 for an empty graph.
    double min_nonzero_weight() const {
        double best = 0.0;
        bool any = false;
        for (double v : w_)
            if (v != 0.0) {
                const double a = std::fabs(v);
                if (!any || a < best) best = a;
                any = true;
            }
        return any ? best : 0.0;
    }

    /// Numerical rank of the weight matrix.
    int row_rank() const {
        std::vector<std::vector<double>> rows(m_, std::vector<double>(n_));
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) rows[i][j] = at(i, j);
        return numerical_rank(std::move(rows));
    }

    /// True when every column has the same degree (pattern-side regular).
    bool pattern_side_regular() const {
        for (int j = 1; j < n_; ++j)
            if (col_support_[j].size() != col_support_[0].size()) return false;
        return n_ > 0;
    }

private:
    void build_supports() {
        row_support_.assign(m_, {});
        col_support_.assign(n_, {});
        edges_ = 0;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j)
                if (at(i, j) != 0.0) {
                    row_support_[i].push_back(j);
                    col_support_[j].push_back(i);
                    ++edges_;
                }
    }

    int m_ = 0, n_ = 1, Q_ = 2;
    double theta_final_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> w_;
    std::vector<std::vector<int>> row_support_;
    std::vector<std::vector<int>> col_support_;
    std::size_t edges_ = 0;
};

/// Edge-perspective degree distributions. lambda_[d] is the fraction of
/// edges incident to pattern nodes of degree d; rho_ likewise for the
/// constraint side. dbar is the plain n-average of pattern degrees.
struct DegreeDistribution {
    std::map<int, double> lambda;
    std::map<int, double> rho;
    double dbar = 0.0;

    double lambda_eval(double z) const {
        double acc = 0.0;
        for (const auto& [d, frac] : lambda) acc += frac * std::pow(z, d - 1);
        return acc;
    }
    double rho_eval(double z) const {
        double acc = 0.0;
        for (const auto& [d, frac] : rho) acc += frac * std::pow(z, d - 1);
        return acc;
    }
};

inline DegreeDistribution degree_distributions(const NeuralGraph& g) {
    const double edges = static_cast<double>(g.edge_count());
    if (edges == 0) throw ConfigError("degree_distributions: empty graph");
    DegreeDistribution dd;
    for (int j = 0; j < g.n(); ++j) {
        const int d = g.pattern_degree(j);
        if (d > 0) dd.lambda[d] += d / edges;
    }
    for (int i = 0; i < g.m(); ++i) {
        const int d = g.constraint_degree(i);
        if (d > 0) dd.rho[d] += d / edges;
    }
    dd.dbar = edges / g.n();
    return dd;
}

/// kappa/n: fraction of nonzero entries of a constraint vector.
inline double sparsity_measure(const std::vector<double>& w) {
    if (w.empty()) return 0.0;
    std::size_t kappa = 0;
    for (double v : w) kappa += v != 0.0;
    return static_cast<double>(kappa) / w.size();
}

enum class WeightMode { sign, symmetric };

/// Feedback weights used in the backward half of a recall round.
/// sign mode: entries in {-1, 0, +1}; symmetric mode: the weights themselves.
/// The support always matches the graph.
struct BackwardWeights {
    WeightMode mode = WeightMode::sign;
    int m = 0, n = 0;
    std::vector<double> wb;  // m x n

    double at(int i, int j) const { return wb[static_cast<std::size_t>(i) * n + j]; }
};

inline BackwardWeights backward_weights(const NeuralGraph& g, WeightMode mode) {
    BackwardWeights b;
    b.mode = mode;
    b.m = g.m();
    b.n = g.n();
    b.wb.resize(g.weights().size());
    for (std::size_t i = 0; i < b.wb.size(); ++i) {
        const double v = g.weights()[i];
        b.wb[i] = mode == WeightMode::symmetric ? v : (v > 0.0) - (v < 0.0);
    }
    return b;
}

namespace detail {

/// Enumerates subsets of {0..n-1} of exactly the given size, calling fn with
/// each index set. fn returns false to abort.
template <typename Fn>
bool for_each_subset(int n, int size, Fn&& fn) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
        if (!fn(idx)) return false;
        int i = size - 1;
        while (i >= 0 && idx[i] == n - size + i) --i;
        if (i < 0) return true;
        ++idx[i];
        for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace detail

/// Exhaustive expansion test: every pattern-node subset P with
/// |P| <= floor(alpha*n) must satisfy |N(P)| > beta * d_p * |P|.
/// Only defined for pattern-side regular graphs; subset sizes beyond
/// `budget` are refused.
inline bool is_expander(const NeuralGraph& g, double alpha, double beta, int budget = 3) {
    if (!g.pattern_side_regular())
        throw ConfigError("is_expander: graph is not pattern-side regular");
    if (alpha * g.n() < 1.0) throw ConfigError("is_expander: need alpha*n >= 1");
    const int max_size = static_cast<int>(std::floor(alpha * g.n()));
    if (max_size > budget)
        throw BudgetError("is_expander: subset size " + std::to_string(max_size) +
                          " exceeds budget " + std::to_string(budget));
    const int dp = g.pattern_degree(0);

    const int words = (g.m() + 63) / 64;
    std::vector<std::uint64_t> mask(words);
    for (int size = 1; size <= max_size; ++size) {
        const bool ok = detail::for_each_subset(g.n(), size, [&](const std::vector<int>& idx) {
            std::fill(mask.begin(), mask.end(), 0);
            for (int j : idx)
                for (int i : g.col_support(j)) mask[i >> 6] |= 1ULL << (i & 63);
            int nbrs = 0;
            for (std::uint64_t wrd : mask) nbrs += __builtin_popcountll(wrd);
            return nbrs > beta * dp * size;
        });
        if (!ok) return false;
    }
    return true;
}

/// Lower bound on the neighbor count of any alpha*n pattern-node subset of a
/// random (d_p, d_c)-regular bipartite graph:
///   n * ( (d_p/d_c) (1-(1-alpha)^{d_c}) - sqrt(2 d_c alpha h(alpha)/log2(e)) )
/// with h the binary entropy in bits.
inline double expansion_lower_bound(int n, int d_p, int d_c, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw ConfigError("expansion_lower_bound: need 0 < alpha < 1");
    const double h = -alpha * std::log2(alpha) - (1.0 - alpha) * std::log2(1.0 - alpha);
    const double log2e = 1.0 / std::log(2.0);
    const double coverage =
        (static_cast<double>(d_p) / d_c) * (1.0 - std::pow(1.0 - alpha, d_c));
    return n * (coverage - std::sqrt(2.0 * d_c * alpha * h / log2e));
}

/// Minimum Hamming distance guarantee floor(alpha*n)+1, available when
/// beta > 1/2 + 1/(4 d_p); nullopt otherwise.
inline std::optional<int> min_distance_bound(int d_p, double beta, double alpha, int n) {
    if (d_p < 1) throw ConfigError("min_distance_bound: d_p must be >= 1");
    if (beta > 0.5 + 1.0 / (4.0 * d_p))
        return static_cast<int>(std::floor(alpha * n)) + 1;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

/// Weights file: header "m n Q seed theta_final", then m rows of n reals.
/// Zero entries are written as literal "0"; everything else round-trips at
/// full precision.
inline void save_graph(const NeuralGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", g.theta_final());
    out << g.m() << ' ' << g.n() << ' ' << g.Q() << ' ' << g.seed() << ' ' << buf << '\n';
    for (int i = 0; i < g.m(); ++i) {
        for (int j = 0; j < g.n(); ++j) {
            if (j) out << ' ';
            const double v = g.at(i, j);
            if (v == 0.0) {
                out << '0';
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                out << buf;
            }
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline NeuralGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    int m = 0, n = 0, Q = 0;
    std::uint64_t seed = 0;
    double theta_final = 0.0;
    if (!(in >> m >> n >> Q >> seed >> theta_final))
        throw IoError("bad weights header: " + path);
    std::vector<double> w(static_cast<std::size_t>(m) * n);
    for (auto& v : w)
        if (!(in >> v)) throw IoError("truncated weights file: " + path);
    NeuralGraph g(m, n, Q, std::move(w), theta_final, seed);
    for (int i = 0; i < m; ++i)
        if (g.constraint_degree(i) == 0)
            throw IoError("all-zero constraint row " + std::to_string(i) + " in " + path);
    return g;
}

/// Edge-list file for synthetic regular graphs: header "n m d_p d_c", then
/// one "pattern_index constraint_index weight" line per edge.
inline void save_edge_list(const NeuralGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    int dp = g.n() > 0 ? g.pattern_degree(0) : 0;
    int dc = g.m() > 0 ? g.constraint_degree(0) : 0;
    out << g.n() << ' ' << g.m() << ' ' << dp << ' ' << dc << '\n';
    char buf[64];
    for (int i = 0; i < g.m(); ++i)
        for (int j : g.row_support(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", g.at(i, j));
            out << j << ' ' << i << ' ' << buf << '\n';
        }
    if (!out) throw IoError("write failed: " + path);
}

inline NeuralGraph load_edge_list(const std::string& path, int Q = 2) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    int n = 0, m = 0, dp = 0, dc = 0;
    if (!(in >> n >> m >> dp >> dc)) throw IoError("bad edge-list header: " + path);
    if (n <= 0 || m <= 0) throw IoError("bad edge-list dimensions: " + path);
    std::vector<double> w(static_cast<std::size_t>(m) * n, 0.0);
    int pj = 0, ci = 0;
    double v = 0.0;
    while (in >> pj >> ci >> v) {
        if (pj < 0 || pj >= n || ci < 0 || ci >= m)
            throw IoError("edge index out of range in " + path);
        w[static_cast<std::size_t>(ci) * n + pj] = v;
    }
    NeuralGraph g(m, n, Q, std::move(w));
    for (int i = 0; i < m; ++i)
        if (g.constraint_degree(i) == 0)
            throw IoError("all-zero constraint row " + std::to_string(i) + " in " + path);
    return g;
}

}  // namespace nam
