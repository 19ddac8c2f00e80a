#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace nam {

/// Exact rank of an integer matrix over the rationals, via fraction-free
/// (Bareiss) elimination with arbitrary-precision integers. Intended for
/// desk-scale matrices; cost grows with the bit length of the minors.
inline int exact_rank(const std::vector<std::vector<long long>>& rows) {
    using big = boost::multiprecision::cpp_int;
    const std::size_t r = rows.size();
    if (r == 0) return 0;
    const std::size_t c = rows[0].size();
    std::vector<std::vector<big>> a(r, std::vector<big>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) a[i][j] = rows[i][j];

    big prev = 1;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < c && rank < r; ++col) {
        std::size_t piv = rank;
        while (piv < r && a[piv][col] == 0) ++piv;
        if (piv == r) continue;
        std::swap(a[rank], a[piv]);
        for (std::size_t i = rank + 1; i < r; ++i) {
            for (std::size_t j = col + 1; j < c; ++j)
                a[i][j] = (a[rank][col] * a[i][j] - a[i][col] * a[rank][j]) / prev;
            a[i][col] = 0;
        }
        prev = a[rank][col];
        ++rank;
    }
    return static_cast<int>(rank);
}

/// Rank of an integer matrix over GF(p). Always a lower bound on the
/// rational rank, so rank_mod_p == k certifies full rank k.
inline int rank_mod_p(const std::vector<std::vector<long long>>& rows,
                      std::int64_t p = 2147483647) {
    const std::size_t r = rows.size();
    if (r == 0) return 0;
    const std::size_t c = rows[0].size();
    std::vector<std::vector<std::int64_t>> a(r, std::vector<std::int64_t>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            std::int64_t v = rows[i][j] % p;
            a[i][j] = v < 0 ? v + p : v;
        }

    auto pow_mod = [p](std::int64_t b, std::int64_t e) {
        std::int64_t acc = 1;
        b %= p;
        while (e > 0) {
            if (e & 1) acc = static_cast<std::int64_t>(__int128(acc) * b % p);
            b = static_cast<std::int64_t>(__int128(b) * b % p);
            e >>= 1;
        }
        return acc;
    };

    std::size_t rank = 0;
    for (std::size_t col = 0; col < c && rank < r; ++col) {
        std::size_t piv = rank;
        while (piv < r && a[piv][col] == 0) ++piv;
        if (piv == r) continue;
        std::swap(a[rank], a[piv]);
        const std::int64_t inv = pow_mod(a[rank][col], p - 2);
        for (std::size_t i = rank + 1; i < r; ++i) {
            if (a[i][col] == 0) continue;
            const std::int64_t f = static_cast<std::int64_t>(__int128(a[i][col]) * inv % p);
            for (std::size_t j = col; j < c; ++j) {
                a[i][j] = static_cast<std::int64_t>((a[i][j] - __int128(f) * a[rank][j]) % p);
                if (a[i][j] < 0) a[i][j] += p;
            }
        }
        ++rank;
    }
    return static_cast<int>(rank);
}

/// Numerical rank of a real matrix: Gaussian elimination with partial
/// pivoting, entries below rel_tol * max|entry| treated as zero.
inline int numerical_rank(std::vector<std::vector<double>> a, double rel_tol = 1e-9) {
    const std::size_t r = a.size();
    if (r == 0) return 0;
    const std::size_t c = a[0].size();
    double maxabs = 0.0;
    for (const auto& row : a)
        for (double v : row) maxabs = std::max(maxabs, std::fabs(v));
    if (maxabs == 0.0) return 0;
    const double tol = rel_tol * maxabs;

    std::size_t rank = 0;
    for (std::size_t col = 0; col < c && rank < r; ++col) {
        std::size_t piv = rank;
        for (std::size_t i = rank + 1; i < r; ++i)
            if (std::fabs(a[i][col]) > std::fabs(a[piv][col])) piv = i;
        if (std::fabs(a[piv][col]) <= tol) continue;
        std::swap(a[rank], a[piv]);
        for (std::size_t i = rank + 1; i < r; ++i) {
            const double f = a[i][col] / a[rank][col];
            for (std::size_t j = col; j < c; ++j) a[i][j] -= f * a[rank][j];
        }
        ++rank;
    }
    return static_cast<int>(rank);
}

}  // namespace nam
