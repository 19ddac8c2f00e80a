#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "nam/patterns.hpp"

using namespace nam;

TEST_CASE("capacity_check evaluates the worst-case inequality") {
    CHECK(capacity_check(10, 2, 2, 11));
    CHECK(capacity_check(1, 2, 2, 2));
    CHECK_FALSE(capacity_check(10, 2, 2, 10));
}

TEST_CASE("generator matrices satisfy entry, column-weight and rank invariants") {
    Rng rng = make_rng(42);
    const ModelSpec spec{11, 4, 2};
    const GeneratorMatrix g = generate_generator_matrix(spec, 2, 1, rng);
    REQUIRE(g.rows.size() == 2);
    for (const auto& row : g.rows)
        for (int v : row) CHECK((v == 0 || v == 1));
    CHECK(g.max_column_weight() <= 1);
    std::vector<std::vector<long long>> m(2, std::vector<long long>(4));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j) m[i][j] = g.rows[i][j];
    CHECK(exact_rank(m) == 2);
}

TEST_CASE("generator generation at the n=400 scenario size") {
    Rng rng = make_rng(7);
    const ModelSpec spec{11, 400, 200};
    const GeneratorMatrix g = generate_generator_matrix(spec, 2, 10, rng);
    int maxw = 0;
    for (int j = 0; j < g.n; ++j) {
        int w = 0;
        for (int i = 0; i < g.k; ++i) {
            CHECK((g.rows[i][j] == 0 || g.rows[i][j] == 1));
            w += g.rows[i][j] != 0;
        }
        maxw = std::max(maxw, w);
        CHECK(w == 10);  // exactly min(dstar, k) nonzeros per column
    }
    CHECK(maxw <= 10);
}

TEST_CASE("impossible generator parameters are rejected") {
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(generate_generator_matrix(ModelSpec{2, 3, 3}, 2, 0, rng), ConfigError);
}

TEST_CASE("synthesize_pattern computes u*G with rejection above Q") {
    GeneratorMatrix g;
    g.k = 2;
    g.n = 4;
    g.gamma = 2;
    g.dstar = 1;
    g.rows = {{1, 0, 1, 0}, {0, 1, 0, 1}};

    SECTION("zero message gives the zero pattern") {
        const auto x = synthesize_pattern({0, 0}, g, 11);
        REQUIRE(x);
        CHECK(*x == Pattern{0, 0, 0, 0});
    }
    SECTION("hand-checked product") {
        const auto x = synthesize_pattern({1, 1}, g, 11);
        REQUIRE(x);
        CHECK(*x == Pattern{1, 1, 1, 1});
    }
    SECTION("entries at Q are rejected as values, not errors") {
        GeneratorMatrix dense = g;
        dense.rows = {{1, 1, 0, 0}, {1, 1, 0, 0}};  // column sums reach 2
        const auto x = synthesize_pattern({1, 1}, dense, 2);
        CHECK_FALSE(x);
    }
}

TEST_CASE("when the capacity inequality holds no message is ever rejected") {
    Rng rng = make_rng(9);
    const ModelSpec spec{3, 6, 4};  // Q-1 = 2 >= d*(gamma-1)(upsilon-1) = 2
    const GeneratorMatrix g = generate_generator_matrix(spec, 2, 2, rng);
    std::vector<int> u(4, 0);
    int count = 0;
    do {
        CHECK(synthesize_pattern(u, g, spec.Q).has_value());
        ++count;
    } while (nam::detail::next_message(u, 2));
    CHECK(count == 16);
}

TEST_CASE("exhaustive training set enumerates upsilon^k distinct patterns") {
    GeneratorMatrix g;
    g.k = 2;
    g.n = 4;
    g.gamma = 2;
    g.dstar = 1;
    g.rows = {{1, 0, 1, 0}, {0, 1, 0, 1}};
    Rng rng = make_rng(3);
    const TrainingSet ts = build_training_set(ModelSpec{11, 4, 2}, g, 2, kAllPatterns, rng);
    REQUIRE(ts.rows.size() == 4);
    const std::set<Pattern> got(ts.rows.begin(), ts.rows.end());
    const std::set<Pattern> want = {
        {0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {1, 1, 1, 1}};
    CHECK(got == want);
    CHECK(training_set_rank(ts) == 2);
}

TEST_CASE("sampled training sets are distinct, in range, and rank-bounded") {
    Rng rng = make_rng(11);
    const ModelSpec spec{11, 8, 6};
    const GeneratorMatrix g = generate_generator_matrix(spec, 2, 2, rng);
    const TrainingSet ts = build_training_set(spec, g, 2, 40, rng);
    REQUIRE(ts.rows.size() == 40);
    std::set<Pattern> distinct(ts.rows.begin(), ts.rows.end());
    CHECK(distinct.size() == 40);
    for (const auto& row : ts.rows)
        for (int v : row) {
            CHECK(v >= 0);
            CHECK(v < spec.Q);
        }
    CHECK(training_set_rank(ts) <= 6);

    SECTION("single-row request") {
        Rng rng2 = make_rng(12);
        const TrainingSet one = build_training_set(spec, g, 2, 1, rng2);
        CHECK(one.rows.size() == 1);
    }
    SECTION("asking for more than upsilon^k fails") {
        Rng rng2 = make_rng(13);
        CHECK_THROWS_AS(build_training_set(spec, g, 2, 65, rng2), ConfigError);
    }
}

TEST_CASE("training set and generator files round-trip") {
    Rng rng = make_rng(21);
    const ModelSpec spec{5, 6, 3};
    const GeneratorMatrix g = generate_generator_matrix(spec, 3, 2, rng);
    const TrainingSet ts = build_training_set(spec, g, 2, 5, rng, 21);

    const auto dir = std::string("nam_test_patterns_io");
    save_training_set(ts, dir + ".train");
    const TrainingSet back = load_training_set(dir + ".train");
    CHECK(back.spec.n == spec.n);
    CHECK(back.spec.k == spec.k);
    CHECK(back.spec.Q == spec.Q);
    CHECK(back.seed == 21);
    CHECK(back.rows == ts.rows);

    save_generator_matrix(g, dir + ".gmat");
    const GeneratorMatrix gback = load_generator_matrix(dir + ".gmat");
    CHECK(gback.rows == g.rows);
    CHECK(gback.gamma == g.gamma);
    CHECK(gback.dstar == g.dstar);

    std::remove((dir + ".train").c_str());
    std::remove((dir + ".gmat").c_str());
}

TEST_CASE("generation is deterministic in the seed") {
    const ModelSpec spec{11, 12, 6};
    Rng a = make_rng(77), b = make_rng(77);
    const auto ga = generate_generator_matrix(spec, 2, 3, a);
    const auto gb = generate_generator_matrix(spec, 2, 3, b);
    CHECK(ga.rows == gb.rows);
    const auto ta = build_training_set(spec, ga, 2, 20, a);
    const auto tb = build_training_set(spec, gb, 2, 20, b);
    CHECK(ta.rows == tb.rows);
}
