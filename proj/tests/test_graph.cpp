#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "negsp/base.hpp"
#include "negsp/graph.hpp"

using namespace negsp;
using negsp::testing::make_graph;

namespace {

void check_canonical(const Graph& g) {
    std::vector<int> out_deg(g.n, 0), in_deg(g.n, 0);
    std::vector<int> neg_out(g.n, 0), neg_in(g.n, 0);
    for (const Edge& e : g.edges) {
        ++out_deg[e.tail];
        ++in_deg[e.head];
        if (e.len < 0) {
            ++neg_out[e.tail];
            ++neg_in[e.head];
        }
    }
    int bound = static_cast<int>((2 * g.m() + g.n - 1) / g.n) + 2;
    for (int v = 0; v < g.n; ++v) {
        CHECK(out_deg[v] <= bound);
        CHECK(in_deg[v] <= bound);
        if (neg_out[v]) {
            CHECK(neg_out[v] == 1);
            CHECK(out_deg[v] == 1);
        }
        if (neg_in[v]) {
            CHECK(neg_in[v] == 1);
            CHECK(in_deg[v] == 1);
        }
    }
    CHECK(2 * g.k() <= g.n);
    std::set<int> tails;
    for (const Edge& e : g.edges)
        if (e.len < 0) tails.insert(e.tail);
    CHECK(std::vector<int>(tails.begin(), tails.end()) == g.neg_vertices);
}

void check_distances_preserved(const Graph& raw, const Graph& canon,
                               const VertexMap& vm) {
    for (int s = 0; s < raw.n; ++s) {
        DistanceResult a = bellman_ford_oracle(raw, s);
        DistanceResult b = bellman_ford_oracle(canon, vm.forward[s]);
        REQUIRE(a.has_cycle() == b.has_cycle());
        if (a.has_cycle()) continue;
        for (int t = 0; t < raw.n; ++t) CHECK(a.dist[t] == b.dist[vm.forward[t]]);
    }
}

}  // namespace

TEST_CASE("preprocess isolates a single negative edge") {
    Graph g = make_graph(2, {{0, 1, -2}});
    auto [c, vm] = preprocess(g);
    check_canonical(c);
    CHECK(c.k() == 1);
    int neg = -1;
    for (int e = 0; e < c.m(); ++e)
        if (c.edges[e].len < 0) neg = e;
    REQUIRE(neg >= 0);
    CHECK(vm.backward[c.edges[neg].tail] == -1);
    CHECK(vm.backward[c.edges[neg].head] == -1);
    check_distances_preserved(g, c, vm);
}

TEST_CASE("preprocess star of negative out-edges") {
    Graph g;
    g.n = 11;
    for (int i = 1; i <= 10; ++i) g.add_edge(0, i, -static_cast<double>(i));
    g.finalize();
    auto [c, vm] = preprocess(g);
    check_canonical(c);
    CHECK(c.k() == 10);
    check_distances_preserved(g, c, vm);
}

TEST_CASE("preprocess bounds degrees on a dense hub") {
    GenSpec spec;
    spec.n = 10;
    spec.m = 10;
    spec.seed = 5;
    Graph g = generate(spec);
    for (int i = 0; i < 50; ++i) g.add_edge(0, 1 + (i % 9), 1.0 + i);
    g.finalize();
    auto [c, vm] = preprocess(g);
    check_canonical(c);
    check_distances_preserved(g, c, vm);
}

TEST_CASE("preprocess rejects negative self-loops and empty graphs") {
    Graph g = make_graph(2, {{1, 1, -1}});
    CHECK_THROWS_AS(preprocess(g), NegativeSelfLoop);
    Graph e;
    CHECK_THROWS_AS(preprocess(e), EmptyGraph);
}

TEST_CASE("preprocess preserves distances on random instances") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        GenSpec spec;
        spec.n = 20;
        spec.m = 60;
        spec.neg_count = 5;
        spec.plant_cycle = seed % 4 == 0;
        spec.seed = seed;
        Graph g = generate(spec);
        auto [c, vm] = preprocess(g);
        check_canonical(c);
        check_distances_preserved(g, c, vm);
    }
}

TEST_CASE("dimacs parse of a tiny file") {
    const char* path = "tiny.gr";
    {
        std::ofstream f(path);
        f << "c tiny\np sp 2 1\na 1 2 -3.5\n";
    }
    Graph g = load_dimacs(path);
    CHECK(g.n == 2);
    CHECK(g.m() == 1);
    CHECK(g.edges[0].tail == 0);
    CHECK(g.edges[0].head == 1);
    CHECK(g.edges[0].len == -3.5);
    std::remove(path);
}

TEST_CASE("dimacs round-trip on a 1000-edge graph") {
    GenSpec spec;
    spec.n = 100;
    spec.m = 1000;
    spec.neg_count = 40;
    spec.seed = 99;
    Graph g = generate(spec);
    const char* path = "round.gr";
    save_dimacs(g, path);
    Graph h = load_dimacs(path);
    std::remove(path);
    REQUIRE(h.n == g.n);
    REQUIRE(h.m() == g.m());
    auto key = [](const Edge& e) { return std::make_tuple(e.tail, e.head, e.len); };
    std::vector<std::tuple<int, int, double>> a, b;
    for (const Edge& e : g.edges) a.push_back(key(e));
    for (const Edge& e : h.edges) b.push_back(key(e));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("dimacs header mismatch is rejected") {
    const char* path = "bad.gr";
    {
        std::ofstream f(path);
        f << "p sp 3 5\na 1 2 1\na 2 3 1\na 3 1 1\na 1 3 1\n";
    }
    CHECK_THROWS_AS(load_dimacs(path), InconsistentHeader);
    std::remove(path);
}

TEST_CASE("generate basics") {
    GenSpec spec;
    spec.n = 3;
    spec.m = 0;
    Graph g = generate(spec);
    CHECK(g.n == 3);
    CHECK(g.m() == 0);

    spec = GenSpec{};
    spec.n = 30;
    spec.m = 90;
    spec.neg_count = 7;
    spec.seed = 7;
    Graph a = generate(spec);
    Graph b = generate(spec);
    REQUIRE(a.m() == b.m());
    for (int e = 0; e < a.m(); ++e) {
        CHECK(a.edges[e].tail == b.edges[e].tail);
        CHECK(a.edges[e].head == b.edges[e].head);
        CHECK(a.edges[e].len == b.edges[e].len);
    }
    int negs = 0;
    for (const Edge& e : a.edges)
        if (e.len < 0) ++negs;
    CHECK(negs == 7);

    spec.plant_cycle = true;
    Graph p = generate(spec);
    CHECK(bellman_ford_oracle(p, 0).has_cycle());

    spec.neg_count = spec.m + 1;
    CHECK_THROWS_AS(generate(spec), InfeasibleSpec);
}
