#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "negsp/base.hpp"
#include "negsp/extract.hpp"
#include "negsp/graph.hpp"

using namespace negsp;
using negsp::testing::all_vertices;
using negsp::testing::g1;
using negsp::testing::make_graph;

namespace {

Graph random_canonical(std::uint64_t seed, int n, int m, int negs,
                       bool plant = false) {
    GenSpec spec;
    spec.n = n;
    spec.m = m;
    spec.neg_count = negs;
    spec.plant_cycle = plant;
    spec.seed = seed;
    return preprocess(generate(spec)).first;
}

// Independent reach oracle: plain Bellman-Ford rounds over G_U's nonnegative
// edges between explicit hop-relaxation steps. No heaps, no pruning.
std::vector<int> reach_brute(const Graph& g, const std::vector<int>& U, int h) {
    Restriction res = restrict_to(g, U);
    std::vector<bool> is_hop(res.g.m(), false);
    for (int e : res.hop_edges) is_hop[e] = true;
    auto settle = [&](std::vector<double>& d) {
        for (int round = 0; round < res.g.n; ++round) {
            bool any = false;
            for (int e = 0; e < res.g.m(); ++e) {
                if (is_hop[e]) continue;
                const Edge& ed = res.g.edges[e];
                if (d[ed.tail] == kInf) continue;
                if (d[ed.tail] + ed.len < d[ed.head]) {
                    d[ed.head] = d[ed.tail] + ed.len;
                    any = true;
                }
            }
            if (!any) break;
        }
    };
    std::vector<double> d(g.n, kInf);
    for (int u : U) d[u] = 0;
    settle(d);
    for (int i = 0; i < h; ++i) {
        std::vector<double> nd = d;
        for (int e : res.hop_edges) {
            const Edge& ed = res.g.edges[e];
            if (d[ed.tail] < kInf && d[ed.tail] + ed.len < nd[ed.head])
                nd[ed.head] = d[ed.tail] + ed.len;
        }
        settle(nd);
        d = std::move(nd);
    }
    std::vector<int> out(U.begin(), U.end());
    for (int v = 0; v < g.n; ++v)
        if (d[v] < 0) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Neutralizer plain_johnson() {
    return [](const Graph& g) -> SolveResult {
        NeutralizeResult r = johnson_neutralize(g);
        if (r.has_cycle()) return {{}, std::move(r.cycle)};
        return {std::move(r.phi), {}};
    };
}

// d^h(s, v) rows of a graph, one hop_sssp call per source.
std::vector<std::vector<double>> hop_rows(const Graph& g, int h) {
    std::vector<std::vector<double>> rows(g.n);
    for (int s = 0; s < g.n; ++s) rows[s] = hop_sssp(g, {s}, h).dist;
    return rows;
}

}  // namespace

TEST_CASE("negative_reach basics") {
    Graph g = g1();  // 0 -> 1 (4), 1 -> 2 (-2)
    ReachCertificate empty = negative_reach(g, {}, 3);
    CHECK(empty.reach.empty());
    CHECK(empty.reach_edges == 0);

    ReachCertificate c = negative_reach(g, {1}, 1);
    CHECK(c.reach == std::vector<int>{1, 2});
    CHECK(c.U == std::vector<int>{1});
    CHECK(c.h == 1);
}

TEST_CASE("negative_reach equals brute force") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Graph g = random_canonical(seed, 50, 150, 9);
        std::vector<int> negs = g.neg_vertices;
        for (int h : {1, 2, 4}) {
            // singletons and the full set
            for (int u : negs) {
                ReachCertificate c = negative_reach(g, {u}, h);
                CHECK(c.reach == reach_brute(g, {u}, h));
            }
            ReachCertificate all = negative_reach(g, negs, h);
            CHECK(all.reach == reach_brute(g, negs, h));
        }
    }
}

TEST_CASE("restricted_johnson neutralizes the batch") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Graph g = random_canonical(seed + 7, 40, 120, 8);
        std::vector<int> B(g.neg_vertices.begin(),
                           g.neg_vertices.begin() + g.k() / 2);
        SolveResult r = restricted_johnson(g, B);
        if (r.has_cycle()) {
            CHECK(walk_length(g, r.cycle) < 0);
            continue;
        }
        CHECK(validate_potential(g, r.phi, 1e-9));
        Graph rw = reweight(g, r.phi);
        // every surviving negative tail is outside the batch
        for (int v : rw.neg_vertices)
            CHECK(!std::binary_search(B.begin(), B.end(), v));
    }
}

TEST_CASE("betweenness_reduce on a graph with no negative edges") {
    GenSpec spec;
    spec.n = 12;
    spec.m = 40;
    spec.seed = 5;
    Graph g = generate(spec);
    BetweennessResult r = betweenness_reduce(g, 2, 2, plain_johnson());
    REQUIRE(!r.has_cycle());
    for (double v : r.phi) CHECK(v == 0);
}

TEST_CASE("betweenness_reduce bounds h-hop betweenness") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 40 && checked < 12; ++seed) {
        Graph g = random_canonical(seed, 30, 90, 6);
        if (bellman_ford_oracle(g, 0).has_cycle()) continue;
        for (int b : {2, 3}) {
            for (int h : {1, 2}) {
                BetweennessConfig bc;
                bc.seed = seed * 10 + b;
                BetweennessResult r =
                    betweenness_reduce(g, b, h, plain_johnson(), bc);
                REQUIRE(!r.has_cycle());
                REQUIRE(validate_potential(g, r.phi, 1e-9));
                Graph rw = reweight(g, r.phi);
                auto fwd = hop_rows(rw, h);
                auto bwd = hop_rows(transpose(rw), h);
                // exhaustive triple check: few vertices remain h-hop
                // negatively between any pair
                for (int s = 0; s < g.n; ++s)
                    for (int t = 0; t < g.n; ++t) {
                        int between = 0;
                        for (int v = 0; v < g.n; ++v)
                            if (fwd[s][v] < kInf && bwd[t][v] < kInf &&
                                fwd[s][v] + bwd[t][v] < 0)
                                ++between;
                        CHECK(between <= g.n / b);
                    }
            }
        }
        ++checked;
    }
    CHECK(checked >= 8);
}

TEST_CASE("betweenness_reduce surfaces planted cycles") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Graph g = random_canonical(seed, 20, 60, 5, true);
        BetweennessResult r = betweenness_reduce(g, 2, 2, plain_johnson());
        REQUIRE(r.has_cycle());
        CHECK(walk_length(g, r.cycle) < 0);
    }
}

TEST_CASE("extract on the smallest cases") {
    Graph g = g1();
    ExtractOutcome out = extract(g, 2, 1, ExtractMode::single, plain_johnson());
    REQUIRE(out.kind == ExtractOutcome::Kind::neutralized);
    CHECK(out.neutralized_count == 1);
    CHECK(validate_potential(g, out.phi));
    CHECK(reweight(g, out.phi).k() == 0);

    Graph cyc = make_graph(2, {{0, 1, -3}, {1, 0, 1}});
    ExtractOutcome oc = extract(cyc, 2, 1, ExtractMode::single, plain_johnson());
    REQUIRE(oc.kind == ExtractOutcome::Kind::cycle);
    CHECK(walk_length(cyc, oc.cycle) < 0);
}

TEST_CASE("extract graded remote outcome with verified certificates") {
    int remote_seen = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Graph g = random_canonical(seed, 80, 240, 16);
        ExtractConfig ec;
        ec.seed = seed;
        const int h = 4, h0 = 2;
        ExtractOutcome out;
        try {
            out = extract(g, h, h0, ExtractMode::graded, plain_johnson(), ec);
        } catch (const ExtractionFailed&) {
            continue;
        }
        if (out.kind == ExtractOutcome::Kind::cycle) {
            CHECK(walk_length(g, out.cycle) < 0);
            continue;
        }
        CHECK(validate_potential(g, out.phi, 1e-9));
        if (out.kind != ExtractOutcome::Kind::remote) continue;
        ++remote_seen;
        long long target = static_cast<long long>(
            std::ceil(ec.cu * std::sqrt(double(g.k()) * h0)));
        CHECK(2 * static_cast<long long>(out.U.size()) >= target);
        // certificates are self-verifying against negative_reach, on the
        // graph as reweighted by the returned potential
        Graph g2 = reweight(g, out.phi);
        REQUIRE(!out.certificates.empty());
        for (const ReachCertificate& c : out.certificates) {
            ReachCertificate again = negative_reach(g2, out.U, c.h);
            CHECK(again.reach == c.reach);
            CHECK(static_cast<long long>(c.reach.size()) * h <=
                  static_cast<long long>(g.n) * c.h);
        }
    }
    CHECK(remote_seen >= 5);
}

TEST_CASE("extract single mode keeps the reach under n/h") {
    int remote_seen = 0;
    for (std::uint64_t seed = 20; seed < 32; ++seed) {
        Graph g = random_canonical(seed, 100, 300, 20);
        ExtractConfig ec;
        ec.seed = seed;
        const int h = 4;
        ExtractOutcome out;
        try {
            out = extract(g, h, h, ExtractMode::single, plain_johnson(), ec);
        } catch (const ExtractionFailed&) {
            continue;
        }
        if (out.kind != ExtractOutcome::Kind::remote) continue;
        ++remote_seen;
        REQUIRE(out.certificates.size() == 1);
        CHECK(static_cast<long long>(out.certificates[0].reach.size()) * h <= g.n);
    }
    CHECK(remote_seen >= 5);
}
