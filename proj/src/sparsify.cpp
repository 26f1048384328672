#include "negsp/sparsify.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>

#include "negsp/counters.hpp"
#include "negsp/extract.hpp"

namespace negsp {

namespace {

constexpr double kTol = 1e-9;

std::vector<int> all_vertices(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

SparsifiedGraph build_sparsifier(const Graph& g, const std::vector<int>& U, int h,
                                 int r, const SparsifyConfig& cfg,
                                 const std::vector<int>* frozen) {
    assert(h >= 1);
    const int n = g.n;
    ReachCertificate cert = negative_reach(g, U, h, frozen);
    if (static_cast<long long>(cert.reach.size()) * r > n) throw ReachTooLarge();

    Restriction res = restrict_to(g, U, frozen);

    SparsifiedGraph S;
    S.h = h;
    if (h < std::log(std::max(2, n)) || U.empty()) {
        // Too few layers to pay for the copies: G_U is its own sparsifier,
        // and Johnson through it becomes exact.
        S.degenerate = true;
        S.H = res.g;
        S.phi.assign(n, 0.0);
        S.pi0 = S.pi1 = all_vertices(n);
        S.U0 = cert.U;
        S.reset_edges = res.hop_edges;
        S.provenance.resize(n);
        for (int v = 0; v < n; ++v) S.provenance[v] = {0, v};
        counters().aux_edges += S.H.m();
        return S;
    }

    // Layer potentials phi(v_i) = d^i_U(V, v).
    std::vector<std::vector<double>> rounds;
    HopOptions ho;
    ho.hop_edges = &res.hop_edges;
    ho.rounds = &rounds;
    HopDistanceTable t = hop_sssp(res.g, all_vertices(n), h, ho);
    if (t.has_cycle()) throw CycleFound(std::move(t.cycle));

    // Construction reach: the certified negative reach, enlarged with U and
    // the heads of U's hop edges so that every forward arc has a landing
    // vertex in the middle layers.
    std::vector<bool> in_reach(n, false);
    for (int v : cert.reach) in_reach[v] = true;
    for (int eid : res.hop_edges) {
        in_reach[res.g.edges[eid].tail] = true;
        in_reach[res.g.edges[eid].head] = true;
    }
    std::vector<int> ridx(n, -1);
    int R = 0;
    for (int v = 0; v < n; ++v)
        if (in_reach[v]) ridx[v] = R++;

    // Layer-major vertex ids: layer 0 = originals, layers 1..h-1 hold only
    // the reach, layer h is a full copy again.
    auto mid = [&](int layer, int v) {
        assert(ridx[v] >= 0);
        return n + (layer - 1) * R + ridx[v];
    };
    auto top = [&](int v) { return n + (h - 1) * R + v; };

    Graph H;
    H.n = 2 * n + (h - 1) * R;
    S.provenance.resize(H.n);
    for (int v = 0; v < n; ++v) {
        S.provenance[v] = {0, v};
        S.provenance[top(v)] = {h, v};
    }
    for (int layer = 1; layer < h; ++layer)
        for (int v = 0; v < n; ++v)
            if (in_reach[v]) S.provenance[mid(layer, v)] = {layer, v};

    std::vector<bool> is_hop(res.g.m(), false);
    for (int eid : res.hop_edges) is_hop[eid] = true;

    // Copies of the nonnegative arcs: full at layers 0 and h, reach-induced
    // in between.
    for (int e = 0; e < res.g.m(); ++e) {
        if (is_hop[e]) continue;
        const Edge& ed = res.g.edges[e];
        H.add_edge(ed.tail, ed.head, ed.len);
        H.add_edge(top(ed.tail), top(ed.head), ed.len);
        if (in_reach[ed.tail] && in_reach[ed.head])
            for (int layer = 1; layer < h; ++layer)
                H.add_edge(mid(layer, ed.tail), mid(layer, ed.head), ed.len);
    }
    auto at_layer = [&](int layer, int v) {
        if (layer == 0) return v;
        if (layer == h) return top(v);
        return mid(layer, v);
    };
    // Forward arcs per hop edge, self arcs on the reach, and zero "lift"
    // arcs (v_0, v_h) off the reach so every vertex can finish at layer h.
    for (int layer = 0; layer < h; ++layer) {
        for (int eid : res.hop_edges) {
            const Edge& ed = res.g.edges[eid];
            H.add_edge(at_layer(layer, ed.tail), at_layer(layer + 1, ed.head), ed.len);
        }
        for (int v = 0; v < n; ++v)
            if (in_reach[v]) H.add_edge(at_layer(layer, v), at_layer(layer + 1, v), 0.0);
    }
    for (int v = 0; v < n; ++v)
        if (!in_reach[v]) H.add_edge(v, top(v), 0.0);
    // Exit arcs: wherever a nonnegative arc leaves the reach, drop back to
    // layer 0. Valid because the target is outside the negative reach.
    for (int e = 0; e < res.g.m(); ++e) {
        if (is_hop[e]) continue;
        const Edge& ed = res.g.edges[e];
        if (!in_reach[ed.tail] || in_reach[ed.head]) continue;
        for (int layer = 1; layer <= h; ++layer)
            H.add_edge(at_layer(layer, ed.tail), ed.head, ed.len);
    }
    // Reset arcs on a uniform sample U0 of U.
    std::mt19937_64 rng(cfg.seed ^ 0x3c69'16a1'72b1'9c53ULL);
    long long want = static_cast<long long>(std::ceil(
        cfg.sample_const * static_cast<double>(U.size()) * std::log(std::max(2, n)) / h));
    int cnt = static_cast<int>(std::min<long long>(
        static_cast<long long>(U.size()), std::max<long long>(1, want)));
    {
        std::vector<int> pool = cert.U;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(cnt);
        std::sort(pool.begin(), pool.end());
        S.U0 = std::move(pool);
    }
    for (int u : S.U0) {
        S.reset_edges.push_back(H.m());
        H.add_edge(top(u), u, 0.0);
    }
    H.finalize();
    counters().aux_edges += H.m();

    S.phi.assign(H.n, 0.0);
    for (int v = 0; v < n; ++v) {
        S.phi[v] = rounds[0][v];
        S.phi[top(v)] = rounds[h][v];
        if (in_reach[v])
            for (int layer = 1; layer < h; ++layer)
                S.phi[mid(layer, v)] = rounds[layer][v];
    }
    S.pi0 = all_vertices(n);
    S.pi1.resize(n);
    for (int v = 0; v < n; ++v) S.pi1[v] = top(v);

    // Only the reset arcs may stay negative once reweighted by phi.
    {
        Graph Hw = reweight(H, S.phi);
        std::vector<bool> is_reset(H.m(), false);
        for (int e : S.reset_edges) is_reset[e] = true;
        for (int e = 0; e < H.m(); ++e)
            assert(is_reset[e] || Hw.edges[e].len >= -kTol);
    }
    assert(H.n <= 2 * n + static_cast<long long>(h) *
                              (n / std::max(1, r) + 2 * static_cast<int>(U.size())));

    S.H = std::move(H);
    return S;
}

Potential johnson_through(const SparsifiedGraph& s, const Potential& psi) {
    const int hn = s.H.n;
    const int n = static_cast<int>(s.pi0.size());
    Potential chi = compose(s.phi, psi);
    Graph Hx = reweight(s.H, chi);
    assert(Hx.k() == 0);

    // Labels start at -chi(v_0) for every v, so after relaxing, the label at
    // x equals min_u d(u_0, x) - chi(x) in the unweighted lengths.
    std::vector<double> labels(hn, kInf);
    for (int v = 0; v < n; ++v)
        labels[s.pi0[v]] = std::min(labels[s.pi0[v]], -chi[s.pi0[v]]);
    dijkstra_relax(Hx, labels);

    std::vector<double> dist(n, kInf);
    for (int v = 0; v < n; ++v)
        if (labels[s.pi1[v]] < kInf) dist[v] = labels[s.pi1[v]] + chi[s.pi1[v]];
    return finite_potential(dist);
}

int choose_h_recursive(long long k, Variant variant) {
    if (k <= 1) return 1;
    double e = variant == Variant::classic
                   ? (2.0 * std::sqrt(3.0) - 3.0) / 3.0
                   : (std::sqrt(2.0) - 1.0) / (std::sqrt(2.0) + 1.0);
    long long h = std::llround(std::pow(static_cast<double>(k), e));
    return static_cast<int>(std::max<long long>(1, h));
}

namespace {

bool u_edges_neutral(const Graph& g2, const Potential& phi,
                     const std::vector<int>& frozen, const std::vector<int>& U,
                     double tau) {
    std::vector<bool> in_u(g2.n, false);
    for (int u : U) in_u[u] = true;
    for (int eid : frozen) {
        const Edge& e = g2.edges[eid];
        if (!in_u[e.tail]) continue;
        if (e.len + phi[e.tail] - phi[e.head] < -tau) return false;
    }
    return true;
}

}  // namespace

SolveResult solve_recursive(const Graph& g, const SolveConfig& cfg) {
    RecursionScope scope;
    Graph cur = g;
    Potential total(g.n, 0.0);
    std::mt19937_64 rng(cfg.seed * 0x9e37'79b9'7f4a'7c15ULL + 0x2545'f491'4f6c'dd1dULL);
    const double tol = std::max(cfg.tau, kTol);

    while (cur.k() > 0) {
        const int k = cur.k();
        if (k <= cfg.base_k) {
            NeutralizeResult nr = johnson_neutralize(cur, tol);
            if (nr.has_cycle()) return {{}, std::move(nr.cycle)};
            cur = reweight(cur, nr.phi);
            total = compose(total, nr.phi);
            continue;
        }

        const int h = choose_h_recursive(k, cfg.variant);
        const std::vector<int> frozen = negative_edge_ids(cur);

        // Subinstances recurse only when strictly smaller; otherwise fall
        // back to plain Johnson so the recursion stays well-founded.
        Neutralizer recurse = [&](const Graph& sub) -> SolveResult {
            if (sub.k() < k) {
                SolveConfig c2 = cfg;
                c2.seed = rng();
                return solve_recursive(sub, c2);
            }
            NeutralizeResult nr = johnson_neutralize(sub, tol);
            if (nr.has_cycle()) return {{}, std::move(nr.cycle)};
            return {std::move(nr.phi), {}};
        };

        ExtractConfig ec;
        ec.cu = cfg.cu;
        ec.cb = cfg.cb;
        ec.tau = tol;
        ec.seed = rng();
        ExtractOutcome out;
        try {
            out = extract(cur, h, h, ExtractMode::single, recurse, ec, &frozen);
        } catch (const ExtractionFailed&) {
            // No qualifying remote set: neutralize a batch of sqrt(k*h)
            // negative vertices directly so the iteration still shrinks k.
            long long bsz = std::min<long long>(
                static_cast<long long>(frozen.size()),
                static_cast<long long>(
                    std::ceil(std::sqrt(static_cast<double>(k) * h))));
            std::vector<int> batch;
            for (long long i = 0; i < bsz; ++i)
                batch.push_back(cur.edges[frozen[i]].tail);
            std::sort(batch.begin(), batch.end());
            batch.erase(std::unique(batch.begin(), batch.end()), batch.end());
            SolveResult r = restricted_johnson(cur, batch, &frozen, tol);
            if (r.has_cycle()) return {{}, std::move(r.cycle)};
            cur = reweight(cur, r.phi);
            total = compose(total, r.phi);
            assert(cur.k() < k);
            continue;
        }
        if (out.kind == ExtractOutcome::Kind::cycle)
            return {{}, std::move(out.cycle)};
        if (out.kind == ExtractOutcome::Kind::neutralized) {
            assert(out.neutralized_count > 0);
            cur = reweight(cur, out.phi);
            total = compose(total, out.phi);
            assert(cur.k() < k);
            continue;
        }

        // Remote set: sparsify G_U, neutralize the sparsifier, pull Johnson
        // potentials for G_U back through it, and verify. Sampling can fail,
        // so retry with fresh randomness a bounded number of times.
        Graph g2 = reweight(cur, out.phi);
        Potential phiC;
        bool ok = false;
        for (int attempt = 0; attempt <= cfg.retries && !ok; ++attempt) {
            if (attempt > 0) ++counters().retries;
            SparsifyConfig sc;
            sc.sample_const = cfg.sample_const;
            sc.seed = rng();
            SparsifiedGraph S;
            try {
                S = build_sparsifier(g2, out.U, h, h, sc, &frozen);
            } catch (const CycleFound& cf) {
                return {{}, cf.cycle};
            }
            Graph Hw = reweight(S.H, S.phi);
            SolveResult sub = recurse(Hw);
            if (sub.has_cycle()) {
                std::vector<int> orig(S.H.n);
                for (int v = 0; v < S.H.n; ++v) orig[v] = S.provenance[v].orig;
                return {{}, map_cycle(sub.cycle, orig)};
            }
            Potential cand = johnson_through(S, sub.phi);
            if (validate_potential(g2, cand, tol) &&
                u_edges_neutral(g2, cand, frozen, out.U, tol)) {
                phiC = std::move(cand);
                ok = true;
            }
        }
        if (!ok) throw RetryBudgetExhausted();

        Potential step = compose(out.phi, phiC);
        cur = reweight(cur, step);
        total = compose(total, step);
        assert(cur.k() < k);
    }

    assert(validate_potential(g, total, tol));
    return {std::move(total), {}};
}

}  // namespace negsp
