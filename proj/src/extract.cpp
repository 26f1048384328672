#include "negsp/extract.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <queue>
#include <random>

#include "negsp/counters.hpp"

namespace negsp {

namespace {

constexpr double kTol = 1e-9;

std::vector<int> all_vertices(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

std::vector<int> sorted_unique_tails(const Graph& g, const std::vector<int>& edge_ids) {
    std::vector<int> tails;
    tails.reserve(edge_ids.size());
    for (int e : edge_ids) tails.push_back(g.edges[e].tail);
    std::sort(tails.begin(), tails.end());
    tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
    return tails;
}

std::vector<int> sample_prefix(std::vector<int> pool, int count, std::mt19937_64& rng) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Dijkstra pass over the non-hop edges that only expands labels below
// `bound`. A label of at least (h - i) * |w_min| after i hops cannot reach a
// negative value within the remaining hops, so pruning it preserves the set
// of vertices whose final label is negative. Settled labels below
// `count_below` are certainly in the reach; when `cap` is nonnegative and
// more than cap of them settle the pass aborts and returns false.
bool pruned_pass(const Graph& g, const std::vector<bool>& is_hop,
                 std::vector<double>& d, double bound,
                 double count_below = -kInf, long long cap = -1) {
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int v = 0; v < g.n; ++v)
        if (d[v] < bound) heap.push({d[v], v});
    Counters& c = counters();
    long long certain = 0;
    while (!heap.empty()) {
        auto [dd, u] = heap.top();
        heap.pop();
        ++c.dijkstra_pops;
        if (dd > d[u]) continue;
        if (dd < count_below && cap >= 0 && ++certain > cap) return false;
        for (int eid : g.out[u]) {
            if (is_hop[eid]) continue;
            const Edge& e = g.edges[eid];
            double nd = dd + e.len;
            if (nd < d[e.head]) {
                d[e.head] = nd;
                if (nd < bound) heap.push({nd, e.head});
            }
        }
    }
    return true;
}

}  // namespace

ReachCertificate negative_reach(const Graph& g, const std::vector<int>& U, int h,
                                const std::vector<int>* frozen, long long cap) {
    Restriction res = restrict_to(g, U, frozen);
    const Graph& gu = res.g;

    std::vector<bool> is_hop(gu.m(), false);
    double w = 0.0;
    for (int eid : res.hop_edges) {
        is_hop[eid] = true;
        w = std::max(w, -gu.edges[eid].len);
    }

    // Single hop edge e = (u, x, l): every negative walk starts at u and any
    // repeat use pays l + d(x, u) >= 0, so one use is optimal and a Dijkstra
    // from x bounded at -l settles the reach exactly. Falls through to the
    // DP when the hop edge closes a negative cycle.
    if (res.hop_edges.size() == 1) {
        const Edge& e = gu.edges[res.hop_edges[0]];
        std::vector<double> dd(gu.n, kInf);
        dd[e.head] = 0.0;
        bool within = pruned_pass(gu, is_hop, dd, -e.len, -e.len, cap);
        ++counters().hop_relaxations;
        if (within && dd[e.tail] + e.len < 0.0) {
            // negative cycle through the hop edge: fall back to the DP
        } else {
            ReachCertificate cert;
            cert.U = U;
            std::sort(cert.U.begin(), cert.U.end());
            cert.h = h;
            cert.truncated = !within;
            std::vector<bool> in(gu.n, false);
            for (int u : U) in[u] = true;
            for (int v = 0; v < gu.n; ++v)
                if (e.len + dd[v] < 0.0) in[v] = true;
            for (int v = 0; v < gu.n; ++v)
                if (in[v]) cert.reach.push_back(v);
            if (within)
                for (int v : cert.reach)
                    for (int eid : gu.out[v])
                        if (in[gu.edges[eid].head]) ++cert.reach_edges;
            return cert;
        }
    }

    // Labels start at zero on U only: every hop-edge tail lies in U, and any
    // negative-length walk can be truncated at its first hop tail, so the
    // zero-hop Dijkstra pass never affects the reach and is skipped.
    std::vector<double> d(gu.n, kInf);
    for (int u : U) d[u] = 0.0;
    Counters& c = counters();
    bool within = true;
    for (int i = 1; i <= h && within; ++i) {
        std::vector<double> nd = d;
        for (int eid : res.hop_edges) {
            const Edge& e = gu.edges[eid];
            ++c.hop_relaxations;
            if (d[e.tail] < kInf && d[e.tail] + e.len < nd[e.head])
                nd[e.head] = d[e.tail] + e.len;
        }
        within = pruned_pass(gu, is_hop, nd, static_cast<double>(h - i) * w,
                             0.0, cap);
        d = std::move(nd);
    }

    ReachCertificate cert;
    cert.U = U;
    std::sort(cert.U.begin(), cert.U.end());
    cert.h = h;
    cert.truncated = !within;
    std::vector<bool> in(gu.n, false);
    for (int u : U) in[u] = true;
    for (int v = 0; v < gu.n; ++v)
        if (d[v] < 0.0) in[v] = true;
    for (int v = 0; v < gu.n; ++v)
        if (in[v]) cert.reach.push_back(v);
    if (within)
        for (const Edge& e : gu.edges)
            if (in[e.tail] && in[e.head]) ++cert.reach_edges;
    return cert;
}

SolveResult restricted_johnson(const Graph& g, const std::vector<int>& B,
                               const std::vector<int>* frozen, double tau) {
    Restriction res = restrict_to(g, B, frozen);
    HopOptions ho;
    ho.hop_edges = &res.hop_edges;
    HopDistanceTable t = hop_sssp(res.g, all_vertices(g.n),
                                  static_cast<int>(res.hop_edges.size()) + 1, ho);
    if (t.has_cycle()) return {{}, std::move(t.cycle)};
    Potential phi = finite_potential(t.dist);
    assert(validate_potential(res.g, phi, std::max(tau, kTol)));
    (void)tau;
    return {std::move(phi), {}};
}

BetweennessResult betweenness_reduce(const Graph& g, int b, int h,
                                     const Neutralizer& neutralizer,
                                     const BetweennessConfig& cfg,
                                     const std::vector<int>* frozen) {
    const int n = g.n;
    std::vector<int> frozen_ids = frozen ? *frozen : negative_edge_ids(g);
    std::vector<bool> is_frozen(g.m(), false);
    for (int e : frozen_ids) is_frozen[e] = true;
    std::vector<int> negs = sorted_unique_tails(g, frozen_ids);
    if (negs.empty()) return {Potential(n, 0.0), {}};

    // Hop-distance tables towards (forward) and from (backward, via the
    // transpose) every vertex; transposition keeps edge ids stable.
    std::vector<std::vector<double>> fwd, bwd;
    HopOptions ho;
    ho.hop_edges = &frozen_ids;
    ho.rounds = &fwd;
    HopDistanceTable tf = hop_sssp(g, all_vertices(n), h, ho);
    if (tf.has_cycle()) return {{}, std::move(tf.cycle)};
    Graph gt = transpose(g);
    HopOptions hob;
    hob.hop_edges = &frozen_ids;
    hob.rounds = &bwd;
    HopDistanceTable tb = hop_sssp(gt, all_vertices(n), h, hob);
    if (tb.has_cycle()) {
        std::reverse(tb.cycle.begin(), tb.cycle.end());
        return {{}, std::move(tb.cycle)};
    }

    std::mt19937_64 rng(cfg.seed ^ 0x5bf0'3635'dcf6'e1f7ULL);
    long long want = static_cast<long long>(
        std::ceil(cfg.cb * b * std::log(std::max(2, n))));
    int cnt = static_cast<int>(std::min<long long>(
        static_cast<long long>(negs.size()), std::max<long long>(1, want)));
    std::vector<int> X = sample_prefix(negs, cnt, rng);

    // (2h+1)-layer auxiliary graph over layers -h..h.
    auto vid = [&](int v, int layer) { return (layer + h) * n + v; };
    Graph H;
    H.n = (2 * h + 1) * n;
    for (int layer = -h; layer <= h; ++layer)
        for (int e = 0; e < g.m(); ++e) {
            if (is_frozen[e]) continue;
            const Edge& ed = g.edges[e];
            H.add_edge(vid(ed.tail, layer), vid(ed.head, layer), ed.len);
        }
    for (int layer = -h; layer < h; ++layer) {
        for (int e : frozen_ids) {
            const Edge& ed = g.edges[e];
            H.add_edge(vid(ed.tail, layer), vid(ed.head, layer + 1), ed.len);
        }
        for (int v = 0; v < n; ++v)
            H.add_edge(vid(v, layer), vid(v, layer + 1), 0.0);
    }
    std::vector<bool> is_reset;
    std::vector<int> reset_ids;
    for (int x : X) {
        reset_ids.push_back(H.m());
        H.add_edge(vid(x, h), vid(x, -h), 0.0);
    }
    H.finalize();
    counters().aux_edges += H.m();

    Potential phi(H.n);
    for (int layer = -h; layer <= h; ++layer)
        for (int v = 0; v < n; ++v)
            phi[vid(v, layer)] = layer >= 0 ? fwd[layer][v] : -bwd[-layer][v];

    // The residual negative arcs are exactly the reset arcs: a sampled
    // vertex still carries a negative out-edge, so its round trip through
    // the layers is negative.
    Graph Hw = reweight(H, phi);
    is_reset.assign(H.m(), false);
    for (int e : reset_ids) is_reset[e] = true;
    for (int e = 0; e < H.m(); ++e) {
        assert(is_reset[e] || Hw.edges[e].len >= -kTol);
        assert(!is_reset[e] || Hw.edges[e].len <= kTol);
    }

    SolveResult sub = neutralizer(Hw);
    if (sub.has_cycle()) {
        std::vector<int> orig(H.n);
        for (int v = 0; v < H.n; ++v) orig[v] = v % n;
        return {{}, map_cycle(sub.cycle, orig)};
    }

    BetweennessResult out;
    out.phi.resize(n);
    for (int v = 0; v < n; ++v) out.phi[v] = phi[vid(v, 0)] + sub.phi[vid(v, 0)];
    assert(validate_potential(g, out.phi, kTol));
    return out;
}

ExtractOutcome extract(const Graph& g, int h, int h0, ExtractMode mode,
                       const Neutralizer& neutralizer, const ExtractConfig& cfg,
                       const std::vector<int>* frozen) {
    const int n = g.n;
    std::vector<int> frozen_ids = frozen ? *frozen : negative_edge_ids(g);
    const long long k = static_cast<long long>(frozen_ids.size());
    std::vector<int> negs = sorted_unique_tails(g, frozen_ids);

    ExtractOutcome out;
    out.phi.assign(n, 0.0);
    if (negs.empty()) {
        out.kind = ExtractOutcome::Kind::neutralized;
        return out;
    }

    std::mt19937_64 rng(cfg.seed ^ 0x94d0'49bb'1331'11ebULL);
    const int b = cfg.b > 0 ? cfg.b : h;

    // Tiny hop sets are cheaper to neutralize outright.
    if (static_cast<int>(negs.size()) <= 2) {
        SolveResult r = restricted_johnson(g, negs, &frozen_ids, cfg.tau);
        if (r.has_cycle()) {
            out.kind = ExtractOutcome::Kind::cycle;
            out.cycle = std::move(r.cycle);
        } else {
            out.kind = ExtractOutcome::Kind::neutralized;
            out.phi = std::move(r.phi);
            out.neutralized_count = static_cast<int>(negs.size());
        }
        return out;
    }

    // Betweenness reduction first, so that small-reach candidates exist. At
    // small scales (h below ln n) the downstream sparsifier degenerates and
    // the reduction's auxiliary graph is not worth its size.
    bool want_bet = cfg.betweenness == ExtractConfig::Betweenness::on ||
                    (cfg.betweenness == ExtractConfig::Betweenness::automatic &&
                     h >= std::log(std::max(2, n)));
    bool used_bet = false;
    Graph g2 = g;
    if (want_bet) {
        BetweennessConfig bc;
        bc.cb = cfg.cb;
        bc.seed = rng();
        int bhop = mode == ExtractMode::graded ? h0 : h;
        BetweennessResult br = betweenness_reduce(g, b, bhop, neutralizer, bc, &frozen_ids);
        if (br.has_cycle()) {
            out.kind = ExtractOutcome::Kind::cycle;
            out.cycle = std::move(br.cycle);
            return out;
        }
        out.phi = br.phi;
        g2 = reweight(g, br.phi);
        used_bet = true;
    }

    // Candidates in order of individual h-hop negative reach, smallest first.
    // Reaches beyond the qualifying size are all equally useless, so they are
    // computed only up to that cap.
    const long long reach_cap =
        mode == ExtractMode::single
            ? static_cast<long long>(n) / b
            : static_cast<long long>(n);  // graded: largest eta bound is n
    std::vector<std::pair<long long, int>> order;
    order.reserve(negs.size());
    for (int u : negs) {
        ReachCertificate c = negative_reach(g2, {u}, h, &frozen_ids, reach_cap);
        order.push_back({static_cast<long long>(c.reach.size()), u});
    }
    std::sort(order.begin(), order.end());

    const long long target = static_cast<long long>(
        std::ceil(cfg.cu * std::sqrt(static_cast<double>(k) * h0)));

    std::vector<int> etas;
    if (mode == ExtractMode::single) {
        etas = {h};
    } else {
        for (long long e = h0; e < h; e *= 2) etas.push_back(static_cast<int>(e));
        etas.push_back(h);
    }
    auto fits = [&](const std::vector<int>& cand,
                    std::vector<ReachCertificate>& certs) {
        certs.clear();
        for (int eta : etas) {
            long long eta_cap = mode == ExtractMode::single
                                    ? static_cast<long long>(n) / b
                                    : static_cast<long long>(n) * eta / h;
            ReachCertificate c = negative_reach(g2, cand, eta, &frozen_ids, eta_cap);
            long long size = static_cast<long long>(c.reach.size());
            bool over = mode == ExtractMode::single
                            ? size * b > static_cast<long long>(n)
                            : size * h > static_cast<long long>(n) * eta;
            if (over) return false;
            certs.push_back(std::move(c));
        }
        return true;
    };

    std::vector<int> U;
    std::vector<ReachCertificate> certs;
    for (const auto& [sz, u] : order) {
        if (static_cast<long long>(U.size()) >= target) break;
        std::vector<int> cand = U;
        cand.insert(std::lower_bound(cand.begin(), cand.end(), u), u);
        std::vector<ReachCertificate> c2;
        if (!fits(cand, c2)) break;
        U = std::move(cand);
        certs = std::move(c2);
    }

    // Qualifying prefix of at least half the target counts as success.
    if (!U.empty() && 2 * static_cast<long long>(U.size()) >= target) {
        out.kind = ExtractOutcome::Kind::remote;
        out.U = std::move(U);
        out.certificates = std::move(certs);
        return out;
    }
    (void)used_bet;
    throw ExtractionFailed();
}

}  // namespace negsp
