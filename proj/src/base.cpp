#include "negsp/base.hpp"

#include <algorithm>
#include <cassert>
#include <queue>
#include <unordered_map>

#include "negsp/counters.hpp"

namespace negsp {

Counters& counters() {
    thread_local Counters c;
    return c;
}

namespace {

using HeapItem = std::pair<double, int>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

}  // namespace

DistanceResult dijkstra(const Graph& g, const std::vector<int>& sources) {
    DistanceResult r;
    r.dist.assign(g.n, kInf);
    r.parent.assign(g.n, -1);
    r.parent_edge.assign(g.n, -1);
    MinHeap heap;
    for (int s : sources) {
        r.dist[s] = 0.0;
        heap.push({0.0, s});
    }
    Counters& c = counters();
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        ++c.dijkstra_pops;
        if (d > r.dist[u]) continue;
        for (int eid : g.out[u]) {
            const Edge& e = g.edges[eid];
            if (e.len < 0) throw NegativeEdgeEncountered();
            double nd = d + e.len;
            if (nd < r.dist[e.head]) {
                r.dist[e.head] = nd;
                r.parent[e.head] = u;
                r.parent_edge[e.head] = eid;
                heap.push({nd, e.head});
            }
        }
    }
    return r;
}

namespace {

// Predecessor record for one vertex in one round of the hop DP.
struct Pred {
    int pv = -1;
    int pe = -1;
    // 0 unset, 1 source, 2 carry from previous round,
    // 3 hop edge from previous round, 4 nonnegative edge within round
    signed char type = 0;
};

// Dijkstra pass over the nonnegative (non-hop) edges, starting from the
// given labels. Updates labels and per-vertex predecessors in place.
void relax_pass(const Graph& g, const std::vector<bool>& is_hop,
                std::vector<double>& d, std::vector<Pred>* pred) {
    MinHeap heap;
    for (int v = 0; v < g.n; ++v)
        if (d[v] < kInf) heap.push({d[v], v});
    Counters& c = counters();
    while (!heap.empty()) {
        auto [dd, u] = heap.top();
        heap.pop();
        ++c.dijkstra_pops;
        if (dd > d[u]) continue;
        for (int eid : g.out[u]) {
            if (is_hop[eid]) continue;
            const Edge& e = g.edges[eid];
            assert(e.len >= 0);
            double nd = dd + e.len;
            if (nd < d[e.head]) {
                d[e.head] = nd;
                if (pred) (*pred)[e.head] = {u, eid, 4};
                heap.push({nd, e.head});
            }
        }
    }
}

// Walks the per-round predecessor records back from (v, round), returning
// the forward vertex/length step sequence (carry steps skipped).
struct Step {
    int v;
    double len;  // length of the edge arriving at v (0 at the source)
};

std::vector<Step> reconstruct(const Graph& g,
                              const std::vector<std::vector<Pred>>& preds, int v,
                              int round) {
    std::vector<Step> rev;
    int cur = v, r = round;
    while (true) {
        const Pred& p = preds[r][cur];
        assert(p.type != 0);
        if (p.type == 1) {
            rev.push_back({cur, 0.0});
            break;
        }
        if (p.type == 2) {
            --r;
            continue;
        }
        rev.push_back({cur, g.edges[p.pe].len});
        cur = p.pv;
        if (p.type == 3) --r;
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

// The improving walk has more hops than the hop-set size, so stripping
// cycles off it leaves a shorter simple walk; the stripped cycles sum to a
// negative total, hence at least one of them is negative.
std::vector<int> extract_negative_cycle(const std::vector<Step>& walk) {
    std::vector<int> stack_v;
    std::vector<double> stack_len;  // cumulative length at each stack entry
    std::unordered_map<int, int> pos;
    double cum = 0.0;
    for (const Step& st : walk) {
        cum += st.len;
        auto it = pos.find(st.v);
        if (it != pos.end()) {
            int p = it->second;
            if (cum - stack_len[p] < 0) {
                std::vector<int> cyc(stack_v.begin() + p, stack_v.end());
                cyc.push_back(st.v);
                return cyc;
            }
            // Zero-or-positive cycle: drop it and keep scanning.
            for (int q = static_cast<int>(stack_v.size()) - 1; q > p; --q)
                pos.erase(stack_v[q]);
            stack_v.resize(p + 1);
            stack_len.resize(p + 1);
            cum = stack_len[p];
        } else {
            pos[st.v] = static_cast<int>(stack_v.size());
            stack_v.push_back(st.v);
            stack_len.push_back(cum);
        }
    }
    assert(false && "no negative cycle in improving walk");
    return {};
}

}  // namespace

HopDistanceTable hop_sssp(const Graph& g, const std::vector<int>& sources, int h,
                          const HopOptions& opts) {
    std::vector<bool> is_hop(g.m(), false);
    int k_hops = 0;
    if (opts.hop_edges) {
        for (int eid : *opts.hop_edges) is_hop[eid] = true;
        k_hops = static_cast<int>(opts.hop_edges->size());
    } else {
        for (int e = 0; e < g.m(); ++e)
            if (g.edges[e].len < 0) {
                is_hop[e] = true;
                ++k_hops;
            }
    }
    std::vector<int> hop_list;
    hop_list.reserve(k_hops);
    for (int e = 0; e < g.m(); ++e)
        if (is_hop[e]) hop_list.push_back(e);

    bool trace = h > k_hops;
    std::vector<std::vector<Pred>> preds;

    HopDistanceTable out;
    out.h = h;
    std::vector<double> d(g.n, kInf);
    if (trace) preds.emplace_back(g.n);
    for (int s : sources) {
        d[s] = 0.0;
        if (trace) preds[0][s] = {-1, -1, 1};
    }
    relax_pass(g, is_hop, d, trace ? &preds[0] : nullptr);
    if (opts.rounds) {
        opts.rounds->clear();
        opts.rounds->push_back(d);
    }

    Counters& c = counters();
    for (int i = 1; i <= h; ++i) {
        std::vector<double> nd = d;
        if (trace) {
            preds.emplace_back(g.n);
            for (int v = 0; v < g.n; ++v)
                if (d[v] < kInf) preds[i][v] = {v, -1, 2};
        }
        for (int eid : hop_list) {
            const Edge& e = g.edges[eid];
            ++c.hop_relaxations;
            if (d[e.tail] < kInf && d[e.tail] + e.len < nd[e.head]) {
                nd[e.head] = d[e.tail] + e.len;
                if (trace) preds[i][e.head] = {e.tail, eid, 3};
            }
        }
        relax_pass(g, is_hop, nd, trace ? &preds[i] : nullptr);
        int improved = -1;
        for (int v = 0; v < g.n; ++v)
            if (nd[v] < d[v]) {
                improved = v;
                break;
            }
        if (improved >= 0 && i > k_hops) {
            assert(trace);
            auto walk = reconstruct(g, preds, improved, i);
            out.cycle = extract_negative_cycle(walk);
            assert(walk_length(g, out.cycle) < 0);
            return out;
        }
        d = std::move(nd);
        if (opts.rounds) opts.rounds->push_back(d);
        if (improved < 0 && opts.early_stop) break;
    }
    if (opts.rounds)
        while (static_cast<int>(opts.rounds->size()) <= h) opts.rounds->push_back(d);
    out.dist = std::move(d);
    return out;
}

DistanceResult bellman_ford_oracle(const Graph& g, int source) {
    Counters& c = counters();
    // Global cycle sweep first (super-source view: all labels start at 0),
    // so the verdict covers cycles not reachable from the source.
    {
        std::vector<double> d(g.n, 0.0);
        std::vector<int> par(g.n, -1);
        int improved = -1;
        for (int round = 0; round < g.n; ++round) {
            improved = -1;
            for (const Edge& e : g.edges) {
                ++c.hop_relaxations;
                if (d[e.tail] + e.len < d[e.head]) {
                    d[e.head] = d[e.tail] + e.len;
                    par[e.head] = e.tail;
                    improved = e.head;
                }
            }
            if (improved < 0) break;
        }
        if (improved >= 0) {
            int v = improved;
            for (int i = 0; i < g.n; ++i) v = par[v];
            DistanceResult r;
            std::vector<int> cyc;
            int u = v;
            do {
                cyc.push_back(u);
                u = par[u];
            } while (u != v);
            cyc.push_back(v);
            std::reverse(cyc.begin(), cyc.end());
            r.cycle = std::move(cyc);
            assert(walk_length(g, r.cycle) < 0);
            return r;
        }
    }

    DistanceResult r;
    r.dist.assign(g.n, kInf);
    r.parent.assign(g.n, -1);
    r.parent_edge.assign(g.n, -1);
    r.dist[source] = 0.0;
    for (int round = 0; round < g.n; ++round) {
        bool any = false;
        for (int eid = 0; eid < g.m(); ++eid) {
            const Edge& e = g.edges[eid];
            if (r.dist[e.tail] == kInf) continue;
            ++c.hop_relaxations;
            if (r.dist[e.tail] + e.len < r.dist[e.head]) {
                r.dist[e.head] = r.dist[e.tail] + e.len;
                r.parent[e.head] = e.tail;
                r.parent_edge[e.head] = eid;
                any = true;
            }
        }
        if (!any) break;
    }
    return r;
}

double proper_hop_oracle(const Graph& g, int s, int t, int eta) {
    if (g.k() > 14) throw TooLarge(g.k());

    Graph gp;
    gp.n = g.n;
    for (const Edge& e : g.edges)
        if (e.len >= 0) gp.add_edge(e.tail, e.head, e.len);
    gp.finalize();

    std::vector<int> neg_edges;
    for (int e = 0; e < g.m(); ++e)
        if (g.edges[e].len < 0) neg_edges.push_back(e);
    const int k = g.k();
    const int ne = static_cast<int>(neg_edges.size());

    std::vector<double> ds = dijkstra(gp, {s}).dist;
    if (eta == 0) return ds[t];
    if (eta > k) return kInf;

    // Index of each negative vertex, and d+ rows from each negative head.
    std::vector<int> vidx(g.n, -1);
    for (int i = 0; i < k; ++i) vidx[g.neg_vertices[i]] = i;
    std::vector<std::vector<double>> dhead(ne);
    for (int j = 0; j < ne; ++j)
        dhead[j] = dijkstra(gp, {g.edges[neg_edges[j]].head}).dist;

    // f[S][j]: best proper walk from s using exactly the negative vertices in
    // S, last hop the j-th negative edge, measured up to that edge's head.
    std::vector<std::vector<double>> f(1 << k, std::vector<double>(ne, kInf));
    for (int j = 0; j < ne; ++j) {
        int u = g.edges[neg_edges[j]].tail;
        f[1 << vidx[u]][j] = ds[u] + g.edges[neg_edges[j]].len;
    }
    double best = kInf;
    for (int S = 1; S < (1 << k); ++S) {
        int bits = __builtin_popcount(static_cast<unsigned>(S));
        if (bits > eta) continue;
        for (int j = 0; j < ne; ++j) {
            double fj = f[S][j];
            if (fj == kInf) continue;
            if (bits == eta) {
                best = std::min(best, fj + dhead[j][t]);
                continue;
            }
            for (int j2 = 0; j2 < ne; ++j2) {
                int u2 = g.edges[neg_edges[j2]].tail;
                int b = vidx[u2];
                if (S & (1 << b)) continue;
                double cand = fj + dhead[j][u2] + g.edges[neg_edges[j2]].len;
                if (cand < f[S | (1 << b)][j2]) f[S | (1 << b)][j2] = cand;
            }
        }
    }
    return best;
}

Graph reweight(const Graph& g, const Potential& phi) {
    Graph r;
    r.n = g.n;
    r.edges.reserve(g.edges.size());
    for (const Edge& e : g.edges)
        r.add_edge(e.tail, e.head, e.len + phi[e.tail] - phi[e.head]);
    r.finalize();
    return r;
}

bool validate_potential(const Graph& g, const Potential& phi, double tau) {
    for (const Edge& e : g.edges) {
        if (e.len < 0) continue;
        if (e.len + phi[e.tail] - phi[e.head] < -tau) return false;
    }
    return true;
}

Potential compose(const Potential& a, const Potential& b) {
    Potential r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Potential finite_potential(const std::vector<double>& dist) {
    double mx = 0.0;
    bool any = false;
    for (double d : dist)
        if (d < kInf) {
            mx = any ? std::max(mx, d) : d;
            any = true;
        }
    double sentinel = any ? mx + 1.0 : 0.0;
    Potential r(dist.size());
    for (size_t i = 0; i < dist.size(); ++i) r[i] = dist[i] < kInf ? dist[i] : sentinel;
    return r;
}

NeutralizeResult johnson_neutralize(const Graph& g, double tau) {
    std::vector<int> all(g.n);
    for (int v = 0; v < g.n; ++v) all[v] = v;
    int k_hops = 0;
    for (const Edge& e : g.edges)
        if (e.len < 0) ++k_hops;
    HopDistanceTable t = hop_sssp(g, all, k_hops + 1);
    NeutralizeResult r;
    if (t.has_cycle()) {
        r.cycle = std::move(t.cycle);
        return r;
    }
    r.phi = finite_potential(t.dist);
    assert(validate_potential(g, r.phi, tau));
    return r;
}

void dijkstra_relax(const Graph& g, std::vector<double>& labels) {
    std::vector<bool> no_hops(g.m(), false);
    relax_pass(g, no_hops, labels, nullptr);
}

std::vector<int> negative_edge_ids(const Graph& g) {
    std::vector<int> ids;
    for (int e = 0; e < g.m(); ++e)
        if (g.edges[e].len < 0) ids.push_back(e);
    return ids;
}

Restriction restrict_to(const Graph& g, const std::vector<int>& U,
                        const std::vector<int>* frozen) {
    std::vector<int> frozen_ids = frozen ? *frozen : negative_edge_ids(g);
    std::vector<bool> is_frozen(g.m(), false);
    for (int e : frozen_ids) is_frozen[e] = true;
    std::vector<bool> in_u(g.n, false);
    for (int u : U) in_u[u] = true;

    Restriction r;
    r.g.n = g.n;
    for (int e = 0; e < g.m(); ++e) {
        const Edge& ed = g.edges[e];
        if (is_frozen[e] && !in_u[ed.tail] && ed.len < 0) continue;
        assert(is_frozen[e] || ed.len >= 0);
        if (is_frozen[e] && in_u[ed.tail]) r.hop_edges.push_back(r.g.m());
        r.g.add_edge(ed.tail, ed.head, ed.len);
    }
    r.g.finalize();
    return r;
}

std::vector<int> map_cycle(const std::vector<int>& cycle,
                           const std::vector<int>& orig) {
    std::vector<int> out;
    for (int v : cycle) {
        int o = orig[v];
        if (out.empty() || out.back() != o) out.push_back(o);
    }
    if (out.front() != out.back()) out.push_back(out.front());
    return out;
}

double walk_length(const Graph& g, const std::vector<int>& walk) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < walk.size(); ++i) {
        double best = kInf;
        for (int eid : g.out[walk[i]]) {
            const Edge& e = g.edges[eid];
            if (e.head == walk[i + 1]) best = std::min(best, e.len);
        }
        total += best;
    }
    return total;
}

}  // namespace negsp
