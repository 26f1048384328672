#include "negsp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace negsp {

double Graph::mu() const {
    return m() + n * (n > 0 ? std::log(static_cast<double>(n)) : 0.0);
}

void Graph::add_edge(int u, int v, double len) {
    edges.push_back({u, v, len});
}

void Graph::finalize() {
    out.assign(n, {});
    neg_vertices.clear();
    for (int e = 0; e < m(); ++e) {
        out[edges[e].tail].push_back(e);
        if (edges[e].len < 0) neg_vertices.push_back(edges[e].tail);
    }
    std::sort(neg_vertices.begin(), neg_vertices.end());
    neg_vertices.erase(std::unique(neg_vertices.begin(), neg_vertices.end()),
                       neg_vertices.end());
}

bool Graph::is_neg_vertex(int v) const {
    return std::binary_search(neg_vertices.begin(), neg_vertices.end(), v);
}

namespace {

// Splits out-edges (or, on the transposed view, in-edges) of high-degree
// vertices into binary trees of zero-length edges. Everything ends with
// degree <= 3, which is within ceil(2m/n)+2 whenever m >= 1.
constexpr int kDegreeCap = 3;

}  // namespace

std::pair<Graph, VertexMap> preprocess(const Graph& g) {
    if (g.n == 0) throw EmptyGraph();
    for (const Edge& e : g.edges) {
        if (e.len < 0 && e.tail == e.head) throw NegativeSelfLoop(e.tail);
    }

    // Drop nonnegative self-loops; keep min-length edge per (tail,head) pair
    // among nonnegative parallels; keep every negative edge.
    std::map<std::pair<int, int>, double> nonneg;
    std::vector<Edge> negs;
    for (const Edge& e : g.edges) {
        if (e.len < 0) {
            negs.push_back(e);
        } else if (e.tail != e.head) {
            auto key = std::make_pair(e.tail, e.head);
            auto it = nonneg.find(key);
            if (it == nonneg.end() || e.len < it->second) nonneg[key] = e.len;
        }
    }

    Graph c;
    c.n = g.n;
    for (const auto& [key, len] : nonneg) c.add_edge(key.first, key.second, len);

    // Isolate each negative edge behind a fresh tail and head.
    for (const Edge& e : negs) {
        int u2 = c.n++;
        int v2 = c.n++;
        c.add_edge(e.tail, u2, 0.0);
        c.add_edge(u2, v2, e.len);
        c.add_edge(v2, e.head, 0.0);
    }

    // Degree reduction. Negative edges stay untouched (their endpoints have
    // degree 1 by construction); only nonnegative edges get re-routed.
    for (int pass = 0; pass < 2; ++pass) {
        bool out_pass = (pass == 0);
        std::vector<std::vector<int>> adj(c.n);
        for (int e = 0; e < c.m(); ++e) {
            if (c.edges[e].len < 0) continue;
            adj[out_pass ? c.edges[e].tail : c.edges[e].head].push_back(e);
        }
        for (int v = 0; v < static_cast<int>(adj.size()); ++v) {
            if (static_cast<int>(adj[v].size()) <= kDegreeCap) continue;
            // Binary tree over the edge slots; v keeps at most two children.
            std::vector<int> frontier = adj[v];
            while (static_cast<int>(frontier.size()) > 2) {
                std::vector<int> next;
                for (size_t i = 0; i + 1 < frontier.size(); i += 2) {
                    int a = c.n++;
                    adj.emplace_back();
                    if (out_pass) {
                        c.edges[frontier[i]].tail = a;
                        c.edges[frontier[i + 1]].tail = a;
                        c.add_edge(v, a, 0.0);  // tail rewired below
                    } else {
                        c.edges[frontier[i]].head = a;
                        c.edges[frontier[i + 1]].head = a;
                        c.add_edge(a, v, 0.0);  // head rewired below
                    }
                    next.push_back(c.m() - 1);
                }
                if (frontier.size() % 2 == 1) next.push_back(frontier.back());
                frontier = next;
            }
        }
    }

    c.finalize();

    VertexMap vm;
    vm.forward.resize(g.n);
    vm.backward.assign(c.n, -1);
    for (int v = 0; v < g.n; ++v) {
        vm.forward[v] = v;
        vm.backward[v] = v;
    }
    return {std::move(c), std::move(vm)};
}

Graph load_dimacs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    Graph g;
    bool have_header = false;
    long long want_m = 0;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty() || line[0] == 'c') continue;
        std::istringstream ss(line);
        char tag;
        ss >> tag;
        if (tag == 'p') {
            std::string kind;
            long long n, m;
            if (!(ss >> kind >> n >> m) || kind != "sp")
                throw ParseError(ln, "bad problem line");
            if (have_header) throw InconsistentHeader("duplicate problem line");
            have_header = true;
            g.n = static_cast<int>(n);
            want_m = m;
        } else if (tag == 'a') {
            if (!have_header) throw ParseError(ln, "arc before problem line");
            long long u, v;
            double len;
            if (!(ss >> u >> v >> len)) throw ParseError(ln, "bad arc line");
            if (u < 1 || u > g.n || v < 1 || v > g.n)
                throw ParseError(ln, "vertex id out of range");
            g.add_edge(static_cast<int>(u - 1), static_cast<int>(v - 1), len);
        } else {
            throw ParseError(ln, std::string("unknown line tag '") + tag + "'");
        }
    }
    if (!have_header) throw InconsistentHeader("missing problem line");
    if (g.m() != want_m)
        throw InconsistentHeader("header claims " + std::to_string(want_m) +
                                 " arcs, file has " + std::to_string(g.m()));
    g.finalize();
    return g;
}

void save_dimacs(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    out << "p sp " << g.n << ' ' << g.m() << '\n';
    char buf[64];
    for (const Edge& e : g.edges) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.len);
        out << "a " << e.tail + 1 << ' ' << e.head + 1 << ' ' << buf << '\n';
    }
}

Graph generate(const GenSpec& spec) {
    if (spec.neg_count > spec.m) throw InfeasibleSpec("negative count > m");
    if (spec.n <= 0 && spec.m > 0) throw InfeasibleSpec("edges without vertices");
    if (spec.m > 0 && spec.n < 2) throw InfeasibleSpec("need n >= 2 for loop-free edges");
    if (spec.wmin > spec.wmax || spec.nwmin > spec.nwmax || spec.wmin < 0 ||
        spec.nwmax >= 0)
        throw InfeasibleSpec("bad weight ranges");
    if (spec.plant_cycle) {
        if (spec.n < 3 || spec.m < 3 || spec.neg_count < 1)
            throw InfeasibleSpec("planted cycle needs n,m >= 3 and a negative edge");
        if (2 * spec.wmin + spec.nwmin >= 0)
            throw InfeasibleSpec("weight ranges cannot yield a negative cycle");
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> vert(0, spec.n - 1);
    std::uniform_int_distribution<int> wpos(spec.wmin, spec.wmax);
    std::uniform_int_distribution<int> wneg(spec.nwmin, spec.nwmax);

    Graph g;
    g.n = spec.n;
    int neg_left = spec.neg_count;
    int m_left = spec.m;

    if (spec.plant_cycle) {
        // Three distinct vertices, two cheap nonnegative arcs, one negative
        // arc closing the loop with a guaranteed negative total.
        int a = vert(rng), b, c;
        do { b = vert(rng); } while (b == a);
        do { c = vert(rng); } while (c == a || c == b);
        g.add_edge(a, b, spec.wmin);
        g.add_edge(b, c, spec.wmin);
        g.add_edge(c, a, spec.nwmin);
        m_left -= 3;
        neg_left -= 1;
    }

    for (int i = 0; i < m_left; ++i) {
        int u = vert(rng), v;
        do { v = vert(rng); } while (v == u);
        double len = (i < neg_left) ? wneg(rng) : wpos(rng);
        g.add_edge(u, v, len);
    }
    g.finalize();
    return g;
}

Graph transpose(const Graph& g) {
    Graph t;
    t.n = g.n;
    t.edges.reserve(g.edges.size());
    for (const Edge& e : g.edges) t.add_edge(e.head, e.tail, e.len);
    t.finalize();
    return t;
}

}  // namespace negsp
