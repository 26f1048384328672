#pragma once

#include <vector>

#include "negsp/base.hpp"
#include "negsp/graph.hpp"

namespace negsp::testing {

struct E {
    int u, v;
    double w;
};

inline Graph make_graph(int n, std::initializer_list<E> es) {
    Graph g;
    g.n = n;
    for (const E& e : es) g.add_edge(e.u, e.v, e.w);
    g.finalize();
    return g;
}

// G1 from the worked examples: s->a (4), a->t (-2).
inline Graph g1() { return make_graph(3, {{0, 1, 4}, {1, 2, -2}}); }

inline std::vector<int> all_vertices(const Graph& g) {
    std::vector<int> v(g.n);
    for (int i = 0; i < g.n; ++i) v[i] = i;
    return v;
}

}  // namespace negsp::testing
