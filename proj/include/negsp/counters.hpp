#pragma once

#include <cstdint>

namespace negsp {

// Machine-independent cost counters, accumulated by every algorithm.
// hop_relaxations counts relaxations of edges treated as hops: negative-edge
// relaxations in the hop DP rounds, and every per-round edge relaxation in
// Bellman-Ford (which treats all edges uniformly). Dijkstra scan work is
// reported separately through dijkstra_pops.
struct Counters {
    std::int64_t hop_relaxations = 0;
    std::int64_t dijkstra_pops = 0;
    std::int64_t aux_edges = 0;
    std::int64_t retries = 0;
    int recursion_depth = 0;
    int max_recursion_depth = 0;

    void reset() { *this = Counters{}; }
};

Counters& counters();

struct RecursionScope {
    RecursionScope() {
        Counters& c = counters();
        ++c.recursion_depth;
        if (c.recursion_depth > c.max_recursion_depth)
            c.max_recursion_depth = c.recursion_depth;
    }
    ~RecursionScope() { --counters().recursion_depth; }
};

}  // namespace negsp
