#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "negsp/base.hpp"
#include "negsp/graph.hpp"

namespace negsp {

struct ReachTooLarge : std::runtime_error {
    ReachTooLarge() : std::runtime_error("h-hop negative reach exceeds n/r") {}
};

struct CycleFound : std::runtime_error {
    std::vector<int> cycle;  // closed walk over the input graph's vertices
    explicit CycleFound(std::vector<int> c)
        : std::runtime_error("negative cycle found"), cycle(std::move(c)) {}
};

struct RetryBudgetExhausted : std::runtime_error {
    RetryBudgetExhausted() : std::runtime_error("randomized retry budget exhausted") {}
};

struct LayerVertex {
    int layer;
    int orig;
};

struct SparsifiedGraph {
    Graph H;
    Potential phi;
    std::vector<int> pi0, pi1;  // V_G -> V_H (layers 0 and h)
    std::vector<int> U0;        // sampled reset vertices
    std::vector<int> reset_edges;  // edge ids in H
    std::vector<LayerVertex> provenance;
    int h = 1;
    bool degenerate = false;  // H is just G_U
};

struct SparsifyConfig {
    double sample_const = 4.0;
    std::uint64_t seed = 0;
};

// Layered negative-edge sparsifier over G_U. U's h-hop negative reach must
// have at most n/r vertices (w.r.t. the frozen hop set). frozen defaults to
// the graph's current negative edges.
SparsifiedGraph build_sparsifier(const Graph& g, const std::vector<int>& U, int h,
                                 int r, const SparsifyConfig& cfg = {},
                                 const std::vector<int>* frozen = nullptr);

// Johnson potentials for G_U routed through the neutralized sparsifier:
// psi must neutralize reweight(S.H, S.phi). Returns phiC with
// phiC(v) = d_{G_U}(V, v) whenever sampling succeeded (verified by callers).
Potential johnson_through(const SparsifiedGraph& s, const Potential& psi);

enum class Variant { classic, improved };

int choose_h_recursive(long long k, Variant variant);

struct SolveConfig {
    Variant variant = Variant::classic;
    int base_k = 8;
    int retries = 3;
    double sample_const = 4.0;
    double cu = 1.0;
    double cb = 4.0;
    std::uint64_t seed = 1;
    double tau = 0.0;
};

struct SolveResult {
    Potential phi;
    std::vector<int> cycle;
    bool has_cycle() const { return !cycle.empty(); }
};

// Recursive solver of the layered-sparsification kind: extract a remote set,
// sparsify, recurse, pull Johnson potentials back; repeat until neutral.
SolveResult solve_recursive(const Graph& g, const SolveConfig& cfg);

}  // namespace negsp
