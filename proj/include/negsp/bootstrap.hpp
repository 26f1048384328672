#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "negsp/base.hpp"
#include "negsp/extract.hpp"
#include "negsp/graph.hpp"
#include "negsp/sparsify.hpp"

namespace negsp {

struct MissingEstimates : std::runtime_error {
    int level;
    explicit MissingEstimates(int j)
        : std::runtime_error("missing distance estimates at level " + std::to_string(j)),
          level(j) {}
};

struct NotNeutralized : std::runtime_error {
    NotNeutralized() : std::runtime_error("potential does not neutralize the subgraph") {}
};

// Sparse distance estimates at one level: sampled midpoints X and the two
// delta tables, rows/columns indexed by the stored U, X and heads lists.
struct SparseDistanceEstimates {
    int level = 0;
    std::vector<int> U;      // negative vertices, sorted
    std::vector<int> X;      // sampled midpoints, sorted subset of U
    std::vector<int> heads;  // heads of U's negative edges, sorted
    std::vector<std::vector<double>> delta_out;  // [u idx][x idx]
    std::vector<std::vector<double>> delta_in;   // [x idx][head idx]
};

// Which gadget an auxiliary vertex belongs to.
struct GadgetVertex {
    // 0 base, 1 subgraph-copy gadget, 2 shortcut midpoints, 3 layered gadget
    int kind = 0;
    int level = 0;  // gadget level j, or the layer index for kind 3
    int orig = 0;   // original vertex id, or midpoint id for kind 2
};

struct HopReducer {
    Graph H;
    Potential phi;
    int factor = 1;          // hop-reduction factor
    std::vector<int> embed;  // original vertex -> base-layer id
    int level = 0;
    std::vector<GadgetVertex> gadgets;  // per H vertex
    std::vector<int> reset_edges;       // edge ids in H
};

struct BootstrapConfig {
    int h = 4;
    int h0 = 2;  // power of two
    double sample_const = 4.0;
    int retries = 3;
    std::uint64_t seed = 0;

    int i0() const;  // log2 h0
    int i1() const { return 2 * i0(); }
    int L() const;   // ceil(log2 h) + 1
    bool valid() const;  // h >= h0 >= 2, h0 a power of two, i1 < L
};

// One level of the reach family: V = the 2^level-hop negative reach of U and
// the induced subgraph over the common vertex id space (level L covers all
// of g).
struct LevelGraph {
    int level = 0;
    std::vector<int> V;  // sorted
    Graph g;
};

// Subgraphs G_{i0}, ..., G_L of g = G_U, indexed by level - i0.
std::vector<LevelGraph> reach_family(const Graph& g, const std::vector<int>& U,
                                     const BootstrapConfig& cfg);

// One bootstrapping step: a 2^{i-2}-hop reducer for G_i built from the base
// copy of G_i+, one shortcut gadget per level j in {i0+1..i-1} (using the
// level-j estimates), and the layered gadget over G_{i0}.
HopReducer build_reducer(int i, const std::vector<LevelGraph>& family,
                         const std::vector<SparseDistanceEstimates>& estimates,
                         const std::vector<int>& U, const BootstrapConfig& cfg);

// Level-i estimates from a 2^{i-2}-hop reducer: 2-hop runs to and from each
// sampled midpoint in the reducer, floored by hop distances in G_i.
SparseDistanceEstimates estimates_from_reducer(const HopReducer& R,
                                               const LevelGraph& Gi,
                                               const std::vector<int>& U,
                                               const BootstrapConfig& cfg,
                                               std::uint64_t seed);

// Seed estimates from a potential that neutralizes G_i: two-copy reducer with
// entry arcs -phiC(v) and exit arcs +phiC(v) (translated nonnegative), then
// estimates_from_reducer on it.
SparseDistanceEstimates seed_estimates_via_neutralized_subgraph(
    const LevelGraph& Gi, const Potential& phiC, const std::vector<int>& U,
    const BootstrapConfig& cfg, std::uint64_t seed);

// Alternates build_reducer and estimates_from_reducer from level i1+1 up to
// L and returns the final (h/2)-hop reducer for g = G_U. Seed estimates for
// levels i0+1..i1 may be passed in; missing ones are derived by neutralizing
// G_{i1} with the neutralizer and seeding through the two-copy reducer.
HopReducer bootstrap_full(const Graph& g, const std::vector<int>& U,
                          const BootstrapConfig& cfg,
                          std::vector<SparseDistanceEstimates> seed_estimates,
                          const Neutralizer& neutralizer);

// Hybrid auxiliary graph for the twice-recursive solver: the layered
// sparsifier over U extended with a shortcut midpoint layer whose arc lengths
// come from a recursive neutralization of the h-hop reach subgraph. The
// neutralizer is invoked on that subgraph.
SparsifiedGraph build_twice_aux(const Graph& g, const std::vector<int>& U, int h,
                                int b, const Neutralizer& neutralizer,
                                const SparsifyConfig& cfg = {});

// Bootstrapped dense solver.
SolveResult solve_dense(const Graph& g, const SolveConfig& cfg);

// Sparse wrapper: pre-sparsify at the density-dependent h, then solve_dense.
SolveResult solve_sparse(const Graph& g, const SolveConfig& cfg);

// Twice-recursive solver with its own sparse wrapper (gamma threshold).
SolveResult solve_twice_recursive(const Graph& g, const SolveConfig& cfg);

// Dispatch used by the CLI's --algo auto.
SolveResult solve_auto(const Graph& g, const SolveConfig& cfg);

}  // namespace negsp
