#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "negsp/base.hpp"
#include "negsp/graph.hpp"
#include "negsp/sparsify.hpp"

namespace negsp {

struct ReachCertificate {
    std::vector<int> U;
    int h = 0;
    std::vector<int> reach;  // sorted; includes U itself
    long long reach_edges = 0;
    // Set when a size cap aborted the computation early; reach is then a
    // subset of the true reach with more than cap vertices.
    bool truncated = false;
};

struct ExtractionFailed : std::runtime_error {
    ExtractionFailed() : std::runtime_error("no qualifying remote set found") {}
};

// Exact h-hop negative reach of U, computed by a pruned hop DP over G_U.
// frozen defaults to the graph's current negative edges. A nonnegative cap
// lets the computation stop once the reach provably exceeds cap vertices;
// the result is then marked truncated.
ReachCertificate negative_reach(const Graph& g, const std::vector<int>& U, int h,
                                const std::vector<int>* frozen = nullptr,
                                long long cap = -1);

// Neutralizes an arbitrary instance; used for recursive re-entry.
using Neutralizer = std::function<SolveResult(const Graph&)>;

struct BetweennessConfig {
    double cb = 4.0;
    std::uint64_t seed = 0;
};

struct BetweennessResult {
    Potential phi;
    std::vector<int> cycle;
    bool has_cycle() const { return !cycle.empty(); }
};

// Betweenness reduction via the (2h+1)-layer auxiliary graph: afterwards at
// most n/b vertices lie h-hop negatively between any pair (w.h.p.).
BetweennessResult betweenness_reduce(const Graph& g, int b, int h,
                                     const Neutralizer& neutralizer,
                                     const BetweennessConfig& cfg = {},
                                     const std::vector<int>* frozen = nullptr);

enum class ExtractMode { single, graded };

struct ExtractConfig {
    double cu = 1.0;
    double cb = 4.0;
    // Remoteness width: single-mode certificates require |reach| * b <= n and
    // the betweenness reduction targets n/b survivors. 0 means b = h.
    int b = 0;
    std::uint64_t seed = 0;
    double tau = 0.0;
    // automatic: run betweenness reduction only when the downstream
    // sparsifier is non-degenerate (h >= ln n).
    enum class Betweenness { automatic, on, off } betweenness = Betweenness::automatic;
};

struct ExtractOutcome {
    enum class Kind { cycle, neutralized, remote };
    Kind kind = Kind::neutralized;
    std::vector<int> cycle;
    Potential phi;
    int neutralized_count = 0;
    std::vector<int> U;
    std::vector<ReachCertificate> certificates;
};

// Three-way remote-set extraction: a negative cycle, a neutralized batch, or
// a remote set with verified reach certificates (at hop budget h for
// mode=single; at h0, 2h0, 4h0, ..., h for mode=graded).
ExtractOutcome extract(const Graph& g, int h, int h0, ExtractMode mode,
                       const Neutralizer& neutralizer, const ExtractConfig& cfg = {},
                       const std::vector<int>* frozen = nullptr);

// Johnson potentials restricted to G_B (B a batch of negative vertices).
SolveResult restricted_johnson(const Graph& g, const std::vector<int>& B,
                               const std::vector<int>* frozen = nullptr,
                               double tau = 0.0);

}  // namespace negsp
