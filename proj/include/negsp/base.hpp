#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "negsp/graph.hpp"

namespace negsp {

using Potential = std::vector<double>;

struct DistanceResult {
    std::vector<double> dist;
    std::vector<int> parent;        // predecessor vertex, -1 at roots
    std::vector<int> parent_edge;   // edge id into each vertex, -1 at roots
    std::vector<int> cycle;         // nonempty: negative cycle, first == last
    bool has_cycle() const { return !cycle.empty(); }
};

struct HopDistanceTable {
    int h = 0;
    std::vector<double> dist;    // d^h(S, v)
    std::vector<int> cycle;      // nonempty: negative cycle, first == last
    bool has_cycle() const { return !cycle.empty(); }
};

struct NegativeEdgeEncountered : std::runtime_error {
    NegativeEdgeEncountered() : std::runtime_error("negative edge in dijkstra") {}
};

struct TooLarge : std::runtime_error {
    explicit TooLarge(int k)
        : std::runtime_error("proper hop oracle guard: k = " + std::to_string(k)) {}
};

// Multi-source Dijkstra; all edge lengths must be nonnegative.
DistanceResult dijkstra(const Graph& g, const std::vector<int>& sources);

struct HopOptions {
    // Edge ids counted as hops. When unset, the graph's negative edges.
    // Every edge outside the hop set must be nonnegative.
    const std::vector<int>* hop_edges = nullptr;
    // Stop as soon as a round makes no improvement.
    bool early_stop = true;
    // When set, receives d^0..d^h (padded with the fixed point after an
    // early stop).
    std::vector<std::vector<double>>* rounds = nullptr;
};

// Hop-distance dynamic program: dist[v] = min length over walks from the
// sources using at most h hop edges. One Dijkstra pass per hop. If a round
// past the hop-set size still improves, a negative cycle is extracted.
HopDistanceTable hop_sssp(const Graph& g, const std::vector<int>& sources, int h,
                          const HopOptions& opts = {});

// Ground-truth oracle, O(mn).
DistanceResult bellman_ford_oracle(const Graph& g, int source);

// Proper eta-hop distance: exactly eta hops, all negative vertices distinct.
// Exponential in k; guarded at k <= 14.
double proper_hop_oracle(const Graph& g, int s, int t, int eta);

Graph reweight(const Graph& g, const Potential& phi);
bool validate_potential(const Graph& g, const Potential& phi, double tau = 0.0);
Potential compose(const Potential& a, const Potential& b);

// Turns a distance vector into a finite potential: +inf entries become
// 1 + max finite distance.
Potential finite_potential(const std::vector<double>& dist);

struct NeutralizeResult {
    Potential phi;               // valid iff cycle is empty
    std::vector<int> cycle;
    bool has_cycle() const { return !cycle.empty(); }
};

// phi(v) = d^k(V, v); neutralizes every edge or finds a negative cycle.
NeutralizeResult johnson_neutralize(const Graph& g, double tau = 0.0);

double walk_length(const Graph& g, const std::vector<int>& walk);

// Dijkstra over a nonnegative graph starting from arbitrary initial labels
// (kInf = not a source). Labels are updated in place.
void dijkstra_relax(const Graph& g, std::vector<double>& labels);

// Edge ids of the current negative edges, in edge order.
std::vector<int> negative_edge_ids(const Graph& g);

// G_U: drops every still-negative frozen edge whose tail is outside U; a
// frozen edge that has been neutralized in the meantime stays as an ordinary
// nonnegative edge. hop_edges holds the new ids of U's frozen edges. frozen
// defaults to the graph's current negative edges.
struct Restriction {
    Graph g;
    std::vector<int> hop_edges;
};
Restriction restrict_to(const Graph& g, const std::vector<int>& U,
                        const std::vector<int>* frozen = nullptr);

// Collapses an auxiliary-graph cycle to original vertex ids (consecutive
// duplicates removed). orig maps each auxiliary vertex to its original id.
std::vector<int> map_cycle(const std::vector<int>& cycle,
                           const std::vector<int>& orig);

}  // namespace negsp
