#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace negsp {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
    int tail;
    int head;
    double len;
};

// Directed multigraph with real edge lengths. After preprocess() the graph is
// in canonical form: every negative edge is the unique out-edge of its tail
// and the unique in-edge of its head, and degrees are bounded.
struct Graph {
    int n = 0;
    std::vector<Edge> edges;
    std::vector<int> neg_vertices;       // sorted tails of negative edges
    std::vector<std::vector<int>> out;   // edge ids grouped by tail

    int m() const { return static_cast<int>(edges.size()); }
    int k() const { return static_cast<int>(neg_vertices.size()); }
    double mu() const;

    void add_edge(int u, int v, double len);
    // Rebuilds adjacency and neg_vertices from the edge list.
    void finalize();
    bool is_neg_vertex(int v) const;
};

struct VertexMap {
    std::vector<int> forward;    // original id -> canonical id
    std::vector<int> backward;   // canonical id -> original id, -1 for auxiliary
};

struct GenSpec {
    int n = 0;
    int m = 0;
    int neg_count = 0;
    int wmin = 0, wmax = 10;      // nonnegative edge weights
    int nwmin = -8, nwmax = -1;   // negative edge weights
    bool plant_cycle = false;
    std::uint64_t seed = 0;
};

struct NegativeSelfLoop : std::runtime_error {
    int vertex;
    explicit NegativeSelfLoop(int v)
        : std::runtime_error("negative self-loop at vertex " + std::to_string(v)),
          vertex(v) {}
};

struct EmptyGraph : std::runtime_error {
    EmptyGraph() : std::runtime_error("empty graph") {}
};

struct ParseError : std::runtime_error {
    int line;
    ParseError(int ln, const std::string& what)
        : std::runtime_error("parse error at line " + std::to_string(ln) + ": " + what),
          line(ln) {}
};

struct InconsistentHeader : std::runtime_error {
    explicit InconsistentHeader(const std::string& what)
        : std::runtime_error("inconsistent header: " + what) {}
};

struct InfeasibleSpec : std::runtime_error {
    explicit InfeasibleSpec(const std::string& what)
        : std::runtime_error("infeasible spec: " + what) {}
};

std::pair<Graph, VertexMap> preprocess(const Graph& g);

Graph load_dimacs(const std::string& path);
void save_dimacs(const Graph& g, const std::string& path);

Graph generate(const GenSpec& spec);

Graph transpose(const Graph& g);

}  // namespace negsp
