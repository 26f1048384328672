// Command-line frontend: solve instances, generate corpora, verify
// solutions, and run the instrumented benchmark harness.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "negsp/base.hpp"
#include "negsp/bootstrap.hpp"
#include "negsp/counters.hpp"
#include "negsp/extract.hpp"
#include "negsp/graph.hpp"
#include "negsp/sparsify.hpp"

using nlohmann::json;
using namespace negsp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitRetry = 3;

struct SolveOptions {
    std::string algo = "auto";
    std::uint64_t seed = 1;
    int retries = 3;
    double sample_const = 4.0;
    int base_k = 8;
};

struct RunOutcome {
    std::string verdict;               // "distances" or "cycle"
    std::vector<double> dist;          // by original vertex id
    std::vector<int> cycle;            // original ids, first == last
    Counters counters;
};

const std::vector<std::string> kAlgos = {
    "bellman-ford", "recursive", "recursive-improved",
    "dense",        "twice-recursive", "auto"};

std::string fmt_dist(double d) {
    if (d == kInf) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", d);
    return buf;
}

// Maps a canonical-graph cycle back to original ids and checks it is a real
// negative closed walk in the original graph.
std::vector<int> map_back_cycle(const std::vector<int>& cycle, const VertexMap& vm,
                                const Graph& orig) {
    // rotate so the cycle starts at a vertex that exists in the original
    // graph, then drop auxiliary split vertices (they sit mid-edge)
    std::vector<int> rot(cycle.begin(), cycle.end() - 1);
    size_t start = 0;
    while (start < rot.size() && vm.backward[rot[start]] < 0) ++start;
    if (start == rot.size()) throw std::runtime_error("bad cycle map");
    std::rotate(rot.begin(), rot.begin() + static_cast<long>(start), rot.end());
    rot.push_back(rot.front());
    std::vector<int> out;
    for (int v : rot) {
        int o = vm.backward[v];
        if (o < 0) continue;
        if (!out.empty() && out.back() == o) continue;
        out.push_back(o);
    }
    if (out.size() < 2 || out.front() != out.back()) throw std::runtime_error("bad cycle map");
    if (!(walk_length(orig, out) < 0)) throw std::runtime_error("mapped cycle not negative");
    return out;
}

RunOutcome run_solver(const Graph& g, int source0, const SolveOptions& opt) {
    RunOutcome out;
    counters().reset();
    if (opt.algo == "bellman-ford") {
        DistanceResult r = bellman_ford_oracle(g, source0);
        if (r.has_cycle()) {
            out.verdict = "cycle";
            out.cycle = r.cycle;
        } else {
            out.verdict = "distances";
            out.dist = r.dist;
        }
        out.counters = counters();
        return out;
    }

    SolveConfig cfg;
    cfg.seed = opt.seed;
    cfg.retries = opt.retries;
    cfg.sample_const = opt.sample_const;
    cfg.base_k = opt.base_k;

    Graph canon;
    VertexMap vm;
    try {
        std::tie(canon, vm) = preprocess(g);
    } catch (const NegativeSelfLoop& nsl) {
        out.verdict = "cycle";
        out.cycle = {nsl.vertex, nsl.vertex};
        out.counters = counters();
        return out;
    }

    SolveResult r;
    if (opt.algo == "recursive" || opt.algo == "recursive-improved") {
        cfg.variant =
            opt.algo == "recursive" ? Variant::classic : Variant::improved;
        r = solve_recursive(canon, cfg);
    } else if (opt.algo == "dense") {
        r = solve_dense(canon, cfg);
    } else if (opt.algo == "twice-recursive") {
        r = solve_twice_recursive(canon, cfg);
    } else {  // auto
        r = solve_auto(canon, cfg);
    }

    if (r.has_cycle()) {
        out.verdict = "cycle";
        out.cycle = map_back_cycle(r.cycle, vm, g);
        out.counters = counters();
        return out;
    }
    Graph rw = reweight(canon, r.phi);
    DistanceResult dj = dijkstra(rw, {vm.forward[source0]});
    out.verdict = "distances";
    out.dist.assign(g.n, kInf);
    double ps = r.phi[vm.forward[source0]];
    for (int v = 0; v < g.n; ++v) {
        double d = dj.dist[vm.forward[v]];
        if (d < kInf) out.dist[v] = d - ps + r.phi[vm.forward[v]];
    }
    out.counters = counters();
    return out;
}

json report_json(const std::string& instance, const SolveOptions& opt, int source,
                 const RunOutcome& out) {
    json j;
    j["instance"] = instance;
    j["algorithm"] = opt.algo;
    j["seed"] = opt.seed;
    j["source"] = source;
    j["verdict"] = out.verdict;
    if (out.verdict == "cycle") {
        json c = json::array();
        for (int v : out.cycle) c.push_back(v + 1);
        j["cycle"] = c;
    } else {
        json d = json::array();
        for (double x : out.dist)
            if (x == kInf)
                d.push_back(nullptr);
            else
                d.push_back(x);
        j["distances"] = d;
    }
    j["counters"] = {{"hop_relaxations", out.counters.hop_relaxations},
                     {"dijkstra_pops", out.counters.dijkstra_pops},
                     {"aux_edges", out.counters.aux_edges},
                     {"max_recursion_depth", out.counters.max_recursion_depth}};
    j["retries"] = out.counters.retries;
    return j;
}

int cmd_solve(const std::string& path, int source, const SolveOptions& opt,
              bool as_json) {
    Graph g = load_dimacs(path);
    if (source < 1 || source > g.n) throw ParseError(0, "source out of range");
    auto t0 = std::chrono::steady_clock::now();
    RunOutcome out = run_solver(g, source - 1, opt);
    auto ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    if (as_json) {
        // wall time deliberately kept out of the JSON report so identical
        // (instance, algorithm, seed) runs are byte-identical
        std::cout << report_json(path, opt, source, out).dump(2) << "\n";
    } else if (out.verdict == "cycle") {
        std::cout << "cycle\n";
        for (size_t i = 0; i < out.cycle.size(); ++i)
            std::cout << (i ? " " : "") << out.cycle[i] + 1;
        std::cout << "\n";
    } else {
        for (int v = 0; v < g.n; ++v)
            std::cout << "v " << v + 1 << " " << fmt_dist(out.dist[v]) << "\n";
    }
    std::cerr << "wall_ms " << ms << "\n";
    return kExitOk;
}

int cmd_gen(const std::string& path, const GenSpec& spec) {
    save_dimacs(generate(spec), path);
    return kExitOk;
}

struct Solution {
    bool is_cycle = false;
    std::vector<double> dist;  // by 0-indexed vertex
    std::vector<int> cycle;    // 0-indexed
};

Solution load_solution(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    Solution s;
    std::string line;
    int ln = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (first && line == "cycle") {
            s.is_cycle = true;
            first = false;
            continue;
        }
        first = false;
        if (s.is_cycle) {
            int v;
            while (ss >> v) {
                if (v < 1 || v > n) throw ParseError(ln, "vertex out of range");
                s.cycle.push_back(v - 1);
            }
            continue;
        }
        std::string tag, val;
        int v;
        if (!(ss >> tag >> v >> val) || tag != "v" || v < 1 || v > n)
            throw ParseError(ln, "expected 'v <id> <dist>'");
        if (s.dist.empty()) s.dist.assign(n, kInf);
        s.dist[v - 1] = val == "inf" ? kInf : std::stod(val);
    }
    if (!s.is_cycle && static_cast<int>(s.dist.size()) != n)
        throw ParseError(ln, "no distance lines");
    return s;
}

int cmd_verify(const std::string& inst, const std::string& sol_path, int source) {
    constexpr double eps = 1e-9;
    Graph g = load_dimacs(inst);
    if (source < 1 || source > g.n) throw ParseError(0, "source out of range");
    Solution s = load_solution(sol_path, g.n);
    if (s.is_cycle) {
        if (s.cycle.size() < 2 || s.cycle.front() != s.cycle.back()) {
            std::cout << "invalid: cycle witness must close\n";
            return kExitInternal;
        }
        double len = walk_length(g, s.cycle);
        if (!(len < 0)) {  // a zero-length closed walk is not a witness
            std::cout << "invalid: cycle sum " << fmt_dist(len) << " is not negative\n";
            return kExitInternal;
        }
        std::cout << "ok: negative cycle of length " << fmt_dist(len) << "\n";
        return kExitOk;
    }

    int src = source - 1;
    if (s.dist[src] != 0) {
        std::cout << "invalid: d(source) = " << fmt_dist(s.dist[src]) << "\n";
        return kExitInternal;
    }
    // (a) triangle inequality over every edge
    for (const Edge& e : g.edges) {
        if (s.dist[e.tail] == kInf) continue;
        if (s.dist[e.head] > s.dist[e.tail] + e.len + eps) {
            std::cout << "invalid: edge " << e.tail + 1 << " -> " << e.head + 1
                      << " (" << fmt_dist(e.len) << ") violates d("
                      << e.head + 1 << ") <= d(" << e.tail + 1 << ") + len\n";
            return kExitInternal;
        }
    }
    // (b) realizability: every finite distance is reached from the source
    // along tight edges (the parent-walk reconstruction)
    std::vector<bool> reach(g.n, false);
    reach[src] = true;
    std::vector<int> stack = {src};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int eid : g.out[u]) {
            const Edge& e = g.edges[eid];
            if (reach[e.head] || s.dist[e.head] == kInf) continue;
            if (std::abs(s.dist[e.tail] + e.len - s.dist[e.head]) <= eps) {
                reach[e.head] = true;
                stack.push_back(e.head);
            }
        }
    }
    for (int v = 0; v < g.n; ++v)
        if (s.dist[v] < kInf && !reach[v]) {
            std::cout << "invalid: d(" << v + 1 << ") = " << fmt_dist(s.dist[v])
                      << " is not realized by any tight walk from the source\n";
            return kExitInternal;
        }
    std::cout << "ok: distances consistent\n";
    return kExitOk;
}

int cmd_bench(const std::string& dir, const std::string& algos_arg,
              const SolveOptions& base, const std::string& csv_path) {
    std::vector<std::string> algos;
    {
        std::stringstream ss(algos_arg);
        std::string a;
        while (std::getline(ss, a, ',')) {
            if (std::find(kAlgos.begin(), kAlgos.end(), a) == kAlgos.end())
                throw ParseError(0, "unknown algorithm " + a);
            algos.push_back(a);
        }
    }
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".gr") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ParseError(0, "no .gr files in " + dir);

    std::ostringstream csv;
    csv << "instance,algorithm,seed,verdict,hop_relaxations,dijkstra_pops,"
           "aux_edges,max_recursion_depth,retries\n";
    std::printf("%-28s %-18s %10s %14s %14s %12s %6s %8s\n", "instance",
                "algorithm", "verdict", "hop-relax", "dijkstra-pops", "aux-edges",
                "depth", "wall-ms");
    for (const std::string& f : files) {
        Graph g = load_dimacs(f);
        for (const std::string& a : algos) {
            SolveOptions opt = base;
            opt.algo = a;
            auto t0 = std::chrono::steady_clock::now();
            RunOutcome out = run_solver(g, 0, opt);
            auto ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
            std::string name = std::filesystem::path(f).filename().string();
            std::printf("%-28s %-18s %10s %14lld %14lld %12lld %6d %8.1f\n",
                        name.c_str(), a.c_str(), out.verdict.c_str(),
                        static_cast<long long>(out.counters.hop_relaxations),
                        static_cast<long long>(out.counters.dijkstra_pops),
                        static_cast<long long>(out.counters.aux_edges),
                        out.counters.max_recursion_depth, ms);
            csv << name << "," << a << "," << opt.seed << "," << out.verdict
                << "," << out.counters.hop_relaxations << ","
                << out.counters.dijkstra_pops << "," << out.counters.aux_edges
                << "," << out.counters.max_recursion_depth << ","
                << out.counters.retries << "\n";
        }
    }
    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        f << csv.str();
    } else {
        std::cout << csv.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"negative-length shortest paths toolkit"};
    app.require_subcommand(1);

    SolveOptions opt;
    bool as_json = false;
    int source = 1;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--seed", opt.seed, "random seed (all randomness flows from it)");
        c->add_option("--retries", opt.retries, "randomized retry budget");
        c->add_option("--sample-const", opt.sample_const, "oversampling constant");
        c->add_option("--base-k", opt.base_k, "recursion base-case size");
        c->add_option("--algo", opt.algo, "solver")
            ->check(CLI::IsMember(kAlgos));
    };

    std::string inst, sol, out_path, dir;
    auto* solve = app.add_subcommand("solve", "solve one instance");
    solve->add_option("instance", inst, "DIMACS .gr file")->required();
    solve->add_option("--source", source, "source vertex (1-indexed)");
    solve->add_flag("--json", as_json, "emit a JSON run report");
    add_common(solve);

    GenSpec spec;
    bool plant = false;
    auto* gen = app.add_subcommand("gen", "generate an instance");
    gen->add_option("output", out_path, "output .gr file")->required();
    gen->add_option("--n", spec.n, "vertices")->required();
    gen->add_option("--m", spec.m, "edges")->required();
    gen->add_option("--neg", spec.neg_count, "negative edges");
    gen->add_option("--wmin", spec.wmin, "min nonnegative weight");
    gen->add_option("--wmax", spec.wmax, "max nonnegative weight");
    gen->add_option("--nwmin", spec.nwmin, "min negative weight");
    gen->add_option("--nwmax", spec.nwmax, "max negative weight");
    gen->add_option("--seed", spec.seed, "random seed");
    gen->add_flag("--plant-cycle", plant, "plant a negative cycle");

    auto* verify = app.add_subcommand("verify", "verify a solution file");
    verify->add_option("instance", inst, "DIMACS .gr file")->required();
    verify->add_option("solution", sol, "solution file")->required();
    verify->add_option("--source", source, "source vertex (1-indexed)");

    std::string algos = "bellman-ford,recursive";
    std::string csv_path;
    auto* bench = app.add_subcommand("bench", "run the benchmark harness");
    bench->add_option("corpus", dir, "directory of .gr files")->required();
    bench->add_option("--algos", algos, "comma-separated algorithm list");
    bench->add_option("--csv", csv_path, "write CSV here instead of stdout");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (solve->parsed()) return cmd_solve(inst, source, opt, as_json);
        if (gen->parsed()) {
            spec.plant_cycle = plant;
            return cmd_gen(out_path, spec);
        }
        if (verify->parsed()) return cmd_verify(inst, sol, source);
        if (bench->parsed()) return cmd_bench(dir, algos, opt, csv_path);
    } catch (const RetryBudgetExhausted&) {
        std::cerr << "error: retry budget exhausted\n";
        return kExitRetry;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InconsistentHeader& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InfeasibleSpec& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const EmptyGraph& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
