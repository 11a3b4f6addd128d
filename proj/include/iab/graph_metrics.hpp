#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

namespace iab::graph_metrics {

// Nodes are 0..n-1. Edge weights must be positive.
struct WeightedDigraph {
    int n = 0;
    std::vector<std::tuple<int, int, double>> edges; // (u, v, w)
};

// Power iteration with dangling-mass redistribution; result sums to 1.
std::vector<double> pagerank(const WeightedDigraph& g, double damping = 0.85,
                             double tol = 1e-9, int max_iter = 10000);

// Brandes on the directed graph, edge distance = 1/weight (heavier edges are
// shorter). Normalized by (n-1)(n-2) when n > 2.
std::vector<double> betweenness(const WeightedDigraph& g, bool normalized = true);

// Undirected modularity with a resolution parameter; edges are combined
// (parallel edges summed, self loops kept).
double modularity(int n, const std::vector<std::tuple<int, int, double>>& edges,
                  const std::vector<int>& membership, double resolution = 1.0);

// Leiden over an undirected weighted graph: queue-based local moving,
// constrained refinement, aggregation on the refined partition seeded with
// the unrefined one. Deterministic for a fixed seed. Returned community ids
// are dense and ordered by each community's smallest member node.
std::vector<int> leiden_communities(int n,
                                    const std::vector<std::tuple<int, int, double>>& edges,
                                    double resolution, std::uint64_t seed);

} // namespace iab::graph_metrics
