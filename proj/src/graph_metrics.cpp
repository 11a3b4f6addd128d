#include "iab/graph_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>

namespace iab::graph_metrics {

std::vector<double> pagerank(const WeightedDigraph& g, double damping, double tol,
                             int max_iter) {
    const int n = g.n;
    if (n == 0) return {};
    std::vector<double> out_w(n, 0.0);
    for (const auto& [u, v, w] : g.edges) out_w[u] += w;

    std::vector<double> pr(n, 1.0 / n), next(n);
    for (int it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (int i = 0; i < n; ++i)
            if (out_w[i] == 0.0) dangling += pr[i];
        std::fill(next.begin(), next.end(), (1.0 - damping) / n + damping * dangling / n);
        for (const auto& [u, v, w] : g.edges)
            if (out_w[u] > 0.0) next[v] += damping * pr[u] * (w / out_w[u]);
        double diff = 0.0;
        for (int i = 0; i < n; ++i) diff += std::abs(next[i] - pr[i]);
        pr.swap(next);
        if (diff < tol) break;
    }
    return pr;
}

std::vector<double> betweenness(const WeightedDigraph& g, bool normalized) {
    const int n = g.n;
    std::vector<double> bc(n, 0.0);
    if (n == 0) return bc;

    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& [u, v, w] : g.edges)
        if (u != v && w > 0.0) adj[u].push_back({v, 1.0 / w});

    const double inf = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
        std::vector<double> dist(n, inf), sigma(n, 0.0), delta(n, 0.0);
        std::vector<std::vector<int>> pred(n);
        std::vector<int> order;
        std::vector<char> done(n, 0);
        dist[s] = 0.0;
        sigma[s] = 1.0;

        using QE = std::pair<double, int>;
        std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
        pq.push({0.0, s});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (done[u]) continue;
            done[u] = 1;
            order.push_back(u);
            for (const auto& [v, len] : adj[u]) {
                if (done[v]) continue;
                double nd = dist[u] + len;
                double eps = 1e-12 * std::max(1.0, std::abs(dist[v]));
                if (nd < dist[v] - eps) {
                    dist[v] = nd;
                    sigma[v] = sigma[u];
                    pred[v] = {u};
                    pq.push({nd, v});
                } else if (std::abs(nd - dist[v]) <= eps) {
                    sigma[v] += sigma[u];
                    pred[v].push_back(u);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int w = *it;
            for (int p : pred[w]) delta[p] += sigma[p] / sigma[w] * (1.0 + delta[w]);
            if (w != s) bc[w] += delta[w];
        }
    }

    if (normalized && n > 2) {
        double scale = 1.0 / (static_cast<double>(n - 1) * (n - 2));
        for (double& b : bc) b *= scale;
    }
    return bc;
}

// ---------------------------------------------------------------------------
// Leiden

namespace {

struct AdjGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj; // no self entries
    std::vector<double> self_loop;
    std::vector<double> k; // weighted degree, self loops count twice
    double m2 = 0.0;       // sum of degrees
};

AdjGraph make_adj(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    std::map<std::pair<int, int>, double> combined;
    for (const auto& [u, v, w] : edges) {
        if (w <= 0.0) continue;
        combined[{std::min(u, v), std::max(u, v)}] += w;
    }
    AdjGraph g;
    g.n = n;
    g.adj.resize(n);
    g.self_loop.assign(n, 0.0);
    g.k.assign(n, 0.0);
    for (const auto& [uv, w] : combined) {
        auto [u, v] = uv;
        if (u == v) {
            g.self_loop[u] += w;
            g.k[u] += 2 * w;
        } else {
            g.adj[u].push_back({v, w});
            g.adj[v].push_back({u, w});
            g.k[u] += w;
            g.k[v] += w;
        }
    }
    for (double kk : g.k) g.m2 += kk;
    return g;
}

bool local_move(const AdjGraph& g, std::vector<int>& comm, double gamma,
                std::mt19937_64& rng) {
    std::vector<double> tot(g.n, 0.0);
    for (int i = 0; i < g.n; ++i) tot[comm[i]] += g.k[i];

    std::vector<int> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::deque<int> queue(order.begin(), order.end());
    std::vector<char> in_queue(g.n, 1);

    std::vector<double> w_to(g.n, 0.0);
    bool any = false;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        in_queue[u] = 0;
        int cu = comm[u];

        std::vector<int> touched;
        for (const auto& [v, w] : g.adj[u]) {
            int cv = comm[v];
            if (w_to[cv] == 0.0 && cv != cu) touched.push_back(cv);
            w_to[cv] += w;
        }
        tot[cu] -= g.k[u];
        int best = cu;
        double best_gain = w_to[cu] - gamma * g.k[u] * tot[cu] / g.m2;
        for (int c : touched) {
            double gain = w_to[c] - gamma * g.k[u] * tot[c] / g.m2;
            if (gain > best_gain + 1e-12 ||
                (std::abs(gain - best_gain) <= 1e-12 && c < best)) {
                best = c;
                best_gain = gain;
            }
        }
        tot[best] += g.k[u];
        w_to[cu] = 0.0;
        for (int c : touched) w_to[c] = 0.0;

        if (best != cu) {
            comm[u] = best;
            any = true;
            for (const auto& [v, w] : g.adj[u]) {
                (void)w;
                if (!in_queue[v] && comm[v] != best) {
                    queue.push_back(v);
                    in_queue[v] = 1;
                }
            }
        }
    }
    return any;
}

std::vector<int> refine(const AdjGraph& g, const std::vector<int>& comm, double gamma,
                        std::mt19937_64& rng) {
    std::vector<int> sub(g.n);
    std::iota(sub.begin(), sub.end(), 0);
    std::vector<double> subtot(g.k);
    std::vector<int> subsize(g.n, 1);

    std::vector<int> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> w_to(g.n, 0.0);
    for (int u : order) {
        if (subsize[sub[u]] != 1) continue; // only isolated nodes merge
        std::vector<int> touched;
        for (const auto& [v, w] : g.adj[u]) {
            if (comm[v] != comm[u]) continue; // stay inside the parent community
            int sv = sub[v];
            if (sv == sub[u]) continue;
            if (w_to[sv] == 0.0) touched.push_back(sv);
            w_to[sv] += w;
        }
        int best = -1;
        double best_gain = 0.0;
        for (int s : touched) {
            double gain = w_to[s] - gamma * g.k[u] * subtot[s] / g.m2;
            if (gain > best_gain + 1e-12 ||
                (best != -1 && std::abs(gain - best_gain) <= 1e-12 && s < best)) {
                best = s;
                best_gain = gain;
            }
        }
        for (int s : touched) w_to[s] = 0.0;
        if (best != -1) {
            subtot[best] += g.k[u];
            subtot[sub[u]] -= g.k[u];
            subsize[best] += 1;
            subsize[sub[u]] -= 1;
            sub[u] = best;
        }
    }
    return sub;
}

// dense ids in first-appearance order scanning nodes 0..n-1
std::vector<int> densify(const std::vector<int>& ids, int* count_out = nullptr) {
    std::map<int, int> remap;
    std::vector<int> out(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) {
        auto it = remap.find(ids[i]);
        if (it == remap.end()) it = remap.emplace(ids[i], static_cast<int>(remap.size())).first;
        out[i] = it->second;
    }
    if (count_out) *count_out = static_cast<int>(remap.size());
    return out;
}

} // namespace

double modularity(int n, const std::vector<std::tuple<int, int, double>>& edges,
                  const std::vector<int>& membership, double resolution) {
    AdjGraph g = make_adj(n, edges);
    if (g.m2 == 0.0) return 0.0;
    std::map<int, double> in2, tot;
    for (int u = 0; u < n; ++u) {
        tot[membership[u]] += g.k[u];
        in2[membership[u]] += 2 * g.self_loop[u];
        for (const auto& [v, w] : g.adj[u])
            if (membership[v] == membership[u]) in2[membership[u]] += w;
    }
    double q = 0.0;
    for (const auto& [c, t] : tot) {
        double share = t / g.m2;
        q += in2[c] / g.m2 - resolution * share * share;
    }
    return q;
}

std::vector<int> leiden_communities(int n,
                                    const std::vector<std::tuple<int, int, double>>& edges,
                                    double resolution, std::uint64_t seed) {
    if (n <= 0) return {};

    AdjGraph g = make_adj(n, edges);
    std::mt19937_64 rng(seed);

    std::vector<int> node_map(n);
    std::iota(node_map.begin(), node_map.end(), 0);
    std::vector<int> comm(g.n);
    std::iota(comm.begin(), comm.end(), 0);

    if (g.m2 > 0.0) {
        for (int round = 0; round < n; ++round) {
            local_move(g, comm, resolution, rng);
            int comm_count = 0;
            std::vector<int> comm_dense = densify(comm, &comm_count);
            if (comm_count == g.n) break; // every aggregate node is alone

            std::vector<int> sub = refine(g, comm, resolution, rng);
            int sub_count = 0;
            std::vector<int> sub_dense = densify(sub, &sub_count);
            if (sub_count == g.n) break; // refinement found nothing to merge

            // aggregate on the refined partition
            std::vector<std::tuple<int, int, double>> agg_edges;
            for (int u = 0; u < g.n; ++u) {
                if (g.self_loop[u] > 0.0)
                    agg_edges.emplace_back(sub_dense[u], sub_dense[u], g.self_loop[u]);
                for (const auto& [v, w] : g.adj[u])
                    if (u < v) agg_edges.emplace_back(sub_dense[u], sub_dense[v], w);
            }
            // aggregate nodes start in their parent (unrefined) community
            std::vector<int> agg_comm(sub_count, -1);
            for (int u = 0; u < g.n; ++u) agg_comm[sub_dense[u]] = comm_dense[u];

            for (int i = 0; i < n; ++i) node_map[i] = sub_dense[node_map[i]];
            g = make_adj(sub_count, agg_edges);
            comm = std::move(agg_comm);
        }
    }

    std::vector<int> membership(n);
    for (int i = 0; i < n; ++i) membership[i] = comm[node_map[i]];
    return densify(membership);
}

} // namespace iab::graph_metrics
