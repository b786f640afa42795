#include "lha/transport.hpp"

#include <limits>
#include <numeric>
#include <string>

#include "lha/error.hpp"

namespace lha {

namespace {

struct Edge {
  int to;
  std::int64_t cap;
  double cost;
};

class FlowGraph {
 public:
  explicit FlowGraph(int n) : adj_(n) {}

  int add_edge(int from, int to, std::int64_t cap, double cost) {
    adj_[from].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, cap, cost});
    adj_[to].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0, -cost});
    return static_cast<int>(edges_.size()) - 2;
  }

  // Returns total flow pushed from s to t at minimum cost.
  std::int64_t min_cost_flow(int s, int t, std::int64_t want) {
    const int n = static_cast<int>(adj_.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> potential(n, 0.0), dist(n);
    std::vector<int> prev_edge(n);
    std::vector<char> done(n);
    std::int64_t pushed = 0;
    while (pushed < want) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      std::fill(prev_edge.begin(), prev_edge.end(), -1);
      dist[s] = 0.0;
      // dense Dijkstra; graphs here have at most a few hundred nodes
      for (;;) {
        int u = -1;
        for (int v = 0; v < n; ++v) {
          if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[u])) u = v;
        }
        if (u < 0) break;
        done[u] = 1;
        for (int id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap <= 0 || done[e.to]) continue;
          double reduced = e.cost + potential[u] - potential[e.to];
          if (reduced < 0.0) reduced = 0.0;  // float round-off only
          const double nd = dist[u] + reduced;
          if (nd < dist[e.to]) {
            dist[e.to] = nd;
            prev_edge[e.to] = id;
          }
        }
      }
      if (dist[t] == kInf) break;
      // min(dist, dist[t]) keeps every residual reduced cost non-negative,
      // including edges touching nodes not reached this round
      for (int v = 0; v < n; ++v) potential[v] += std::min(dist[v], dist[t]);
      std::int64_t push = want - pushed;
      for (int v = t; v != s; v = edges_[prev_edge[v] ^ 1].to) push = std::min(push, edges_[prev_edge[v]].cap);
      for (int v = t; v != s; v = edges_[prev_edge[v] ^ 1].to) {
        edges_[prev_edge[v]].cap -= push;
        edges_[prev_edge[v] ^ 1].cap += push;
      }
      pushed += push;
    }
    return pushed;
  }

  std::int64_t flow_on(int edge_id) const { return edges_[edge_id ^ 1].cap; }

 private:
  std::vector<std::vector<int>> adj_;
  std::vector<Edge> edges_;
};

}  // namespace

TransportPlan solve_transport(std::span<const std::int64_t> supply, std::span<const std::int64_t> demand,
                              std::span<const double> cost) {
  const auto n = supply.size();
  const auto m = demand.size();
  if (cost.size() != n * m) throw InvalidArgument("transport cost matrix has wrong shape");
  const auto total = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  if (total != std::accumulate(demand.begin(), demand.end(), std::int64_t{0})) {
    throw InvalidArgument("unbalanced transport problem");
  }

  TransportPlan plan;
  plan.flow.assign(n * m, 0);
  if (n == 0 || m == 0 || total == 0) return plan;

  const int source = static_cast<int>(n + m);
  const int sink = source + 1;
  FlowGraph g(static_cast<int>(n + m + 2));
  for (std::size_t i = 0; i < n; ++i) g.add_edge(source, static_cast<int>(i), supply[i], 0.0);
  for (std::size_t j = 0; j < m; ++j) g.add_edge(static_cast<int>(n + j), sink, demand[j], 0.0);
  std::vector<int> arc(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost[i * m + j];
      if (!(c >= 0.0)) throw InvalidArgument("transport costs must be non-negative");
      arc[i * m + j] = g.add_edge(static_cast<int>(i), static_cast<int>(n + j), total, c);
    }
  }
  if (g.min_cost_flow(source, sink, total) != total) throw Error("transport solver failed to route all mass");

  for (std::size_t k = 0; k < n * m; ++k) {
    plan.flow[k] = g.flow_on(arc[k]);
    plan.cost += static_cast<double>(plan.flow[k]) * cost[k];
  }
  return plan;
}

}  // namespace lha
