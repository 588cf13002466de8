#pragma once

#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "whoeffding/errors.hpp"

namespace whoeffding::detail {

/// Balanced transportation problem: ship `supply` to `demand` (equal totals)
/// at cost[i][j] per unit, by successive shortest augmenting paths with
/// Johnson potentials on the bipartite residual network.
///
/// Nodes: 0 = source, 1..n = supplies, n+1..n+m = demands, n+m+1 = sink.
/// Residual capacities below `kFlowEps` count as saturated.
class TransportSolver {
 public:
  static constexpr double kFlowEps = 1e-15;

  TransportSolver(std::span<const double> supply, std::span<const double> demand,
                  const std::vector<std::vector<double>>& cost)
      : n_(supply.size()), m_(demand.size()), adj_(n_ + m_ + 2) {
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) add_edge(0, 1 + i, supply[i], 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) add_edge(1 + i, 1 + n_ + j, inf, cost[i][j]);
    }
    for (std::size_t j = 0; j < m_; ++j) add_edge(1 + n_ + j, sink(), demand[j], 0.0);
    for (double s : supply) total_ += s;
  }

  double solve() {
    const std::size_t nodes = adj_.size();
    std::vector<double> potential(nodes, 0.0);
    std::vector<double> dist(nodes);
    std::vector<std::size_t> prev_edge(nodes);
    std::vector<char> done(nodes);
    double shipped = 0.0;
    double cost = 0.0;
    using Item = std::pair<double, std::size_t>;
    while (total_ - shipped > kFlowEps) {
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      std::fill(done.begin(), done.end(), 0);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      dist[0] = 0.0;
      pq.emplace(0.0, 0);
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = 1;
        for (std::size_t e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (ed.cap <= kFlowEps) continue;
          // reduced costs are non-negative up to rounding; clamp the noise
          const double rc = std::max(0.0, ed.cost + potential[u] - potential[ed.to]);
          if (d + rc < dist[ed.to]) {
            dist[ed.to] = d + rc;
            prev_edge[ed.to] = e;
            pq.emplace(dist[ed.to], ed.to);
          }
        }
      }
      if (!done[sink()]) break;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (done[v]) potential[v] += dist[v];
      }
      double push = total_ - shipped;
      for (std::size_t v = sink(); v != 0; v = edges_[prev_edge[v] ^ 1].to) {
        push = std::min(push, edges_[prev_edge[v]].cap);
      }
      for (std::size_t v = sink(); v != 0; v = edges_[prev_edge[v] ^ 1].to) {
        Edge& e = edges_[prev_edge[v]];
        e.cap -= push;
        edges_[prev_edge[v] ^ 1].cap += push;
        cost += push * e.cost;
      }
      shipped += push;
    }
    if (total_ - shipped > 1e-12) throw ArgumentError("transport problem is unbalanced");
    return cost;
  }

 private:
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
  };

  std::size_t sink() const noexcept { return n_ + m_ + 1; }

  void add_edge(std::size_t from, std::size_t to, double cap, double cost) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, cap, cost});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, 0.0, -cost});
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
  double total_ = 0.0;
};

}  // namespace whoeffding::detail
