#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "mue/error.hpp"
#include "mue/network.hpp"

namespace mue {

inline constexpr std::int32_t kNoLink = -1;
inline constexpr double kTieTolerance = 1e-12;

/// One-to-all shortest-path tree. Unreachable nodes keep an infinite cost.
struct ShortestPathTree {
  std::uint32_t origin = 0;
  std::vector<double> cost;
  std::vector<std::int32_t> pred_link;

  bool reachable(std::size_t node) const { return std::isfinite(cost[node]); }

  /// Link indices from the origin to `node`; empty when node == origin or
  /// the node is unreachable.
  std::vector<std::uint32_t> path_to(const Network& net, std::size_t node) const {
    std::vector<std::uint32_t> out;
    if (!reachable(node)) return out;
    for (auto v = node; pred_link[v] != kNoLink;) {
      auto l = static_cast<std::uint32_t>(pred_link[v]);
      out.push_back(l);
      v = net.links()[l].from;
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

/// Dijkstra with a binary heap and reusable buffers. Zone centroid nodes are
/// never expanded except as the origin, so no route passes through a zone.
///
/// Near-ties (within kTieTolerance) on an unsettled node are resolved in
/// favour of the lexicographically smaller link-index sequence, which makes
/// all-or-nothing loading independent of heap ordering details.
class ShortestPathEngine {
public:
  explicit ShortestPathEngine(const Network& net) : net_(&net) {}

  const ShortestPathTree& run(std::span<const double> link_costs, std::uint32_t origin) {
    const Network& net = *net_;
    const std::size_t n = net.node_count();
    tree_.origin = origin;
    tree_.cost.assign(n, std::numeric_limits<double>::infinity());
    tree_.pred_link.assign(n, kNoLink);
    settled_.assign(n, 0);

    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    tree_.cost[origin] = 0.0;
    heap.emplace(0.0, origin);
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (settled_[u] || d > tree_.cost[u]) continue;
      settled_[u] = 1;
      if (u != origin && net.nodes()[u].centroid) continue;
      for (std::uint32_t li : net.out_links(u)) {
        const Link& l = net.links()[li];
        std::uint32_t v = l.to;
        if (settled_[v]) continue;
        double cand = d + link_costs[li];
        double cur = tree_.cost[v];
        if (std::isinf(cur)) {
          tree_.cost[v] = cand;
          tree_.pred_link[v] = static_cast<std::int32_t>(li);
          heap.emplace(cand, v);
          continue;
        }
        double tol = kTieTolerance * std::max(1.0, std::abs(cur));
        if (cand < cur - tol) {
          tree_.cost[v] = cand;
          tree_.pred_link[v] = static_cast<std::int32_t>(li);
          heap.emplace(cand, v);
        } else if (cand <= cur + tol && prefer(li, v)) {
          tree_.cost[v] = std::min(cand, cur);
          tree_.pred_link[v] = static_cast<std::int32_t>(li);
          heap.emplace(tree_.cost[v], v);
        }
      }
    }
    return tree_;
  }

  const ShortestPathTree& tree() const { return tree_; }

private:
  // True when reaching v through link li gives a lexicographically smaller
  // link sequence than v's current predecessor chain.
  bool prefer(std::uint32_t li, std::uint32_t v) {
    const Network& net = *net_;
    auto chain = [&](std::int32_t last, std::vector<std::uint32_t>& out) {
      out.clear();
      for (std::int32_t l = last; l != kNoLink;) {
        out.push_back(static_cast<std::uint32_t>(l));
        l = tree_.pred_link[net.links()[static_cast<std::uint32_t>(l)].from];
      }
      std::reverse(out.begin(), out.end());
    };
    if (tree_.pred_link[v] == static_cast<std::int32_t>(li)) return false;
    chain(static_cast<std::int32_t>(li), a_);
    chain(tree_.pred_link[v], b_);
    return std::lexicographical_compare(a_.begin(), a_.end(), b_.begin(), b_.end());
  }

  const Network* net_;
  ShortestPathTree tree_;
  std::vector<char> settled_;
  std::vector<std::uint32_t> a_, b_;
};

/// Exact one-to-all shortest paths under a non-negative link cost vector.
inline ShortestPathTree shortest_path(const Network& net, std::span<const double> link_costs,
                                      std::uint32_t origin) {
  if (link_costs.size() != net.link_count())
    throw ContractViolation("link cost vector size does not match the network");
  if (origin >= net.node_count()) throw ContractViolation("origin node out of range");
  for (std::size_t i = 0; i < link_costs.size(); ++i)
    if (!(link_costs[i] >= 0.0) || !std::isfinite(link_costs[i]))
      throw ContractViolation("link '" + net.links()[i].id + "' has a negative or non-finite cost");
  ShortestPathEngine engine(net);
  return engine.run(link_costs, origin);
}

}  // namespace mue
