#include "roadlayout/maxflow.hpp"

#include <limits>
#include <queue>
#include <stdexcept>

namespace roadlayout {

FlowNetwork::FlowNetwork(int nodes, int source, int sink)
    : source_(source), sink_(sink), adjacency_(nodes) {
  if (nodes < 2 || source < 0 || source >= nodes || sink < 0 || sink >= nodes ||
      source == sink) {
    throw std::runtime_error("flow network needs distinct source and sink nodes");
  }
}

void FlowNetwork::add_arc(int from, int to, std::int64_t capacity) {
  if (capacity < 0) {
    throw std::runtime_error("arc capacity must be nonnegative");
  }
  if (from < 0 || from >= node_count() || to < 0 || to >= node_count()) {
    throw std::runtime_error("arc endpoint outside the network");
  }
  adjacency_[from].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({to, capacity});
  adjacency_[to].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({from, 0});
}

FlowNetwork::Result max_flow(FlowNetwork& net) {
  auto& arcs = net.arcs_;
  const auto& adjacency = net.adjacency_;
  int n = net.node_count();

  FlowNetwork::Result result;
  std::vector<int> parent_arc(n);
  while (true) {
    std::fill(parent_arc.begin(), parent_arc.end(), -1);
    parent_arc[net.source_] = -2;
    std::queue<int> queue;
    queue.push(net.source_);
    while (!queue.empty() && parent_arc[net.sink_] == -1) {
      int u = queue.front();
      queue.pop();
      for (int arc_index : adjacency[u]) {
        const auto& arc = arcs[arc_index];
        if (arc.capacity > 0 && parent_arc[arc.to] == -1) {
          parent_arc[arc.to] = arc_index;
          queue.push(arc.to);
        }
      }
    }
    if (parent_arc[net.sink_] == -1) break;

    std::int64_t bottleneck = std::numeric_limits<std::int64_t>::max();
    for (int v = net.sink_; v != net.source_;) {
      int arc_index = parent_arc[v];
      bottleneck = std::min(bottleneck, arcs[arc_index].capacity);
      v = arcs[arc_index ^ 1].to;
    }
    for (int v = net.sink_; v != net.source_;) {
      int arc_index = parent_arc[v];
      arcs[arc_index].capacity -= bottleneck;
      arcs[arc_index ^ 1].capacity += bottleneck;
      v = arcs[arc_index ^ 1].to;
    }
    result.flow += bottleneck;
  }

  // Minimum cut: nodes reachable from the source in the residual graph.
  result.source_side.assign(n, false);
  result.source_side[net.source_] = true;
  std::queue<int> queue;
  queue.push(net.source_);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop();
    for (int arc_index : adjacency[u]) {
      const auto& arc = arcs[arc_index];
      if (arc.capacity > 0 && !result.source_side[arc.to]) {
        result.source_side[arc.to] = true;
        queue.push(arc.to);
      }
    }
  }
  return result;
}

}  // namespace roadlayout
