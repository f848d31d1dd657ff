#pragma once

#include <cstdint>
#include <vector>

namespace roadlayout {

// Directed flow network with integer capacities. Arcs are stored in insertion
// order together with their residual reverse arcs, which keeps the solver
// fully deterministic.
class FlowNetwork {
 public:
  FlowNetwork(int nodes, int source, int sink);

  void add_arc(int from, int to, std::int64_t capacity);

  int node_count() const { return static_cast<int>(adjacency_.size()); }
  int source() const { return source_; }
  int sink() const { return sink_; }

  struct Result {
    std::int64_t flow = 0;
    // true = node stays on the source side of the minimum cut.
    std::vector<bool> source_side;
  };

  friend Result max_flow(FlowNetwork& net);

 private:
  struct Arc {
    int to;
    std::int64_t capacity;  // residual
  };

  int source_;
  int sink_;
  std::vector<Arc> arcs_;                     // arc 2k pairs with reverse 2k+1
  std::vector<std::vector<int>> adjacency_;   // node -> arc indices
};

// Edmonds-Karp (shortest augmenting path). Consumes the residual capacities;
// the returned cut satisfies flow = cut capacity.
FlowNetwork::Result max_flow(FlowNetwork& net);

}  // namespace roadlayout
