#include "roadlayout/qpbo.hpp"

#include <cmath>
#include <stdexcept>

#include "roadlayout/maxflow.hpp"

namespace roadlayout {
namespace {

// Capacities are quantized to this amount before the integer max-flow.
constexpr double kCapacityQuantum = 1e-6;

struct GraphBuilder {
  // Net cost of node = 1, accumulated; positive becomes an arc from the
  // source, negative an arc into the sink.
  std::vector<double> node_bias;
  struct Edge {
    int from;
    int to;
    double capacity;
  };
  std::vector<Edge> edges;

  explicit GraphBuilder(int nodes) : node_bias(nodes, 0.0) {}

  void add_unary(int node, double cost0, double cost1) {
    node_bias[node] += cost1 - cost0;
  }

  // theta(p,q) = A + (C-A)[p=1] + (D-C)[q=1] + (B+C-A-D)[p=0, q=1];
  // requires B+C-A-D >= 0 (submodular).
  void add_pairwise(int p, int q, double a, double b, double c, double d) {
    double lambda = b + c - a - d;
    if (lambda < -1e-9) {
      throw std::runtime_error("internal: non-submodular term reached the graph");
    }
    node_bias[p] += c - a;
    node_bias[q] += d - c;
    if (lambda > 0.0) {
      edges.push_back({p, q, lambda});
    }
  }
};

std::int64_t quantize(double capacity) {
  return static_cast<std::int64_t>(std::llround(capacity / kCapacityQuantum));
}

}  // namespace

PartialLabeling qpbo(const std::vector<std::array<double, 2>>& unaries,
                     const std::vector<BinaryPairTerm>& pairwise) {
  int n = static_cast<int>(unaries.size());
  PartialLabeling result;
  result.labels.assign(n, -1);
  if (n == 0) return result;

  // Nodes 0..n-1 carry x_i, nodes n..2n-1 carry the complement copy. Every
  // term contributes half its cost to each copy; supermodular pairwise terms
  // couple a variable with the other variable's complement, which flips one
  // argument and restores submodularity.
  GraphBuilder g(2 * n);
  for (int i = 0; i < n; ++i) {
    g.add_unary(i, 0.5 * unaries[i][0], 0.5 * unaries[i][1]);
    g.add_unary(n + i, 0.5 * unaries[i][1], 0.5 * unaries[i][0]);
  }
  for (const auto& term : pairwise) {
    if (term.i < 0 || term.i >= n || term.j < 0 || term.j >= n || term.i == term.j) {
      throw std::runtime_error("qpbo pairwise term has invalid variable indices");
    }
    double a = 0.5 * term.cost[0][0];
    double b = 0.5 * term.cost[0][1];
    double c = 0.5 * term.cost[1][0];
    double d = 0.5 * term.cost[1][1];
    double beta = term.cost[0][1] + term.cost[1][0] - term.cost[0][0] - term.cost[1][1];
    if (beta >= 0.0) {
      g.add_pairwise(term.i, term.j, a, b, c, d);
      g.add_pairwise(n + term.i, n + term.j, d, c, b, a);
    } else {
      g.add_pairwise(term.i, n + term.j, b, a, d, c);
      g.add_pairwise(n + term.i, term.j, c, d, a, b);
    }
  }

  int source = 2 * n;
  int sink = 2 * n + 1;
  FlowNetwork net(2 * n + 2, source, sink);
  for (int v = 0; v < 2 * n; ++v) {
    std::int64_t bias = quantize(g.node_bias[v]);
    if (bias > 0) {
      net.add_arc(source, v, bias);
    } else if (bias < 0) {
      net.add_arc(v, sink, -bias);
    }
  }
  for (const auto& e : g.edges) {
    std::int64_t cap = quantize(e.capacity);
    if (cap > 0) net.add_arc(e.from, e.to, cap);
  }

  auto flow = max_flow(net);
  for (int i = 0; i < n; ++i) {
    int zi = flow.source_side[i] ? 0 : 1;
    int zci = flow.source_side[n + i] ? 0 : 1;
    if (zi != zci) {
      result.labels[i] = zi;
    }
  }
  return result;
}

}  // namespace roadlayout
