#pragma once

#include <array>
#include <vector>

namespace roadlayout {

struct BinaryPairTerm {
  int i = 0;
  int j = 0;
  std::array<std::array<double, 2>, 2> cost{};
};

// Per-variable value in {0, 1} or -1 for "unlabeled".
struct PartialLabeling {
  std::vector<int> labels;

  int labeled_count() const {
    int n = 0;
    for (int l : labels) n += (l >= 0);
    return n;
  }
};

// Quadratic pseudo-boolean optimization via roof duality: the energy and its
// complemented copy are folded into one submodular function over 2n node
// variables and solved with a single max-flow. Labeled variables satisfy weak
// persistency (some global optimum agrees with all of them); submodular
// inputs come back fully labeled and globally optimal.
PartialLabeling qpbo(const std::vector<std::array<double, 2>>& unaries,
                     const std::vector<BinaryPairTerm>& pairwise);

}  // namespace roadlayout
