#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "roadlayout/prediction.hpp"
#include "roadlayout/sampler.hpp"

namespace roadlayout {

// One label per variable. For the road model the layout is: 14 binary labels
// (0/1), 2 lane counts (0..6), then 22 bin indices (activatable attributes
// reserve index 0 for "inactive").
using Labeling = std::vector<int>;

inline constexpr int kVarBinaryOffset = 0;
inline constexpr int kVarMulticlassOffset = kNumBinary;
inline constexpr int kVarContinuousOffset = kNumBinary + kNumMulticlass;

enum class VarKind { kBinary, kMulticlass, kContinuous };

struct PairwiseTerm {
  int i = 0;
  int j = 0;
  std::array<std::array<double, 2>, 2> cost{};  // -log co-occurrence
};

// Hard-constraint clique. `conflict` reads the labels of `vars` in order;
// `repair` rewrites them to a non-conflicting assignment, preferring cheap
// unary choices (used by inference to guarantee a feasible output).
struct ConstraintClique {
  std::string id;
  std::vector<int> vars;
  std::function<bool(std::span<const int>)> conflict;
  std::function<void(std::span<int>, std::span<const std::vector<double>> unaries,
                     std::span<const std::vector<int>> allowed)>
      repair;
};

struct CrfWeights {
  // Global normalization of the summed co-occurrence field. Each binary
  // variable sees 13 pairwise terms; dividing by that count keeps the field
  // at the strength of one prior term, so a confident unary (bounded by the
  // probability floor) can always override it.
  double pairwise_scale = 1.0 / (kNumBinary - 1);
  double lambda_disc = 1.0;   // per discrete label change between frames
  double lambda_cont = 0.05;  // per bin step between frames
  double tau_bins = 10.0;     // truncation of the continuous temporal cost
  double penalty = 1e9;       // hard-constraint penalty (finite stand-in for inf)
};

// Instantiated CRF over one or more frames. Unaries are per frame; pairwise
// terms and constraint cliques apply within every frame; temporal terms link
// consecutive frames per variable.
struct EnergyModel {
  int frames = 1;
  std::vector<int> domain_sizes;
  std::vector<VarKind> kinds;
  std::vector<std::vector<double>> unaries;  // frames * num_vars entries
  std::vector<PairwiseTerm> pairwise;
  std::vector<ConstraintClique> cliques;
  CrfWeights weights;

  int num_vars() const { return static_cast<int>(domain_sizes.size()); }
  const std::vector<double>& unary(int frame, int var) const {
    return unaries[static_cast<std::size_t>(frame) * num_vars() + var];
  }
};

// Builds the road-scene CRF from per-frame predictions: unaries are negative
// log probabilities, pairwise terms -log of the co-occurrence tables, and the
// schema constraint catalog becomes penalty cliques. Multi-frame input adds
// the temporal links.
EnergyModel build_energy(std::span<const AttributePrediction> frames,
                         const CooccurrenceTables& cooc, const AttributeSchema& schema,
                         const std::array<BinSpec, kNumContinuous>& specs,
                         const CrfWeights& weights = CrfWeights{});

// Temporal coupling for one variable between consecutive frames.
double temporal_cost(const EnergyModel& model, int var, int label_a, int label_b);

// Exact sum of all active potentials. Throws on dimension mismatch.
double energy_of(const EnergyModel& model, std::span<const Labeling> labelings);
double energy_of(const EnergyModel& model, const Labeling& labeling);

// Per-variable argmax of the unaries for one frame (ties to the lower label).
Labeling argmax_labels(const EnergyModel& model, int frame = 0);

// Road-layout conversions. labeling_to_params decodes bins to bin centers.
SceneParams labeling_to_params(const Labeling& labels, const AttributeSchema& schema,
                               const std::array<BinSpec, kNumContinuous>& specs);
Labeling params_to_labeling(const SceneParams& params, const AttributeSchema& schema,
                            const std::array<BinSpec, kNumContinuous>& specs);

}  // namespace roadlayout
