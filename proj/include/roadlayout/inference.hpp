#pragma once

#include <cstdint>
#include <vector>

#include "roadlayout/energy.hpp"

namespace roadlayout {

// Optional per-variable label whitelists; an empty list means the full domain.
struct DomainRestriction {
  std::vector<std::vector<int>> allowed;
};

struct InferenceOptions {
  int restarts = 10;        // perturbed-argmax restarts on top of the given init
  int max_iterations = 50;  // block-descent iterations per run
  int temporal_passes = 10;
  std::uint64_t seed = 0x524C4159ULL;  // perturbation stream
};

struct InferenceDiagnostics {
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
  int restarts_used = 0;
};

// Single-frame MAP: block coordinate descent with QPBO on the binary block
// (constraint cliques folded to unary/pairwise penalties, ICM filling the
// unlabeled rest) and exact per-variable updates for multi-class and
// continuous variables, restarted from perturbed argmax inits. Never returns
// anything worse than `init`; returns a feasible labeling whenever the
// feasible set is nonempty.
Labeling minimize_energy(const EnergyModel& model, const Labeling& init,
                         const InferenceOptions& opts = {},
                         InferenceDiagnostics* diag = nullptr,
                         const DomainRestriction* restriction = nullptr);

// Exhaustive minimizer for verification; requires the (restricted) state
// space to hold at most 2^24 labelings. Ties break lexicographically.
Labeling minimize_energy_exact(const EnergyModel& model,
                               const DomainRestriction* restriction = nullptr);

// Temporal MAP: per-frame single-frame inference as initialization, then
// outer coordinate descent running an exact chain DP (Viterbi) per attribute
// until stable. Per-frame feasibility is preserved.
std::vector<Labeling> minimize_temporal(const EnergyModel& model,
                                        const InferenceOptions& opts = {},
                                        InferenceDiagnostics* diag = nullptr);

}  // namespace roadlayout
