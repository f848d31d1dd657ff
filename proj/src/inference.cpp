#include "roadlayout/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roadlayout/qpbo.hpp"
#include "roadlayout/rng.hpp"

namespace roadlayout {
namespace {

constexpr double kImprovementEps = 1e-12;

struct Adjacency {
  std::vector<std::vector<int>> pairwise_of;
  std::vector<std::vector<int>> cliques_of;

  explicit Adjacency(const EnergyModel& model)
      : pairwise_of(model.num_vars()), cliques_of(model.num_vars()) {
    for (int k = 0; k < static_cast<int>(model.pairwise.size()); ++k) {
      pairwise_of[model.pairwise[k].i].push_back(k);
      pairwise_of[model.pairwise[k].j].push_back(k);
    }
    for (int k = 0; k < static_cast<int>(model.cliques.size()); ++k) {
      for (int v : model.cliques[k].vars) cliques_of[v].push_back(k);
    }
  }
};

class SingleFrameState {
 public:
  SingleFrameState(const EnergyModel& model, const Adjacency& adj)
      : model_(model), adj_(adj) {}

  // Energy difference of setting var -> label in `labels` (frame 0 terms only).
  double delta(const Labeling& labels, int var, int label) const {
    int old_label = labels[var];
    if (label == old_label) return 0.0;
    double d = model_.unary(0, var)[label] - model_.unary(0, var)[old_label];
    for (int k : adj_.pairwise_of[var]) {
      const auto& term = model_.pairwise[k];
      int other = term.i == var ? labels[term.j] : labels[term.i];
      if (term.i == var) {
        d += model_.weights.pairwise_scale *
             (term.cost[label][other] - term.cost[old_label][other]);
      } else {
        d += model_.weights.pairwise_scale *
             (term.cost[other][label] - term.cost[other][old_label]);
      }
    }
    std::array<int, 4> scratch;
    for (int k : adj_.cliques_of[var]) {
      const auto& clique = model_.cliques[k];
      int size = static_cast<int>(clique.vars.size());
      for (int s = 0; s < size; ++s) scratch[s] = labels[clique.vars[s]];
      bool before = clique.conflict(std::span<const int>(scratch.data(), size));
      for (int s = 0; s < size; ++s) {
        if (clique.vars[s] == var) scratch[s] = label;
      }
      bool after = clique.conflict(std::span<const int>(scratch.data(), size));
      if (before != after) {
        d += after ? model_.weights.penalty : -model_.weights.penalty;
      }
    }
    return d;
  }

 private:
  const EnergyModel& model_;
  const Adjacency& adj_;
};

std::vector<std::vector<int>> materialize_allowed(const EnergyModel& model,
                                                  const DomainRestriction* restriction) {
  std::vector<std::vector<int>> allowed(model.num_vars());
  if (restriction != nullptr && !restriction->allowed.empty()) {
    if (static_cast<int>(restriction->allowed.size()) != model.num_vars()) {
      throw std::runtime_error("domain restriction has wrong variable count");
    }
    allowed = restriction->allowed;
    for (int v = 0; v < model.num_vars(); ++v) {
      for (int label : allowed[v]) {
        if (label < 0 || label >= model.domain_sizes[v]) {
          throw std::runtime_error("domain restriction label outside domain");
        }
      }
    }
  }
  return allowed;
}

void check_labeling(const EnergyModel& model, const Labeling& labels,
                    const std::vector<std::vector<int>>& allowed) {
  if (static_cast<int>(labels.size()) != model.num_vars()) {
    throw std::runtime_error("labeling has wrong variable count");
  }
  for (int v = 0; v < model.num_vars(); ++v) {
    if (labels[v] < 0 || labels[v] >= model.domain_sizes[v]) {
      throw std::runtime_error("label outside domain");
    }
    if (!allowed[v].empty() &&
        std::find(allowed[v].begin(), allowed[v].end(), labels[v]) ==
            allowed[v].end()) {
      throw std::runtime_error("label outside the domain restriction");
    }
  }
}

template <typename Fn>
void for_each_allowed(const EnergyModel& model,
                      const std::vector<std::vector<int>>& allowed, int var, Fn&& fn) {
  if (allowed[var].empty()) {
    for (int label = 0; label < model.domain_sizes[var]; ++label) fn(label);
  } else {
    for (int label : allowed[var]) fn(label);
  }
}

bool binary_is_free(const EnergyModel& model,
                    const std::vector<std::vector<int>>& allowed, int var) {
  return model.kinds[var] == VarKind::kBinary &&
         (allowed[var].empty() || allowed[var].size() == 2);
}

// One QPBO pass over the binary block: model pairwise plus the constraint
// cliques reduced against the current multi-class/continuous labels. Cliques
// with three free binaries stay out; the ICM sweep covers them.
bool qpbo_pass(const EnergyModel& model, const Adjacency& adj,
               const SingleFrameState& state,
               const std::vector<std::vector<int>>& allowed, Labeling& labels,
               double& energy) {
  int n = model.num_vars();
  std::vector<int> block;  // free binary vars
  std::vector<int> slot(n, -1);
  for (int v = 0; v < n; ++v) {
    if (binary_is_free(model, allowed, v)) {
      slot[v] = static_cast<int>(block.size());
      block.push_back(v);
    }
  }
  if (block.empty()) return false;

  std::vector<std::array<double, 2>> unaries(block.size());
  for (std::size_t b = 0; b < block.size(); ++b) {
    const auto& u = model.unary(0, block[b]);
    unaries[b] = {u[0], u[1]};
  }
  std::vector<BinaryPairTerm> terms;
  for (const auto& term : model.pairwise) {
    bool free_i = slot[term.i] >= 0;
    bool free_j = slot[term.j] >= 0;
    if (free_i && free_j) {
      BinaryPairTerm t;
      t.i = slot[term.i];
      t.j = slot[term.j];
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          t.cost[a][b] = model.weights.pairwise_scale * term.cost[a][b];
        }
      }
      terms.push_back(t);
    } else if (free_i) {
      int other = labels[term.j];
      for (int a = 0; a < 2; ++a) {
        unaries[slot[term.i]][a] += model.weights.pairwise_scale * term.cost[a][other];
      }
    } else if (free_j) {
      int other = labels[term.i];
      for (int b = 0; b < 2; ++b) {
        unaries[slot[term.j]][b] += model.weights.pairwise_scale * term.cost[other][b];
      }
    }
  }

  std::array<int, 4> scratch;
  for (const auto& clique : model.cliques) {
    int size = static_cast<int>(clique.vars.size());
    std::vector<int> free_pos;
    for (int s = 0; s < size; ++s) {
      if (slot[clique.vars[s]] >= 0) free_pos.push_back(s);
    }
    if (free_pos.empty() || free_pos.size() > 2) continue;
    for (int s = 0; s < size; ++s) scratch[s] = labels[clique.vars[s]];
    if (free_pos.size() == 1) {
      int s0 = free_pos[0];
      for (int a = 0; a < 2; ++a) {
        scratch[s0] = a;
        if (clique.conflict(std::span<const int>(scratch.data(), size))) {
          unaries[slot[clique.vars[s0]]][a] += model.weights.penalty;
        }
      }
      scratch[s0] = labels[clique.vars[s0]];
    } else {
      int s0 = free_pos[0];
      int s1 = free_pos[1];
      BinaryPairTerm t;
      t.i = slot[clique.vars[s0]];
      t.j = slot[clique.vars[s1]];
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          scratch[s0] = a;
          scratch[s1] = b;
          t.cost[a][b] =
              clique.conflict(std::span<const int>(scratch.data(), size))
                  ? model.weights.penalty
                  : 0.0;
        }
      }
      scratch[s0] = labels[clique.vars[s0]];
      scratch[s1] = labels[clique.vars[s1]];
      terms.push_back(t);
    }
  }

  PartialLabeling partial = qpbo(unaries, terms);
  Labeling candidate = labels;
  bool any = false;
  for (std::size_t b = 0; b < block.size(); ++b) {
    if (partial.labels[b] >= 0 && candidate[block[b]] != partial.labels[b]) {
      candidate[block[b]] = partial.labels[b];
      any = true;
    }
  }
  if (!any) return false;
  double cand_energy = energy_of(model, candidate);
  if (cand_energy < energy - kImprovementEps) {
    labels = std::move(candidate);
    energy = cand_energy;
    return true;
  }
  (void)state;
  (void)adj;
  return false;
}

// Greedy sweeps: ICM over binaries, exact per-variable minimization over
// multi-class and continuous variables. Strictly decreasing.
bool greedy_pass(const EnergyModel& model, const SingleFrameState& state,
                 const std::vector<std::vector<int>>& allowed, Labeling& labels,
                 double& energy) {
  bool improved_any = false;
  bool improved = true;
  while (improved) {
    improved = false;
    for (int v = 0; v < model.num_vars(); ++v) {
      double best_delta = -kImprovementEps;
      int best_label = -1;
      for_each_allowed(model, allowed, v, [&](int label) {
        if (label == labels[v]) return;
        double d = state.delta(labels, v, label);
        if (d < best_delta) {
          best_delta = d;
          best_label = label;
        }
      });
      if (best_label >= 0) {
        labels[v] = best_label;
        energy += best_delta;
        improved = true;
        improved_any = true;
      }
    }
  }
  return improved_any;
}

// Resolves violated cliques in catalog order using their declarative repair
// rules. The road catalog settles within a few passes.
Labeling repair_labeling(const EnergyModel& model, const Labeling& start,
                         const std::vector<std::vector<int>>& allowed) {
  Labeling labels = start;
  for (int pass = 0; pass < 5; ++pass) {
    bool violated = false;
    for (const auto& clique : model.cliques) {
      int size = static_cast<int>(clique.vars.size());
      std::vector<int> local(size);
      for (int s = 0; s < size; ++s) local[s] = labels[clique.vars[s]];
      if (!clique.conflict(local)) continue;
      violated = true;
      if (!clique.repair) continue;
      std::vector<std::vector<double>> unaries(size);
      std::vector<std::vector<int>> allowed_local(size);
      for (int s = 0; s < size; ++s) {
        unaries[s] = model.unary(0, clique.vars[s]);
        allowed_local[s] = allowed[clique.vars[s]];
      }
      clique.repair(local, unaries, allowed_local);
      for (int s = 0; s < size; ++s) labels[clique.vars[s]] = local[s];
    }
    if (!violated) break;
  }
  return labels;
}

struct DescentResult {
  Labeling labels;
  double energy = 0.0;
  int iterations = 0;
};

DescentResult descend(const EnergyModel& model, const Adjacency& adj,
                      const std::vector<std::vector<int>>& allowed, Labeling start,
                      const InferenceOptions& opts) {
  SingleFrameState state(model, adj);
  DescentResult res;
  res.labels = std::move(start);
  res.energy = energy_of(model, res.labels);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    ++res.iterations;
    bool changed = qpbo_pass(model, adj, state, allowed, res.labels, res.energy);
    changed |= greedy_pass(model, state, allowed, res.labels, res.energy);
    res.energy = energy_of(model, res.labels);  // squash accumulated drift
    if (!changed) break;
  }
  return res;
}

Labeling argmax_allowed(const EnergyModel& model,
                        const std::vector<std::vector<int>>& allowed, int frame) {
  Labeling labels(model.num_vars());
  for (int v = 0; v < model.num_vars(); ++v) {
    const auto& u = model.unary(frame, v);
    int best = -1;
    for_each_allowed(model, allowed, v, [&](int label) {
      if (best < 0 || u[label] < u[best]) best = label;
    });
    labels[v] = best;
  }
  return labels;
}

EnergyModel frame_view(const EnergyModel& model, int frame) {
  EnergyModel view;
  view.frames = 1;
  view.domain_sizes = model.domain_sizes;
  view.kinds = model.kinds;
  view.pairwise = model.pairwise;
  view.cliques = model.cliques;
  view.weights = model.weights;
  view.unaries.assign(
      model.unaries.begin() + static_cast<std::size_t>(frame) * model.num_vars(),
      model.unaries.begin() + static_cast<std::size_t>(frame + 1) * model.num_vars());
  return view;
}

}  // namespace

Labeling minimize_energy(const EnergyModel& model, const Labeling& init,
                         const InferenceOptions& opts, InferenceDiagnostics* diag,
                         const DomainRestriction* restriction) {
  if (model.frames != 1) {
    throw std::runtime_error("minimize_energy expects a single-frame model");
  }
  auto allowed = materialize_allowed(model, restriction);
  check_labeling(model, init, allowed);
  Adjacency adj(model);

  double init_energy = energy_of(model, init);
  DescentResult best = descend(model, adj, allowed, init, opts);
  int iterations = best.iterations;

  Labeling argmax0 = argmax_allowed(model, allowed, 0);
  for (int r = 0; r < opts.restarts; ++r) {
    SplitMix64 rng(split_seed(opts.seed, static_cast<std::uint64_t>(r)));
    Labeling start = argmax0;
    for (int v = 0; v < model.num_vars(); ++v) {
      if (rng.uniform() < 0.2) {
        int count = allowed[v].empty() ? model.domain_sizes[v]
                                       : static_cast<int>(allowed[v].size());
        int pick = static_cast<int>(rng.uniform() * count);
        pick = std::min(pick, count - 1);
        start[v] = allowed[v].empty() ? pick : allowed[v][pick];
      }
    }
    DescentResult cand = descend(model, adj, allowed, std::move(start), opts);
    iterations += cand.iterations;
    if (cand.energy < best.energy - kImprovementEps) {
      best = std::move(cand);
    }
  }

  // If every run got stuck above the penalty, project onto the feasible set
  // and descend from there; any feasible labeling beats an infeasible one.
  if (best.energy >= model.weights.penalty) {
    Labeling repaired = repair_labeling(model, best.labels, allowed);
    DescentResult cand = descend(model, adj, allowed, std::move(repaired), opts);
    iterations += cand.iterations;
    if (cand.energy < best.energy) {
      best = std::move(cand);
    }
  }

  if (best.energy > init_energy) {
    best.labels = init;
    best.energy = init_energy;
  }
  if (diag != nullptr) {
    diag->initial_energy = init_energy;
    diag->final_energy = best.energy;
    diag->iterations = iterations;
    diag->restarts_used = opts.restarts + 1;
  }
  return best.labels;
}

Labeling minimize_energy_exact(const EnergyModel& model,
                               const DomainRestriction* restriction) {
  if (model.frames != 1) {
    throw std::runtime_error("minimize_energy_exact expects a single-frame model");
  }
  auto allowed = materialize_allowed(model, restriction);
  int n = model.num_vars();

  double states = 1.0;
  for (int v = 0; v < n; ++v) {
    states *= allowed[v].empty() ? model.domain_sizes[v]
                                 : static_cast<double>(allowed[v].size());
    if (states > static_cast<double>(1 << 24)) {
      throw std::runtime_error("instance too large for exhaustive minimization");
    }
  }

  // Terms attach to their highest-indexed variable so each DFS level adds a
  // fully determined partial cost.
  std::vector<std::vector<int>> pairwise_at(n);
  std::vector<std::vector<int>> cliques_at(n);
  for (int k = 0; k < static_cast<int>(model.pairwise.size()); ++k) {
    pairwise_at[std::max(model.pairwise[k].i, model.pairwise[k].j)].push_back(k);
  }
  for (int k = 0; k < static_cast<int>(model.cliques.size()); ++k) {
    int top = 0;
    for (int v : model.cliques[k].vars) top = std::max(top, v);
    cliques_at[top].push_back(k);
  }

  bool nonnegative = model.weights.penalty >= 0.0 && model.weights.pairwise_scale >= 0.0;
  for (const auto& u : model.unaries) {
    for (double x : u) nonnegative &= x >= 0.0;
  }
  for (const auto& t : model.pairwise) {
    for (const auto& row : t.cost) {
      for (double x : row) nonnegative &= x >= 0.0;
    }
  }

  Labeling current(n, 0);
  Labeling best;
  double best_energy = std::numeric_limits<double>::infinity();
  std::array<int, 4> scratch;

  auto level_cost = [&](int v) {
    double cost = model.unary(0, v)[current[v]];
    for (int k : pairwise_at[v]) {
      const auto& term = model.pairwise[k];
      cost += model.weights.pairwise_scale * term.cost[current[term.i]][current[term.j]];
    }
    for (int k : cliques_at[v]) {
      const auto& clique = model.cliques[k];
      int size = static_cast<int>(clique.vars.size());
      for (int s = 0; s < size; ++s) scratch[s] = current[clique.vars[s]];
      if (clique.conflict(std::span<const int>(scratch.data(), size))) {
        cost += model.weights.penalty;
      }
    }
    return cost;
  };

  auto dfs = [&](auto&& self, int v, double partial) -> void {
    if (nonnegative && partial >= best_energy) return;
    if (v == n) {
      if (partial < best_energy) {
        best_energy = partial;
        best = current;
      }
      return;
    }
    for_each_allowed(model, allowed, v, [&](int label) {
      current[v] = label;
      self(self, v + 1, partial + level_cost(v));
    });
  };
  dfs(dfs, 0, 0.0);
  return best;
}

std::vector<Labeling> minimize_temporal(const EnergyModel& model,
                                        const InferenceOptions& opts,
                                        InferenceDiagnostics* diag) {
  if (model.frames < 1) {
    throw std::runtime_error("temporal inference needs at least one frame");
  }
  if (model.frames == 1) {
    Labeling single = minimize_energy(model, argmax_labels(model, 0), opts, diag);
    return {single};
  }

  int n = model.num_vars();
  int frames = model.frames;

  std::vector<Labeling> argmax_init(frames);
  for (int t = 0; t < frames; ++t) argmax_init[t] = argmax_labels(model, t);
  double initial_energy = energy_of(model, argmax_init);

  std::vector<Labeling> labels(frames);
  int iterations = 0;
  for (int t = 0; t < frames; ++t) {
    EnergyModel view = frame_view(model, t);
    InferenceDiagnostics frame_diag;
    labels[t] = minimize_energy(view, argmax_init[t], opts, &frame_diag);
    iterations += frame_diag.iterations;
  }

  Adjacency adj(model);
  std::array<int, 4> scratch;
  auto effective_unary = [&](int t, int v, int label) {
    double cost = model.unary(t, v)[label];
    const auto& frame = labels[t];
    for (int k : adj.pairwise_of[v]) {
      const auto& term = model.pairwise[k];
      if (term.i == v) {
        cost += model.weights.pairwise_scale * term.cost[label][frame[term.j]];
      } else {
        cost += model.weights.pairwise_scale * term.cost[frame[term.i]][label];
      }
    }
    for (int k : adj.cliques_of[v]) {
      const auto& clique = model.cliques[k];
      int size = static_cast<int>(clique.vars.size());
      for (int s = 0; s < size; ++s) {
        scratch[s] = clique.vars[s] == v ? label : frame[clique.vars[s]];
      }
      if (clique.conflict(std::span<const int>(scratch.data(), size))) {
        cost += model.weights.penalty;
      }
    }
    return cost;
  };

  int domain_max = *std::max_element(model.domain_sizes.begin(),
                                     model.domain_sizes.end());
  std::vector<double> dp(static_cast<std::size_t>(frames) * domain_max);
  std::vector<int> back(static_cast<std::size_t>(frames) * domain_max);

  for (int pass = 0; pass < opts.temporal_passes; ++pass) {
    ++iterations;
    bool changed = false;
    for (int v = 0; v < n; ++v) {
      int d = model.domain_sizes[v];
      // Cost of the current chain for this attribute, same terms as the DP.
      double current_cost = 0.0;
      for (int t = 0; t < frames; ++t) {
        current_cost += effective_unary(t, v, labels[t][v]);
        if (t + 1 < frames) {
          current_cost += temporal_cost(model, v, labels[t][v], labels[t + 1][v]);
        }
      }

      for (int label = 0; label < d; ++label) {
        dp[label] = effective_unary(0, v, label);
      }
      for (int t = 1; t < frames; ++t) {
        for (int label = 0; label < d; ++label) {
          double best = std::numeric_limits<double>::infinity();
          int best_prev = 0;
          for (int prev = 0; prev < d; ++prev) {
            double cost = dp[(t - 1) * domain_max + prev] +
                          temporal_cost(model, v, prev, label);
            if (cost < best) {
              best = cost;
              best_prev = prev;
            }
          }
          dp[t * domain_max + label] = best + effective_unary(t, v, label);
          back[t * domain_max + label] = best_prev;
        }
      }
      double best_total = std::numeric_limits<double>::infinity();
      int best_label = 0;
      for (int label = 0; label < d; ++label) {
        if (dp[(frames - 1) * domain_max + label] < best_total) {
          best_total = dp[(frames - 1) * domain_max + label];
          best_label = label;
        }
      }
      if (best_total < current_cost - kImprovementEps) {
        for (int t = frames - 1; t >= 0; --t) {
          labels[t][v] = best_label;
          if (t > 0) best_label = back[t * domain_max + best_label];
        }
        changed = true;
      }
    }
    if (!changed) break;
  }

  if (diag != nullptr) {
    diag->initial_energy = initial_energy;
    diag->final_energy = energy_of(model, labels);
    diag->iterations = iterations;
    diag->restarts_used = opts.restarts + 1;
  }
  return labels;
}

}  // namespace roadlayout
