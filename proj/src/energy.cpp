#include "roadlayout/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadlayout {
namespace {

// Cheapest allowed label satisfying `want_active`; -1 when none exists.
int cheapest_activity_label(const std::vector<double>& unary,
                            const std::vector<int>& allowed, bool has_inactive,
                            bool want_active) {
  int best = -1;
  auto consider = [&](int label) {
    bool active = has_inactive ? label != 0 : true;
    if (active != want_active) return;
    if (best < 0 || unary[label] < unary[best]) best = label;
  };
  if (allowed.empty()) {
    for (int label = 0; label < static_cast<int>(unary.size()); ++label) consider(label);
  } else {
    for (int label : allowed) consider(label);
  }
  return best;
}

bool label_allowed(const std::vector<int>& allowed, int label) {
  if (allowed.empty()) return true;
  for (int a : allowed) {
    if (a == label) return true;
  }
  return false;
}

int cheapest_count_at_least(const std::vector<double>& unary,
                            const std::vector<int>& allowed, int min_count) {
  int best = -1;
  auto consider = [&](int label) {
    if (label < min_count) return;
    if (best < 0 || unary[label] < unary[best]) best = label;
  };
  if (allowed.empty()) {
    for (int label = 0; label < static_cast<int>(unary.size()); ++label) consider(label);
  } else {
    for (int label : allowed) consider(label);
  }
  return best;
}

ConstraintClique make_clique(const ConstraintDef& def,
                             const std::array<BinSpec, kNumContinuous>& specs) {
  ConstraintClique clique;
  clique.id = def.id;
  switch (def.kind) {
    case ConstraintDef::kBinaryActivity: {
      bool has_inactive = specs[def.b].has_inactive;
      clique.vars = {kVarBinaryOffset + def.a, kVarContinuousOffset + def.b};
      clique.conflict = [has_inactive](std::span<const int> l) {
        bool active = has_inactive ? l[1] != 0 : true;
        return (l[0] == 1) != active;
      };
      clique.repair = [has_inactive](std::span<int> l,
                                     std::span<const std::vector<double>> u,
                                     std::span<const std::vector<int>> allowed) {
        int label = cheapest_activity_label(u[1], allowed[1], has_inactive, l[0] == 1);
        if (label >= 0) l[1] = label;
      };
      break;
    }
    case ConstraintDef::kTwoWayNeedsLeftLane:
      clique.vars = {kVarBinaryOffset + def.a, kVarMulticlassOffset + def.b};
      clique.conflict = [](std::span<const int> l) { return l[0] == 0 && l[1] == 0; };
      clique.repair = [](std::span<int> l, std::span<const std::vector<double>> u,
                         std::span<const std::vector<int>> allowed) {
        int label = cheapest_count_at_least(u[1], allowed[1], 1);
        if (label >= 0) {
          l[1] = label;
        } else if (label_allowed(allowed[0], 1)) {
          l[0] = 1;
        }
      };
      break;
    case ConstraintDef::kMedianNeedsLeftLane:
      clique.vars = {kVarBinaryOffset + def.a, kVarMulticlassOffset + def.b};
      clique.conflict = [](std::span<const int> l) { return l[0] == 1 && l[1] == 0; };
      clique.repair = [](std::span<int> l, std::span<const std::vector<double>>,
                         std::span<const std::vector<int>> allowed) {
        if (label_allowed(allowed[0], 0)) l[0] = 0;
      };
      break;
    case ConstraintDef::kImplies:
      clique.vars = {kVarBinaryOffset + def.a, kVarBinaryOffset + def.b};
      clique.conflict = [](std::span<const int> l) { return l[0] == 1 && l[1] == 0; };
      clique.repair = [](std::span<int> l, std::span<const std::vector<double>>,
                         std::span<const std::vector<int>> allowed) {
        if (label_allowed(allowed[0], 0)) l[0] = 0;
      };
      break;
    case ConstraintDef::kMutualExclusion:
      clique.vars = {kVarBinaryOffset + def.a, kVarBinaryOffset + def.b};
      clique.conflict = [](std::span<const int> l) { return l[0] == 1 && l[1] == 1; };
      clique.repair = [](std::span<int> l, std::span<const std::vector<double>>,
                         std::span<const std::vector<int>> allowed) {
        if (label_allowed(allowed[0], 0)) l[0] = 0;
      };
      break;
    case ConstraintDef::kNeedsAnySideRoad:
      clique.vars = {kVarBinaryOffset + def.a, kVarBinaryOffset + def.b,
                     kVarBinaryOffset + def.c};
      clique.conflict = [](std::span<const int> l) {
        return l[0] == 1 && l[1] == 0 && l[2] == 0;
      };
      clique.repair = [](std::span<int> l, std::span<const std::vector<double>>,
                         std::span<const std::vector<int>> allowed) {
        if (label_allowed(allowed[0], 0)) l[0] = 0;
      };
      break;
    case ConstraintDef::kLaneSlotActivity: {
      bool has_inactive = specs[def.b].has_inactive;
      int slot = def.slot;
      clique.vars = {kVarMulticlassOffset + def.a, kVarContinuousOffset + def.b};
      clique.conflict = [has_inactive, slot](std::span<const int> l) {
        bool active = has_inactive ? l[1] != 0 : true;
        return (l[0] >= slot) != active;
      };
      clique.repair = [has_inactive, slot](std::span<int> l,
                                           std::span<const std::vector<double>> u,
                                           std::span<const std::vector<int>> allowed) {
        int label = cheapest_activity_label(u[1], allowed[1], has_inactive, l[0] >= slot);
        if (label >= 0) l[1] = label;
      };
      break;
    }
  }
  return clique;
}

}  // namespace

EnergyModel build_energy(std::span<const AttributePrediction> frames,
                         const CooccurrenceTables& cooc, const AttributeSchema& schema,
                         const std::array<BinSpec, kNumContinuous>& specs,
                         const CrfWeights& weights) {
  if (frames.empty()) {
    throw std::runtime_error("build_energy needs at least one prediction frame");
  }

  EnergyModel model;
  model.frames = static_cast<int>(frames.size());
  model.weights = weights;
  model.domain_sizes.reserve(kNumAttributes);
  model.kinds.reserve(kNumAttributes);
  for (int i = 0; i < kNumBinary; ++i) {
    model.domain_sizes.push_back(2);
    model.kinds.push_back(VarKind::kBinary);
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    model.domain_sizes.push_back(schema.multiclass_domain[m]);
    model.kinds.push_back(VarKind::kMulticlass);
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    model.domain_sizes.push_back(specs[m].distribution_size());
    model.kinds.push_back(VarKind::kContinuous);
  }

  model.unaries.reserve(static_cast<std::size_t>(model.frames) * kNumAttributes);
  for (const auto& pred : frames) {
    validate_prediction(pred, specs);
    for (int i = 0; i < kNumBinary; ++i) {
      double p = pred.binary[i];
      model.unaries.push_back({neg_log_prob(1.0 - p), neg_log_prob(p)});
    }
    for (int m = 0; m < kNumMulticlass; ++m) {
      std::vector<double> u(kLaneCountClasses);
      for (int k = 0; k < kLaneCountClasses; ++k) {
        u[k] = neg_log_prob(pred.multiclass[m][k]);
      }
      model.unaries.push_back(std::move(u));
    }
    for (int m = 0; m < kNumContinuous; ++m) {
      const auto& w = pred.continuous[m].weights;
      std::vector<double> u(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) {
        u[k] = neg_log_prob(w[k]);
      }
      model.unaries.push_back(std::move(u));
    }
  }

  for (int i = 0; i < kNumBinary; ++i) {
    for (int j = i + 1; j < kNumBinary; ++j) {
      PairwiseTerm term;
      term.i = kVarBinaryOffset + i;
      term.j = kVarBinaryOffset + j;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          double p = cooc.joint(i, j, a, b);
          if (!(p > 0.0)) {
            throw std::runtime_error("co-occurrence table has a zero entry at (" +
                                     schema.binary_names[i] + ", " +
                                     schema.binary_names[j] + ")");
          }
          term.cost[a][b] = -std::log(p);
        }
      }
      model.pairwise.push_back(term);
    }
  }

  model.cliques.reserve(schema.constraints.size());
  for (const auto& def : schema.constraints) {
    model.cliques.push_back(make_clique(def, specs));
  }

  // The penalty must dominate every conflict-free energy, otherwise the
  // feasibility <-> "below penalty" equivalence breaks.
  double soft_bound = 0.0;
  for (const auto& u : model.unaries) {
    soft_bound += *std::max_element(u.begin(), u.end());
  }
  double pair_bound = 0.0;
  for (const auto& term : model.pairwise) {
    for (const auto& row : term.cost) {
      pair_bound = std::max(pair_bound, weights.pairwise_scale *
                                            *std::max_element(row.begin(), row.end()));
    }
  }
  soft_bound += model.frames * pair_bound * static_cast<double>(model.pairwise.size());
  double step_bound = std::max(weights.lambda_disc,
                               weights.lambda_cont * weights.tau_bins);
  soft_bound += (model.frames - 1) * kNumAttributes * step_bound;
  if (!(weights.penalty > soft_bound)) {
    throw std::runtime_error("constraint penalty does not dominate the soft energy");
  }
  return model;
}

double temporal_cost(const EnergyModel& model, int var, int label_a, int label_b) {
  if (model.kinds[var] == VarKind::kContinuous) {
    double d = std::abs(static_cast<double>(label_a - label_b));
    return model.weights.lambda_cont * std::min(d, model.weights.tau_bins);
  }
  return label_a != label_b ? model.weights.lambda_disc : 0.0;
}

double energy_of(const EnergyModel& model, std::span<const Labeling> labelings) {
  if (static_cast<int>(labelings.size()) != model.frames) {
    throw std::runtime_error("energy_of: frame count mismatch");
  }
  int n = model.num_vars();
  for (const auto& labels : labelings) {
    if (static_cast<int>(labels.size()) != n) {
      throw std::runtime_error("energy_of: variable count mismatch");
    }
    for (int v = 0; v < n; ++v) {
      if (labels[v] < 0 || labels[v] >= model.domain_sizes[v]) {
        throw std::runtime_error("energy_of: label outside domain");
      }
    }
  }

  double energy = 0.0;
  std::vector<int> clique_labels;
  for (int t = 0; t < model.frames; ++t) {
    const auto& labels = labelings[t];
    for (int v = 0; v < n; ++v) {
      energy += model.unary(t, v)[labels[v]];
    }
    for (const auto& term : model.pairwise) {
      energy +=
          model.weights.pairwise_scale * term.cost[labels[term.i]][labels[term.j]];
    }
    for (const auto& clique : model.cliques) {
      clique_labels.clear();
      for (int v : clique.vars) clique_labels.push_back(labels[v]);
      if (clique.conflict(clique_labels)) energy += model.weights.penalty;
    }
    if (t + 1 < model.frames) {
      const auto& next = labelings[t + 1];
      for (int v = 0; v < n; ++v) {
        energy += temporal_cost(model, v, labels[v], next[v]);
      }
    }
  }
  return energy;
}

double energy_of(const EnergyModel& model, const Labeling& labeling) {
  return energy_of(model, std::span<const Labeling>(&labeling, 1));
}

Labeling argmax_labels(const EnergyModel& model, int frame) {
  Labeling labels(model.num_vars());
  for (int v = 0; v < model.num_vars(); ++v) {
    const auto& u = model.unary(frame, v);
    int best = 0;
    for (int k = 1; k < static_cast<int>(u.size()); ++k) {
      if (u[k] < u[best]) best = k;
    }
    labels[v] = best;
  }
  return labels;
}

SceneParams labeling_to_params(const Labeling& labels, const AttributeSchema& schema,
                               const std::array<BinSpec, kNumContinuous>& specs) {
  if (static_cast<int>(labels.size()) != kNumAttributes) {
    throw std::runtime_error("labeling has wrong variable count");
  }
  SceneParams p;
  for (int i = 0; i < kNumBinary; ++i) {
    p.binary[i] = labels[kVarBinaryOffset + i] == 1;
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    p.multiclass[m] = labels[kVarMulticlassOffset + m];
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    int label = labels[kVarContinuousOffset + m];
    if (specs[m].has_inactive && label == 0) {
      p.continuous[m] = std::nullopt;
    } else {
      p.continuous[m] = specs[m].center(specs[m].active_bin_of_label(label));
    }
  }
  (void)schema;
  return p;
}

Labeling params_to_labeling(const SceneParams& params, const AttributeSchema& schema,
                            const std::array<BinSpec, kNumContinuous>& specs) {
  Labeling labels(kNumAttributes);
  for (int i = 0; i < kNumBinary; ++i) {
    labels[kVarBinaryOffset + i] = params.binary[i] ? 1 : 0;
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    labels[kVarMulticlassOffset + m] = params.multiclass[m];
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    if (params.continuous[m]) {
      labels[kVarContinuousOffset + m] = specs[m].label_of_value(*params.continuous[m]);
    } else {
      if (!specs[m].has_inactive) {
        throw std::runtime_error("inactive value for " + schema.continuous[m].name +
                                 " which is always active");
      }
      labels[kVarContinuousOffset + m] = 0;
    }
  }
  return labels;
}

}  // namespace roadlayout
