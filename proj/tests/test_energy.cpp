#include "doctest.h"

#include <cmath>

#include "roadlayout/energy.hpp"
#include "roadlayout/oracle.hpp"
#include "roadlayout/rng.hpp"

using namespace roadlayout;

namespace {

AttributePrediction uniform_prediction(const std::array<BinSpec, kNumContinuous>& specs) {
  AttributePrediction pred;
  pred.binary.fill(0.5);
  for (auto& mc : pred.multiclass) mc.fill(1.0 / kLaneCountClasses);
  for (int m = 0; m < kNumContinuous; ++m) {
    int size = specs[m].distribution_size();
    pred.continuous[m].weights.assign(size, 1.0 / size);
  }
  return pred;
}

// A tiny hand-built model: two binaries and one 4-label variable, one
// pairwise term and one conflict clique.
EnergyModel toy_model() {
  EnergyModel m;
  m.frames = 1;
  m.domain_sizes = {2, 2, 4};
  m.kinds = {VarKind::kBinary, VarKind::kBinary, VarKind::kContinuous};
  m.unaries = {{0.3, 0.9}, {0.5, 0.1}, {0.4, 0.6, 0.2, 0.8}};
  PairwiseTerm t;
  t.i = 0;
  t.j = 1;
  t.cost = {{{0.1, 0.7}, {0.4, 0.2}}};
  m.pairwise = {t};
  ConstraintClique clique;
  clique.id = "toy";
  clique.vars = {0, 2};
  clique.conflict = [](std::span<const int> l) { return l[0] == 1 && l[1] == 0; };
  m.cliques.push_back(std::move(clique));
  m.weights.pairwise_scale = 1.0;
  m.weights.penalty = 100.0;
  return m;
}

Labeling random_labeling(const EnergyModel& model, SplitMix64& rng) {
  Labeling l(model.num_vars());
  for (int v = 0; v < model.num_vars(); ++v) {
    l[v] = static_cast<int>(rng.uniform() * model.domain_sizes[v]);
    l[v] = std::min(l[v], model.domain_sizes[v] - 1);
  }
  return l;
}

}  // namespace

TEST_CASE("energy matches the hand-summed terms on a toy model") {
  EnergyModel m = toy_model();
  // labeling (1, 0, 2): unaries 0.9 + 0.5 + 0.2, pairwise cost[1][0] = 0.4,
  // clique satisfied (l2 != 0).
  CHECK(energy_of(m, Labeling{1, 0, 2}) == doctest::Approx(0.9 + 0.5 + 0.2 + 0.4));
  // labeling (1, 1, 0): unaries 0.9 + 0.1 + 0.4, pairwise 0.2, clique violated.
  CHECK(energy_of(m, Labeling{1, 1, 0}) ==
        doctest::Approx(0.9 + 0.1 + 0.4 + 0.2 + 100.0));
  // labeling (0, 0, 0): clique fine.
  CHECK(energy_of(m, Labeling{0, 0, 0}) == doctest::Approx(0.3 + 0.5 + 0.4 + 0.1));
}

TEST_CASE("uniform inputs give every feasible labeling the same energy") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  AttributePrediction pred = uniform_prediction(specs);
  auto cooc = CooccurrenceTables::uniform();
  auto model = build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                            schema, specs);

  PriorConfig prior;
  double reference = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    SceneParams scene = sample_scene(prior, seed, schema);
    Labeling labels = params_to_labeling(scene, schema, specs);
    double e = energy_of(model, labels);
    CHECK(e < model.weights.penalty);
    if (seed == 0) {
      reference = e;
    } else {
      CHECK(e == doctest::Approx(reference).epsilon(1e-9));
    }
  }
}

TEST_CASE("violating q1 costs at least the penalty") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  PriorConfig prior;
  SceneParams scene = sample_scene(prior, 1, schema);
  NoiseConfig noise;
  noise.seed = 9;
  AttributePrediction pred = corrupt(scene, noise, schema, specs);
  auto cooc = CooccurrenceTables::uniform();
  auto model = build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                            schema, specs);

  Labeling labels = params_to_labeling(scene, schema, specs);
  labels[kVarBinaryOffset + kSideRoadLeft] = 1;
  labels[kVarContinuousOffset + kDistSideRoadLeft] = 0;  // inactive
  CHECK(energy_of(model, labels) >= model.weights.penalty);
}

TEST_CASE("single-variable flips change the energy by their local delta") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  PriorConfig prior;
  SceneParams scene = sample_scene(prior, 21, schema);
  NoiseConfig noise;
  noise.seed = 22;
  AttributePrediction pred = corrupt(scene, noise, schema, specs);
  auto batch = sample_batch(prior, 77, 200, schema);
  auto cooc = CooccurrenceTables::estimate(batch.scenes);
  auto model = build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                            schema, specs);

  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Labeling labels = random_labeling(model, rng);
    double base = energy_of(model, labels);
    int v = static_cast<int>(rng.uniform() * model.num_vars());
    v = std::min(v, model.num_vars() - 1);
    Labeling flipped = labels;
    flipped[v] = (labels[v] + 1) % model.domain_sizes[v];

    // Independent incremental recompute: only terms touching v.
    double delta = model.unary(0, v)[flipped[v]] - model.unary(0, v)[labels[v]];
    for (const auto& term : model.pairwise) {
      if (term.i != v && term.j != v) continue;
      delta -= model.weights.pairwise_scale * term.cost[labels[term.i]][labels[term.j]];
      delta +=
          model.weights.pairwise_scale * term.cost[flipped[term.i]][flipped[term.j]];
    }
    std::vector<int> scratch;
    for (const auto& clique : model.cliques) {
      bool touches = false;
      for (int cv : clique.vars) touches |= cv == v;
      if (!touches) continue;
      scratch.clear();
      for (int cv : clique.vars) scratch.push_back(labels[cv]);
      bool before = clique.conflict(scratch);
      scratch.clear();
      for (int cv : clique.vars) scratch.push_back(flipped[cv]);
      bool after = clique.conflict(scratch);
      delta += (after - before) * model.weights.penalty;
    }
    CHECK(energy_of(model, flipped) ==
          doctest::Approx(base + delta).epsilon(1e-9));
  }
}

TEST_CASE("temporal terms vanish on constant sequences and count changes") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  PriorConfig prior;
  SceneParams scene = sample_scene(prior, 8, schema);
  NoiseConfig noise;
  noise.seed = 31;
  auto frames = corrupt_sequence(scene, 4, noise, schema, specs);
  auto cooc = CooccurrenceTables::uniform();
  auto model = build_energy(frames, cooc, schema, specs);

  Labeling base = params_to_labeling(scene, schema, specs);
  std::vector<Labeling> constant(4, base);
  double per_frame = 0.0;
  for (int t = 0; t < 4; ++t) {
    auto view = build_energy(std::span<const AttributePrediction>(&frames[t], 1), cooc,
                             schema, specs);
    per_frame += energy_of(view, base);
  }
  CHECK(energy_of(model, constant) == doctest::Approx(per_frame).epsilon(1e-9));

  // Flipping one binary in two middle frames adds exactly lambda_disc per
  // transition crossed.
  std::vector<Labeling> wobble = constant;
  wobble[1][kVarBinaryOffset + kCrosswalkNear] ^= 1;
  wobble[2][kVarBinaryOffset + kCrosswalkNear] ^= 1;
  double unary_delta = 0.0;
  for (int t = 1; t <= 2; ++t) {
    int v = kVarBinaryOffset + kCrosswalkNear;
    unary_delta += model.unary(t, v)[wobble[t][v]] - model.unary(t, v)[constant[t][v]];
  }
  CHECK(energy_of(model, wobble) ==
        doctest::Approx(per_frame + unary_delta + 2.0 * model.weights.lambda_disc)
            .epsilon(1e-9));

  // A continuous bin step of d costs lambda_cont * min(d, tau) per transition.
  std::vector<Labeling> drift = constant;
  int cv = kVarContinuousOffset + kEgoLaneWidth;
  drift[3][cv] = constant[3][cv] + 3;
  double du = model.unary(3, cv)[drift[3][cv]] - model.unary(3, cv)[constant[3][cv]];
  CHECK(energy_of(model, drift) ==
        doctest::Approx(per_frame + du + model.weights.lambda_cont * 3.0)
            .epsilon(1e-9));
}

TEST_CASE("energy below the penalty is exactly feasibility") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  PriorConfig prior;
  SceneParams scene = sample_scene(prior, 13, schema);
  NoiseConfig noise;
  noise.seed = 40;
  AttributePrediction pred = corrupt(scene, noise, schema, specs);
  auto cooc = CooccurrenceTables::uniform();
  auto model = build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                            schema, specs);

  SplitMix64 rng(123);
  int feasible = 0;
  int infeasible = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Labeling labels;
    if (trial % 2 == 0) {
      labels = random_labeling(model, rng);
    } else {
      // Start feasible, then flip a coin on breaking one variable.
      labels = params_to_labeling(sample_scene(prior, trial, schema), schema, specs);
      if (rng.uniform() < 0.5) {
        int v = static_cast<int>(rng.uniform() * model.num_vars());
        v = std::min(v, model.num_vars() - 1);
        labels[v] = (labels[v] + 1) % model.domain_sizes[v];
      }
    }
    bool ok = validate(labeling_to_params(labels, schema, specs), schema).ok();
    bool cheap = energy_of(model, labels) < model.weights.penalty;
    CHECK(ok == cheap);
    ++(ok ? feasible : infeasible);
  }
  CHECK(feasible > 0);
  CHECK(infeasible > 0);
}

TEST_CASE("labelings and params convert back and forth") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  PriorConfig prior;
  for (int seed = 0; seed < 100; ++seed) {
    SceneParams scene = sample_scene(prior, seed, schema);
    Labeling labels = params_to_labeling(scene, schema, specs);
    SceneParams decoded = labeling_to_params(labels, schema, specs);
    CHECK(params_to_labeling(decoded, schema, specs) == labels);
    for (int m = 0; m < kNumContinuous; ++m) {
      CHECK(decoded.continuous[m].has_value() == scene.continuous[m].has_value());
      if (decoded.continuous[m]) {
        CHECK(std::abs(*decoded.continuous[m] - *scene.continuous[m]) <=
              0.5 * specs[m].bin_width() + 1e-12);
      }
    }
    CHECK(validate(decoded, schema).ok());
  }
}

TEST_CASE("a zero co-occurrence entry is an input error") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  AttributePrediction pred = uniform_prediction(specs);
  auto cooc = CooccurrenceTables::uniform();
  cooc.set_joint(2, 5, 0, 1, 0.0);
  CHECK_THROWS_AS(build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                               schema, specs),
                  std::runtime_error);
}

TEST_CASE("the penalty must dominate the soft energy") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  AttributePrediction pred = uniform_prediction(specs);
  auto cooc = CooccurrenceTables::uniform();
  CrfWeights weights;
  weights.penalty = 1.0;  // far below the achievable soft total
  CHECK_THROWS_AS(build_energy(std::span<const AttributePrediction>(&pred, 1), cooc,
                               schema, specs, weights),
                  std::runtime_error);

  // The default penalty clears the bound even for long sequences.
  std::vector<AttributePrediction> frames(50, pred);
  auto model = build_energy(frames, cooc, schema, specs);
  CHECK(model.weights.penalty == 1e9);
}

TEST_CASE("dimension mismatches are errors") {
  EnergyModel m = toy_model();
  CHECK_THROWS_AS(energy_of(m, Labeling{0, 0}), std::runtime_error);
  CHECK_THROWS_AS(energy_of(m, Labeling{0, 0, 9}), std::runtime_error);
}
