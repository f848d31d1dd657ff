#include "doctest.h"

#include <cmath>

#include "roadlayout/bins.hpp"
#include "roadlayout/rng.hpp"

using namespace roadlayout;

namespace {

BinSpec plain_spec(int bins, double lo, double hi, double sigma) {
  BinSpec s;
  s.bins = bins;
  s.min_value = lo;
  s.max_value = hi;
  s.sigma = sigma;
  s.has_inactive = false;
  return s;
}

}  // namespace

TEST_CASE("vanishing sigma recovers a one-hot at the bin center") {
  BinSpec spec = plain_spec(16, 0.0, 16.0, 1e-9);
  BinDistribution d = discretize(7.5, spec);  // center of bin 7
  for (int j = 0; j < 16; ++j) {
    CHECK(d.weights[j] == doctest::Approx(j == 7 ? 1.0 : 0.0));
  }
}

TEST_CASE("weights are normalized") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    BinSpec spec = plain_spec(2 + static_cast<int>(rng.uniform() * 63), 0.0,
                              1.0 + rng.uniform() * 10.0,
                              0.01 + rng.uniform());
    BinDistribution d = discretize(rng.uniform(spec.min_value, spec.max_value), spec);
    double sum = 0.0;
    for (double w : d.weights) {
      CHECK(std::isfinite(w));
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  // Inactive one-hot sums exactly too.
  BinSpec spec = plain_spec(8, 0.0, 8.0, 1.0);
  spec.has_inactive = true;
  BinDistribution d = discretize(std::nullopt, spec);
  CHECK(d.weights[0] == 1.0);
  CHECK(d.weights.size() == 9);
}

TEST_CASE("K=64 over [0,64]: value 10.3 lands in bin 10 and matches the Gaussian") {
  BinSpec spec = plain_spec(64, 0.0, 64.0, 1.0);  // sigma = one bin width
  BinDistribution d = discretize(10.3, spec);
  CHECK(argmax_weight_index(d) == 10);

  // Independent direct evaluation.
  double z = 0.0;
  std::vector<double> expected(64);
  for (int j = 0; j < 64; ++j) {
    double c = j + 0.5;
    expected[j] = std::exp(-0.5 * (c - 10.3) * (c - 10.3));
    z += expected[j];
  }
  for (int j = 0; j < 64; ++j) {
    CHECK(std::abs(d.weights[j] - expected[j] / z) <= 1e-12);
  }
}

TEST_CASE("expectation decode stays within half a bin away from the edges") {
  BinSpec spec = plain_spec(64, 2.5, 5.0, (5.0 - 2.5) / 64.0);
  double width = spec.bin_width();
  SplitMix64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    double v = rng.uniform(spec.min_value + 3 * width, spec.max_value - 3 * width);
    auto decoded = decode_expectation(discretize(v, spec), spec);
    REQUIRE(decoded.has_value());
    CHECK(std::abs(*decoded - v) <= 0.5 * width);
  }
}

TEST_CASE("decoders honor the inactive sentinel") {
  BinSpec spec = plain_spec(16, 0.0, 4.0, 0.25);
  spec.has_inactive = true;
  BinDistribution inactive = discretize(std::nullopt, spec);
  CHECK(!decode_expectation(inactive, spec).has_value());
  CHECK(!decode_argmax(inactive, spec).has_value());

  BinDistribution active = discretize(2.0, spec);
  CHECK(active.weights[0] == 0.0);
  CHECK(decode_expectation(active, spec).has_value());
}

TEST_CASE("uniform active weights decode to the range midpoint") {
  BinSpec spec = plain_spec(32, 1.0, 3.0, 0.1);
  spec.has_inactive = true;
  BinDistribution d;
  d.weights.assign(33, 0.0);
  for (int j = 1; j <= 32; ++j) d.weights[j] = 1.0 / 32.0;
  auto decoded = decode_expectation(d, spec);
  REQUIRE(decoded.has_value());
  CHECK(*decoded == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("shift by one bin width moves the weights by one index") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    int bins = 16 + static_cast<int>(rng.uniform() * 48);
    BinSpec spec = plain_spec(bins, 0.0, static_cast<double>(bins), 1.0);
    double width = spec.bin_width();
    // Keep both evaluations at least 8 sigma from the edges so the truncated
    // tails are below the tolerance.
    double v = rng.uniform(spec.min_value + 8 * width, spec.max_value - 9 * width);
    BinDistribution a = discretize(v, spec);
    BinDistribution b = discretize(v + width, spec);
    CHECK(argmax_weight_index(b) == argmax_weight_index(a) + 1);
    for (int j = 1; j < bins; ++j) {
      CHECK(std::abs(b.weights[j] - a.weights[j - 1]) <= 1e-9);
    }
  }
}

TEST_CASE("invalid specs and out-of-range inputs") {
  BinSpec spec = plain_spec(16, 0.0, 4.0, 0.0);
  CHECK_THROWS_AS(discretize(1.0, spec), std::runtime_error);
  spec.sigma = -1.0;
  CHECK_THROWS_AS(discretize(1.0, spec), std::runtime_error);
  spec = plain_spec(1, 0.0, 4.0, 1.0);
  CHECK_THROWS_AS(discretize(1.0, spec), std::runtime_error);

  spec = plain_spec(16, 0.0, 4.0, 0.25);
  BinDistribution d = discretize(9.0, spec);  // clamped to the top edge
  CHECK(d.clamped_input);
  CHECK(argmax_weight_index(d) == 15);
  CHECK(!discretize(3.9, spec).clamped_input);
}

TEST_CASE("schema bin specs carry the inactive flag exactly for activatables") {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  CHECK(!specs[kEgoLaneWidth].has_inactive);
  CHECK(specs[kEgoLaneWidth].distribution_size() == 64);
  for (int m = 0; m < kNumContinuous; ++m) {
    CHECK(specs[m].has_inactive == schema.continuous[m].activatable());
    CHECK(specs[m].bins == 64);
    CHECK(specs[m].sigma == doctest::Approx(specs[m].bin_width()));
  }
}
