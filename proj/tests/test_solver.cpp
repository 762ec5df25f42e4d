#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "qualpipe/errors.hpp"
#include "qualpipe/solver.hpp"

using namespace qualpipe;

namespace {

AttributeSet priors_from(const std::vector<double>& priors) {
  AttributeSet set;
  set.kind = AttributeKind::Domain;
  for (std::size_t j = 0; j < priors.size(); ++j) {
    set.attributes.push_back(
        Attribute{"attr-" + std::to_string(j), AttributeKind::Domain, priors[j]});
  }
  return set;
}

AffinityMatrix matrix_from_scores(std::vector<std::vector<int>> scores) {
  AffinityMatrix m;
  m.kind = AttributeKind::Domain;
  const std::size_t cols = scores.empty() ? 0 : scores[0].size();
  for (std::size_t j = 0; j < cols; ++j) {
    m.attribute_names.push_back("attr-" + std::to_string(j));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    m.instance_ids.push_back("row-" + std::to_string(i));
    m.evidence.emplace_back(cols, std::nullopt);
    m.imputed.emplace_back(cols, false);
  }
  m.scores = std::move(scores);
  return m;
}

// Structural invariants every legal assignment must satisfy.
void check_assignment(const AssignmentMatrix& asn, const AffinityMatrix& aff,
                      const LpBounds& bounds) {
  REQUIRE(asn.assign.size() == aff.rows());
  std::vector<long long> colsum(aff.cols(), 0);
  double objective = 0.0;
  for (std::size_t i = 0; i < asn.assign.size(); ++i) {
    REQUIRE(asn.assign[i].size() == aff.cols());
    int picked = 0;
    for (std::size_t j = 0; j < aff.cols(); ++j) {
      if (asn.assign[i][j]) {
        ++picked;
        ++colsum[j];
        objective += aff.scores[i][j];
      }
    }
    CHECK(picked == 2);
  }
  for (std::size_t j = 0; j < aff.cols(); ++j) {
    CHECK(colsum[j] >= bounds.lower[j]);
    CHECK(colsum[j] <= bounds.upper[j]);
  }
  CHECK(asn.objective == doctest::Approx(objective).epsilon(1e-12));
}

}  // namespace

TEST_CASE("column bounds widen the prior share symmetrically") {
  // 100 instances place 200 attribute slots. A 0.3-prior column gets
  // 60 +/- 10%: floor(54) and ceil(66), with no float-noise drift.
  LpBounds b = compute_bounds(priors_from({0.3, 0.35, 0.35}), 100, 0.1);
  CHECK(b.lower == std::vector<long long>{54, 63, 63});
  CHECK(b.upper == std::vector<long long>{66, 77, 77});
  CHECK(b.epsilon == 0.1);
}

TEST_CASE("zero slack with divisible priors pins exact quotas") {
  LpBounds b = compute_bounds(priors_from({0.25, 0.25, 0.25, 0.25}), 10, 0.0);
  CHECK(b.lower == std::vector<long long>{5, 5, 5, 5});
  CHECK(b.upper == std::vector<long long>{5, 5, 5, 5});
  CHECK(b.epsilon == 0.0);
}

TEST_CASE("zero slack with indivisible priors brackets by floor and ceil") {
  // 2*10/3 = 6.67 per column.
  LpBounds b = compute_bounds(
      priors_from({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}), 10, 0.0);
  CHECK(b.lower == std::vector<long long>{6, 6, 6});
  CHECK(b.upper == std::vector<long long>{7, 7, 7});
  CHECK(b.epsilon == 0.0);
}

TEST_CASE("structurally impossible bounds widen until they admit a solution") {
  // With exactly 2 attributes every instance takes both, so each column
  // sums to exactly 100; the 0.7-prior column wants at least 126 at slack
  // 0.1. Doubling 0.1 -> 0.2 -> 0.4 -> 0.8 first admits 100.
  LpBounds b = compute_bounds(priors_from({0.3, 0.7}), 100, 0.1);
  CHECK(b.epsilon == 0.8);
  CHECK(b.lower[0] <= 100);
  CHECK(b.upper[0] >= 100);
  CHECK(b.lower[1] <= 100);
  CHECK(b.upper[1] >= 100);
}

TEST_CASE("bounds that stay impossible at maximum slack fail loudly") {
  // A single attribute can never give each instance 2 distinct ones.
  CHECK_THROWS_AS(compute_bounds(priors_from({1.0}), 10, 0.1), InfeasibleError);
  // 199 of 200 slots on one column is capped at n=100; the tiny columns
  // cannot absorb the remaining 100 even at slack 0.99.
  CHECK_THROWS_AS(
      compute_bounds(priors_from({0.999, 0.0005, 0.0005}), 100, 0.1),
      InfeasibleError);
}

TEST_CASE("compute_bounds validates priors and slack") {
  CHECK_THROWS_AS(compute_bounds(AttributeSet{}, 10, 0.1), ConfigError);
  CHECK_THROWS_AS(compute_bounds(priors_from({0.5, 0.5}), 10, -0.1),
                  ConfigError);
  CHECK_THROWS_AS(compute_bounds(priors_from({0.5, 0.5}), 10, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(compute_bounds(priors_from({0.9, 0.3}), 10, 0.1),
                  ConfigError);
  CHECK_THROWS_AS(compute_bounds(priors_from({1.5, -0.5}), 10, 0.1),
                  ConfigError);
}

TEST_CASE("solver matches the exhaustive oracle on a hand-checked case") {
  AffinityMatrix aff = matrix_from_scores(
      {{5, 4, 1}, {2, 5, 3}, {4, 1, 5}, {3, 3, 3}});
  LpBounds bounds =
      compute_bounds(priors_from({1.0 / 3, 1.0 / 3, 1.0 / 3}), 4, 0.0);
  CHECK(bounds.lower == std::vector<long long>{2, 2, 2});
  CHECK(bounds.upper == std::vector<long long>{3, 3, 3});

  AssignmentMatrix fast = solve_assignment(aff, bounds);
  AssignmentMatrix slow = brute_force_assignment(aff, bounds);
  check_assignment(fast, aff, bounds);
  check_assignment(slow, aff, bounds);
  // Total mass is 39; the cheapest legal per-row exclusions are 1+2+1+3.
  CHECK(fast.objective == 32.0);
  CHECK(slow.objective == 32.0);
  CHECK(fast.epsilon_used == 0.0);
  CHECK(fast.lower == bounds.lower);
  CHECK(fast.upper == bounds.upper);
}

TEST_CASE("tight quotas force the greedy start to spread across columns") {
  // Every row loves columns 0 and 1, but each column must end at exactly 2.
  AffinityMatrix aff = matrix_from_scores(
      {{5, 5, 1}, {5, 5, 1}, {5, 5, 1}});
  LpBounds bounds;
  bounds.lower = {2, 2, 2};
  bounds.upper = {2, 2, 2};

  AssignmentMatrix fast = solve_assignment(aff, bounds);
  AssignmentMatrix slow = brute_force_assignment(aff, bounds);
  check_assignment(fast, aff, bounds);
  CHECK(fast.objective == 22.0);
  CHECK(slow.objective == 22.0);
}

TEST_CASE("solver equals the oracle across seeded random instances") {
  std::mt19937_64 rng(20240817);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t cols = 2 + rng() % 4;  // 2..5 attributes
    const std::size_t rows = 2 + rng() % 3;  // 2..4 instances
    const double eps = std::array<double, 3>{0.0, 0.1, 0.3}[rng() % 3];

    std::vector<std::vector<int>> scores(rows, std::vector<int>(cols));
    for (auto& row : scores) {
      for (auto& cell : row) cell = 1 + static_cast<int>(rng() % 5);
    }
    // Keep the skew bounded (smallest prior >= 1/3 of the largest) so every
    // draw stays solvable, at worst after slack widening.
    std::vector<double> weights(cols);
    double total = 0.0;
    for (auto& w : weights) {
      w = 4.0 + static_cast<double>(rng() % 5);
      total += w;
    }
    for (auto& w : weights) w /= total;

    AffinityMatrix aff = matrix_from_scores(scores);
    LpBounds bounds = compute_bounds(priors_from(weights), rows, eps);
    AssignmentMatrix fast = solve_assignment(aff, bounds);
    AssignmentMatrix slow = brute_force_assignment(aff, bounds);
    check_assignment(fast, aff, bounds);
    INFO("trial ", trial, ": ", rows, "x", cols, " eps ", eps);
    CHECK(fast.objective == slow.objective);
  }
}

TEST_CASE("the solver is deterministic even with heavy ties") {
  AffinityMatrix aff = matrix_from_scores(
      std::vector<std::vector<int>>(6, std::vector<int>(4, 3)));
  LpBounds bounds = compute_bounds(
      priors_from({0.25, 0.25, 0.25, 0.25}), 6, 0.0);
  AssignmentMatrix a = solve_assignment(aff, bounds);
  AssignmentMatrix b = solve_assignment(aff, bounds);
  CHECK(a.assign == b.assign);
  CHECK(a.objective == b.objective);
  check_assignment(a, aff, bounds);
}

TEST_CASE("a larger instance solves quickly and respects its bounds") {
  std::mt19937_64 rng(99);
  const std::size_t rows = 400;
  const std::size_t cols = 10;
  std::vector<std::vector<int>> scores(rows, std::vector<int>(cols));
  for (auto& row : scores) {
    for (auto& cell : row) cell = 1 + static_cast<int>(rng() % 5);
  }
  AffinityMatrix aff = matrix_from_scores(scores);
  LpBounds bounds = compute_bounds(
      priors_from(std::vector<double>(cols, 0.1)), rows, 0.1);
  AssignmentMatrix asn = solve_assignment(aff, bounds);
  check_assignment(asn, aff, bounds);
}

TEST_CASE("shape and feasibility problems are typed errors") {
  AffinityMatrix aff = matrix_from_scores({{5, 1}, {1, 5}});
  LpBounds bounds;
  bounds.lower = {0, 0, 0};
  bounds.upper = {4, 4, 4};
  CHECK_THROWS_AS(solve_assignment(aff, bounds), ShapeMismatchError);
  CHECK_THROWS_AS(brute_force_assignment(aff, bounds), ShapeMismatchError);

  // Lower bounds above the per-column cap n are unsatisfiable.
  LpBounds impossible;
  impossible.lower = {3, 3};
  impossible.upper = {3, 3};
  CHECK_THROWS_AS(solve_assignment(aff, impossible), InfeasibleError);
  CHECK_THROWS_AS(brute_force_assignment(aff, impossible), InfeasibleError);

  AffinityMatrix narrow = matrix_from_scores({{5}, {1}});
  LpBounds one;
  one.lower = {0};
  one.upper = {2};
  CHECK_THROWS_AS(solve_assignment(narrow, one), ConfigError);

  AffinityMatrix ragged = matrix_from_scores({{5, 1}, {1, 5}});
  ragged.scores[1].push_back(3);
  LpBounds two;
  two.lower = {0, 0};
  two.upper = {2, 2};
  CHECK_THROWS_AS(solve_assignment(ragged, two), ShapeMismatchError);
}

TEST_CASE("the exhaustive oracle refuses oversized instances") {
  AffinityMatrix aff = matrix_from_scores(
      std::vector<std::vector<int>>(20, std::vector<int>(10, 3)));
  LpBounds bounds;
  bounds.lower.assign(10, 0);
  bounds.upper.assign(10, 20);
  CHECK_THROWS_AS(brute_force_assignment(aff, bounds), TooLargeError);
}
