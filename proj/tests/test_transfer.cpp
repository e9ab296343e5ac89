#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mlselect/testing/oracles.hpp"
#include "mlselect/transfer.hpp"
#include "test_support.hpp"

using namespace mlselect;
using transfer::ObjectiveMode;
using transfer::TransferProblem;
using transfer::TransferSolution;

namespace {

TransferProblem multi_source_fixture() {
  return TransferProblem::load(test_support::data_dir() + "/transfer_multi.json");
}

TransferProblem random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nf_dist(1, 5);
  const int nf = nf_dist(rng);
  TransferProblem p;
  for (int f = 0; f < nf; ++f) p.features.push_back("f" + std::to_string(f));
  std::uniform_int_distribution<int> nt_dist(1, std::min(nf, 2));
  const int nt = nt_dist(rng);
  for (int t = 0; t < nt; ++t) p.targets.push_back(p.features[static_cast<std::size_t>(t)]);
  std::uniform_int_distribution<int> imp(1, 3);
  for (const std::string& t : p.targets) p.target_importance[t] = static_cast<double>(imp(rng));

  const int max_edges = 14 - nf;
  std::uniform_int_distribution<int> ne_dist(1, std::max(1, max_edges));
  const int ne = ne_dist(rng);
  std::uniform_int_distribution<int> feat(0, nf - 1);
  std::uniform_int_distribution<int> nsrc(1, std::min(nf, 3));
  std::uniform_int_distribution<int> perf(0, 10);
  for (int e = 0; e < ne; ++e) {
    transfer::TransferEdge edge;
    std::set<std::string> sources;
    const int k = nsrc(rng);
    for (int s = 0; s < k; ++s) sources.insert(p.features[static_cast<std::size_t>(feat(rng))]);
    edge.sources.assign(sources.begin(), sources.end());
    edge.target = p.features[static_cast<std::size_t>(feat(rng))];  // sometimes a non-target
    edge.performance = static_cast<double>(perf(rng)) / 10.0;
    p.edges.push_back(std::move(edge));
  }
  std::uniform_int_distribution<int> d(0, 2);
  p.delta = static_cast<double>(d(rng)) * 0.25;
  p.objective_mode = d(rng) == 0 ? ObjectiveMode::min_size : ObjectiveMode::max_performance;
  return p;
}

}  // namespace

TEST_CASE("edge filtering keeps performances at or above delta") {
  TransferProblem p = multi_source_fixture();
  p.edges = {{{"s1"}, "t", 0.3}, {{"s1"}, "t", 0.6}, {{"s1"}, "t", 0.9}};

  p.delta = 0.0;
  CHECK(transfer::filter_edges(p).edges.size() == 3);

  p.delta = 0.5;
  const TransferProblem mid = transfer::filter_edges(p);
  REQUIRE(mid.edges.size() == 2);
  CHECK(mid.edges[0].performance == 0.6);
  CHECK(mid.edges[1].performance == 0.9);

  p.delta = 1.0;
  CHECK(transfer::filter_edges(p).edges.empty());
}

TEST_CASE("single self-edge instance picks the edge and its feature") {
  TransferProblem p;
  p.features = {"t"};
  p.targets = {"t"};
  p.target_importance["t"] = 1.0;
  p.edges = {{{"t"}, "t", 1.0}};
  const TransferSolution sol = transfer::solve_transfer(p);
  REQUIRE(sol.status == bip::SolveStatus::optimal);
  CHECK(sol.chosen_edges == std::vector<int>{0});
  CHECK(sol.active_features == std::vector<std::string>{"t"});
  CHECK(sol.objective_value == 1);
}

TEST_CASE("multi-source fixture trades size against performance") {
  TransferProblem p = multi_source_fixture();

  SECTION("max_performance picks the stronger two-source edge") {
    const TransferSolution sol = transfer::solve_transfer(p);
    REQUIRE(sol.status == bip::SolveStatus::optimal);
    CHECK(sol.chosen_edges == std::vector<int>{1});
    CHECK(sol.active_features == std::vector<std::string>{"s1", "s2"});
    CHECK(sol.objective_value == bip::to_rational(0.95));
  }

  SECTION("min_size prefers the single-source edge") {
    p.objective_mode = ObjectiveMode::min_size;
    const TransferSolution sol = transfer::solve_transfer(p);
    REQUIRE(sol.status == bip::SolveStatus::optimal);
    CHECK(sol.chosen_edges == std::vector<int>{0});
    CHECK(sol.active_features == std::vector<std::string>{"s1"});
    CHECK(sol.objective_value == 1);
  }
}

TEST_CASE("threshold schedule obeys the feature budget") {
  const TransferProblem p = multi_source_fixture();

  const TransferSolution b1 = transfer::min_delta_schedule(p, 1);
  REQUIRE(b1.status == bip::SolveStatus::optimal);
  CHECK(b1.achieved_delta == 0.9);
  CHECK(b1.chosen_edges == std::vector<int>{0});

  const TransferSolution b2 = transfer::min_delta_schedule(p, 2);
  REQUIRE(b2.status == bip::SolveStatus::optimal);
  CHECK(b2.achieved_delta == 0.95);
  CHECK(b2.chosen_edges == std::vector<int>{1});

  CHECK_THROWS_AS(transfer::min_delta_schedule(p, 0), std::invalid_argument);
}

TEST_CASE("single self-edge schedule reaches its own performance") {
  TransferProblem p;
  p.features = {"t"};
  p.targets = {"t"};
  p.edges = {{{"t"}, "t", 0.7}};
  const TransferSolution sol = transfer::min_delta_schedule(p, 1);
  REQUIRE(sol.status == bip::SolveStatus::optimal);
  CHECK(sol.achieved_delta == 0.7);
}

TEST_CASE("target with no surviving edges reports infeasible") {
  TransferProblem p;
  p.features = {"a", "t"};
  p.targets = {"t"};
  p.edges = {{{"a"}, "t", 0.4}};
  p.delta = 0.5;
  CHECK(transfer::solve_transfer(p).status == bip::SolveStatus::infeasible);
}

TEST_CASE("validation rejects malformed problems") {
  TransferProblem p;
  p.features = {"a"};
  p.targets = {"missing"};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  TransferProblem q;
  q.features = {"a"};
  q.targets = {"a"};
  q.edges = {{{}, "a", 0.5}};  // empty sources
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);

  TransferProblem r;
  r.features = {"a"};
  r.targets = {"a"};
  r.target_importance["a"] = 0.0;  // must be positive
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("solver matches exhaustive subgraph enumeration") {
  std::mt19937_64 rng(20240813);
  int feasible_seen = 0;
  for (int round = 0; round < 120; ++round) {
    const TransferProblem p = random_problem(rng);
    INFO("round " << round << " |E| " << p.edges.size() << " |F| " << p.features.size());

    const TransferSolution got = transfer::solve_transfer(p);
    const testing::TransferOracleResult want = testing::transfer_exhaustive(p);
    REQUIRE((got.status == bip::SolveStatus::optimal) == want.feasible);
    if (!want.feasible) continue;
    ++feasible_seen;
    CHECK(got.objective_value == want.best_objective);

    // structural invariants on every returned solution
    std::map<std::string, int> per_target;
    std::set<std::string> active(got.active_features.begin(), got.active_features.end());
    for (int e : got.chosen_edges) {
      const transfer::TransferEdge& edge = p.edges[static_cast<std::size_t>(e)];
      ++per_target[edge.target];
      for (const std::string& s : edge.sources) CHECK(active.count(s) == 1);
    }
    for (const std::string& t : p.targets) CHECK(per_target[t] == 1);

    // exact objective recomputation in max_performance mode
    if (p.objective_mode == ObjectiveMode::max_performance) {
      bip::Rational expect = 0;
      for (int e : got.chosen_edges) {
        const transfer::TransferEdge& edge = p.edges[static_cast<std::size_t>(e)];
        expect += bip::to_rational(p.importance_of(edge.target)) *
                  bip::to_rational(edge.performance);
      }
      CHECK(expect == got.objective_value);
    }

    // budgeted search agrees with a budgeted oracle
    const TransferSolution budgeted = transfer::solve_transfer(p, 2);
    const testing::TransferOracleResult budget_want = testing::transfer_exhaustive(p, 2);
    REQUIRE((budgeted.status == bip::SolveStatus::optimal) == budget_want.feasible);
    if (budget_want.feasible) CHECK(budgeted.objective_value == budget_want.best_objective);
  }
  CHECK(feasible_seen > 20);  // the generator must actually exercise the solver
}

TEST_CASE("problem json round trip") {
  const TransferProblem p = multi_source_fixture();
  CHECK(p.features == std::vector<std::string>{"s1", "s2", "t"});
  CHECK(p.targets == std::vector<std::string>{"t"});
  CHECK(p.edges.size() == 4);
  CHECK(p.objective_mode == ObjectiveMode::max_performance);
}

TEST_CASE("single-source problems from an affinity matrix reduce to plain covers") {
  std::mt19937_64 rng(20240817);
  std::uniform_int_distribution<int> msize(1, 5), level(0, 10);
  for (int round = 0; round < 30; ++round) {
    const int m = msize(rng);
    cover::AffinityMatrix A;
    for (int i = 0; i < m; ++i) A.feature_names.push_back("f" + std::to_string(i));
    A.values.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
    for (auto& row : A.values)
      for (double& v : row) v = static_cast<double>(level(rng)) / 10.0;
    for (int j = 0; j < m; ++j) {  // self-affinity is the column max
      double col_max = 0.0;
      for (int i = 0; i < m; ++i)
        col_max = std::max(col_max, A.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      A.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = col_max;
    }
    const double delta = static_cast<double>(level(rng)) / 10.0;

    const TransferProblem p =
        transfer::problem_from_affinity(A, {}, delta, ObjectiveMode::min_size);
    // every target carries its self-edge with the diagonal performance
    for (int t = 0; t < m; ++t) {
      bool found = false;
      for (const auto& e : p.edges)
        found |= e.sources.size() == 1 && e.sources[0] == p.features[static_cast<std::size_t>(t)] &&
                 e.target == p.features[static_cast<std::size_t>(t)] &&
                 e.performance ==
                     A.values[static_cast<std::size_t>(t)][static_cast<std::size_t>(t)];
      CHECK(found);
    }

    const TransferSolution ts = transfer::solve_transfer(p);
    const cover::CoverSolution cs = cover::min_set_for_threshold(A, delta);
    INFO("round " << round << " m " << m << " delta " << delta);
    REQUIRE((ts.status == bip::SolveStatus::optimal) == cs.feasible);
    if (cs.feasible)
      CHECK(ts.active_features.size() == cs.selected.size());
  }
}
