#include <catch_amalgamated.hpp>

#include <dyncomm/centrality.hpp>
#include <dyncomm/discrete_oracle.hpp>

#include <chrono>
#include <cmath>
#include <vector>

using namespace dyncomm;

namespace {

SparseSnapshot pair_edge(int n, int i, int j) {
  std::vector<Eigen::Triplet<double>> t{{i, j, 1.0}, {j, i, 1.0}};
  SparseSnapshot A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace

TEST_CASE("broadcast_receive: identity and single-entry cases") {
  CommunicabilityState st{0.0, Matrix::Identity(3, 3)};
  auto [b, r] = broadcast_receive(st);
  REQUIRE(b == Vector::Ones(3));
  REQUIRE(r == Vector::Ones(3));

  Matrix U = Matrix::Identity(3, 3);
  U(0, 1) = 0.5;
  auto [b2, r2] = broadcast_receive({0.0, U});
  REQUIRE(b2[0] == 1.5);
  REQUIRE(b2[1] == 1.0);
  REQUIRE(r2[1] == 1.5);
  REQUIRE(r2[0] == 1.0);
}

TEST_CASE("broadcast and receive differ once time-ordering breaks symmetry") {
  // Edge 0-1 in snapshot 1, edge 1-2 in snapshot 2: S_02 = a^2/(1-a^2)^2 > 0 = S_20.
  double a = 0.5;
  std::vector<SparseSnapshot> snaps{pair_edge(3, 0, 1), pair_edge(3, 1, 2)};
  Matrix S = discrete_product(std::span<const SparseSnapshot>(snaps), a);
  double expect = a * a / std::pow(1 - a * a, 2);
  REQUIRE_THAT(S(0, 2), Catch::Matchers::WithinRel(expect, 1e-13));
  REQUIRE(S(2, 0) == 0.0);

  auto [b, r] = broadcast_receive({2.0, S + Matrix::Identity(3, 3)});
  REQUIRE(b[0] > r[0]);  // node 0 only broadcasts
  REQUIRE(r[2] > b[2]);  // node 2 only receives
}

TEST_CASE("total broadcast equals total receive") {
  Matrix U = Matrix::Identity(4, 4) + Matrix::Random(4, 4).cwiseAbs();
  auto [b, r] = broadcast_receive({1.0, U});
  REQUIRE_THAT(b.sum(), Catch::Matchers::WithinRel(r.sum(), 1e-10));
}

TEST_CASE("rank: ordering, ties, and top-k") {
  Vector v(3);
  v << 1, 3, 2;
  auto top = rank(v, 3);
  REQUIRE(top == std::vector<std::pair<int, double>>{{1, 3.0}, {2, 2.0}, {0, 1.0}});

  auto top1 = rank(v, 1);
  REQUIRE(top1 == std::vector<std::pair<int, double>>{{1, 3.0}});

  Vector equal = Vector::Constant(4, 7.0);
  auto tie = rank(equal, 4);
  for (int i = 0; i < 4; ++i) REQUIRE(tie[i].first == i);

  REQUIRE_THROWS_AS(rank(v, 5), ValidationError);

  // Scaling invariance of the induced order.
  auto scaled = rank(3.7 * v, 3);
  for (int i = 0; i < 3; ++i) REQUIRE(scaled[i].first == top[i].first);

  REQUIRE(rank_of(v, 1) == 1);
  REQUIRE(rank_of(v, 0) == 3);
}

TEST_CASE("group_trace: normalization, zero denominator, and hand value") {
  SECTION("full node set gives 1 once the denominator is positive") {
    Matrix U = Matrix::Identity(3, 3);
    U(0, 1) = 0.3;
    U(2, 0) = 0.1;
    auto trace = group_trace({{1.0, U}}, {0, 1, 2});
    REQUIRE_THAT(trace.values[0], Catch::Matchers::WithinRel(1.0, 1e-12));
    REQUIRE(!trace.zero_denominator[0]);
  }
  SECTION("t = 0 flagged with value 0") {
    auto trace = group_trace({{0.0, Matrix::Identity(3, 3)}}, {0, 1});
    REQUIRE(trace.values[0] == 0.0);
    REQUIRE(trace.zero_denominator[0]);
  }
  SECTION("hand-evaluated two means") {
    Matrix U = Matrix::Identity(3, 3);
    U(1, 2) = 0.4;
    U(2, 1) = 0.4;
    auto trace = group_trace({{1.0, U}}, {1, 2});
    // numerator = 0.8; denominator = (0 + 0 + 0.8) / 3; ratio = 3.
    REQUIRE_THAT(trace.values[0], Catch::Matchers::WithinRel(3.0, 1e-12));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(group_trace({{0.0, Matrix::Identity(3, 3)}}, {1}), ValidationError);
    REQUIRE_THROWS_AS(group_trace({{0.0, Matrix::Identity(3, 3)}}, {1, 1}), ValidationError);
    REQUIRE_THROWS_AS(group_trace({{0.0, Matrix::Identity(3, 3)}}, {0, 7}), ValidationError);
  }
}

TEST_CASE("receive fast path matches the full-matrix column sums") {
  auto g = TemporalAdjacency::from_call_events(
      {{0, 1, 0.0, 3.0}, {1, 2, 2.0, 3.0}, {3, 4, 1.0, 4.0}, {2, 4, 6.0, 2.0}}, 5);
  Params prm;
  prm.a = 0.3;
  prm.b = 0.05;
  IntegratorConfig cfg;
  cfg.abs_tol = cfg.rel_tol = 1e-6;
  std::vector<double> schedule{0.0, 2.5, 5.0, 8.0};

  auto fast = receive_fast_path(g, prm, 8.0, cfg, schedule);
  auto full = integrate_matrix(g, prm, 8.0, cfg, schedule);
  REQUIRE(fast.broadcast.empty());
  REQUIRE(fast.times.size() == full.samples.size());
  for (std::size_t s = 0; s < fast.times.size(); ++s) {
    Vector colsum = full.samples[s].U.colwise().sum().transpose();
    for (int i = 0; i < 5; ++i)
      REQUIRE(std::abs(fast.receive[s][i] - colsum[i]) <=
              20.0 * cfg.rel_tol * std::abs(colsum[i]));
  }

  SECTION("empty network gives all-ones receive") {
    auto g0 = TemporalAdjacency::from_call_events({}, 3);
    auto s0 = receive_fast_path(g0, prm, 10.0, cfg, std::vector<double>{5.0, 10.0});
    for (const auto& r : s0.receive) REQUIRE(r == Vector::Ones(3));
  }
}

TEST_CASE("centrality invariants on an integrated trajectory") {
  auto g = TemporalAdjacency::from_call_events(
      {{0, 1, 0.0, 2.0}, {1, 2, 1.0, 2.0}, {0, 2, 4.0, 2.0}}, 4);
  Params prm;
  prm.a = 0.4;
  prm.b = 0.0;
  IntegratorConfig cfg;
  std::vector<double> schedule{1.0, 3.0, 6.0};
  auto run = integrate_matrix(g, prm, 6.0, cfg, schedule);
  for (const auto& sample : run.samples) {
    auto [b, r] = broadcast_receive(sample);
    REQUIRE(b.minCoeff() >= 1.0 - 1e-12);
    REQUIRE(r.minCoeff() >= 1.0 - 1e-12);
    REQUIRE_THAT(b.sum(), Catch::Matchers::WithinRel(r.sum(), 1e-10));
  }
  // Full-set group trace is exactly 1 after the first interaction.
  auto trace = group_trace(run.samples, {0, 1, 2, 3});
  for (double v : trace.values) REQUIRE_THAT(v, Catch::Matchers::WithinRel(1.0, 1e-12));
}
