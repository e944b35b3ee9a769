#include <gtest/gtest.h>

#include <random>

#include "entangled/correlations.hpp"
#include "../support/oracles.hpp"

using namespace entangled;

namespace {

struct Fixture {
  OperatorMatrix u;
  SpectralDecomposition dec;
  OperatorMatrix basis;
};

// Eigenvalue 1 on the first two basis vectors.
Fixture fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const OperatorMatrix v = haar_unitary(rng, 4);
  const std::vector<Phase> ph = {Phase::rational(0, 1), Phase::rational(0, 1), Phase::rational(1, 3),
                                 Phase::rational(1, 2)};
  auto dec = from_eigenbasis(ph, v);
  const OperatorMatrix u = reconstruct(dec);
  return {u, std::move(dec), v};
}

std::vector<OperatorMatrix> random_ops(std::uint64_t seed, int count, int d) {
  std::mt19937_64 rng(seed);
  std::vector<OperatorMatrix> ops;
  for (int i = 0; i < count; ++i) ops.push_back(random_operator(rng, d));
  return ops;
}

}  // namespace

TEST(MakeSystem, ValidatesStates) {
  const OperatorMatrix u = oracle::diag({1.0, -1.0});
  Vector e0(2), e1(2);
  e0 << 1.0, 0.0;
  e1 << 0.0, 1.0;
  EXPECT_NO_THROW(make_system(u, VectorState{e0}));
  EXPECT_THROW(make_system(u, VectorState{e1}), std::invalid_argument);
  EXPECT_THROW(make_system(u, VectorState{Vector(2 * e0)}), std::invalid_argument);
  EXPECT_THROW(make_system(u, VectorState{Vector::Ones(3) / std::sqrt(3.0)}), std::invalid_argument);

  EXPECT_NO_THROW(make_system(u, TraceState{oracle::diag({1.0, 0.0})}));
  EXPECT_THROW(make_system(u, TraceState{oracle::diag({0.5, 0.5})}), std::invalid_argument);
  EXPECT_THROW(make_system(u, TraceState{oracle::diag({2.0, -1.0})}), std::invalid_argument);
  EXPECT_THROW(make_system(u, TraceState{oracle::diag({0.5, 0.0})}), std::invalid_argument);

  EXPECT_THROW(make_system(oracle::diag({1.0, 2.0}), VectorState{e0}), std::invalid_argument);
}

TEST(Correlations, AlternatingTerm) {
  const OperatorMatrix u = oracle::diag({1.0, -1.0});
  Vector e0(2);
  e0 << 1.0, 0.0;
  const auto sys = make_system(u, VectorState{e0});
  const CorrelationSpec spec{Partition::parse("1,1"),
                             {OperatorMatrix::Identity(2, 2), oracle::swap2(), oracle::swap2()}};
  for (std::int64_t n = 0; n < 8; ++n) {
    const std::vector<std::int64_t> idx = {n};
    EXPECT_NEAR(std::abs(correlation_term(sys, spec, idx) - (n % 2 ? -1.0 : 1.0)), 0.0, 1e-15);
  }
  EXPECT_NEAR(std::abs(cesaro_correlation(sys, spec, 3) - 1.0 / 3.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(cesaro_correlation(sys, spec, 4)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(correlation_limit(sys, spec)), 0.0, 1e-15);
}

TEST(Correlations, GammaAndSandwichFormsAgree) {
  const auto f = fixture(1);
  const auto sys = make_system(f.u, f.dec, VectorState{f.basis.col(0)});
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int64_t> nd(0, 9);
  for (const auto& p : enumerate_pair_partitions(3)) {
    const CorrelationSpec spec{p, random_ops(3, p.size() + 1, 4)};
    std::vector<std::int64_t> idx(3);
    for (auto& v : idx) v = nd(rng);
    const cplx g = correlation_term_gamma(sys, spec, idx);
    const cplx s = correlation_term_sandwich(sys, spec, idx);
    EXPECT_NEAR(std::abs(g - s), 0.0, 1e-12) << p.to_string();
  }
}

TEST(Correlations, RoutesAgree) {
  const auto f = fixture(4);
  Vector omega = (f.basis.col(0) + f.basis.col(1)) / std::sqrt(2.0);
  const auto sys = make_system(f.u, f.dec, VectorState{omega});
  for (const auto& p : enumerate_pair_partitions(2)) {
    const CorrelationSpec spec{p, random_ops(5, p.size() + 1, 4)};
    CorrelationOptions direct, engine;
    direct.route = CorrelationRoute::direct;
    engine.route = CorrelationRoute::engine;
    for (std::int64_t n : {1, 4, 9}) {
      const cplx a = cesaro_correlation(sys, spec, n, direct);
      const cplx b = cesaro_correlation(sys, spec, n, engine);
      EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12) << p.to_string() << " N=" << n;
      // by hand: mean of correlation terms
      cplx sum = 0.0;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j) sum += correlation_term(sys, spec, std::vector<std::int64_t>{i, j});
      EXPECT_NEAR(std::abs(a - sum / double(n * n)), 0.0, 1e-12);
    }
    // periodic spectrum with period 6: the limit is attained exactly
    EXPECT_NEAR(std::abs(correlation_limit(sys, spec) - cesaro_correlation(sys, spec, 6, direct)), 0.0, 1e-12);
  }
}

TEST(Correlations, RankOneDensityMatchesVectorState) {
  const auto f = fixture(6);
  const Vector omega = f.basis.col(1);
  const auto vs = make_system(f.u, f.dec, VectorState{omega});
  const auto ts = make_system(f.u, f.dec, TraceState{omega * omega.adjoint()});
  const CorrelationSpec spec{Partition::parse("1,2,1,2"), random_ops(7, 5, 4)};
  for (std::int64_t n : {2, 5}) {
    EXPECT_NEAR(std::abs(cesaro_correlation(vs, spec, n) - cesaro_correlation(ts, spec, n)), 0.0, 1e-12);
  }
  EXPECT_NEAR(std::abs(correlation_limit(vs, spec) - correlation_limit(ts, spec)), 0.0, 1e-12);
}

TEST(Correlations, MixedDensity) {
  const auto f = fixture(9);
  const OperatorMatrix t = 0.25 * f.basis.col(0) * f.basis.col(0).adjoint() +
                           0.75 * f.basis.col(1) * f.basis.col(1).adjoint();
  const auto sys = make_system(f.u, f.dec, TraceState{t});
  const auto a = random_ops(10, 1, 4)[0];
  EXPECT_NEAR(std::abs(sys.expectation(a) - (t * a).trace()), 0.0, 1e-14);
  EXPECT_LE(sys.invariance_residual(), 1e-12);
  const CorrelationSpec spec{Partition::parse("1,2,2,1"), random_ops(11, 5, 4)};
  CorrelationOptions direct, engine;
  direct.route = CorrelationRoute::direct;
  engine.route = CorrelationRoute::engine;
  EXPECT_NEAR(std::abs(cesaro_correlation(sys, spec, 5, direct) - cesaro_correlation(sys, spec, 5, engine)), 0.0,
              1e-12);
}

TEST(Correlations, RejectsMalformedSpecs) {
  const auto f = fixture(1);
  const auto sys = make_system(f.u, f.dec, VectorState{f.basis.col(0)});
  const CorrelationSpec short_spec{Partition::parse("1,1"), random_ops(1, 2, 4)};
  EXPECT_THROW(cesaro_correlation(sys, short_spec, 3), std::invalid_argument);
  const CorrelationSpec triple{Partition::parse("1,1,1"), random_ops(1, 4, 4)};
  EXPECT_THROW(cesaro_correlation(sys, triple, 3), std::invalid_argument);
  const CorrelationSpec ok{Partition::parse("1,1"), random_ops(1, 3, 4)};
  CorrelationOptions tight;
  tight.route = CorrelationRoute::direct;
  tight.directBudget = 10;
  EXPECT_THROW(cesaro_correlation(sys, ok, 11, tight), BudgetExceeded);
  EXPECT_THROW(correlation_term(sys, ok, std::vector<std::int64_t>{-1}), std::invalid_argument);
}

TEST(Correlations, SwapSwapIdentityExample) {
  const OperatorMatrix u = oracle::diag({1.0, -1.0});
  Vector e1(2);
  e1 << 1.0, 0.0;
  const auto sys = make_system(u, VectorState{e1});
  const CorrelationSpec spec{Partition::parse("1,1"), {oracle::swap2(), oracle::swap2(), OperatorMatrix::Identity(2, 2)}};
  for (std::int64_t n = 0; n < 6; ++n) {
    EXPECT_NEAR(std::abs(correlation_term(sys, spec, std::vector<std::int64_t>{n}) - (n % 2 ? -1.0 : 1.0)), 0.0, 1e-15);
  }
  for (std::int64_t n : {2, 4, 10, 1000}) EXPECT_NEAR(std::abs(cesaro_correlation(sys, spec, n)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(correlation_limit(sys, spec)), 0.0, 1e-15);
}

TEST(Correlations, TraceStateWithinBoundAtLargeN) {
  const OperatorMatrix u = oracle::diag({1.0, -1.0});
  const auto sys = make_system(u, TraceState{oracle::diag({1.0, 0.0})});
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (const char* p : {"1,1", "1,2,1,2", "1,2,2,1"}) {
      const auto part = Partition::parse(p);
      const CorrelationSpec spec{part, random_ops(seed + 20, part.size() + 1, 2)};
      const std::int64_t n = 10000;
      const cplx c = cesaro_correlation(sys, spec, n);
      const double bound = error_bound(sys.decomposition(), part, spec.inner(), n) * op_norm(spec.front()) *
                           op_norm(spec.back());
      EXPECT_LE(std::abs(c - correlation_limit(sys, spec)), bound + 1e-12) << p;
    }
  }
}
