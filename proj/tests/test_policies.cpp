#include <cmath>
#include <random>

#include "doctest.h"

#include "etlqg/errors.hpp"
#include "etlqg/estimators.hpp"
#include "etlqg/model.hpp"
#include "etlqg/policies.hpp"
#include "etlqg/riccati.hpp"

#include "oracles.hpp"

using etlqg::CostSpec;
using etlqg::InfoPattern;
using etlqg::Matrix;
using etlqg::TimeVaryingLinearSystem;
using etlqg::TriggerSignals;
using etlqg::Vector;

namespace {

TimeVaryingLinearSystem scalar_sys(int horizon = 100) {
  TimeVaryingLinearSystem sys;
  sys.horizon = horizon;
  sys.pattern = InfoPattern::kPerfect;
  sys.A = {Matrix::Constant(1, 1, 1.1)};
  sys.B = {Matrix::Constant(1, 1, 1.0)};
  sys.W = {Matrix::Constant(1, 1, 3.0)};
  sys.m0 = Vector::Zero(1);
  sys.M0 = Matrix::Constant(1, 1, 1.0);
  return sys;
}

CostSpec scalar_cost(int horizon = 100, double lambda = 1.0) {
  CostSpec cost;
  cost.horizon = horizon;
  cost.Q = {Matrix::Constant(1, 1, 1.0)};
  cost.Q_terminal = Matrix::Constant(1, 1, 1.0);
  cost.R = {Matrix::Constant(1, 1, 0.1)};
  cost.ell = {1.0};
  cost.lambda = lambda;
  return cost;
}

TriggerSignals make_signals(const TimeVaryingLinearSystem& sys, int k,
                            const Vector& eps, const Vector& nu,
                            const Matrix& P) {
  TriggerSignals sig;
  sig.eps = eps;
  sig.nu = nu;
  sig.K = etlqg::intermittent_gain(sys, k, P);
  return sig;
}

}  // namespace

TEST_CASE("periodic trigger schedule") {
  CHECK(etlqg::periodic_trigger({1, 0}, 0) == 1);
  CHECK(etlqg::periodic_trigger({1, 0}, 17) == 1);
  for (int k = 0; k < 10; ++k) {
    CHECK(etlqg::periodic_trigger({2, 0}, k) == (k % 2 == 0 ? 1 : 0));
  }
  CHECK(etlqg::periodic_trigger({5, 3}, 8) == 1);
  CHECK(etlqg::periodic_trigger({5, 3}, 3) == 1);
  CHECK(etlqg::periodic_trigger({5, 3}, 4) == 0);
  CHECK_THROWS_AS(etlqg::periodic_trigger({0, 0}, 1),
                  etlqg::InvalidInputError);
}

TEST_CASE("perfect-pattern trigger value") {
  auto sys = scalar_sys();
  auto cost = scalar_cost();
  auto ric = etlqg::backward_riccati(sys, cost);

  SUBCASE("zero error never transmits at positive price") {
    auto r = etlqg::voi_perfect(ric, sys, 5, Vector::Zero(1), 1.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(r.transmit);
    CHECK(r.tail == 0.0);
  }
  SUBCASE("free transmission always fires") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 50; ++i) {
      Vector e = Vector::Constant(1, gauss(gen));
      auto r = etlqg::voi_perfect(ric, sys, i % 100, e, 0.0);
      CHECK(r.value >= 0.0);
      CHECK(r.transmit);
    }
  }
  SUBCASE("terminal step is pure price") {
    auto r = etlqg::voi_perfect(ric, sys, 100, Vector::Constant(1, 50.0), 1.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(r.transmit);
  }
  SUBCASE("even in the error") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 200; ++i) {
      Vector e = Vector::Constant(1, 3.0 * gauss(gen));
      int k = static_cast<int>(gen() % 101);
      auto plus = etlqg::voi_perfect(ric, sys, k, e, 1.0);
      auto minus = etlqg::voi_perfect(ric, sys, k, Vector(-e), 1.0);
      CHECK(plus.value == minus.value);
    }
  }
  SUBCASE("value scales linearly with the cost weights") {
    const double c = 3.7;
    CostSpec scaled = scalar_cost();
    scaled.Q = {Matrix::Constant(1, 1, c)};
    scaled.Q_terminal = Matrix::Constant(1, 1, c);
    scaled.R = {Matrix::Constant(1, 1, 0.1 * c)};
    auto ric2 = etlqg::backward_riccati(sys, scaled);
    Vector e = Vector::Constant(1, 1.3);
    auto base = etlqg::voi_perfect(ric, sys, 10, e, 1.0);
    auto big = etlqg::voi_perfect(ric2, sys, 10, e, c * 1.0);
    CHECK(big.value == doctest::Approx(c * base.value).epsilon(1e-12));
  }
  SUBCASE("monotone in the error magnitude") {
    double prev = -1.0;
    for (double e = 0.0; e <= 5.0; e += 0.25) {
      auto r = etlqg::voi_perfect(ric, sys, 20, Vector::Constant(1, e), 1.0);
      CHECK(r.value >= prev);
      prev = r.value;
    }
  }
  SUBCASE("ties transmit") {
    // Read the quadratic term off a free evaluation, then price exactly at it.
    Vector e = Vector::Constant(1, 1.0);
    double theta = etlqg::voi_perfect(ric, sys, 5, e, 0.0).value;
    auto r = etlqg::voi_perfect(ric, sys, 5, e, theta);
    CHECK(r.value == 0.0);
    CHECK(r.transmit);
  }
}

TEST_CASE("imperfect-pattern trigger value") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> gauss;

  SUBCASE("terminal step is pure price") {
    auto sys = oracles::random_system(gen, 2, 1, 2, 6, true);
    auto cost = oracles::random_cost(gen, 2, 1, 6);
    auto ric = etlqg::backward_riccati(sys, cost);
    auto sig = make_signals(sys, 6, Vector::Random(2), Vector::Random(2),
                            oracles::random_spd(gen, 2));
    auto r = etlqg::voi_imperfect(ric, sys, 6, sig, oracles::random_spd(gen, 2),
                                  oracles::random_spd(gen, 2), 0.8);
    CHECK(r.value == doctest::Approx(-0.8).epsilon(1e-15));
    CHECK(r.instantaneous == 0.0);
    CHECK(r.tail == 0.0);
  }

  SUBCASE("joint sign flip of (eps, nu) preserves the value") {
    for (int trial = 0; trial < 1000; ++trial) {
      int n = 1 + static_cast<int>(gen() % 3);
      int p = 1 + static_cast<int>(gen() % 2);
      int horizon = 2 + static_cast<int>(gen() % 6);
      auto sys = oracles::random_system(gen, n, 1, p, horizon, true);
      auto cost = oracles::random_cost(gen, n, 1, horizon);
      auto ric = etlqg::backward_riccati(sys, cost);
      int k = static_cast<int>(gen() % (horizon + 1));
      Vector eps = Vector::NullaryExpr(n, [&](Eigen::Index) {
        return gauss(gen);
      });
      Vector nu = Vector::NullaryExpr(p, [&](Eigen::Index) {
        return gauss(gen);
      });
      Matrix p_cov = oracles::random_spd(gen, n);
      Matrix sigma = oracles::random_spd(gen, n, 1e-3);
      auto sig = make_signals(sys, k, eps, nu, p_cov);
      auto flipped = make_signals(sys, k, Vector(-eps), Vector(-nu), p_cov);
      auto r1 = etlqg::voi_imperfect(ric, sys, k, sig, sigma, p_cov, 0.4);
      auto r2 = etlqg::voi_imperfect(ric, sys, k, flipped, sigma, p_cov, 0.4);
      double scale = std::max(1.0, std::abs(r1.value));
      CHECK(std::abs(r1.value - r2.value) <= 1e-10 * scale);
    }
  }

  SUBCASE("specialized tail kernels agree with the general path") {
    // Replicating the stage sequences leaves the model unchanged but routes
    // evaluation through the time-varying code path.
    for (auto dims : {std::pair<int, int>{4, 2}, std::pair<int, int>{1, 1}}) {
      auto sys = oracles::random_system(gen, dims.first, 1, dims.second, 30,
                                        true);
      auto cost = oracles::random_cost(gen, dims.first, 1, 30);
      auto ric = etlqg::backward_riccati(sys, cost);
      auto replicated = sys;
      replicated.A.assign(31, sys.A[0]);
      replicated.B.assign(31, sys.B[0]);
      replicated.W.assign(31, sys.W[0]);
      replicated.C.assign(31, sys.C[0]);
      replicated.V.assign(31, sys.V[0]);
      for (int k : {0, 3, 14, 27}) {
        Vector eps = Vector::NullaryExpr(dims.first, [&](Eigen::Index) {
          return gauss(gen);
        });
        Vector nu = Vector::NullaryExpr(dims.second, [&](Eigen::Index) {
          return gauss(gen);
        });
        Matrix p_cov = oracles::random_spd(gen, dims.first);
        Matrix sigma = 0.5 * oracles::random_spd(gen, dims.first, 1e-3);
        auto sig = make_signals(sys, k, eps, nu, p_cov);
        auto fast = etlqg::voi_imperfect(ric, sys, k, sig, sigma, p_cov, 0.2);
        auto slow = etlqg::voi_imperfect(ric, replicated, k, sig, sigma,
                                         p_cov, 0.2);
        double scale = std::max(1.0, std::abs(fast.value));
        CHECK(std::abs(fast.value - slow.value) < 1e-12 * scale);
        CHECK(std::abs(fast.tail - slow.tail) < 1e-12 * scale);
      }
    }
  }

  SUBCASE("matches Monte Carlo branch expectations") {
    // Small systems, modest horizon; the MC oracle rolls both branches on
    // common random numbers so a few 10^4 samples resolve the difference.
    for (int trial = 0; trial < 4; ++trial) {
      int n = 1 + static_cast<int>(gen() % 2);
      int horizon = 4;
      auto sys = oracles::random_system(gen, n, 1, n, horizon, true);
      auto cost = oracles::random_cost(gen, n, 1, horizon);
      auto ric = etlqg::backward_riccati(sys, cost);
      int k = 1;
      Vector eps = Vector::NullaryExpr(n, [&](Eigen::Index) {
        return 0.7 * gauss(gen);
      });
      Vector nu = Vector::NullaryExpr(n, [&](Eigen::Index) {
        return 0.7 * gauss(gen);
      });
      Matrix p_cov = oracles::random_spd(gen, n);
      Matrix sigma = 0.25 * oracles::random_spd(gen, n, 1e-3);
      auto sig = make_signals(sys, k, eps, nu, p_cov);
      const double theta = 0.3;
      auto r = etlqg::voi_imperfect(ric, sys, k, sig, sigma, p_cov, theta);

      auto mc = oracles::mc_branch_difference(sys, ric, k, eps, nu, sigma,
                                              p_cov, 40000, gen);
      CHECK(std::abs((r.value + theta) - mc.mean) < 4.0 * mc.se);
    }
  }
}

TEST_CASE("scalar value-function tabulation") {
  auto sys = scalar_sys(40);
  auto cost = scalar_cost(40);
  auto ric = etlqg::backward_riccati(sys, cost);
  auto table = etlqg::scalar_dp_value(sys, cost, ric);

  SUBCASE("grid is symmetric with zero on it") {
    const int g = static_cast<int>(table.grid.size());
    CHECK(g % 2 == 1);
    CHECK(table.grid(g / 2) == 0.0);
    for (int i = 0; i < g; ++i) {
      CHECK(table.grid(i) == doctest::Approx(-table.grid(g - 1 - i))
                                 .epsilon(1e-12));
    }
  }
  SUBCASE("terminal layer vanishes and values are even") {
    CHECK(table.V[41].cwiseAbs().maxCoeff() == 0.0);
    const int g = static_cast<int>(table.grid.size());
    for (int k = 0; k <= 40; ++k) {
      double scale = std::max(1.0, table.V[k].cwiseAbs().maxCoeff());
      for (int i = 0; i < g / 2; ++i) {
        CHECK(std::abs(table.V[k](i) - table.V[k](g - 1 - i)) <=
              1e-6 * scale);
      }
    }
  }
  SUBCASE("rho is nonnegative up to quadrature noise and zero at zero") {
    for (int k = 0; k <= 40; ++k) {
      CHECK(table.rho_at(k, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
      for (int i = 0; i < table.grid.size(); ++i) {
        CHECK(table.rho[k](i) >= -1e-8);
      }
    }
  }
  SUBCASE("transmit region is a symmetric outer interval at every step") {
    for (int k = 0; k <= 40; ++k) {
      const auto& region = table.transmit[k];
      const int g = static_cast<int>(region.size());
      // Walking outward from zero, once transmission starts it never stops.
      int center = g / 2;
      bool started = false;
      for (int i = center; i < g; ++i) {
        if (region[i]) started = true;
        if (started) CHECK(region[i] == 1);
      }
      for (int i = 0; i < g; ++i) {
        CHECK(region[i] == region[g - 1 - i]);
      }
    }
  }
  SUBCASE("free transmission fires wherever the future has value") {
    CostSpec free_cost = scalar_cost(40, 0.0);
    auto table0 = etlqg::scalar_dp_value(sys, free_cost, ric);
    for (int k = 0; k < 40; ++k) {
      REQUIRE(ric.Gamma[k + 1](0, 0) > 0.0);
      // Away from zero error the hold branch strictly loses.
      auto r = etlqg::exact_voi_scalar(table0, ric, k, 2.0, 0.0);
      CHECK(r.transmit);
    }
  }
  SUBCASE("values grow pointwise with the price") {
    CostSpec cheap = scalar_cost(40, 0.25);
    auto cheap_table = etlqg::scalar_dp_value(sys, cheap, ric);
    for (int k = 0; k <= 40; ++k) {
      for (int i = 0; i < table.grid.size(); i += 100) {
        CHECK(cheap_table.V[k](i) <= table.V[k](i) + 1e-9);
      }
    }
  }
  SUBCASE("vector systems are rejected") {
    std::mt19937_64 gen(13);
    auto big = oracles::random_system(gen, 2, 1, 1, 10, false);
    auto big_cost = oracles::random_cost(gen, 2, 1, 10);
    auto big_ric = etlqg::backward_riccati(big, big_cost);
    CHECK_THROWS_AS(etlqg::scalar_dp_value(big, big_cost, big_ric),
                    etlqg::DimensionError);
  }
}

TEST_CASE("exact scalar trigger value") {
  auto sys = scalar_sys(40);
  auto cost = scalar_cost(40);
  auto ric = etlqg::backward_riccati(sys, cost);
  auto table = etlqg::scalar_dp_value(sys, cost, ric);

  SUBCASE("zero error reduces to the correction minus the price") {
    auto r = etlqg::exact_voi_scalar(table, ric, 7, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(r.tail - 1.0).epsilon(1e-12));
    CHECK(r.instantaneous == 0.0);
  }
  SUBCASE("even in the error") {
    for (double e = 0.0; e < 8.0; e += 0.37) {
      auto plus = etlqg::exact_voi_scalar(table, ric, 11, e, 1.0);
      auto minus = etlqg::exact_voi_scalar(table, ric, 11, -e, 1.0);
      CHECK(plus.value == doctest::Approx(minus.value).epsilon(1e-12));
    }
  }
  SUBCASE("terminal step is pure price") {
    auto r = etlqg::exact_voi_scalar(table, ric, 40, 3.0, 1.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(r.transmit);
  }
  SUBCASE("off-grid lookups are flagged") {
    double far = table.grid(table.grid.size() - 1) * 10.0;
    auto r = etlqg::exact_voi_scalar(table, ric, 5, far, 1.0);
    CHECK(r.extrapolated);
    auto in = etlqg::exact_voi_scalar(table, ric, 5, 0.5, 1.0);
    CHECK_FALSE(in.extrapolated);
  }
  SUBCASE("greedy value is a lower bound on the exact value") {
    // rho >= 0, so whenever the greedy rule fires the exact rule fires too.
    for (double e = 0.0; e < 6.0; e += 0.11) {
      for (int k = 0; k < 40; k += 7) {
        auto greedy = etlqg::voi_perfect(ric, sys, k,
                                         Vector::Constant(1, e), 1.0);
        auto exact = etlqg::exact_voi_scalar(table, ric, k, e, 1.0);
        CHECK(exact.value >= greedy.value - 1e-8);
        if (greedy.transmit) CHECK(exact.transmit);
      }
    }
  }
}
