#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gameput/binomial_engine.hpp"
#include "gameput/discrete_operator.hpp"
#include "gameput/game_pricer.hpp"
#include "gameput/stopping_oracle.hpp"

namespace gp = gameput;

namespace {

gp::ModelSpec figure1() { return gp::make_model(20.0, 0.02, 0.15, 0.5, 0.15); }

// Random obstacles on a small lattice, kept as tables so the kernel and the
// oracle read identical numbers.
struct Table {
  int n;
  std::vector<double> v;
  explicit Table(int steps) : n(steps), v((steps + 1) * (2 * steps + 1), 0.0) {}
  double& at(int j, int k) { return v[j * (2 * n + 1) + k + n]; }
  double operator()(int j, int k) const { return v[j * (2 * n + 1) + k + n]; }
};

struct TableRef {
  const Table* t;
  double operator()(int j, int k) const { return (*t)(j, k); }
};

struct MaskRef {
  const std::vector<std::vector<bool>>* m;
  int n;
  bool operator()(int j, int k) const { return (*m)[j][k + n]; }
};

}  // namespace

TEST(LatticeSpec, NodeGeometry) {
  const auto m = figure1();
  const gp::LatticeSpec lat(m, 8, gp::LogPrice::of_spot(19.0));
  EXPECT_DOUBLE_EQ(lat.h(), 0.5 / 8);
  EXPECT_DOUBLE_EQ(lat.sqrt_h(), std::sqrt(0.5 / 8));
  EXPECT_DOUBLE_EQ(lat.discount(), std::exp(-0.02 * 0.5 / 8));
  for (int j = 0; j <= 8; ++j) {
    for (int k = -j; k <= j; k += 2) {
      const double x = std::log(19.0) + m.mu() * j * lat.h() + 0.15 * lat.sqrt_h() * k;
      EXPECT_NEAR(lat.node_logprice(j, k).value, x, 1e-14);
      EXPECT_NEAR(lat.node_price(j, k), std::exp(x), 1e-12 * std::exp(x));
      EXPECT_NEAR(lat.undrifted(j, k).value, std::log(19.0) + 0.15 * lat.sqrt_h() * k,
                  1e-14);
      EXPECT_NEAR(lat.payoff(j, k), std::max(20.0 - std::exp(x), 0.0), 1e-12);
    }
  }
}

TEST(LatticeSpec, RejectsBadInput) {
  const auto m = figure1();
  EXPECT_THROW(gp::LatticeSpec(m, 0, gp::LogPrice(3.0)), gp::ConfigError);
  EXPECT_THROW(gp::LatticeSpec(m, 4, gp::LogPrice(3.0), 0.0), gp::ConfigError);
  const gp::LatticeSpec lat(m, 4, gp::LogPrice(3.0));
  EXPECT_FALSE(lat.valid_node(2, 1));
  EXPECT_FALSE(lat.valid_node(5, 1));
  EXPECT_FALSE(lat.valid_node(2, 4));
  EXPECT_THROW(lat.node_logprice(3, 0), gp::ConfigError);
}

TEST(ValueSurface, LevelsAreIndexedByWalkOffset) {
  const gp::LatticeSpec lat(figure1(), 3, gp::LogPrice(3.0));
  gp::ValueSurface s(lat);
  for (int j = 0; j <= 3; ++j) {
    auto row = s.level_values(j);
    ASSERT_EQ(row.size(), static_cast<std::size_t>(j + 1));
    for (int i = 0; i <= j; ++i) row[i] = 10 * j + (2 * i - j);
  }
  EXPECT_EQ(s.value(3, -3), 27.0);
  EXPECT_EQ(s.value(3, 3), 33.0);
  EXPECT_EQ(s.value(2, 0), 20.0);
  EXPECT_EQ(s.root(), 0.0);
  EXPECT_THROW(s.value(2, 1), gp::ConfigError);
}

TEST(OptimalStopping, OneStepByHand) {
  const auto m = figure1();
  const gp::LatticeSpec lat(m, 1, gp::LogPrice::of_spot(20.0));
  const double up = lat.payoff(1, 1);
  const double down = lat.payoff(1, -1);
  const double cont = lat.discount() * 0.5 * (up + down);
  const double v = gp::optimal_stopping_root(lat, gp::PutExercise{&lat},
                                             gp::Constant{0.0}, gp::Never{});
  EXPECT_DOUBLE_EQ(v, std::max(lat.payoff(0, 0), cont));
}

TEST(OptimalStopping, TerminalAndCancelFlags) {
  const auto m = figure1();
  const gp::LatticeSpec lat(m, 4, gp::LogPrice::of_spot(20.0));
  const auto s = gp::optimal_stopping_backward(
      lat, gp::PutExercise{&lat}, gp::PutCancel{&lat},
      [](int j, int k) { return j == 0 && k == 0; });
  EXPECT_EQ(s.flag(0, 0), gp::RegionFlag::kWriterCancel);
  EXPECT_NEAR(s.root(), 0.15, 1e-14);
  for (int k = -4; k <= 4; k += 2) EXPECT_EQ(s.flag(4, k), gp::RegionFlag::kTerminal);
}

TEST(OptimalStopping, RootMatchesSurface) {
  const auto m = figure1();
  const gp::LatticeSpec lat(m, 300, gp::LogPrice::of_spot(18.0));
  const auto band = [&](int j, int k) { return j < 100 && std::abs(k) <= 2; };
  const auto s = gp::optimal_stopping_backward(lat, gp::PutExercise{&lat},
                                               gp::PutCancel{&lat}, band);
  EXPECT_EQ(s.root(), gp::optimal_stopping_root(lat, gp::PutExercise{&lat},
                                                gp::PutCancel{&lat}, band));
}

TEST(StoppingOracle, EnumerationCounts) {
  // S(0) = 1, S(d) = 1 + S(d-1)^2.
  EXPECT_EQ(gp::enumerate_stopping_times(0).size(), 1u);
  EXPECT_EQ(gp::enumerate_stopping_times(1).size(), 2u);
  EXPECT_EQ(gp::enumerate_stopping_times(2).size(), 5u);
  EXPECT_EQ(gp::enumerate_stopping_times(3).size(), 26u);
  EXPECT_EQ(gp::enumerate_stopping_times(4).size(), 677u);
  EXPECT_THROW(gp::enumerate_stopping_times(5), gp::ConfigError);
}

TEST(StoppingOracle, RulesAreAdapted) {
  // Paths sharing the first tau steps must share the stop time.
  const int n = 3;
  for (const auto& rule : gp::enumerate_stopping_times(n)) {
    for (unsigned p = 0; p < 8; ++p) {
      for (unsigned q = 0; q < 8; ++q) {
        const int tau = rule[p];
        if ((p >> (n - tau)) == (q >> (n - tau))) EXPECT_EQ(rule[q], tau);
      }
    }
  }
}

class OracleEquivalence
    : public ::testing::TestWithParam<std::tuple<int, double>> {};

TEST_P(OracleEquivalence, StoppingKernelMatchesEnumeration) {
  const auto [n, spot] = GetParam();
  const auto m = figure1();
  const gp::LatticeSpec lat(m, n, gp::LogPrice::of_spot(spot));
  const gp::detail::BandMembership band{&lat, gp::make_band(m, lat.h(), m.maturity())};

  const double am = gp::optimal_stopping_backward(lat, gp::PutExercise{&lat},
                                                  gp::Constant{0.0}, gp::Never{})
                        .root();
  EXPECT_NEAR(am, gp::enumerate_stopping_oracle(lat, gp::PutExercise{&lat},
                                                gp::Constant{0.0}, gp::Never{}),
              1e-12);

  const double p2 = gp::optimal_stopping_backward(lat, gp::PutExercise{&lat},
                                                  gp::PutCancel{&lat}, band)
                        .root();
  EXPECT_NEAR(p2, gp::enumerate_stopping_oracle(lat, gp::PutExercise{&lat},
                                                gp::PutCancel{&lat}, band),
              1e-12);

  const double p1 = gp::optimal_stopping_backward(lat, gp::PutExercise{&lat},
                                                  gp::Constant{0.15}, band)
                        .root();
  EXPECT_NEAR(p1, gp::enumerate_stopping_oracle(lat, gp::PutExercise{&lat},
                                                gp::Constant{0.15}, band),
              1e-12);
}

TEST_P(OracleEquivalence, DynkinKernelMatchesMinMax) {
  const auto [n, spot] = GetParam();
  const auto m = figure1();
  const gp::LatticeSpec lat(m, n, gp::LogPrice::of_spot(spot));
  const double v = gp::dynkin_backward(lat, gp::PutExercise{&lat}, gp::PutCancel{&lat}).root();
  EXPECT_NEAR(v, gp::enumerate_dynkin_oracle(lat, gp::PutExercise{&lat}, gp::PutCancel{&lat}),
              1e-12);
}

INSTANTIATE_TEST_SUITE_P(Figure1, OracleEquivalence,
                         ::testing::Combine(::testing::Values(1, 2, 3, 4),
                                            ::testing::Values(15.0, 20.0, 25.0)));

TEST(OracleEquivalence, RandomObstaclesAndCancelSets) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::bernoulli_distribution coin(0.3);
  const auto m = figure1();
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4;
    const gp::LatticeSpec lat(m, n, gp::LogPrice(3.0));
    Table lo(n), up(n), cp(n);
    std::vector<std::vector<bool>> mask(n + 1, std::vector<bool>(2 * n + 1, false));
    for (int j = 0; j <= n; ++j) {
      for (int k = -j; k <= j; k += 2) {
        lo.at(j, k) = u(rng);
        up.at(j, k) = lo(j, k) + u(rng);
        cp.at(j, k) = u(rng);
        mask[j][k + n] = coin(rng);
      }
    }
    const double kernel = gp::optimal_stopping_root(lat, TableRef{&lo}, TableRef{&cp},
                                                    MaskRef{&mask, n});
    const double oracle = gp::enumerate_stopping_oracle(lat, TableRef{&lo}, TableRef{&cp},
                                                        MaskRef{&mask, n});
    EXPECT_NEAR(kernel, oracle, 1e-12) << "trial " << trial;
    EXPECT_NEAR(gp::dynkin_root(lat, TableRef{&lo}, TableRef{&up}),
                gp::enumerate_dynkin_oracle(lat, TableRef{&lo}, TableRef{&up}), 1e-12)
        << "trial " << trial;
  }
}

TEST(Dynkin, RejectsCrossedObstacles) {
  const gp::LatticeSpec lat(figure1(), 3, gp::LogPrice(3.0));
  EXPECT_THROW(gp::dynkin_backward(lat, gp::Constant{1.0}, gp::Constant{0.5}),
               gp::ConfigError);
}

TEST(Dynkin, CoincidingObstaclesGiveObstacle) {
  const auto m = figure1().with_penalty(0.0);
  const gp::LatticeSpec lat(m, 50, gp::LogPrice::of_spot(21.0));
  const auto s = gp::dynkin_backward(lat, gp::PutExercise{&lat}, gp::PutCancel{&lat});
  for (int j = 0; j <= 50; ++j)
    for (int k = -j; k <= j; k += 2) EXPECT_EQ(s.value(j, k), lat.payoff(j, k));
}

TEST(Dynkin, NoUpperObstacleIsOptimalStopping) {
  const gp::LatticeSpec lat(figure1(), 200, gp::LogPrice::of_spot(19.0));
  const double a = gp::dynkin_root(lat, gp::PutExercise{&lat},
                                   gp::Constant{gp::kNoUpperObstacle});
  const double b = gp::optimal_stopping_root(lat, gp::PutExercise{&lat},
                                             gp::Constant{0.0}, gp::Never{});
  EXPECT_EQ(a, b);
}

// Raising either obstacle can only raise the value, and the value stays
// between the obstacles.
TEST(Dynkin, RandomMonotonicityAndSandwich) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const int n = 12;
  const gp::LatticeSpec lat(figure1(), n, gp::LogPrice(3.0));
  for (int trial = 0; trial < 25; ++trial) {
    Table lo(n), up(n), lo2(n), up2(n);
    for (int j = 0; j <= n; ++j) {
      for (int k = -j; k <= j; k += 2) {
        lo.at(j, k) = u(rng);
        up.at(j, k) = lo(j, k) + u(rng);
        lo2.at(j, k) = std::min(lo(j, k) + 0.5 * u(rng), up(j, k));
        up2.at(j, k) = up(j, k) + u(rng);
      }
    }
    const auto base = gp::dynkin_backward(lat, TableRef{&lo}, TableRef{&up});
    const auto raised_lo = gp::dynkin_backward(lat, TableRef{&lo2}, TableRef{&up});
    const auto raised_up = gp::dynkin_backward(lat, TableRef{&lo}, TableRef{&up2});
    for (int j = 0; j <= n; ++j) {
      for (int k = -j; k <= j; k += 2) {
        const double v = base.value(j, k);
        EXPECT_GE(v, lo(j, k));
        if (j < n) EXPECT_LE(v, up(j, k));
        EXPECT_GE(raised_lo.value(j, k), v - 1e-15);
        EXPECT_GE(raised_up.value(j, k), v - 1e-15);
      }
    }
  }
}

TEST(DiscreteOperator, ExactOnQuadratics) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const double h = std::pow(10.0, u(rng) - 2.0);
    const double kappa = 0.05 + std::abs(u(rng));
    const double t = std::abs(u(rng)), x = u(rng);
    auto f = [&](double tt, double xx) { return a + b * xx + c * tt + d * xx * xx; };
    const double expected = h * (c + kappa * kappa * d);
    const double got = gp::discrete_operator_D(f, t, x, h, kappa);
    EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, std::abs(f(t, x))));
  }
}

TEST(DiscreteOperator, MartingaleResidualVanishes) {
  const auto m = figure1();
  const gp::LatticeSpec lat(m, 16, gp::LogPrice::of_spot(19.0));
  auto put = [&](double, double x) { return std::max(20.0 - std::exp(x), 0.0); };
  auto smooth = [](double t, double x) { return std::sin(3.0 * x) * std::exp(-t); };
  auto cubic = [](double t, double x) { return x * x * x - 4.0 * t * x; };
  for (int j = 0; j <= 12; ++j) {
    EXPECT_LE(gp::martingale_decomposition_check(put, lat, j), 1e-12);
    EXPECT_LE(gp::martingale_decomposition_check(smooth, lat, j), 1e-12);
    EXPECT_LE(gp::martingale_decomposition_check(cubic, lat, j), 1e-12);
  }
  EXPECT_THROW(gp::martingale_decomposition_check(put, lat, 17), gp::ConfigError);
  const gp::LatticeSpec big(m, 64, gp::LogPrice(3.0));
  EXPECT_THROW(gp::martingale_decomposition_check(put, big, 21), gp::ConfigError);
}
