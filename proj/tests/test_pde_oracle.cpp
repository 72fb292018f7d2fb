#include <cmath>

#include <gtest/gtest.h>

#include "gameput/american.hpp"
#include "gameput/pde_oracle.hpp"

namespace gp = gameput;

namespace {

gp::ModelSpec figure1() { return gp::make_model(20.0, 0.02, 0.15, 0.5, 0.15); }

const gp::PdeGrid& game_grid() {
  static const gp::PdeGrid g = [] {
    const auto m = figure1();
    const auto d = gp::default_domain(m);
    return gp::solve_game_vi(m, d.x_min, d.x_max, 513, 512);
  }();
  return g;
}

const gp::PdeGrid& american_grid() {
  static const gp::PdeGrid g = [] {
    const auto m = figure1();
    const auto d = gp::default_domain(m);
    return gp::solve_american_vi(m, d.x_min, d.x_max, 513, 512);
  }();
  return g;
}

}  // namespace

TEST(Domain, DefaultIsSymmetricAroundStrike) {
  const auto m = figure1();
  const auto d = gp::default_domain(m);
  const double half = 6 * 0.15 * std::sqrt(0.5) + std::abs(m.mu()) * 0.5;
  EXPECT_DOUBLE_EQ(d.x_min, m.log_strike() - half);
  EXPECT_DOUBLE_EQ(d.x_max, m.log_strike() + half);
}

TEST(Solver, RejectsBadGrids) {
  const auto m = figure1();
  const auto d = gp::default_domain(m);
  EXPECT_THROW(gp::solve_game_vi(m, d.x_min, d.x_max, 8, 64), gp::ConfigError);
  EXPECT_THROW(gp::solve_game_vi(m, d.x_min, d.x_max, 64, 8), gp::ConfigError);
  EXPECT_THROW(gp::solve_game_vi(m, 2.9, 3.1, 64, 64), gp::ConfigError);
  EXPECT_THROW(gp::solve_game_vi(m, 3.5, 2.5, 64, 64), gp::ConfigError);
}

TEST(Solver, IterationCapRaisesNumericalError) {
  const auto m = figure1();
  const auto d = gp::default_domain(m);
  gp::PdeOptions opt;
  opt.max_iterations = 2;
  EXPECT_THROW(gp::solve_game_vi(m, d.x_min, d.x_max, 257, 64, opt), gp::NumericalError);
}

TEST(Solver, GridLayout) {
  const auto& g = game_grid();
  EXPECT_TRUE(g.is_game());
  EXPECT_TRUE(g.has_history());
  EXPECT_EQ(g.nx(), 513);
  EXPECT_EQ(g.nt(), 512);
  EXPECT_DOUBLE_EQ(g.t(512), 0.5);
  EXPECT_NEAR(g.x(512), g.x_max(), 1e-12);
  // Maturity row is the payoff.
  for (int i = 0; i < g.nx(); ++i) EXPECT_EQ(g.value(512, i), g.lower()[i]);
  EXPECT_LE(g.max_iterations_used(), 10000);
}

TEST(Solver, SandwichBoundaryValues) {
  const auto& g = game_grid();
  const auto m = figure1();
  for (int r = 0; r <= g.nt(); ++r) {
    EXPECT_NEAR(g.value(r, 0), m.strike() - std::exp(g.x_min()), 1e-12);
    EXPECT_EQ(g.value(r, g.nx() - 1), 0.0);
    for (int i = 1; i < g.nx() - 1; ++i) {
      ASSERT_GE(g.value(r, i), g.lower()[i]);
      ASSERT_LE(g.value(r, i), g.upper()[i]);
    }
  }
}

TEST(Solver, AmericanAgreesWithLattice) {
  const auto m = figure1();
  for (const double spot : {17.0, 20.0, 23.0}) {
    const double pde = gp::sample(american_grid(), 0.0, std::log(spot));
    const double lattice = gp::american_put(m, 2000, gp::LogPrice::of_spot(spot));
    EXPECT_NEAR(pde, lattice, 2e-4) << spot;
  }
}

TEST(Solver, GameBelowAmericanAndPinnedAtStrike) {
  const auto& g = game_grid();
  const auto& a = american_grid();
  for (int r = 0; r <= g.nt(); r += 16)
    for (int i = 0; i < g.nx(); ++i) ASSERT_LE(g.value(r, i), a.value(r, i) + 1e-9);
  // ln K lies in the writer region at t = 0.
  EXPECT_NEAR(gp::sample(g, 0.0, std::log(20.0)), 0.15, 1e-12);
}

TEST(Solver, GoldenValues) {
  EXPECT_NEAR(gp::sample(game_grid(), 0.0, std::log(19.0)), 1.0304065019936566, 1e-9);
  EXPECT_NEAR(gp::sample(american_grid(), 0.0, std::log(20.0)), 0.7620071134654884, 1e-9);
}

TEST(Solver, ImplicitEulerIsFirstOrderClose) {
  const auto m = figure1();
  const auto d = gp::default_domain(m);
  gp::PdeOptions ie;
  ie.scheme = gp::TimeScheme::kImplicitEuler;
  ie.keep_history = false;
  const auto g = gp::solve_american_vi(m, d.x_min, d.x_max, 513, 512, ie);
  EXPECT_FALSE(g.has_history());
  EXPECT_NEAR(gp::sample(g, 0.0, std::log(20.0)),
              gp::sample(american_grid(), 0.0, std::log(20.0)), 5e-4);
  EXPECT_THROW(gp::sample(g, 0.1, std::log(20.0)), gp::ConfigError);
}

TEST(Sample, ExactAtNodesAndBilinearBetween) {
  const auto& g = game_grid();
  EXPECT_EQ(gp::sample(g, g.t(100), g.x(200)), g.value(100, 200));
  const double x = 0.5 * (g.x(200) + g.x(201));
  const double t = 0.5 * (g.t(100) + g.t(101));
  const double expected = 0.25 * (g.value(100, 200) + g.value(100, 201) +
                                  g.value(101, 200) + g.value(101, 201));
  EXPECT_NEAR(gp::sample(g, t, x), expected, 1e-12);
  EXPECT_THROW(gp::sample(g, -0.1, x), gp::ConfigError);
  EXPECT_THROW(gp::sample(g, 0.0, g.x_max() + 0.1), gp::ConfigError);
}

TEST(Solver, MonotoneInTime) {
  const auto& g = game_grid();
  double worst = 0.0;
  for (int r = 1; r <= g.nt(); ++r)
    for (int i = 0; i < g.nx(); ++i) worst = std::max(worst, g.value(r, i) - g.value(r - 1, i));
  EXPECT_LE(worst, 1e-9 * 20);
}

TEST(Solver, AmericanMeshRefinementAndLatticeAgreement) {
  const auto m = figure1();
  const auto d = gp::default_domain(m);
  gp::PdeOptions opt;
  opt.keep_history = false;
  double v[3];
  const int nx[3] = {1025, 2049, 4097};
  for (int i = 0; i < 3; ++i) {
    const auto g = gp::solve_american_vi(m, d.x_min, d.x_max, nx[i], nx[i] - 1, opt);
    v[i] = gp::sample(g, 0.0, m.log_strike());
  }
  EXPECT_LE(std::abs(v[2] - v[1]), 0.35 * std::abs(v[1] - v[0]));
  EXPECT_NEAR(v[2], gp::american_put(m, 4000, gp::LogPrice(m.log_strike())), 1e-3);
}
