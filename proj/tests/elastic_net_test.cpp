#include <gtest/gtest.h>

#include "oracles.hpp"
#include "searchsurv/elastic_net.hpp"
#include "test_util.hpp"

using namespace searchsurv;
using namespace searchsurv::enet;

namespace {

Eigen::MatrixXd unit_columns(Eigen::MatrixXd X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
    X.col(j) = (X.col(j).array() - lo) / (hi - lo);
  }
  return X;
}

double kkt_scale(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return std::max(1.0, (X.rowwise() - X.colwise().mean()).cwiseAbs().sum() * (y.array() - y.mean()).abs().maxCoeff());
}

}  // namespace

TEST(LambdaMax, Formula) {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 1, 1, 4;  // centred x = [-1,0,1], centred y = [-1,-1,2] -> x'y = 3
  EXPECT_DOUBLE_EQ(lambda_max(x, y), 6.0);
  EXPECT_EQ(lambda_max(x, Eigen::VectorXd::Constant(3, 2.0)), 0.0);
  Eigen::MatrixXd dup(3, 2);
  dup << x, x;
  EXPECT_DOUBLE_EQ(lambda_max(dup, y), 6.0);
}

TEST(LambdaMax, NullActiveBoundary) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto X = unit_columns(fixtures::random_matrix(40, 6, seed));
    const Eigen::VectorXd y = X * Eigen::VectorXd::LinSpaced(6, -1, 1) + 0.1 * fixtures::random_matrix(40, 1, seed + 99);
    const double lmax = lambda_max(X, y);
    const auto null = fit(X, y, lmax * (1 + 1e-6), 0.5 * lmax);
    EXPECT_EQ(null.active_count, 0);
    EXPECT_NEAR(null.intercept, y.mean(), 1e-12);
    EXPECT_GE(fit(X, y, lmax * (1 - 1e-3), 0.5 * lmax).active_count, 1);
  }
}

TEST(Fit, ScalarClosedForm) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = fixtures::random_matrix(25, 1, seed);
    const Eigen::VectorXd y = 0.7 * x.col(0) + fixtures::random_matrix(25, 1, seed + 50).col(0);
    const Eigen::VectorXd xc = x.col(0).array() - x.col(0).mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    for (double frac : {0.0, 0.1, 0.5, 0.9}) {
      const double l1 = frac * lambda_max(x, y), l2 = 0.3;
      const double expect = soft_threshold(xc.dot(yc), l1 / 2.0) / (xc.squaredNorm() + l2);
      const auto m = fit(x, y, l1, l2);
      EXPECT_NEAR(m.weights[0], expect, 1e-8);
      EXPECT_NEAR(m.intercept, y.mean() - x.col(0).mean() * m.weights[0], 1e-10);
    }
  }
}

TEST(Fit, NoiselessRecovery) {
  const auto X = fixtures::random_matrix(100, 5, 3);
  Eigen::VectorXd w(5);
  w << 1.5, -2.0, 0.0, 0.7, 3.0;
  const Eigen::VectorXd y = X * w + Eigen::VectorXd::Constant(100, 0.4);
  const auto m = fit(X, y, 1e-8, 1e-8);
  // Oracle: ordinary least squares with intercept via QR.
  Eigen::MatrixXd A(100, 6);
  A << X, Eigen::VectorXd::Ones(100);
  const Eigen::VectorXd ols = A.colPivHouseholderQr().solve(y);
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(m.weights[j], w[j], 1e-3);
    EXPECT_NEAR(m.weights[j], ols[j], 1e-3);
  }
  EXPECT_NEAR(m.intercept, 0.4, 1e-3);
  EXPECT_LT((predict(m, X) - y).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Fit, KktAndNullComparison) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto X = unit_columns(fixtures::random_matrix(60, 12, seed));
    const Eigen::VectorXd y = unit_columns(X.leftCols(3) * Eigen::Vector3d(1, -1, 2) + 0.2 * fixtures::random_matrix(60, 1, seed + 7)).col(0);
    const Problem p(X, y);
    const double l1 = 0.2 * p.lambda_max();
    const auto m = p.fit(l1, 0.5 * l1);
    EXPECT_LT(p.kkt_violation(m.weights, l1, 0.5 * l1), 1e-6 * kkt_scale(X, y));
    ElasticNetModel null;
    null.weights = Eigen::VectorXd::Zero(12);
    null.intercept = y.mean();
    null.lambda1 = l1;
    null.lambda2 = 0.5 * l1;
    EXPECT_LE(objective(m, X, y), objective(null, X, y) + 1e-12);
    EXPECT_EQ(m.active_count, count_active(m.weights));
  }
}

TEST(Fit, TwoFeatureGridOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto X = unit_columns(fixtures::random_matrix(30, 2, seed + 300));
    const Eigen::VectorXd y = unit_columns(X * Eigen::Vector2d(0.8, -0.4) + 0.3 * fixtures::random_matrix(30, 1, seed + 400)).col(0);
    const double l1 = 0.3 * lambda_max(X, y);
    const auto m = fit(X, y, l1, 0.5 * l1);
    const double grid = oracle::enet_grid_minimum(X, y, l1, 0.5 * l1, m.weights[0], m.weights[1], 0.5, 1e-3);
    EXPECT_GE(grid, objective(m, X, y) - 1e-6);
  }
}

TEST(Fit, Errors) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(fit(X, Eigen::VectorXd::Ones(4), 0.1, 0.1), InvalidArgument);
  EXPECT_THROW(fit(Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Ones(3), 0.1, 0.1), InvalidArgument);
  EXPECT_THROW(fit(Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Ones(4), -1.0, 0.1), InvalidArgument);
  const auto Xr = fixtures::random_matrix(30, 8, 1);
  const Eigen::VectorXd yr = fixtures::random_matrix(30, 1, 2).col(0);
  SolverOptions tight;
  tight.max_sweeps = 1;
  tight.tolerance = 1e-15;
  try {
    fit(Xr, yr, 1e-6, 1e-6, tight);
    FAIL() << "expected non-convergence";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.kkt_violation(), 0.0);
  }
}

TEST(Predict, Arithmetic) {
  ElasticNetModel m;
  m.weights = Eigen::VectorXd::Constant(1, 2.0);
  m.intercept = 1.0;
  EXPECT_DOUBLE_EQ(predict(m, Eigen::MatrixXd::Constant(1, 1, 3.0))[0], 7.0);
  m.weights.setZero();
  EXPECT_TRUE(predict(m, fixtures::random_matrix(5, 1, 3)).isApprox(Eigen::VectorXd::Constant(5, 1.0)));
  EXPECT_THROW(predict(m, Eigen::MatrixXd::Ones(2, 3)), InvalidArgument);
}

TEST(Path, GridAndEndpoints) {
  const auto X = unit_columns(fixtures::random_matrix(50, 10, 4));
  const Eigen::VectorXd y = unit_columns(X.leftCols(2) * Eigen::Vector2d(1, 1) + 0.1 * fixtures::random_matrix(50, 1, 5)).col(0);
  const auto path = fit_path(X, y, 50, 0.5);
  ASSERT_EQ(path.models.size(), 50u);
  EXPECT_EQ(path.models.front().active_count, 0);
  const double lmax = lambda_max(X, y);
  EXPECT_DOUBLE_EQ(path.models.front().lambda1, lmax);
  EXPECT_NEAR(path.models.back().lambda1, lmax * 1e-4, 1e-12 * lmax);
  for (std::size_t i = 1; i < path.models.size(); ++i) {
    EXPECT_LT(path.models[i].lambda1, path.models[i - 1].lambda1);
    EXPECT_NEAR(path.models[i].lambda1 / path.models[i - 1].lambda1, std::pow(1e-4, 1.0 / 49.0), 1e-12);
    EXPECT_DOUBLE_EQ(path.models[i].lambda2, 0.5 * path.models[i].lambda1);
  }
  const auto two = fit_path(X, y, 2, 0.5);
  ASSERT_EQ(two.models.size(), 2u);
  EXPECT_DOUBLE_EQ(two.models[1].lambda1, lmax * 1e-4);
  EXPECT_THROW(fit_path(X, y, 1, 0.5), InvalidArgument);
  EXPECT_THROW(fit_path(X, Eigen::VectorXd::Constant(50, 0.3), 10, 0.5), DegenerateInput);
}

TEST(Path, ActiveCountMostlyNonDecreasing) {
  int steps = 0, monotone = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto X = unit_columns(fixtures::random_matrix(60, 15, seed + 1000));
    const Eigen::VectorXd y = unit_columns(X * fixtures::random_matrix(15, 1, seed + 2000) + 0.5 * fixtures::random_matrix(60, 1, seed + 3000)).col(0);
    const auto path = fit_path(X, y, 100, 0.5);
    for (std::size_t i = 1; i < path.models.size(); ++i) {
      ++steps;
      monotone += path.models[i].active_count >= path.models[i - 1].active_count ? 1 : 0;
    }
  }
  EXPECT_GE(static_cast<double>(monotone) / steps, 0.95);
}

TEST(Path, WarmStartMatchesColdFit) {
  const auto X = unit_columns(fixtures::random_matrix(40, 6, 8));
  const Eigen::VectorXd y = unit_columns(X * Eigen::VectorXd::LinSpaced(6, 0, 1) + 0.2 * fixtures::random_matrix(40, 1, 9)).col(0);
  const auto path = fit_path(X, y, 20, 0.5);
  for (std::size_t i : {5u, 12u, 19u}) {
    const auto& m = path.models[i];
    const auto cold = fit(X, y, m.lambda1, m.lambda2);
    EXPECT_LT((cold.weights - m.weights).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Path, NearlyCollinearColumnsConverge) {
  const auto base = fixtures::random_matrix(120, 4, 21);
  Eigen::MatrixXd X(120, 8);
  X << base, base + 1e-3 * fixtures::random_matrix(120, 4, 22);
  X = unit_columns(X);
  const Eigen::VectorXd y = unit_columns(X.leftCols(4) * Eigen::Vector4d(1, 0.5, -0.5, 2)).col(0);
  const Problem p(X, y);
  const auto path = fit_path(X, y, 200, 0.5);
  for (const auto& m : path.models) EXPECT_LT(p.kkt_violation(m.weights, m.lambda1, m.lambda2), 1e-8 * p.lambda_max());
}
