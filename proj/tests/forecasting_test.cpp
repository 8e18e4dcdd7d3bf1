#include <gtest/gtest.h>

#include "searchsurv/forecasting.hpp"
#include "searchsurv/synthetic.hpp"
#include "test_util.hpp"
#include "reference_mae.hpp"

using namespace searchsurv;
using namespace searchsurv::forecast;

namespace {

std::vector<double> ramp(int n, double slope = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = slope * i;
  return v;
}

RollingOptions quick_options() {
  RollingOptions o;
  o.gp.restarts = 1;
  o.gp.max_iterations = 30;
  return o;
}

}  // namespace

TEST(Design, SingleLagNextDay) {
  const auto y = ramp(5);
  const auto d = build_design({}, y, 0, 1, ModelKind::ARF);
  ASSERT_EQ(d.rows.rows(), 4);
  ASSERT_EQ(d.rows.cols(), 1);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(d.rows(i, 0), static_cast<double>(i));
    EXPECT_EQ(d.targets[i], static_cast<double>(i + 1));
  }
}

TEST(Design, BoundaryAndShapes) {
  const int L = 6, D = 7;
  const auto y = ramp(L + D + 1);
  const auto z = ramp(L + D + 1, 0.01);
  EXPECT_EQ(build_design(z, y, L, D, ModelKind::ARF).rows.rows(), 1);
  const auto sar = build_design(z, y, L, D, ModelKind::SARF);
  ASSERT_EQ(sar.rows.rows(), 1);
  EXPECT_EQ(sar.rows.cols(), 2 * (L + 1));
  EXPECT_EQ(sar.search_dim, L + 1);
  EXPECT_THROW(build_design(z, ramp(L + D), L, D, ModelKind::ARF), InsufficientHistory);
  EXPECT_THROW(build_design(ramp(3), y, L, D, ModelKind::SARF), AlignmentError);
  EXPECT_THROW(build_design(z, y, L, D, ModelKind::PERF), InvalidArgument);
  EXPECT_THROW(build_design(z, y, -1, D, ModelKind::ARF), InvalidArgument);
  EXPECT_THROW(build_design(z, y, L, 0, ModelKind::ARF), InvalidArgument);
}

TEST(Design, LinearSeriesTargets) {
  const int L = 6;
  const auto y = ramp(60);
  const auto z = ramp(60, -0.5);
  for (int D : {7, 14}) {
    const auto d = build_design(z, y, L, D, ModelKind::SARF);
    EXPECT_EQ(d.rows.rows(), 60 - L - D);
    for (Eigen::Index i = 0; i < d.rows.rows(); ++i) {
      // [z_t..z_{t-L}; y_t..y_{t-L}], target y_{t+D}
      EXPECT_EQ(d.targets[i], d.rows(i, L + 1) + D);
      EXPECT_EQ(d.rows(i, 0), -0.5 * d.rows(i, L + 1));
      EXPECT_EQ(d.rows(i, 2 * L + 1), d.rows(i, L + 1) - L);
      EXPECT_EQ(d.origins[static_cast<std::size_t>(i)] + static_cast<std::size_t>(D), static_cast<std::size_t>(d.targets[i]));
    }
  }
}

TEST(Persistence, Examples) {
  const auto c = fixtures::series(std::vector<double>(30, 4.0));
  for (int D : {1, 7, 14}) {
    const auto f = persistence_forecast(c, D);
    EXPECT_EQ(mae(f.values(), c.slice(f.start(), f.end()).values()), 0.0);
  }
  std::vector<double> v(20, 0.0);
  v[3] = 5.0;
  const auto f = persistence_forecast(fixtures::series(v), 7);
  EXPECT_EQ(f.start(), fixtures::day0() + std::chrono::days{7});
  EXPECT_EQ(f.at(fixtures::day0() + std::chrono::days{10}), 5.0);
  for (double a : {0.5, 2.0, 3.25}) {
    const auto y = fixtures::series(ramp(40, a));
    const auto fy = persistence_forecast(y, 7);
    EXPECT_NEAR(mae(fy.values(), y.slice(fy.start(), fy.end()).values()), 7.0 * a, 1e-12);
  }
  EXPECT_THROW(persistence_forecast(c, 30), InsufficientHistory);
  EXPECT_THROW(persistence_forecast(c, 0), InvalidArgument);
}

TEST(Rolling, ConstantSeriesPersistenceIsExact) {
  const auto y = fixtures::series(std::vector<double>(50, 3.0));
  const auto z = fixtures::series(std::vector<double>(50, 0.5));
  auto opts = quick_options();
  opts.include_arf = opts.include_sarf = false;
  const auto res = rolling_evaluation(z, y, 6, 7, opts);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].kind, ModelKind::PERF);
  EXPECT_EQ(res.records[0].mae_mean, 0.0);
  EXPECT_EQ(res.records[0].mae_sd, 0.0);
  EXPECT_EQ(res.leakage_violations, 0u);
  EXPECT_GT(res.test_days, 0u);
}

TEST(Rolling, StartRule) {
  std::vector<double> y(40, 0.0);
  for (std::size_t t = 20; t < y.size(); ++t) y[t] = 2.0;
  EXPECT_EQ(start_origin(y, 10.0), std::optional<std::size_t>(24));
  EXPECT_EQ(start_origin(y, 1000.0), std::nullopt);
  auto opts = quick_options();
  opts.include_arf = opts.include_sarf = false;
  const auto res = rolling_evaluation(fixtures::series(std::vector<double>(40, 0.1)), fixtures::series(y), 2, 3, opts);
  EXPECT_EQ(res.records[0].points.front().origin, fixtures::day0() + std::chrono::days{24});
  EXPECT_EQ(res.records[0].points.size(), 40u - 24u - 3u);
}

TEST(Rolling, LeadingIndicatorRecordsAndNoLeakage) {
  const auto sc = synth::make_leading_indicator(3, 7, 80);
  const auto res = rolling_evaluation(sc.z, sc.y, 6, 7, quick_options());
  ASSERT_EQ(res.records.size(), 3u);
  EXPECT_EQ(res.leakage_violations, 0u);
  for (const auto& rec : res.records) {
    EXPECT_EQ(rec.points.size(), res.test_days);
    std::vector<double> errs;
    for (const auto& p : rec.points) {
      EXPECT_EQ(p.target, p.origin + std::chrono::days{7});
      EXPECT_EQ(p.truth, sc.y.at(p.target));
      if (!p.missing) errs.push_back(std::abs(p.forecast - p.truth));
      EXPECT_GE(p.stddev, 0.0);
    }
    EXPECT_NEAR(rec.mae_mean, mean(errs), 1e-12);
  }
  EXPECT_LT(res.records[1].mae_mean, res.records[0].mae_mean);
}

TEST(Rolling, Deterministic) {
  const auto sc = synth::make_leading_indicator(4, 7, 60);
  const auto a = rolling_evaluation(sc.z, sc.y, 6, 7, quick_options());
  const auto b = rolling_evaluation(sc.z, sc.y, 6, 7, quick_options());
  for (std::size_t k = 0; k < a.records.size(); ++k)
    for (std::size_t i = 0; i < a.records[k].points.size(); ++i)
      EXPECT_EQ(a.records[k].points[i].forecast, b.records[k].points[i].forecast);
}

TEST(MaeTable, HandExamples) {
  const auto t = normalize_mae_table({{10.0, 20.0}});
  EXPECT_EQ(t.cells[0], (std::vector<double>{0.0, 1.0}));
  const auto shifted = normalize_mae_table({{110.0, 120.0}});
  EXPECT_EQ(shifted.cells, t.cells);
  const auto flat = normalize_mae_table({{3.0, 3.0}, {3.0, 3.0}});
  EXPECT_EQ(flat.column_mean, (std::vector<double>{0.0, 0.0}));
  const auto two = normalize_mae_table({{0.0, 4.0}, {2.0, 4.0}});
  EXPECT_DOUBLE_EQ(two.column_mean[0], 0.25);
  EXPECT_DOUBLE_EQ(two.column_sd[0], 0.25);
  EXPECT_DOUBLE_EQ(two.column_mean[1], 1.0);
  EXPECT_THROW(normalize_mae_table({{1.0}, {1.0, 2.0}}), InvalidArgument);
  EXPECT_THROW(normalize_mae_table({}), InvalidArgument);
}

TEST(MaeTable, PublishedOrdering) {
  const auto t = normalize_mae_table(reference::country_mae_table());
  // columns: 7d AR-F, SAR-F, PER-F, 14d AR-F, SAR-F, PER-F
  EXPECT_LE(t.column_mean[1], t.column_mean[0]);
  EXPECT_LE(t.column_mean[4], t.column_mean[3]);
}
