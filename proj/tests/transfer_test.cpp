#include <gtest/gtest.h>

#include "searchsurv/synthetic.hpp"
#include "searchsurv/transfer.hpp"
#include "test_util.hpp"

using namespace searchsurv;
using namespace searchsurv::transfer;

namespace {

// Columns are independent random walks; T[t] = S[t - k].
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> delayed_pair(int k, Eigen::Index days, Eigen::Index cols, std::uint64_t seed) {
  const int pad = 50;
  Eigen::MatrixXd S(days, cols), T(days, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto w = fixtures::random_walk(static_cast<std::size_t>(days + 2 * pad), seed + static_cast<std::uint64_t>(j));
    for (Eigen::Index t = 0; t < days; ++t) {
      S(t, j) = w[static_cast<std::size_t>(t + pad)];
      T(t, j) = w[static_cast<std::size_t>(t + pad - k)];
    }
  }
  return {S, T};
}

QuerySet make_set(const Eigen::MatrixXd& m, std::vector<std::string> cats) {
  QuerySet qs{fixtures::day0(), m, {}, std::move(cats)};
  for (Eigen::Index j = 0; j < m.cols(); ++j) qs.ids.push_back("q" + std::to_string(j));
  return qs;
}

enet::RegularizationPath path_with_counts(const std::vector<int>& counts) {
  enet::RegularizationPath p;
  for (int c : counts) {
    enet::ElasticNetModel m;
    m.weights = Eigen::VectorXd::Zero(60);
    m.weights.head(c).setOnes();
    m.active_count = c;
    p.models.push_back(m);
  }
  return p;
}

}  // namespace

TEST(Align, PlantedDelay) {
  const auto [S, T] = delayed_pair(10, 200, 4, 11);
  EXPECT_EQ(align_temporal(S, T, 45).shift, 10);
  EXPECT_EQ(align_temporal(S, S, 45).shift, 0);
  EXPECT_EQ(align_temporal(S, T, 0).shift, 0);
}

TEST(Align, RecoversEveryLagInWindow) {
  for (int k = -45; k <= 45; k += 5) {
    const auto [S, T] = delayed_pair(k, 250, 3, 100 + static_cast<std::uint64_t>(k + 45));
    const auto a = align_temporal(S, T, 45);
    EXPECT_EQ(a.shift, k);
    EXPECT_NEAR(a.mean_r, 1.0, 1e-12);
  }
}

TEST(Align, InsufficientOverlap) {
  EXPECT_THROW(align_temporal(Eigen::MatrixXd::Random(10, 2), Eigen::MatrixXd::Random(10, 2), 8), InsufficientHistory);
}

TEST(Mapping, SingleCandidatePerCategory) {
  const auto src = make_set(fixtures::random_matrix(60, 2, 1), {"cough", "fever"});
  const auto tgt = make_set(fixtures::random_matrix(60, 2, 2), {"fever", "cough"});
  const auto m = map_queries(src, tgt, 0);
  EXPECT_EQ(m.pairs[0].target_index, 1);
  EXPECT_EQ(m.pairs[1].target_index, 0);
  EXPECT_FALSE(m.pairs[0].fallback);
}

TEST(Mapping, FallbackWhenCategoryMissing) {
  Eigen::MatrixXd s = fixtures::random_matrix(60, 1, 3);
  Eigen::MatrixXd t(60, 2);
  t << fixtures::random_matrix(60, 1, 4), s + 0.01 * fixtures::random_matrix(60, 1, 5);
  const auto m = map_queries(make_set(s, {"rash"}), make_set(t, {"cough", "fever"}), 0);
  EXPECT_TRUE(m.pairs[0].fallback);
  EXPECT_EQ(m.pairs[0].target_index, 1);
  EXPECT_GT(m.pairs[0].r, 0.99);
  EXPECT_THROW(map_queries(make_set(s, {"rash"}), QuerySet{fixtures::day0(), Eigen::MatrixXd(60, 0), {}, {}}, 0),
               InvalidArgument);
}

TEST(Mapping, NoisyCopyBeatsNoise) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Eigen::MatrixXd s = fixtures::random_matrix(80, 1, seed);
    Eigen::MatrixXd t(80, 5);
    for (int j = 0; j < 5; ++j) t.col(j) = fixtures::random_matrix(80, 1, seed * 10 + 1000 + static_cast<std::uint64_t>(j));
    const Eigen::Index planted = static_cast<Eigen::Index>(seed % 5);
    t.col(planted) = s.col(0) + 0.5 * t.col(planted);
    const auto m = map_queries(make_set(s, {"c"}), make_set(t, {"c", "c", "c", "c", "c"}), 0);
    hits += m.pairs[0].target_index == planted ? 1 : 0;
  }
  EXPECT_GE(hits, 48);
}

TEST(Scale, Ratios) {
  const Eigen::MatrixXd S = fixtures::random_matrix(30, 3, 1).cwiseAbs();
  const auto same = scale_target(S, S);
  EXPECT_TRUE(same.ratios.isApprox(Eigen::VectorXd::Ones(3)));
  EXPECT_EQ(same.data, S);
  const Eigen::MatrixXd half = 0.5 * S;
  const auto r = scale_target(half, S);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(r.ratios[j], 2.0, 1e-14);
    EXPECT_NEAR(r.data.col(j).mean(), S.col(j).mean(), 1e-14);
  }
  Eigen::MatrixXd z = S;
  z.col(1).setZero();
  const auto zr = scale_target(z, S);
  EXPECT_TRUE(zr.zero_mean[1]);
  EXPECT_EQ(zr.ratios[1], 1.0);
  EXPECT_TRUE(zr.data.col(1).isZero());
  EXPECT_THROW(scale_target(S.leftCols(2), S), InvalidArgument);
}

TEST(Ensemble, SparsityBand) {
  const auto path = path_with_counts({0, 2, 3, 49, 50});
  EXPECT_EQ(select_ensemble(path, 3, 49, {0, 1}).models.size(), 2u);
  EXPECT_EQ(select_ensemble(path, 0, 60, {0, 1}).models.size(), 5u);
  EXPECT_THROW(select_ensemble(path, 61, 62, {0, 1}), EnsembleEmpty);
}

TEST(Infer, QuantileBandHandValues) {
  Eigen::MatrixXd Y(2, 3);
  Y << 1, 2, 3, 3, 1, 2;
  const auto est = summarize_predictions(Y, fixtures::day0());
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(est.mean[i], 2.0);
    EXPECT_NEAR(est.lower[i], 1.05, 1e-14);
    EXPECT_NEAR(est.upper[i], 2.95, 1e-14);
  }
  EXPECT_EQ(est.ensemble_size, 3);
}

TEST(Infer, IdenticalModelsAndDenormalization) {
  enet::ElasticNetModel m;
  m.weights = Eigen::Vector2d(0.5, 0.25);
  m.intercept = 0.1;
  SourceEnsemble ens{{m, m, m}, {10.0, 30.0}};
  const auto Z = fixtures::random_matrix(7, 2, 5);
  const auto est = infer(ens, Z, fixtures::day0());
  for (Eigen::Index i = 0; i < 7; ++i) {
    const double expect = (Z.row(i).dot(m.weights) + 0.1) * 20.0 + 10.0;
    EXPECT_NEAR(est.mean[static_cast<std::size_t>(i)], expect, 1e-12);
    EXPECT_NEAR(est.upper[static_cast<std::size_t>(i)] - est.lower[static_cast<std::size_t>(i)], 0.0, 1e-12);
  }
}

TEST(Infer, OrderEquivarianceAndBands) {
  std::vector<enet::ElasticNetModel> models;
  for (int k = 0; k < 6; ++k) {
    enet::ElasticNetModel m;
    m.weights = fixtures::random_matrix(3, 1, 50 + static_cast<std::uint64_t>(k)).col(0);
    m.intercept = 0.1 * k;
    models.push_back(m);
  }
  const auto Z = fixtures::random_matrix(20, 3, 9);
  const auto a = infer(SourceEnsemble{models, {0, 5}}, Z, fixtures::day0());
  std::reverse(models.begin(), models.end());
  std::swap(models[1], models[4]);
  const auto b = infer(SourceEnsemble{models, {0, 5}}, Z, fixtures::day0());
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(a.mean[i], b.mean[i], 1e-12);
    EXPECT_EQ(a.lower[i], b.lower[i]);
    EXPECT_EQ(a.upper[i], b.upper[i]);
    EXPECT_LE(a.lower[i], a.mean[i]);
    EXPECT_LE(a.mean[i], a.upper[i]);
  }
}

TEST(ShiftProfileTest, PlantedDelayAndSharedQueries) {
  const auto [S, T] = delayed_pair(7, 200, 4, 77);
  std::vector<enet::ElasticNetModel> models;
  for (int c = 1; c <= 4; ++c) {
    enet::ElasticNetModel m;
    m.weights = Eigen::VectorXd::Zero(4);
    m.weights.head(c).setOnes();
    m.active_count = c;
    models.push_back(m);
  }
  const auto prof = per_model_shift_profile(SourceEnsemble{models, {0, 1}}, S, T, 45);
  EXPECT_EQ(prof.shifts, (std::vector<int>{7, 7, 7, 7}));
  EXPECT_DOUBLE_EQ(prof.mean, 7.0);
  EXPECT_DOUBLE_EQ(prof.ci_high - prof.ci_low, 0.0);
  EXPECT_LE(prof.ci_low, prof.mean);
  EXPECT_GE(prof.ci_high, prof.mean);
}

namespace {

struct TransferCase {
  QuerySet source, target;
  TimeSeries source_truth, target_truth;
};

TransferCase synthetic_pair(std::uint64_t seed) {
  synth::SyntheticScenario a;
  a.seed = seed;
  a.history_start = make_date(2019, 12, 1);
  a.current_days = 200;
  a.beta = 0.0;
  synth::SyntheticScenario b = a;
  b.seed = seed + 1000;
  b.country = "TG";
  b.peak_day = 95.0;
  b.growth_rate = 0.08;
  const auto sa = synth::generate_synthetic(a);
  const auto sb = synth::generate_synthetic(b);
  return {sa.data.query_set(a.current_start, a.end()), sb.data.query_set(b.current_start, b.end()), sa.infections,
          sb.infections};
}

}  // namespace

TEST(RunTransfer, SelfTransferIdentity) {
  const auto c = synthetic_pair(5);
  TransferConfig cfg;
  cfg.path_size = 200;
  const auto res = run_transfer(c.source, c.source_truth, c.source, cfg);
  EXPECT_EQ(res.alignment.shift, 0);
  for (const auto& p : res.mapping.pairs) EXPECT_EQ(p.source_index, p.target_index);
  EXPECT_TRUE(res.scaled.ratios.isApprox(Eigen::VectorXd::Ones(res.scaled.ratios.size())));
  const auto direct = summarize_predictions(ensemble_predictions(res.ensemble, res.source_features), res.estimate.mean.start());
  for (std::size_t i = 0; i < direct.mean.size(); ++i) {
    EXPECT_NEAR(res.estimate.mean[i], direct.mean[i], 1e-10);
    EXPECT_NEAR(res.estimate.lower[i], direct.lower[i], 1e-10);
    EXPECT_NEAR(res.estimate.upper[i], direct.upper[i], 1e-10);
  }
}

TEST(RunTransfer, PlantedLinearTargetTrend) {
  const auto c = synthetic_pair(9);
  TransferConfig cfg;
  cfg.path_size = 200;
  const auto res = run_transfer(c.source, c.source_truth, c.target, cfg);
  const auto truth = c.target_truth.slice(res.estimate.mean.start(), res.estimate.mean.end());
  EXPECT_GE(pearson(z_score(res.estimate.mean), z_score(truth)), 0.9);
  EXPECT_GE(res.estimate.ensemble_size, 1);
}

TEST(RunTransfer, SpanChecks) {
  const auto c = synthetic_pair(2);
  QuerySet shorter = c.target;
  shorter.data = shorter.data.topRows(100).eval();
  EXPECT_THROW(run_transfer(c.source, c.source_truth, shorter), AlignmentError);
}
