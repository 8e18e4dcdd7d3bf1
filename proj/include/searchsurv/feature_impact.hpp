#pragma once

// Multi-country query/outcome correlation ranking and the normalised impact
// metric of elastic-net features.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "searchsurv/elastic_net.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/transfer.hpp"

namespace searchsurv::impact {

struct CountryBlock {
  std::string country;
  std::vector<std::string> query_ids;
  Eigen::MatrixXd Z;  // days x queries, raw frequencies
  Eigen::VectorXd y;  // days, raw outcome
};

// Country blocks stacked row-wise (country-major), each normalised on its own.
struct AggregatedPanel {
  Eigen::MatrixXd Z;
  Eigen::VectorXd y;
  std::vector<std::string> countries;
  std::vector<std::size_t> country_index;  // row -> position in countries
  std::vector<std::string> query_ids;
  Eigen::Index days = 0;                   // per country

  Eigen::Index row(std::size_t country, Eigen::Index day) const {
    return static_cast<Eigen::Index>(country) * days + day;
  }
};

inline AggregatedPanel aggregate_countries(const std::vector<CountryBlock>& blocks) {
  if (blocks.empty()) throw InvalidArgument("no country blocks to aggregate");
  const auto& ref = blocks.front();
  AggregatedPanel panel;
  panel.query_ids = ref.query_ids;
  panel.days = ref.Z.rows();
  const auto n = static_cast<Eigen::Index>(ref.query_ids.size());
  const auto C = static_cast<Eigen::Index>(blocks.size());
  panel.Z.resize(C * panel.days, n);
  panel.y.resize(C * panel.days);
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    const auto& b = blocks[c];
    if (b.query_ids != ref.query_ids) throw AlignmentError("country '" + b.country + "' has a different query vocabulary");
    if (b.Z.rows() != panel.days || b.y.size() != panel.days || b.Z.cols() != n)
      throw AlignmentError("country '" + b.country + "' has a different day count");
    const auto zn = transfer::min_max_columns(b.Z);
    const auto yn = transfer::min_max_columns(b.y);
    panel.Z.middleRows(static_cast<Eigen::Index>(c) * panel.days, panel.days) = zn.data;
    panel.y.segment(static_cast<Eigen::Index>(c) * panel.days, panel.days) = yn.data.col(0);
    panel.countries.push_back(b.country);
    for (Eigen::Index i = 0; i < panel.days; ++i) panel.country_index.push_back(c);
  }
  return panel;
}

struct FeatureCorrelation {
  std::string query;
  double r = std::numeric_limits<double>::quiet_NaN();
  int rank = 0;  // 1-based
  bool undefined = false;
};

// Ranking order: defined correlations descending (ties by query id), undefined last.
template <typename Entry, typename Value>
void rank_entries(std::vector<Entry>& entries, Value value) {
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    const double va = value(a), vb = value(b);
    const bool na = std::isnan(va), nb = std::isnan(vb);
    if (na != nb) return nb;
    if (!na && va != vb) return va > vb;
    return a.query < b.query;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i) + 1;
}

// Pearson r per query between Z[t] and y[t + shift] inside every country
// block (one shift per country), pooled over countries.
inline std::vector<FeatureCorrelation> correlate_features(const AggregatedPanel& panel, const std::vector<int>& shifts) {
  if (shifts.size() != panel.countries.size()) throw InvalidArgument("one shift per country is required");
  std::vector<Eigen::Index> zrows, yrows;
  for (std::size_t c = 0; c < panel.countries.size(); ++c) {
    const int k = shifts[c];
    const Eigen::Index len = panel.days - std::abs(k);
    if (len < 3) throw InsufficientHistory("shift leaves fewer than three days in country '" + panel.countries[c] + "'");
    for (Eigen::Index t = 0; t < len; ++t) {
      const Eigen::Index tz = k >= 0 ? t : t - k;
      zrows.push_back(panel.row(c, tz));
      yrows.push_back(panel.row(c, tz + k));
    }
  }
  std::vector<double> yv(yrows.size()), zv(zrows.size());
  for (std::size_t i = 0; i < yrows.size(); ++i) yv[i] = panel.y[yrows[i]];
  std::vector<FeatureCorrelation> out;
  for (Eigen::Index j = 0; j < panel.Z.cols(); ++j) {
    for (std::size_t i = 0; i < zrows.size(); ++i) zv[i] = panel.Z(zrows[i], j);
    FeatureCorrelation fc{panel.query_ids[static_cast<std::size_t>(j)]};
    try {
      fc.r = pearson(zv, yv);
    } catch (const DegenerateInput&) {
      fc.undefined = true;
    }
    out.push_back(std::move(fc));
  }
  rank_entries(out, [](const FeatureCorrelation& f) { return f.r; });
  return out;
}

inline std::vector<FeatureCorrelation> correlate_features(const AggregatedPanel& panel, int shift) {
  return correlate_features(panel, std::vector<int>(panel.countries.size(), shift));
}

struct ImpactConfig {
  int test_days = 84;            // K
  double max_density = 0.5;
  int density_levels = 10;       // L
  int path_size = 200;
  double lambda_ratio = enet::kDefaultLambdaRatio;
};

// One (density level, test day, country) contribution.
struct ImpactRecord {
  int level = 0;              // target active-feature count
  Eigen::Index day = 0;
  std::size_t country = 0;
  double lambda1 = 0.0;
  int active_count = 0;
  Eigen::VectorXd f;          // query frequencies of the test row
  Eigen::VectorXd w;          // selected model weights
  double intercept = 0.0;
  double yhat = 0.0;
};

struct QueryImpact {
  std::string query;
  double theta = 0.0;
  int rank = 0;
};

struct ImpactReport {
  std::vector<std::string> query_ids;
  Eigen::VectorXd numerators;
  double denominator = 0.0;
  Eigen::VectorXd theta;
  std::vector<QueryImpact> positive;  // theta > 0, descending
  std::vector<QueryImpact> negative;  // theta < 0, most negative first
  std::vector<int> levels;
  std::vector<ImpactRecord> records;
  std::vector<Eigen::Index> skipped_days;
  bool nonpositive_denominator = false;
};

// Integer feature-count targets from 1% to max_density of n (deduplicated, >= 1).
inline std::vector<int> density_targets(Eigen::Index n, double max_density, int levels) {
  if (levels < 1) throw InvalidArgument("at least one density level is required");
  if (!(max_density > 0.0 && max_density <= 1.0)) throw InvalidArgument("max density must lie in (0, 1]");
  const double lo = std::min(0.01, max_density);
  std::vector<int> out;
  for (int l = 0; l < levels; ++l) {
    const double frac = levels == 1 ? max_density : lo + (max_density - lo) * l / (levels - 1);
    const int k = std::clamp(static_cast<int>(std::lround(frac * static_cast<double>(n))), 1, static_cast<int>(n));
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

// Index of the path model used for `level`: closest active count, then lowest
// test MSE, then smallest lambda1.
inline std::size_t select_for_level(const enet::RegularizationPath& path, const std::vector<double>& test_mse, int level) {
  std::size_t best = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < path.models.size(); ++i) {
    const int dist = std::abs(path.models[i].active_count - level);
    const bool better = dist < best_dist ||
                        (dist == best_dist && (test_mse[i] < test_mse[best] ||
                                               (test_mse[i] == test_mse[best] &&
                                                path.models[i].lambda1 < path.models[best].lambda1)));
    if (better) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

// Theta(q) = sum f_q w_q / sum yhat over density levels, test days and countries.
inline void summarize_impact(ImpactReport& rep) {
  const auto n = static_cast<Eigen::Index>(rep.query_ids.size());
  rep.numerators = Eigen::VectorXd::Zero(n);
  rep.denominator = 0.0;
  for (const auto& r : rep.records) {
    rep.numerators += r.f.cwiseProduct(r.w);
    rep.denominator += r.yhat;
  }
  rep.nonpositive_denominator = !(rep.denominator > 0.0);
  rep.theta = rep.denominator != 0.0 ? Eigen::VectorXd(rep.numerators / rep.denominator) : Eigen::VectorXd::Zero(n);
  rep.positive.clear();
  rep.negative.clear();
  for (Eigen::Index j = 0; j < n; ++j) {
    QueryImpact qi{rep.query_ids[static_cast<std::size_t>(j)], rep.theta[j]};
    if (qi.theta > 0.0) rep.positive.push_back(qi);
    if (qi.theta < 0.0) rep.negative.push_back(qi);
  }
  rank_entries(rep.positive, [](const QueryImpact& q) { return q.theta; });
  rank_entries(rep.negative, [](const QueryImpact& q) { return -q.theta; });
}

// For each of the last K days: train a path on all earlier days of every
// country, test on that day's C rows, and keep the best model per density level.
inline ImpactReport impact_analysis(const AggregatedPanel& panel, const ImpactConfig& cfg = {}) {
  const Eigen::Index M = panel.days;
  const Eigen::Index n = panel.Z.cols();
  const auto C = panel.countries.size();
  if (cfg.test_days < 1) throw InvalidArgument("at least one test day is required");
  if (M < cfg.test_days + 2) throw InsufficientHistory("impact analysis needs K + 2 days per country");
  ImpactReport rep;
  rep.query_ids = panel.query_ids;
  rep.levels = density_targets(n, cfg.max_density, cfg.density_levels);

  for (Eigen::Index t = M - cfg.test_days; t < M; ++t) {
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(C) * t, n);
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(C) * t);
    Eigen::MatrixXd Xte(static_cast<Eigen::Index>(C), n);
    Eigen::VectorXd yte(static_cast<Eigen::Index>(C));
    for (std::size_t c = 0; c < C; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      Xtr.middleRows(cc * t, t) = panel.Z.middleRows(panel.row(c, 0), t);
      ytr.segment(cc * t, t) = panel.y.segment(panel.row(c, 0), t);
      Xte.row(cc) = panel.Z.row(panel.row(c, t));
      yte[cc] = panel.y[panel.row(c, t)];
    }
    enet::RegularizationPath path;
    try {
      path = enet::fit_path(Xtr, ytr, cfg.path_size, cfg.lambda_ratio);
    } catch (const DegenerateInput&) {
      rep.skipped_days.push_back(t);
      continue;
    } catch (const ConvergenceError&) {
      rep.skipped_days.push_back(t);
      continue;
    }
    std::vector<Eigen::VectorXd> preds;
    std::vector<double> mse;
    for (const auto& m : path.models) {
      preds.push_back(enet::predict(m, Xte));
      mse.push_back((preds.back() - yte).squaredNorm() / static_cast<double>(C));
    }
    for (int level : rep.levels) {
      const std::size_t k = select_for_level(path, mse, level);
      const auto& m = path.models[k];
      for (std::size_t c = 0; c < C; ++c) {
        ImpactRecord rec;
        rec.level = level;
        rec.day = t;
        rec.country = c;
        rec.lambda1 = m.lambda1;
        rec.active_count = m.active_count;
        rec.f = Xte.row(static_cast<Eigen::Index>(c)).transpose();
        rec.w = m.weights;
        rec.intercept = m.intercept;
        rec.yhat = preds[k][static_cast<Eigen::Index>(c)];
        rep.records.push_back(std::move(rec));
      }
    }
  }
  summarize_impact(rep);
  return rep;
}

}  // namespace searchsurv::impact
