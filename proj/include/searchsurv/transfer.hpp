#pragma once

// Transfer of an elastic-net ensemble trained on a source country's search
// frequencies onto a target country's query space.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <optional>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "searchsurv/elastic_net.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"

namespace searchsurv::transfer {

inline constexpr int kAlignmentWindow = 45;
inline constexpr int kMinActive = 3;
inline constexpr int kMaxActive = 49;

// Daily query frequencies (rows = days, columns = queries) with labels.
struct QuerySet {
  Date start;
  Eigen::MatrixXd data;
  std::vector<std::string> ids;
  std::vector<std::string> categories;

  Eigen::Index days() const noexcept { return data.rows(); }
  Eigen::Index queries() const noexcept { return data.cols(); }

  void validate() const {
    if (static_cast<Eigen::Index>(ids.size()) != data.cols() || categories.size() != ids.size())
      throw InvalidArgument("query set labels do not match its columns");
  }
};

inline std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

inline QuerySet harmonic_smooth_columns(const QuerySet& qs, int window) {
  qs.validate();
  if (qs.days() < window) throw InsufficientHistory("query set shorter than the smoothing window");
  QuerySet out{qs.start + std::chrono::days{window - 1}, Eigen::MatrixXd(qs.days() - window + 1, qs.queries()), qs.ids,
               qs.categories};
  for (Eigen::Index j = 0; j < qs.queries(); ++j) {
    const TimeSeries s(qs.start, std::vector<double>(qs.data.col(j).begin(), qs.data.col(j).end()));
    const TimeSeries sm = harmonic_smooth(s, window);
    for (Eigen::Index i = 0; i < out.days(); ++i) out.data(i, j) = sm[static_cast<std::size_t>(i)];
  }
  return out;
}

struct ColumnNormalization {
  Eigen::MatrixXd data;
  std::vector<NormalizationParams> params;
};

// Per-column min-max; constant columns become zero.
inline ColumnNormalization min_max_columns(const Eigen::MatrixXd& m) {
  ColumnNormalization out{Eigen::MatrixXd::Zero(m.rows(), m.cols()), {}};
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const NormalizationParams p{m.col(j).minCoeff(), m.col(j).maxCoeff()};
    if (!p.constant()) out.data.col(j) = (m.col(j).array() - p.min) / (p.max - p.min);
    out.params.push_back(p);
  }
  return out;
}

struct Alignment {
  int shift = 0;
  double mean_r = 0.0;
};

// Mean over source columns of the best target-column correlation at one shift;
// NaN when no source column has a defined correlation.
inline double mean_best_correlation(const Eigen::MatrixXd& S, const Eigen::MatrixXd& T, int shift) {
  double total = 0.0;
  int counted = 0;
  for (Eigen::Index i = 0; i < S.cols(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < T.cols(); ++j) {
      const double r = shifted_pearson(column(S, i), column(T, j), shift);
      if (!std::isnan(r)) best = std::max(best, r);
    }
    if (std::isfinite(best)) {
      total += best;
      ++counted;
    }
  }
  return counted == 0 ? std::numeric_limits<double>::quiet_NaN() : total / counted;
}

// Single global shift in [-z, z] (positive: target lags source) maximising the
// average best correlation between the active source queries and the target
// queries.
inline Alignment align_temporal(const Eigen::MatrixXd& S_active, const Eigen::MatrixXd& T, int z) {
  if (z < 0) throw InvalidArgument("alignment window must be non-negative");
  if (S_active.rows() != T.rows()) throw AlignmentError("source and target span different day counts");
  if (S_active.cols() == 0 || T.cols() == 0) throw InvalidArgument("alignment needs source and target queries");
  if (S_active.rows() - z < 3) throw InsufficientHistory("overlap shorter than three days at the widest shift");
  Alignment best{0, -std::numeric_limits<double>::infinity()};
  bool found = false;
  for (int k : lag_search_order(z)) {
    const double r = mean_best_correlation(S_active, T, k);
    if (std::isnan(r)) continue;
    if (!found || r > best.mean_r) {
      best = {k, r};
      found = true;
    }
  }
  if (!found) throw InsufficientHistory("no shift yields a defined correlation");
  return best;
}

struct QueryPair {
  Eigen::Index source_index = 0;
  Eigen::Index target_index = 0;
  std::string source_id;
  std::string target_id;
  std::string category;
  double r = 0.0;
  bool fallback = false;      // no target query in the source query's category
  bool r_undefined = false;   // chosen target has no defined correlation (r reported as 0)
};

struct QueryMapping {
  std::vector<QueryPair> pairs;  // one per source column, in source order
  int global_shift = 0;
};

// Maps each source query to the best-correlated target query of the same
// category at the given shift, falling back to all target queries when the
// category is absent from the target.
inline QueryMapping map_queries(const QuerySet& source, const QuerySet& target, int shift) {
  source.validate();
  target.validate();
  if (target.queries() == 0) throw InvalidArgument("target query space is empty");
  if (source.days() != target.days()) throw AlignmentError("source and target span different day counts");
  QueryMapping mapping;
  mapping.global_shift = shift;
  for (Eigen::Index i = 0; i < source.queries(); ++i) {
    const std::string& cat = source.categories[static_cast<std::size_t>(i)];
    std::vector<Eigen::Index> candidates;
    for (Eigen::Index j = 0; j < target.queries(); ++j)
      if (target.categories[static_cast<std::size_t>(j)] == cat) candidates.push_back(j);
    QueryPair pair;
    pair.source_index = i;
    pair.source_id = source.ids[static_cast<std::size_t>(i)];
    pair.category = cat;
    if (candidates.empty()) {
      pair.fallback = true;
      for (Eigen::Index j = 0; j < target.queries(); ++j) candidates.push_back(j);
    }
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index best_j = candidates.front();
    for (Eigen::Index j : candidates) {
      const double r = shifted_pearson(column(source.data, i), column(target.data, j), shift);
      if (!std::isnan(r) && r > best) {
        best = r;
        best_j = j;
      }
    }
    pair.target_index = best_j;
    pair.target_id = target.ids[static_cast<std::size_t>(best_j)];
    if (std::isfinite(best)) {
      pair.r = best;
    } else {
      pair.r = 0.0;
      pair.r_undefined = true;
    }
    mapping.pairs.push_back(std::move(pair));
  }
  return mapping;
}

// Target columns in source-query order (columns may repeat).
inline Eigen::MatrixXd gather_target(const QuerySet& target, const QueryMapping& mapping) {
  Eigen::MatrixXd Z(target.days(), static_cast<Eigen::Index>(mapping.pairs.size()));
  for (std::size_t k = 0; k < mapping.pairs.size(); ++k)
    Z.col(static_cast<Eigen::Index>(k)) = target.data.col(mapping.pairs[k].target_index);
  return Z;
}

struct ScaledTarget {
  Eigen::MatrixXd data;
  Eigen::VectorXd ratios;
  std::vector<bool> zero_mean;  // ratio forced to 1
};

// Z_S = Z (.) r with r_j = mean(S_j) / mean(Z_j).
inline ScaledTarget scale_target(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& S) {
  if (Z.cols() != S.cols()) throw InvalidArgument("target and source column counts differ");
  ScaledTarget out{Z, Eigen::VectorXd::Ones(Z.cols()), std::vector<bool>(static_cast<std::size_t>(Z.cols()), false)};
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const double zm = Z.col(j).mean();
    if (zm == 0.0) {
      out.zero_mean[static_cast<std::size_t>(j)] = true;
      continue;
    }
    out.ratios[j] = S.col(j).mean() / zm;
    out.data.col(j) *= out.ratios[j];
  }
  return out;
}

struct SourceEnsemble {
  std::vector<enet::ElasticNetModel> models;
  NormalizationParams y_params;
};

inline SourceEnsemble select_ensemble(const enet::RegularizationPath& path, int min_active, int max_active,
                                      const NormalizationParams& y_params) {
  if (path.models.empty()) throw InvalidArgument("regularisation path is empty");
  if (min_active > max_active) throw InvalidArgument("sparsity band is inverted");
  SourceEnsemble ens{{}, y_params};
  for (const auto& m : path.models)
    if (m.active_count >= min_active && m.active_count <= max_active) ens.models.push_back(m);
  if (ens.models.empty()) throw EnsembleEmpty("no path model inside the sparsity band");
  return ens;
}

// Denormalised predictions, one column per ensemble member.
inline Eigen::MatrixXd ensemble_predictions(const SourceEnsemble& ensemble, const Eigen::MatrixXd& Z_S) {
  const double range = ensemble.y_params.max - ensemble.y_params.min;
  Eigen::MatrixXd Y(Z_S.rows(), static_cast<Eigen::Index>(ensemble.models.size()));
  for (std::size_t k = 0; k < ensemble.models.size(); ++k)
    Y.col(static_cast<Eigen::Index>(k)) = (enet::predict(ensemble.models[k], Z_S).array() * range + ensemble.y_params.min).matrix();
  return Y;
}

struct TransferEstimate {
  TimeSeries mean;
  TimeSeries lower;  // 2.5% quantile
  TimeSeries upper;  // 97.5% quantile
  int ensemble_size = 0;
};

inline TransferEstimate summarize_predictions(const Eigen::MatrixXd& Y, Date start) {
  if (Y.rows() == 0 || Y.cols() == 0) throw InvalidArgument("no predictions to summarise");
  std::vector<double> mu(static_cast<std::size_t>(Y.rows())), lo(mu.size()), hi(mu.size());
  std::vector<double> row(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index k = 0; k < Y.cols(); ++k) row[static_cast<std::size_t>(k)] = Y(i, k);
    const auto ii = static_cast<std::size_t>(i);
    mu[ii] = mean(row);
    lo[ii] = std::min(quantile(row, 0.025), mu[ii]);
    hi[ii] = std::max(quantile(row, 0.975), mu[ii]);
  }
  return TransferEstimate{TimeSeries(start, std::move(mu)), TimeSeries(start, std::move(lo)),
                          TimeSeries(start, std::move(hi)), static_cast<int>(Y.cols())};
}

inline TransferEstimate infer(const SourceEnsemble& ensemble, const Eigen::MatrixXd& Z_S, Date start) {
  return summarize_predictions(ensemble_predictions(ensemble, Z_S), start);
}

// Union of the queries active in any ensemble member.
inline std::vector<Eigen::Index> active_union(const SourceEnsemble& ensemble) {
  std::set<Eigen::Index> cols;
  for (const auto& m : ensemble.models)
    for (Eigen::Index j = 0; j < m.weights.size(); ++j)
      if (m.weights[j] != 0.0) cols.insert(j);
  return {cols.begin(), cols.end()};
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  return out;
}

struct ShiftProfile {
  std::vector<int> shifts;  // one per ensemble member
  double mean = 0.0;
  double sd = 0.0;          // population
  double ci_low = 0.0;      // mean -/+ 1.96 sd / sqrt(n)
  double ci_high = 0.0;
};

// Best alignment shift per ensemble member, using only that member's active queries.
inline ShiftProfile per_model_shift_profile(const SourceEnsemble& ensemble, const Eigen::MatrixXd& S,
                                            const Eigen::MatrixXd& T, int z) {
  if (ensemble.models.empty()) throw EnsembleEmpty("empty ensemble");
  ShiftProfile prof;
  std::map<std::vector<Eigen::Index>, int> cache;
  for (const auto& m : ensemble.models) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < m.weights.size(); ++j)
      if (m.weights[j] != 0.0) cols.push_back(j);
    if (cols.empty()) throw InvalidArgument("ensemble member without active queries");
    auto it = cache.find(cols);
    if (it == cache.end()) it = cache.emplace(cols, align_temporal(select_columns(S, cols), T, z).shift).first;
    prof.shifts.push_back(it->second);
  }
  std::vector<double> v(prof.shifts.begin(), prof.shifts.end());
  prof.mean = mean(v);
  prof.sd = pstdev(v);
  const double half = 1.96 * prof.sd / std::sqrt(static_cast<double>(v.size()));
  prof.ci_low = prof.mean - half;
  prof.ci_high = prof.mean + half;
  return prof;
}

struct TransferConfig {
  int smoothing_days = 14;
  int path_size = enet::kDefaultPathSize;
  double lambda_ratio = enet::kDefaultLambdaRatio;
  int min_active = kMinActive;
  int max_active = kMaxActive;
  int alignment_window = kAlignmentWindow;
  bool shift_profile = false;
};

struct TransferResult {
  TransferEstimate estimate;
  QueryMapping mapping;
  Alignment alignment;
  ScaledTarget scaled;
  SourceEnsemble ensemble;
  enet::RegularizationPath path;
  Eigen::MatrixXd source_features;  // normalised source design the path was trained on
  std::optional<ShiftProfile> profile;
};

// Whole transfer pipeline. `source` and `target` must cover the same days as
// `source_truth`; everything is smoothed, the source path is trained on
// min-max normalised data, and the selected ensemble is applied to the
// mapped, normalised and rescaled target queries.
inline TransferResult run_transfer(const QuerySet& source, const TimeSeries& source_truth, const QuerySet& target,
                                   const TransferConfig& cfg = {}) {
  source.validate();
  target.validate();
  if (source.start != target.start || source.days() != target.days())
    throw AlignmentError("source and target query spans differ");
  if (source.start != source_truth.start() || static_cast<std::size_t>(source.days()) != source_truth.size())
    throw AlignmentError("source queries and ground truth spans differ");

  const QuerySet S = harmonic_smooth_columns(source, cfg.smoothing_days);
  const QuerySet T = harmonic_smooth_columns(target, cfg.smoothing_days);
  const TimeSeries y = source_truth.slice(S.start, source_truth.end());

  const ColumnNormalization Sn = min_max_columns(S.data);
  const NormalizedSeries yn = min_max_normalize(y);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(yn.series.data().data(), static_cast<Eigen::Index>(yn.series.size()));

  auto path = enet::fit_path(Sn.data, yv, cfg.path_size, cfg.lambda_ratio);
  SourceEnsemble ensemble = select_ensemble(path, cfg.min_active, cfg.max_active, yn.params);

  const Alignment alignment = align_temporal(select_columns(S.data, active_union(ensemble)), T.data, cfg.alignment_window);
  QueryMapping mapping = map_queries(S, T, alignment.shift);
  const ColumnNormalization Zn = min_max_columns(gather_target(T, mapping));
  ScaledTarget scaled = scale_target(Zn.data, Sn.data);
  TransferEstimate estimate = infer(ensemble, scaled.data, T.start);

  std::optional<ShiftProfile> profile;
  if (cfg.shift_profile) profile = per_model_shift_profile(ensemble, S.data, T.data, cfg.alignment_window);

  return TransferResult{std::move(estimate), std::move(mapping), alignment, std::move(scaled), std::move(ensemble),
                        std::move(path), Sn.data, std::move(profile)};
}

}  // namespace searchsurv::transfer
