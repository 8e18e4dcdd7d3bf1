#pragma once

// Direct D-days-ahead forecasting of a clinical outcome with Gaussian processes
// over lagged outcome values (AR-F), lagged outcome plus search values (SAR-F),
// and a persistence baseline (PER-F); rolling-origin evaluation by MAE.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/gp.hpp"
#include "searchsurv/timeseries.hpp"

namespace searchsurv::forecast {

inline constexpr int kDefaultLags = 6;
inline constexpr double kDeathsStartThreshold = 10.0;
inline constexpr double kCasesStartThreshold = 250.0;

enum class ModelKind { ARF, SARF, PERF };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::ARF: return "AR-F";
    case ModelKind::SARF: return "SAR-F";
    case ModelKind::PERF: return "PER-F";
  }
  return "?";
}

// Rows [z_t..z_{t-L}, y_t..y_{t-L}] (SAR-F) or [y_t..y_{t-L}] (AR-F) with target y_{t+D}.
struct LaggedDesign {
  Eigen::MatrixXd rows;
  Eigen::VectorXd targets;
  std::vector<std::size_t> origins;  // t of each row
  int lags = 0;
  int horizon = 0;
  ModelKind kind = ModelKind::ARF;
  Eigen::Index search_dim = 0;
};

inline Eigen::VectorXd design_row(std::span<const double> z, std::span<const double> y, std::size_t t, int lags, ModelKind kind) {
  const auto L = static_cast<std::size_t>(lags);
  const bool search = kind == ModelKind::SARF;
  Eigen::VectorXd row(static_cast<Eigen::Index>((search ? 2 : 1) * (L + 1)));
  Eigen::Index c = 0;
  if (search)
    for (std::size_t p = 0; p <= L; ++p) row[c++] = z[t - p];
  for (std::size_t p = 0; p <= L; ++p) row[c++] = y[t - p];
  return row;
}

inline LaggedDesign build_design(std::span<const double> z, std::span<const double> y, int lags, int horizon, ModelKind kind) {
  if (kind == ModelKind::PERF) throw InvalidArgument("persistence forecasts have no design matrix");
  if (lags < 0 || horizon < 1) throw InvalidArgument("lags must be >= 0 and horizon >= 1");
  if (kind == ModelKind::SARF && z.size() != y.size()) throw AlignmentError("search and outcome series differ in length");
  const auto L = static_cast<std::size_t>(lags);
  const auto D = static_cast<std::size_t>(horizon);
  if (y.size() < L + D + 1) throw InsufficientHistory("series too short for the requested lags and horizon");
  LaggedDesign d;
  d.lags = lags;
  d.horizon = horizon;
  d.kind = kind;
  d.search_dim = kind == ModelKind::SARF ? static_cast<Eigen::Index>(L + 1) : 0;
  const std::size_t n = y.size() - L - D;
  d.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>((kind == ModelKind::SARF ? 2 : 1) * (L + 1)));
  d.targets.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = L + r;
    d.rows.row(static_cast<Eigen::Index>(r)) = design_row(z, y, t, lags, kind).transpose();
    d.targets[static_cast<Eigen::Index>(r)] = y[t + D];
    d.origins.push_back(t);
  }
  return d;
}

inline LaggedDesign build_design(const TimeSeries& z, const TimeSeries& y, int lags, int horizon, ModelKind kind) {
  if (kind == ModelKind::SARF && !z.same_span(y)) throw AlignmentError("search and outcome spans differ");
  return build_design(z.values(), y.values(), lags, horizon, kind);
}

// First `count` rows of a design.
inline LaggedDesign take_rows(const LaggedDesign& d, std::size_t count) {
  LaggedDesign out = d;
  out.rows = d.rows.topRows(static_cast<Eigen::Index>(count));
  out.targets = d.targets.head(static_cast<Eigen::Index>(count));
  out.origins.assign(d.origins.begin(), d.origins.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

struct GpFitOptions {
  int restarts = 5;
  int max_iterations = 100;
  std::uint64_t seed = 0;
  std::optional<double> fixed_noise_sigma;
};

// A GP forecaster in normalised space. Outcome values (targets and the
// outcome lags in the inputs) are min-max scaled with the training range.
struct ForecastModel {
  gp::GpModel gp;
  NormalizationParams outcome_scale;
  ModelKind kind = ModelKind::ARF;
  Eigen::Index search_dim = 0;
  std::vector<double> lml_trace;

  double range() const { return outcome_scale.max - outcome_scale.min; }

  Eigen::VectorXd normalize_row(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    Eigen::VectorXd x = raw;
    x.tail(x.size() - search_dim) = (x.tail(x.size() - search_dim).array() - outcome_scale.min) / range();
    return x;
  }
};

inline NormalizationParams outcome_scale_of(const LaggedDesign& d) {
  const auto outcome = d.rows.rightCols(d.rows.cols() - d.search_dim);
  NormalizationParams p{std::min(d.targets.minCoeff(), outcome.minCoeff()), std::max(d.targets.maxCoeff(), outcome.maxCoeff())};
  if (p.constant()) p.max = p.min + 1.0;
  return p;
}

inline gp::KernelSpec kernel_shape(ModelKind kind, Eigen::Index search_dim) {
  if (kind == ModelKind::SARF) return gp::sarf_kernel(search_dim, 1, 1, 1, 1, 1, 1, 0.1);
  return gp::arf_kernel(1, 1, 1, 1, 0.1);
}

inline ForecastModel fit_gp(const LaggedDesign& design, const GpFitOptions& opts = {}) {
  if (design.rows.rows() < 2) throw InsufficientHistory("a GP forecaster needs at least two training rows");
  const NormalizationParams scale = outcome_scale_of(design);
  const double range = scale.max - scale.min;
  Eigen::MatrixXd X = design.rows;
  X.rightCols(X.cols() - design.search_dim) =
      (X.rightCols(X.cols() - design.search_dim).array() - scale.min) / range;
  const Eigen::VectorXd y = (design.targets.array() - scale.min) / range;

  const gp::KernelSpec init = gp::initial_kernel(kernel_shape(design.kind, design.search_dim), X, y);
  gp::OptimizerOptions oo;
  oo.restarts = opts.restarts;
  oo.max_iterations = opts.max_iterations;
  oo.seed = opts.seed;
  oo.fixed_noise_sigma = opts.fixed_noise_sigma;
  gp::KernelSpec start = init;
  if (opts.fixed_noise_sigma) start.noise_sigma = *opts.fixed_noise_sigma;
  const auto res = gp::optimize_hyperparameters(start, X, y, oo);
  gp::KernelSpec fitted = gp::unpack(start, res.theta);
  if (opts.fixed_noise_sigma) fitted.noise_sigma = *opts.fixed_noise_sigma;
  return ForecastModel{gp::GpModel(fitted, X, y), scale, design.kind, design.search_dim, res.trace};
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function, original units squared
};

inline Prediction predict_gp(const ForecastModel& model, const Eigen::Ref<const Eigen::VectorXd>& raw_row) {
  if (raw_row.size() != model.gp.inputs().cols()) throw InvalidArgument("forecast input has the wrong dimension");
  const auto [m, v] = model.gp.predict(model.normalize_row(raw_row));
  return {m * model.range() + model.outcome_scale.min, v * model.range() * model.range()};
}

// yhat_{t+D} = y_t, dated from start + D.
inline TimeSeries persistence_forecast(const TimeSeries& y, int horizon) {
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  const auto D = static_cast<std::size_t>(horizon);
  if (y.size() <= D) throw InsufficientHistory("series shorter than the forecast horizon");
  return TimeSeries(y.date_at(D), std::vector<double>(y.values().begin(), y.values().end() - static_cast<std::ptrdiff_t>(D)));
}

struct ForecastPoint {
  Date origin;
  Date target;
  double forecast = std::numeric_limits<double>::quiet_NaN();
  double stddev = 0.0;
  double truth = 0.0;
  bool missing = false;
};

struct ForecastRecord {
  ModelKind kind = ModelKind::ARF;
  int horizon = 0;
  std::vector<ForecastPoint> points;
  double mae_mean = std::numeric_limits<double>::quiet_NaN();
  double mae_sd = std::numeric_limits<double>::quiet_NaN();  // population sd of daily absolute errors
  std::size_t missing_days = 0;
};

inline void summarize_record(ForecastRecord& rec) {
  std::vector<double> errs;
  rec.missing_days = 0;
  for (const auto& p : rec.points) {
    if (p.missing) {
      ++rec.missing_days;
      continue;
    }
    errs.push_back(std::abs(p.forecast - p.truth));
  }
  if (errs.empty()) return;
  rec.mae_mean = mean(errs);
  rec.mae_sd = pstdev(errs);
}

struct RollingOptions {
  double start_threshold = kDeathsStartThreshold;  // cumulative outcome before testing starts
  std::size_t min_train_rows = 10;
  GpFitOptions gp;
  bool include_arf = true;
  bool include_sarf = true;
  bool include_perf = true;
};

struct RollingResult {
  std::vector<ForecastRecord> records;  // in AR-F, SAR-F, PER-F order (enabled kinds only)
  std::size_t leakage_violations = 0;
  std::size_t test_days = 0;
};

// First origin index at which the cumulative outcome reaches `threshold`.
inline std::optional<std::size_t> start_origin(std::span<const double> y, double threshold) {
  double cum = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    cum += y[t];
    if (cum >= threshold) return t;
  }
  return std::nullopt;
}

// For every origin t from the start rule on: retrain each GP on the rows whose
// target date is <= t, forecast y_{t+D} from the row at t, and record it.
inline RollingResult rolling_evaluation(const TimeSeries& z, const TimeSeries& y, int lags, int horizon,
                                        const RollingOptions& opts = {}) {
  if (!z.same_span(y)) throw AlignmentError("search and outcome spans differ");
  const auto L = static_cast<std::size_t>(lags);
  const auto D = static_cast<std::size_t>(horizon);
  const auto zs = z.values();
  const auto ys = y.values();
  const LaggedDesign sar = build_design(zs, ys, lags, horizon, ModelKind::SARF);
  const LaggedDesign ar = build_design(zs, ys, lags, horizon, ModelKind::ARF);

  RollingResult out;
  std::vector<ModelKind> kinds;
  if (opts.include_arf) kinds.push_back(ModelKind::ARF);
  if (opts.include_sarf) kinds.push_back(ModelKind::SARF);
  if (opts.include_perf) kinds.push_back(ModelKind::PERF);
  for (auto k : kinds) {
    ForecastRecord rec;
    rec.kind = k;
    rec.horizon = horizon;
    out.records.push_back(std::move(rec));
  }

  const auto first = start_origin(ys, opts.start_threshold);
  if (!first) return out;
  for (std::size_t t = std::max(*first, L); t + D < y.size(); ++t) {
    // rows are ordered by origin; a row is usable when its target date t' + D <= t
    const std::size_t usable = t >= L + D ? t - D - L + 1 : 0;
    if (usable < opts.min_train_rows) continue;
    ++out.test_days;
    for (std::size_t r = 0; r < usable; ++r)
      if (ar.origins[r] + D > t) ++out.leakage_violations;

    for (auto& rec : out.records) {
      ForecastPoint pt{y.date_at(t), y.date_at(t + D)};
      pt.truth = ys[t + D];
      if (rec.kind == ModelKind::PERF) {
        pt.forecast = ys[t];
        rec.points.push_back(pt);
        continue;
      }
      const LaggedDesign& full = rec.kind == ModelKind::SARF ? sar : ar;
      GpFitOptions g = opts.gp;
      g.seed = opts.gp.seed * 7919ULL + t;
      try {
        const ForecastModel model = fit_gp(take_rows(full, usable), g);
        const auto pred = predict_gp(model, design_row(zs, ys, t, lags, rec.kind));
        pt.forecast = pred.mean;
        pt.stddev = std::sqrt(pred.variance);
      } catch (const NumericalError&) {
        pt.missing = true;
      }
      rec.points.push_back(pt);
    }
  }
  for (auto& rec : out.records) summarize_record(rec);
  return out;
}

struct NormalizedTable {
  std::vector<std::vector<double>> cells;  // same shape as the input
  std::vector<double> column_mean;
  std::vector<double> column_sd;           // population sd across rows
};

// Joint min-max over every cell, then per-column mean and sd.
inline NormalizedTable normalize_mae_table(const std::vector<std::vector<double>>& table) {
  if (table.empty() || table.front().empty()) throw InvalidArgument("empty MAE table");
  const std::size_t cols = table.front().size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : table) {
    if (row.size() != cols) throw InvalidArgument("ragged MAE table");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidArgument("non-finite MAE cell");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  NormalizedTable out;
  for (const auto& row : table) {
    std::vector<double> r(cols, 0.0);
    if (hi > lo)
      for (std::size_t c = 0; c < cols; ++c) r[c] = (row[c] - lo) / (hi - lo);
    out.cells.push_back(std::move(r));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> col;
    for (const auto& row : out.cells) col.push_back(row[c]);
    out.column_mean.push_back(mean(col));
    out.column_sd.push_back(pstdev(col));
  }
  return out;
}

}  // namespace searchsurv::forecast
