#pragma once

// News-media deconfounding. For each day an AR(2) model of the search score and
// the same model extended with the news-article ratio (current and two lags)
// are fitted on a trailing window; the ratio of their one-step-ahead absolute
// errors estimates the share of the score driven by infection.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"

namespace searchsurv::news {

inline constexpr int kDefaultWindow = 56;
inline constexpr int kGammaSmoothingDays = 7;

struct ArFit {
  Eigen::VectorXd lag_weights;  // w1, w2 [, v1, v2, v3]
  double intercept = 0.0;
  double in_sample_mse = 0.0;
  bool rank_deficient = false;

  double predict(double g1, double g2) const { return lag_weights[0] * g1 + lag_weights[1] * g2 + intercept; }
  double predict(double g1, double g2, double m0, double m1, double m2) const {
    return lag_weights[0] * g1 + lag_weights[1] * g2 + lag_weights[2] * m0 + lag_weights[3] * m1 +
           lag_weights[4] * m2 + intercept;
  }
};

namespace detail {

// Minimum-norm least squares; the rank-revealing factorisation handles
// collinear or constant regressors without a separate fallback path.
inline ArFit solve_ols(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd beta = cod.solve(y);
  ArFit fit;
  fit.lag_weights = beta.head(beta.size() - 1);
  fit.intercept = beta[beta.size() - 1];
  fit.in_sample_mse = (y - A * beta).squaredNorm() / static_cast<double>(y.size());
  fit.rank_deficient = cod.rank() < A.cols();
  return fit;
}

}  // namespace detail

// Least-squares fit of g_t = w1 g_{t-1} + w2 g_{t-2} + b over the window.
inline ArFit fit_ar(std::span<const double> g) {
  if (g.size() < 4) throw InsufficientHistory("AR fit needs a window of at least four days");
  const auto rows = static_cast<Eigen::Index>(g.size() - 2);
  Eigen::MatrixXd A(rows, 3);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(r) + 2;
    A.row(r) << g[t - 1], g[t - 2], 1.0;
    y[r] = g[t];
  }
  return detail::solve_ols(A, y);
}

// As fit_ar with m_t, m_{t-1}, m_{t-2} appended to the regressors.
inline ArFit fit_ar_exog(std::span<const double> g, std::span<const double> m) {
  if (g.size() != m.size()) throw AlignmentError("search and news windows differ in length");
  if (g.size() < 4) throw InsufficientHistory("AR fit needs a window of at least four days");
  const auto rows = static_cast<Eigen::Index>(g.size() - 2);
  Eigen::MatrixXd A(rows, 6);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(r) + 2;
    A.row(r) << g[t - 1], g[t - 2], m[t], m[t - 1], m[t - 2], 1.0;
    y[r] = g[t];
  }
  return detail::solve_ols(A, y);
}

// gamma = eps2 / eps1 when the news-augmented model forecasts better, else 1.
inline double gamma_from_errors(double eps_ar, double eps_news) {
  if (eps_ar <= eps_news) return 1.0;
  return std::clamp(eps_news / eps_ar, 0.0, 1.0);
}

struct GammaEstimate {
  double gamma = 1.0;
  double eps_ar = 0.0;
  double eps_news = 0.0;
  bool rank_deficient = false;
};

// Both models are fitted on days [t-N, t-1] and forecast day t; the target is
// the observed g_t. Inputs are expected on the [0,1] scale.
inline GammaEstimate gamma_estimate_at(std::span<const double> g, std::span<const double> m, std::size_t t, int window) {
  if (g.size() != m.size()) throw AlignmentError("search and news series differ in length");
  if (window < 4) throw InvalidArgument("news window must be at least four days");
  const auto n = static_cast<std::size_t>(window);
  if (t < n || t >= g.size()) throw InsufficientHistory("not enough history before the evaluated day");
  const auto gw = g.subspan(t - n, n);
  const auto mw = m.subspan(t - n, n);
  const ArFit ar = fit_ar(gw);
  const ArFit arx = fit_ar_exog(gw, mw);
  const double f1 = ar.predict(g[t - 1], g[t - 2]);
  const double f2 = arx.predict(g[t - 1], g[t - 2], m[t], m[t - 1], m[t - 2]);
  GammaEstimate est;
  est.eps_ar = std::abs(f1 - g[t]);
  est.eps_news = std::abs(f2 - g[t]);
  est.gamma = gamma_from_errors(est.eps_ar, est.eps_news);
  est.rank_deficient = ar.rank_deficient || arx.rank_deficient;
  return est;
}

inline double gamma_at(std::span<const double> g, std::span<const double> m, std::size_t t, int window) {
  return gamma_estimate_at(g, m, t, window).gamma;
}

// Where g and m are brought onto [0,1].
enum class NormalizationScope {
  FullSpan,   // once over the whole series
  PerWindow,  // using the min/max of each trailing fitting window
};

struct GammaSeries {
  TimeSeries raw;       // unsmoothed daily gamma, from day N onwards
  TimeSeries smoothed;  // 7-day trailing harmonic mean of raw
  std::size_t rank_deficient_days = 0;
};

namespace detail {

inline std::vector<double> rescale(std::span<const double> v, double lo, double hi) {
  std::vector<double> out(v.size(), 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / (hi - lo);
  return out;
}

}  // namespace detail

inline GammaSeries gamma_series(const TimeSeries& g, const TimeSeries& m, int window = kDefaultWindow,
                                NormalizationScope scope = NormalizationScope::FullSpan) {
  if (!g.same_span(m)) throw AlignmentError("search score and news ratio spans differ");
  for (double v : m.values())
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("news ratio outside [0,1]");
  const auto n = static_cast<std::size_t>(window);
  if (g.size() < n + kGammaSmoothingDays)
    throw InsufficientHistory("series too short for the news window plus gamma smoothing");

  std::vector<double> raw;
  raw.reserve(g.size() - n);
  std::size_t deficient = 0;
  if (scope == NormalizationScope::FullSpan) {
    const auto gn = min_max_normalize(g).series;
    const auto mn = min_max_normalize(m).series;
    for (std::size_t t = n; t < g.size(); ++t) {
      const auto est = gamma_estimate_at(gn.values(), mn.values(), t, window);
      raw.push_back(est.gamma);
      deficient += est.rank_deficient ? 1 : 0;
    }
  } else {
    for (std::size_t t = n; t < g.size(); ++t) {
      const auto gs = g.values().subspan(t - n, n + 1);
      const auto ms = m.values().subspan(t - n, n + 1);
      const auto [glo, ghi] = std::minmax_element(gs.begin(), gs.end() - 1);
      const auto [mlo, mhi] = std::minmax_element(ms.begin(), ms.end() - 1);
      const auto gw = detail::rescale(gs, *glo, *ghi);
      const auto mw = detail::rescale(ms, *mlo, *mhi);
      const auto est = gamma_estimate_at(gw, mw, n, window);
      raw.push_back(est.gamma);
      deficient += est.rank_deficient ? 1 : 0;
    }
  }
  TimeSeries raw_series(g.date_at(n), std::move(raw));
  TimeSeries smoothed = harmonic_smooth(raw_series, kGammaSmoothingDays);
  return GammaSeries{std::move(raw_series), std::move(smoothed), deficient};
}

// g_p = gamma * g over the span of gamma, which must lie inside the span of g.
inline TimeSeries adjust_signal(const TimeSeries& g, const TimeSeries& gamma) {
  const auto offset = g.index_of(gamma.start());
  if (offset < 0 || g.index_of(gamma.end()) < 0) throw AlignmentError("gamma span is not covered by the signal");
  std::vector<double> out(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) out[i] = gamma[i] * g[static_cast<std::size_t>(offset) + i];
  return TimeSeries(gamma.start(), std::move(out));
}

struct PeakReductionReport {
  Date peak_date;
  std::size_t window_begin = 0;  // inclusive index
  std::size_t window_end = 0;    // inclusive index
  double reduction_in_window_pct = 0.0;
  double reduction_outside_pct = std::numeric_limits<double>::quiet_NaN();
  double r_in_window = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
  bool no_outside_days = false;
  bool correlation_undefined = false;
};

// Percent reduction is 100 * (1 - mean(adjusted) / mean(raw)) over the region.
inline PeakReductionReport peak_reduction_report(const TimeSeries& raw, const TimeSeries& adjusted, int half_window) {
  if (!raw.same_span(adjusted)) throw AlignmentError("raw and adjusted spans differ");
  if (half_window < 0) throw InvalidArgument("half window must be non-negative");
  const auto vals = raw.values();
  const auto peak = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  PeakReductionReport rep;
  rep.peak_date = raw.date_at(peak);
  const auto hw = static_cast<std::size_t>(half_window);
  rep.truncated = peak < hw || peak + hw >= raw.size();
  rep.window_begin = peak < hw ? 0 : peak - hw;
  rep.window_end = std::min(raw.size() - 1, peak + hw);

  double in_raw = 0.0, in_adj = 0.0, out_raw = 0.0, out_adj = 0.0;
  std::size_t out_n = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i >= rep.window_begin && i <= rep.window_end) {
      in_raw += raw[i];
      in_adj += adjusted[i];
    } else {
      out_raw += raw[i];
      out_adj += adjusted[i];
      ++out_n;
    }
  }
  rep.reduction_in_window_pct = in_raw != 0.0 ? 100.0 * (1.0 - in_adj / in_raw) : 0.0;
  if (out_n == 0) {
    rep.no_outside_days = true;
  } else {
    rep.reduction_outside_pct = out_raw != 0.0 ? 100.0 * (1.0 - out_adj / out_raw) : 0.0;
  }
  const auto len = rep.window_end - rep.window_begin + 1;
  try {
    rep.r_in_window = pearson(vals.subspan(rep.window_begin, len), adjusted.values().subspan(rep.window_begin, len));
  } catch (const ValidationError&) {
    rep.correlation_undefined = true;
  }
  return rep;
}

}  // namespace searchsurv::news
