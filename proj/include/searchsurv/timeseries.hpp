#pragma once

// Daily time-series container and the shared transforms used by every
// modelling stage: smoothing, normalisation, detrending, resampling,
// correlation and error metrics.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "searchsurv/errors.hpp"

namespace searchsurv {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date");
  return Date{ymd};
}

// Strict ISO-8601 calendar date, YYYY-MM-DD.
inline Date parse_date(std::string_view text) {
  auto fail = [&] { return InvalidArgument("malformed date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    auto res = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (res.ec != std::errc{} || res.ptr != text.data() + pos + len) throw fail();
  };
  field(0, 4, y);
  field(5, 2, m);
  field(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw fail();
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  const unsigned d = static_cast<unsigned>(ymd.day());
  buf[0] = static_cast<char>('0' + (y / 1000) % 10);
  buf[1] = static_cast<char>('0' + (y / 100) % 10);
  buf[2] = static_cast<char>('0' + (y / 10) % 10);
  buf[3] = static_cast<char>('0' + y % 10);
  buf[4] = '-';
  buf[5] = static_cast<char>('0' + m / 10);
  buf[6] = static_cast<char>('0' + m % 10);
  buf[7] = '-';
  buf[8] = static_cast<char>('0' + d / 10);
  buf[9] = static_cast<char>('0' + d % 10);
  return std::string(buf, 10);
}

inline bool is_leap_day(Date date) {
  const std::chrono::year_month_day ymd{date};
  return ymd.month() == std::chrono::February && ymd.day() == std::chrono::day{29};
}

// Gap-free daily series. Always holds at least one value.
class TimeSeries {
 public:
  TimeSeries(Date start, std::vector<double> values) : start_(start), values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("time series must hold at least one value");
  }

  Date start() const noexcept { return start_; }
  Date end() const noexcept { return start_ + std::chrono::days{static_cast<int>(values_.size()) - 1}; }
  Date date_at(std::size_t i) const noexcept { return start_ + std::chrono::days{static_cast<int>(i)}; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // Index of `date`, or -1 when it lies outside the span.
  std::ptrdiff_t index_of(Date date) const noexcept {
    const auto off = (date - start_).count();
    if (off < 0 || off >= static_cast<std::ptrdiff_t>(values_.size())) return -1;
    return off;
  }

  double at(Date date) const {
    const auto i = index_of(date);
    if (i < 0) throw InvalidArgument("date " + format_date(date) + " outside the series span");
    return values_[static_cast<std::size_t>(i)];
  }

  // Sub-series covering [from, to] (inclusive).
  TimeSeries slice(Date from, Date to) const {
    const auto a = index_of(from);
    const auto b = index_of(to);
    if (a < 0 || b < 0 || b < a) throw AlignmentError("slice outside series span");
    return TimeSeries(from, std::vector<double>(values_.begin() + a, values_.begin() + b + 1));
  }

  bool same_span(const TimeSeries& other) const noexcept {
    return start_ == other.start_ && values_.size() == other.values_.size();
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  Date start_;
  std::vector<double> values_;
};

struct NormalizationParams {
  double min = 0.0;
  double max = 0.0;

  bool constant() const noexcept { return max == min; }
};

struct NormalizedSeries {
  TimeSeries series;
  NormalizationParams params;
};

struct LagCorrelation {
  int lag_days = 0;
  double r = 0.0;
};

// ---------------------------------------------------------------------------
// Plain numeric helpers over spans.

inline double mean(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("mean of empty range");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation (divides by n).
inline double pstdev(std::span<const double> v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Quantile by linear interpolation between order statistics, h = (n-1)p.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw InvalidArgument("quantile of empty range");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level outside [0,1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------
// Transforms.

// Trailing harmonically weighted mean: s_i = sum_{p=1..D} x_{i-p+1}/p / sum 1/p.
inline TimeSeries harmonic_smooth(const TimeSeries& s, int window) {
  if (window < 1) throw InvalidArgument("harmonic window must be >= 1");
  const auto d = static_cast<std::size_t>(window);
  if (s.size() < d) throw InsufficientHistory("series shorter than harmonic window");
  double norm = 0.0;
  for (std::size_t p = 1; p <= d; ++p) norm += 1.0 / static_cast<double>(p);
  std::vector<double> w(d);
  for (std::size_t p = 1; p <= d; ++p) w[p - 1] = 1.0 / static_cast<double>(p) / norm;
  std::vector<double> out;
  out.reserve(s.size() - d + 1);
  // offsets from the latest value, so equal inputs come back unchanged
  for (std::size_t i = d - 1; i < s.size(); ++i) {
    double acc = 0.0;
    for (std::size_t p = 2; p <= d; ++p) acc += w[p - 1] * (s[i - p + 1] - s[i]);
    out.push_back(s[i] + acc);
  }
  return TimeSeries(s.date_at(d - 1), std::move(out));
}

// Constant input maps to all zeros; the returned params report constant().
inline NormalizedSeries min_max_normalize(const TimeSeries& s) {
  const auto [lo, hi] = std::minmax_element(s.values().begin(), s.values().end());
  const NormalizationParams params{*lo, *hi};
  std::vector<double> out(s.size(), 0.0);
  if (!params.constant()) {
    const double range = params.max - params.min;
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - params.min) / range;
  }
  return {TimeSeries(s.start(), std::move(out)), params};
}

inline TimeSeries min_max_denormalize(const TimeSeries& s, const NormalizationParams& p) {
  std::vector<double> out(s.size());
  const double range = p.max - p.min;
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * range + p.min;
  return TimeSeries(s.start(), std::move(out));
}

inline TimeSeries z_score(const TimeSeries& s) {
  if (s.size() < 2) throw InsufficientHistory("z-score needs at least two values");
  const double mu = mean(s.values());
  const double sd = pstdev(s.values());
  if (sd == 0.0) throw DegenerateInput("z-score of a constant series");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mu) / sd;
  return TimeSeries(s.start(), std::move(out));
}

// Residuals after removing the least-squares line over the day index.
inline TimeSeries linear_detrend(const TimeSeries& s) {
  const std::size_t n = s.size();
  if (n < 2) throw InsufficientHistory("detrending needs at least two values");
  const double tbar = (static_cast<double>(n) - 1.0) / 2.0;
  const double ybar = mean(s.values());
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    sty += dt * (s[i] - ybar);
    stt += dt * dt;
  }
  const double slope = sty / stt;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (s[i] - ybar) - slope * (static_cast<double>(i) - tbar);
  return TimeSeries(s.start(), std::move(out));
}

// Centred moving average; edge days average over the in-range part of the window.
inline TimeSeries moving_average(const TimeSeries& s, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("moving-average window must be odd and positive");
  const auto w = static_cast<std::size_t>(window);
  if (s.size() < w) throw InsufficientHistory("series shorter than moving-average window");
  const auto half = static_cast<std::ptrdiff_t>(w / 2);
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  std::vector<double> out(s.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double acc = 0.0;
    for (auto j = lo; j <= hi; ++j) acc += s[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - lo + 1);
  }
  return TimeSeries(s.start(), std::move(out));
}

// Mean of each complete Monday-to-Sunday week; partial weeks at either end are dropped.
// The result is indexed by week: consecutive entries are 7 days apart and the
// returned start date is the first Monday.
inline TimeSeries resample_weekly(const TimeSeries& s) {
  const std::chrono::weekday wd{s.start()};
  const std::size_t lead = (8 - wd.iso_encoding()) % 7;
  if (s.size() < lead + 7) throw InsufficientHistory("no complete Monday-aligned week");
  std::vector<double> out;
  for (std::size_t i = lead; i + 7 <= s.size(); i += 7) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 7; ++j) acc += s[i + j];
    out.push_back(acc / 7.0);
  }
  return TimeSeries(s.date_at(lead), std::move(out));
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("pearson: length mismatch");
  if (a.size() < 3) throw InsufficientHistory("pearson needs at least three points");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("pearson: constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double pearson(const TimeSeries& a, const TimeSeries& b) {
  if (!a.same_span(b)) throw AlignmentError("pearson: series spans differ");
  return pearson(a.values(), b.values());
}

// Pearson r between a[t] and b[t + lag] over the overlap; NaN when the overlap is
// shorter than three points or either side is constant.
inline double shifted_pearson(std::span<const double> a, std::span<const double> b, int lag) {
  const auto n = static_cast<std::ptrdiff_t>(std::min(a.size(), b.size()));
  const std::ptrdiff_t k = lag;
  const std::ptrdiff_t len = n - (k >= 0 ? k : -k);
  if (len < 3) return std::numeric_limits<double>::quiet_NaN();
  const auto sa = k >= 0 ? a.subspan(0, static_cast<std::size_t>(len)) : a.subspan(static_cast<std::size_t>(-k), static_cast<std::size_t>(len));
  const auto sb = k >= 0 ? b.subspan(static_cast<std::size_t>(k), static_cast<std::size_t>(len)) : b.subspan(0, static_cast<std::size_t>(len));
  try {
    return pearson(sa, sb);
  } catch (const DegenerateInput&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Candidate lags ordered so that a strict-improvement scan resolves ties toward
// the smallest |lag|, then toward the negative lag: 0, -1, 1, -2, 2, ...
inline std::vector<int> lag_search_order(int max_shift) {
  std::vector<int> lags{0};
  for (int k = 1; k <= max_shift; ++k) {
    lags.push_back(-k);
    lags.push_back(k);
  }
  return lags;
}

// Positive lag: b lags a, i.e. b[t + lag] ~ a[t].
inline LagCorrelation best_lag_correlation(std::span<const double> a, std::span<const double> b, int max_shift) {
  if (max_shift < 0) throw InvalidArgument("max_shift must be non-negative");
  LagCorrelation best{0, -std::numeric_limits<double>::infinity()};
  bool found = false;
  for (int lag : lag_search_order(max_shift)) {
    const double r = shifted_pearson(a, b, lag);
    if (std::isnan(r)) continue;
    if (!found || r > best.r) {
      best = {lag, r};
      found = true;
    }
  }
  if (!found) throw InsufficientHistory("no admissible shift with a defined correlation");
  return best;
}

inline LagCorrelation best_lag_correlation(const TimeSeries& a, const TimeSeries& b, int max_shift) {
  if (!a.same_span(b)) throw AlignmentError("best_lag_correlation: series spans differ");
  return best_lag_correlation(a.values(), b.values(), max_shift);
}

inline double mae(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) throw InvalidArgument("mae: length mismatch");
  if (est.empty()) throw InvalidArgument("mae of empty range");
  double acc = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) acc += std::abs(est[i] - truth[i]);
  return acc / static_cast<double>(est.size());
}

inline double mae(const TimeSeries& est, const TimeSeries& truth) {
  if (est.size() != truth.size()) throw InvalidArgument("mae: length mismatch");
  return mae(est.values(), truth.values());
}

}  // namespace searchsurv
