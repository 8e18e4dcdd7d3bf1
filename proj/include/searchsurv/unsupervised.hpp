#pragma once

// Unsupervised symptom-weighted search score and its multi-year seasonal baseline.

#include <Eigen/Dense>
#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"

namespace searchsurv::unsupervised {

inline constexpr const char* kCovidTermsCategory = "covid terms";
inline constexpr int kCategorySmoothingDays = 14;

struct SymptomCategory {
  std::string name;
  double weight = 0.0;
  std::vector<std::string> member_queries;
  bool covid_terms = false;

  void validate() const {
    if (!(weight > 0.0) || weight > 1.0)
      throw InvalidArgument("category '" + name + "' weight must lie in (0, 1]");
    if (member_queries.empty()) throw InvalidArgument("category '" + name + "' has no member queries");
    if (covid_terms && weight != 1.0) throw InvalidArgument("the covid-terms category must carry weight 1");
  }
};

// Symptom occurrence probabilities among confirmed cases, in decreasing order.
inline const std::vector<std::pair<std::string, double>>& ff100_weights() {
  static const std::vector<std::pair<std::string, double>> table{
      {"cough", .777},          {"fatigue", .709},
      {"fever", .601},          {"headache", .567},
      {"muscle ache", .509},    {"appetite loss", .441},
      {"shortness of breath", .404}, {"sore throat", .386},
      {"joint ache", .339},     {"runny nose", .325},
      {"loss of smell", .291},  {"diarrhoea", .276},
      {"sneezing", .239},       {"nausea", .236},
      {"vomiting", .087},       {"altered consciousness", .068},
      {"nose bleed", .060},     {"rash", .052},
      {"seizure", .008},
  };
  return table;
}

inline std::optional<double> ff100_weight(const std::string& symptom) {
  for (const auto& [name, w] : ff100_weights())
    if (name == symptom) return w;
  return std::nullopt;
}

// Element-wise sum of the member-query series of one category.
inline TimeSeries aggregate_category(const std::vector<TimeSeries>& query_series) {
  if (query_series.empty()) throw InvalidArgument("category has no query series");
  std::vector<double> acc(query_series.front().values().begin(), query_series.front().values().end());
  for (std::size_t q = 1; q < query_series.size(); ++q) {
    if (!query_series[q].same_span(query_series.front()))
      throw AlignmentError("query series in a category do not share a span");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += query_series[q][i];
  }
  return TimeSeries(query_series.front().start(), std::move(acc));
}

// Harmonic smoothing, linear detrending over the whole span, then min-max.
inline NormalizedSeries preprocess_category(const TimeSeries& s, int window = kCategorySmoothingDays) {
  return min_max_normalize(linear_detrend(harmonic_smooth(s, window)));
}

// x = Xw / sum(w).
inline Eigen::VectorXd weighted_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  if (X.cols() != w.size()) throw InvalidArgument("weight vector length does not match category count");
  if (!w.allFinite() || (w.array() < 0.0).any()) throw InvalidArgument("weights must be finite and non-negative");
  const double total = w.sum();
  if (!(total > 0.0)) throw InvalidArgument("weights sum to zero");
  return X * w / total;
}

struct MonthDay {
  unsigned month = 9;
  unsigned day = 30;
};

inline Date season_start_on_or_before(Date d, MonthDay season) {
  const std::chrono::year_month_day ymd{d};
  Date candidate = make_date(static_cast<int>(ymd.year()), season.month, season.day);
  if (candidate > d) candidate = make_date(static_cast<int>(ymd.year()) - 1, season.month, season.day);
  return candidate;
}

// Day-of-season index in [0, 365). Feb 29 shares the index of Feb 28.
inline int season_day_index(Date d, MonthDay season) {
  const Date start = season_start_on_or_before(d, season);
  int idx = static_cast<int>((d - start).count());
  for (Date x = start; x <= d; x += std::chrono::days{1})
    if (is_leap_day(x)) --idx;
  return std::max(idx, 0);
}

struct BaselineBand {
  TimeSeries mean_trend;
  TimeSeries upper;
  TimeSeries lower;
  int years = 0;

  // Band values for an arbitrary date, looked up by day of season.
  double mean_at(Date d, MonthDay season) const { return mean_trend[static_cast<std::size_t>(season_day_index(d, season))]; }
  double upper_at(Date d, MonthDay season) const { return upper[static_cast<std::size_t>(season_day_index(d, season))]; }
  double lower_at(Date d, MonthDay season) const { return lower[static_cast<std::size_t>(season_day_index(d, season))]; }
};

// Splits the weighted historical score into 365-day seasons starting at
// `season` (leap days dropped) and returns the per-day mean with a two
// population-standard-deviation band. The band is dated from the first season
// start following the last complete historical season.
inline BaselineBand historical_baseline(const Eigen::MatrixXd& H, const Eigen::VectorXd& w, Date historical_start,
                                        MonthDay season = {}) {
  const Eigen::VectorXd h = weighted_score(H, w);
  const Date last = historical_start + std::chrono::days{static_cast<int>(h.size()) - 1};
  Date s = season_start_on_or_before(historical_start, season);
  if (s < historical_start) s = make_date(static_cast<int>(std::chrono::year_month_day{s}.year()) + 1, season.month, season.day);

  std::vector<std::vector<double>> seasons;
  while (true) {
    const int y = static_cast<int>(std::chrono::year_month_day{s}.year());
    const Date next = make_date(y + 1, season.month, season.day);
    if (next - std::chrono::days{1} > last) break;
    std::vector<double> vals;
    vals.reserve(365);
    for (Date d = s; d < next; d += std::chrono::days{1}) {
      if (is_leap_day(d)) continue;
      vals.push_back(h[(d - historical_start).count()]);
    }
    seasons.push_back(std::move(vals));
    s = next;
  }
  if (seasons.size() < 2) throw InsufficientHistory("historical baseline needs at least two complete seasons");

  const std::size_t days = 365;
  std::vector<double> mu(days), up(days), lo(days);
  std::vector<double> column(seasons.size());
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t y = 0; y < seasons.size(); ++y) column[y] = seasons[y][d];
    const double m = mean(column);
    const double sd = pstdev(column);
    mu[d] = m;
    up[d] = m + 2.0 * sd;
    lo[d] = m - 2.0 * sd;
  }
  return BaselineBand{TimeSeries(s, std::move(mu)), TimeSeries(s, std::move(up)), TimeSeries(s, std::move(lo)),
                      static_cast<int>(seasons.size())};
}

// Per-category matrices split into historical and current periods.
struct SymptomPanel {
  std::vector<std::string> names;
  Eigen::VectorXd weights;
  std::optional<Eigen::Index> covid_column;
  Date current_start;
  Eigen::MatrixXd current;
  Date historical_start;
  Eigen::MatrixXd historical;

  void validate() const {
    const auto k = weights.size();
    if (static_cast<Eigen::Index>(names.size()) != k || current.cols() != k || historical.cols() != k)
      throw InvalidArgument("panel column counts disagree with weight vector");
    if ((weights.array() <= 0.0).any()) throw InvalidArgument("panel weights must be positive");
    if ((current.array() < 0.0).any() || (historical.array() < 0.0).any())
      throw InvalidArgument("panel entries must be non-negative");
  }
};

// Preprocesses each category over its full span and splits the result at
// `current_start` into historical and current matrices.
inline SymptomPanel assemble_panel(const std::vector<SymptomCategory>& categories,
                                   const std::vector<TimeSeries>& category_series, Date current_start,
                                   int smoothing_days = kCategorySmoothingDays) {
  if (categories.empty() || categories.size() != category_series.size())
    throw InvalidArgument("one aggregated series per category is required");
  SymptomPanel panel;
  panel.weights.resize(static_cast<Eigen::Index>(categories.size()));
  std::vector<TimeSeries> processed;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    categories[c].validate();
    panel.names.push_back(categories[c].name);
    panel.weights[static_cast<Eigen::Index>(c)] = categories[c].weight;
    if (categories[c].covid_terms) panel.covid_column = static_cast<Eigen::Index>(c);
    processed.push_back(preprocess_category(category_series[c], smoothing_days).series);
    if (!processed.back().same_span(processed.front())) throw AlignmentError("category series spans differ");
  }
  const TimeSeries& ref = processed.front();
  const auto split = ref.index_of(current_start);
  if (split <= 0) throw InsufficientHistory("current period must start after the first smoothed day");
  const auto n_hist = split;
  const auto n_cur = static_cast<Eigen::Index>(ref.size()) - split;
  panel.historical_start = ref.start();
  panel.current_start = current_start;
  panel.historical.resize(n_hist, static_cast<Eigen::Index>(categories.size()));
  panel.current.resize(n_cur, static_cast<Eigen::Index>(categories.size()));
  for (std::size_t c = 0; c < processed.size(); ++c) {
    for (Eigen::Index i = 0; i < n_hist; ++i) panel.historical(i, static_cast<Eigen::Index>(c)) = processed[c][static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n_cur; ++i)
      panel.current(i, static_cast<Eigen::Index>(c)) = processed[c][static_cast<std::size_t>(split + i)];
  }
  return panel;
}

enum class WeightScheme { OccurrenceProbability, Uniform };

struct PanelScores {
  TimeSeries score;
  BaselineBand band;
};

inline PanelScores build_panel_scores(const SymptomPanel& panel, bool include_covid_terms,
                                      WeightScheme scheme = WeightScheme::OccurrenceProbability,
                                      MonthDay season = {}) {
  panel.validate();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < panel.weights.size(); ++c)
    if (include_covid_terms || panel.covid_column != c) cols.push_back(c);
  if (cols.empty()) throw InvalidArgument("no categories left to score");

  Eigen::MatrixXd X(panel.current.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd H(panel.historical.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    X.col(jj) = panel.current.col(cols[j]);
    H.col(jj) = panel.historical.col(cols[j]);
    w[jj] = scheme == WeightScheme::Uniform ? 1.0 : panel.weights[cols[j]];
  }
  const Eigen::VectorXd x = weighted_score(X, w);
  return PanelScores{TimeSeries(panel.current_start, std::vector<double>(x.begin(), x.end())),
                     historical_baseline(H, w, panel.historical_start, season)};
}

}  // namespace searchsurv::unsupervised
