#pragma once

// Planted-truth synthetic data. Every random draw comes from an engine seeded
// by (scenario seed, stream id), so output is a pure function of the scenario.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "searchsurv/dataset.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/unsupervised.hpp"

namespace searchsurv::synth {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

// Daily new infections: peak * logistic density shape, 0 before day 0.
inline double infection_curve(double day, double peak, double growth, double peak_day) {
  if (day < 0.0) return 0.0;
  const double e = std::exp(-growth * (day - peak_day));
  return peak * 4.0 * e / ((1.0 + e) * (1.0 + e));
}

struct PlantedCategory {
  std::string name;
  double weight = 0.0;
  int delay = 0;  // days from infection to searching
  bool covid_terms = false;
};

inline std::vector<PlantedCategory> default_categories() {
  return {{"cough", 0.777, 3},          {"fatigue", 0.709, 4},        {"fever", 0.601, 2},
          {"sore throat", 0.386, 2},    {"shortness of breath", 0.404, 6},
          {"loss of smell", 0.291, 5},  {unsupervised::kCovidTermsCategory, 1.0, 0, true}};
}

struct SyntheticScenario {
  std::uint64_t seed = 1;
  std::string country = "SY";
  Date history_start = make_date(2016, 9, 17);
  Date current_start = make_date(2020, 1, 1);
  int current_days = 240;

  double infection_peak = 2000.0;
  double growth_rate = 0.1;
  double peak_day = 80.0;

  double coupling = 1.0;      // query response to normalised infections, per unit weight
  double beta = 0.3;          // concern coupling: query response to the news ratio
  double seasonal_amplitude = 0.3;
  double query_noise = 0.02;
  int queries_per_category = 2;

  double news_base = 0.02;
  double news_infection_share = 0.3;
  double news_spike_rate = 0.03;  // expected spikes per day
  int news_lag = 0;               // news follows infections by this many days

  int case_lag = 7;
  int death_lag = 18;
  double case_ratio = 0.3;
  double death_ratio = 0.01;
  double clinical_noise = 0.05;   // relative

  std::vector<PlantedCategory> categories = default_categories();

  void validate() const {
    if (current_start <= history_start) throw InvalidArgument("current period must start after the history");
    if (current_days < 30) throw InvalidArgument("synthetic current period must be at least 30 days");
    if (!(infection_peak > 0.0) || !(growth_rate > 0.0)) throw InvalidArgument("infection curve parameters must be positive");
    if (beta < 0.0 || coupling < 0.0 || query_noise < 0.0 || clinical_noise < 0.0 || seasonal_amplitude < 0.0)
      throw InvalidArgument("synthetic scales must be non-negative");
    if (seasonal_amplitude >= 1.0) throw InvalidArgument("seasonal amplitude must be below 1");
    if (case_lag < 0 || death_lag < 0 || news_lag < 0) throw InvalidArgument("planted lags must be non-negative");
    if (queries_per_category < 1) throw InvalidArgument("each category needs at least one query");
    if (categories.empty()) throw InvalidArgument("no synthetic categories");
    for (const auto& c : categories)
      if (!(c.weight > 0.0) || c.weight > 1.0 || c.delay < 0) throw InvalidArgument("bad planted category '" + c.name + "'");
  }

  Date end() const { return current_start + std::chrono::days{current_days - 1}; }
};

struct SyntheticDataset {
  CountryDataset data;
  TimeSeries infections;  // current period, planted truth
};

inline std::string query_id(const std::string& category, int k) {
  std::string id = category;
  std::replace(id.begin(), id.end(), ' ', '_');
  return id + "_" + static_cast<char>('a' + k);
}

inline SyntheticDataset generate_synthetic(const SyntheticScenario& sc) {
  sc.validate();
  const auto history = static_cast<int>((sc.current_start - sc.history_start).count());
  const int total = history + sc.current_days;
  auto inf = [&](int day_from_current) {
    return infection_curve(static_cast<double>(day_from_current), sc.infection_peak, sc.growth_rate, sc.peak_day);
  };

  std::vector<double> infections(static_cast<std::size_t>(sc.current_days));
  for (int d = 0; d < sc.current_days; ++d) infections[static_cast<std::size_t>(d)] = inf(d);
  SyntheticDataset out{CountryDataset{}, TimeSeries(sc.current_start, infections)};
  out.data.country = sc.country;

  // News ratio over the current period: base + infection-driven coverage + decaying spikes.
  std::vector<double> news(static_cast<std::size_t>(sc.current_days));
  {
    auto rng = stream(sc.seed, 1);
    std::bernoulli_distribution spike(std::min(1.0, sc.news_spike_rate));
    std::uniform_real_distribution<double> amp(0.1, 0.3);
    std::vector<double> spikes(news.size(), 0.0);
    for (std::size_t d = 0; d < spikes.size(); ++d) {
      if (!spike(rng)) continue;
      const double a = amp(rng);
      for (std::size_t k = d; k < spikes.size(); ++k) spikes[k] += a * std::exp(-static_cast<double>(k - d) / 3.0);
    }
    for (int d = 0; d < sc.current_days; ++d) {
      const double v = sc.news_base + sc.news_infection_share * inf(d - sc.news_lag) / sc.infection_peak + spikes[static_cast<std::size_t>(d)];
      news[static_cast<std::size_t>(d)] = std::clamp(v, 0.0, 1.0);
    }
  }
  out.data.news = TimeSeries(sc.current_start, news);

  // Queries over history + current period.
  std::uint64_t stream_id = 100;
  for (const auto& cat : sc.categories) {
    unsupervised::SymptomCategory def{cat.name, cat.weight, {}, cat.covid_terms};
    for (int k = 0; k < sc.queries_per_category; ++k) {
      auto rng = stream(sc.seed, stream_id++);
      std::uniform_real_distribution<double> base_draw(0.5, 1.5);
      std::normal_distribution<double> noise(0.0, 1.0);
      const double base = cat.covid_terms ? 0.05 : base_draw(rng);
      const double seasonal = cat.covid_terms ? 0.0 : sc.seasonal_amplitude;
      std::vector<double> v(static_cast<std::size_t>(total));
      for (int i = 0; i < total; ++i) {
        const Date date = sc.history_start + std::chrono::days{i};
        const int day = i - history;
        const int year = static_cast<int>(std::chrono::year_month_day{date}.year());
        const double doy = static_cast<double>((date - make_date(year, 1, 1)).count());
        double x = base * (1.0 + seasonal * std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.25));
        x += sc.coupling * cat.weight * inf(day - cat.delay) / sc.infection_peak;
        if (day >= 0) x += sc.beta * news[static_cast<std::size_t>(day)];
        x += sc.query_noise * noise(rng);
        v[static_cast<std::size_t>(i)] = std::max(x, 0.0);
      }
      const std::string id = query_id(cat.name, k);
      def.member_queries.push_back(id);
      out.data.queries.emplace(id, TimeSeries(sc.history_start, std::move(v)));
    }
    out.data.categories.push_back(std::move(def));
  }

  // Clinical counts with planted reporting lags.
  {
    auto rng = stream(sc.seed, 2);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> cases(static_cast<std::size_t>(sc.current_days)), deaths(cases.size());
    for (int d = 0; d < sc.current_days; ++d) {
      const double c = sc.case_ratio * inf(d - sc.case_lag) * (1.0 + sc.clinical_noise * noise(rng));
      const double m = sc.death_ratio * inf(d - sc.death_lag) * (1.0 + sc.clinical_noise * noise(rng));
      cases[static_cast<std::size_t>(d)] = std::max(0.0, std::round(c));
      deaths[static_cast<std::size_t>(d)] = std::max(0.0, std::round(m));
    }
    out.data.cases = TimeSeries(sc.current_start, std::move(cases));
    out.data.deaths = TimeSeries(sc.current_start, std::move(deaths));
  }
  out.data.validate();
  return out;
}

// g = g_p + beta * m: a small, smooth planted infection signal g_p plus an
// independent news ratio m made of frequent short bursts.
struct NewsScenario {
  TimeSeries g_p;
  TimeSeries m;
  TimeSeries g;
};

inline NewsScenario make_news_scenario(std::uint64_t seed, double beta, int days = 200) {
  if (days < 80) throw InvalidArgument("news scenario needs at least 80 days");
  auto rng = stream(seed, 11);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> peak_day(0.4 * days, 0.7 * days);
  std::uniform_real_distribution<double> growth(0.06, 0.12);
  std::bernoulli_distribution spike(0.15);
  std::uniform_real_distribution<double> amp(0.2, 0.6);
  const double pd = peak_day(rng), gr = growth(rng);
  std::vector<double> gp(static_cast<std::size_t>(days)), m(gp.size(), 0.0), g(gp.size());
  for (int d = 0; d < days; ++d) {
    gp[static_cast<std::size_t>(d)] = 0.1 + 0.05 * infection_curve(d, 1.0, gr, pd) + 5e-4 * noise(rng);
    if (spike(rng)) {
      const double a = amp(rng);
      for (int k = d; k < days; ++k) m[static_cast<std::size_t>(k)] += a * std::exp(-(k - d));
    }
  }
  for (auto& v : m) v = std::clamp(0.05 + v, 0.0, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = gp[i] + beta * m[i];
  const Date start = make_date(2020, 1, 1);
  return {TimeSeries(start, gp), TimeSeries(start, m), TimeSeries(start, g)};
}

// Outcome y follows a planted epidemic curve; the search signal z is the same
// curve `lead` days earlier, so z at time t carries y at t + lead.
struct LeadingIndicatorScenario {
  TimeSeries z;  // [0,1]
  TimeSeries y;  // counts
};

inline LeadingIndicatorScenario make_leading_indicator(std::uint64_t seed, int lead, int days = 110) {
  if (lead < 0 || days < 30) throw InvalidArgument("bad leading-indicator scenario");
  auto rng = stream(seed, 21);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> peak_day(0.45 * days, 0.65 * days);
  std::uniform_real_distribution<double> growth(0.08, 0.14);
  std::uniform_real_distribution<double> height(80.0, 200.0);
  const double pd = peak_day(rng), gr = growth(rng), h = height(rng);
  std::vector<double> z(static_cast<std::size_t>(days)), y(z.size());
  for (int d = 0; d < days; ++d) {
    y[static_cast<std::size_t>(d)] = std::max(0.0, std::round(h * infection_curve(d, 1.0, gr, pd) * (1.0 + 0.05 * noise(rng))));
    z[static_cast<std::size_t>(d)] = infection_curve(d + lead, 1.0, gr, pd) + 0.01 * noise(rng);
  }
  const auto zn = min_max_normalize(TimeSeries(make_date(2020, 2, 1), z)).series;
  return {zn, TimeSeries(make_date(2020, 2, 1), y)};
}

}  // namespace searchsurv::synth
