#pragma once

// Run configuration: a flat `key = value` text file, `#` starts a comment.
// Unknown keys and out-of-range values are rejected.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "searchsurv/elastic_net.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/forecasting.hpp"
#include "searchsurv/news_adjustment.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/transfer.hpp"
#include "searchsurv/unsupervised.hpp"

namespace searchsurv::config {

struct RunConfig {
  // analysis window; the current period starts at window_start
  Date window_start = make_date(2020, 1, 1);
  std::optional<Date> window_end;

  std::string country = "SY";
  int smoothing = unsupervised::kCategorySmoothingDays;
  bool include_covid_terms = true;
  bool uniform_weights = false;
  int news_window = news::kDefaultWindow;
  int peak_half_window = 14;

  int min_active = transfer::kMinActive;
  int max_active = transfer::kMaxActive;
  double lambda_ratio = enet::kDefaultLambdaRatio;
  int path_size = enet::kDefaultPathSize;
  int alignment_window = transfer::kAlignmentWindow;
  std::string transfer_source = "SX";
  std::string transfer_outcome = "cases";

  std::vector<std::string> impact_countries;  // empty: every country with a query file
  std::string impact_outcome = "deaths";
  int impact_test_days = 84;
  double impact_max_density = 0.5;
  int impact_levels = 10;
  int impact_path_size = 200;

  int lags = forecast::kDefaultLags;
  std::vector<int> horizons{7, 14};
  std::string forecast_signal = "adjusted";
  double forecast_start_threshold = forecast::kDeathsStartThreshold;
  int gp_restarts = 5;
  int gp_iterations = 100;

  std::uint64_t seed = 0;

  std::vector<std::string> synth_countries{"SX", "SY"};
  int synth_days = 240;
  double synth_beta = 0.3;
  double synth_query_noise = 0.02;

  void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw InvalidArgument("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "': expected true or false, got '" + v + "'");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else
      out += std::to_string(v[i]);
  }
  return out;
}

inline std::string number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SEARCHSURV_INT(name)                                                                              \
  {#name, {[](RunConfig& c, const std::string& v) { c.name = parse_number<int>(#name, v); },             \
           [](const RunConfig& c) { return std::to_string(c.name); }}}
#define SEARCHSURV_REAL(name)                                                                             \
  {#name, {[](RunConfig& c, const std::string& v) { c.name = parse_number<double>(#name, v); },          \
           [](const RunConfig& c) { return number(c.name); }}}
#define SEARCHSURV_TEXT(name)                                                                             \
  {#name, {[](RunConfig& c, const std::string& v) { c.name = v; }, [](const RunConfig& c) { return c.name; }}}
#define SEARCHSURV_BOOL(name)                                                                             \
  {#name, {[](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); },                    \
           [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }}}
#define SEARCHSURV_LIST(name)                                                                             \
  {#name, {[](RunConfig& c, const std::string& v) { c.name = split_list(v); },                           \
           [](const RunConfig& c) { return join(c.name); }}}

// Sorted by key, which fixes the canonical serialisation order.
inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table{
      {"window_start", {[](RunConfig& c, const std::string& v) { c.window_start = parse_date(v); },
                        [](const RunConfig& c) { return format_date(c.window_start); }}},
      {"window_end", {[](RunConfig& c, const std::string& v) {
                        if (v.empty()) c.window_end.reset(); else c.window_end = parse_date(v);
                      },
                      [](const RunConfig& c) { return c.window_end ? format_date(*c.window_end) : std::string(); }}},
      SEARCHSURV_TEXT(country),
      SEARCHSURV_INT(smoothing),
      SEARCHSURV_BOOL(include_covid_terms),
      SEARCHSURV_BOOL(uniform_weights),
      SEARCHSURV_INT(news_window),
      SEARCHSURV_INT(peak_half_window),
      SEARCHSURV_INT(min_active),
      SEARCHSURV_INT(max_active),
      SEARCHSURV_REAL(lambda_ratio),
      SEARCHSURV_INT(path_size),
      SEARCHSURV_INT(alignment_window),
      SEARCHSURV_TEXT(transfer_source),
      SEARCHSURV_TEXT(transfer_outcome),
      SEARCHSURV_LIST(impact_countries),
      SEARCHSURV_TEXT(impact_outcome),
      SEARCHSURV_INT(impact_test_days),
      SEARCHSURV_REAL(impact_max_density),
      SEARCHSURV_INT(impact_levels),
      SEARCHSURV_INT(impact_path_size),
      SEARCHSURV_INT(lags),
      {"horizons", {[](RunConfig& c, const std::string& v) {
                      c.horizons.clear();
                      for (const auto& h : split_list(v)) c.horizons.push_back(parse_number<int>("horizons", h));
                    },
                    [](const RunConfig& c) { return join(c.horizons); }}},
      SEARCHSURV_TEXT(forecast_signal),
      SEARCHSURV_REAL(forecast_start_threshold),
      SEARCHSURV_INT(gp_restarts),
      SEARCHSURV_INT(gp_iterations),
      {"seed", {[](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
                [](const RunConfig& c) { return std::to_string(c.seed); }}},
      SEARCHSURV_LIST(synth_countries),
      SEARCHSURV_INT(synth_days),
      SEARCHSURV_REAL(synth_beta),
      SEARCHSURV_REAL(synth_query_noise),
  };
  return table;
}

#undef SEARCHSURV_INT
#undef SEARCHSURV_REAL
#undef SEARCHSURV_TEXT
#undef SEARCHSURV_BOOL
#undef SEARCHSURV_LIST

}  // namespace detail

inline void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument("config: " + msg);
  };
  require(!window_end || *window_end > window_start, "window_end must follow window_start");
  require(!country.empty(), "country must be set");
  require(smoothing >= 1, "smoothing must be >= 1");
  require(news_window >= 4, "news_window must be >= 4");
  require(peak_half_window >= 0, "peak_half_window must be >= 0");
  require(min_active >= 1 && max_active >= min_active, "ensemble band must satisfy 1 <= min_active <= max_active");
  require(lambda_ratio >= 0.0 && std::isfinite(lambda_ratio), "lambda_ratio must be >= 0");
  require(path_size >= 2, "path_size must be >= 2");
  require(alignment_window >= 0, "alignment_window must be >= 0");
  require(transfer_outcome == "cases" || transfer_outcome == "deaths", "transfer_outcome must be cases or deaths");
  require(impact_outcome == "cases" || impact_outcome == "deaths", "impact_outcome must be cases or deaths");
  require(impact_test_days >= 1, "impact_test_days must be >= 1");
  require(impact_max_density > 0.0 && impact_max_density <= 1.0, "impact_max_density must lie in (0, 1]");
  require(impact_levels >= 1, "impact_levels must be >= 1");
  require(impact_path_size >= 2, "impact_path_size must be >= 2");
  require(lags >= 0, "lags must be >= 0");
  require(!horizons.empty(), "horizons must not be empty");
  for (int h : horizons) require(h >= 1, "horizons must be >= 1");
  require(forecast_signal == "adjusted" || forecast_signal == "score", "forecast_signal must be adjusted or score");
  require(forecast_start_threshold >= 0.0, "forecast_start_threshold must be >= 0");
  require(gp_restarts >= 1, "gp_restarts must be >= 1");
  require(gp_iterations >= 1, "gp_iterations must be >= 1");
  require(!synth_countries.empty(), "synth_countries must not be empty");
  require(synth_days >= 30, "synth_days must be >= 30");
  require(synth_beta >= 0.0, "synth_beta must be >= 0");
  require(synth_query_noise >= 0.0, "synth_query_noise must be >= 0");
}

inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = detail::fields().find(key);
    if (it == detail::fields().end())
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.emplace(key, lineno).second)
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": key '" + key + "' repeated");
    try {
      it->second.set(cfg, value);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

// Every key in sorted order; parsing this text yields an equal config.
inline std::string canonical(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, f] : detail::fields()) out += key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace searchsurv::config
