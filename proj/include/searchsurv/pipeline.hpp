#pragma once

// Subcommand orchestration: loads a country's flat files, runs a module
// pipeline, writes CSV/JSON (and optional SVG) outputs plus a manifest of
// hashes. Outputs depend only on the inputs, the config and the seed.

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "searchsurv/config.hpp"
#include "searchsurv/dataset.hpp"
#include "searchsurv/errors.hpp"
#include "searchsurv/feature_impact.hpp"
#include "searchsurv/forecasting.hpp"
#include "searchsurv/io.hpp"
#include "searchsurv/news_adjustment.hpp"
#include "searchsurv/svg.hpp"
#include "searchsurv/synthetic.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/transfer.hpp"
#include "searchsurv/unsupervised.hpp"

namespace searchsurv::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Command { Score, Adjust, Transfer, Impact, Forecast, Synth, Report };

inline const std::vector<std::pair<std::string, Command>>& commands() {
  static const std::vector<std::pair<std::string, Command>> table{
      {"score", Command::Score},       {"adjust", Command::Adjust}, {"transfer", Command::Transfer},
      {"impact", Command::Impact},     {"forecast", Command::Forecast}, {"synth", Command::Synth},
      {"report", Command::Report}};
  return table;
}

inline Command parse_command(const std::string& name) {
  for (const auto& [n, c] : commands())
    if (n == name) return c;
  throw InvalidArgument("unknown subcommand '" + name + "'");
}

inline std::string command_name(Command c) {
  for (const auto& [n, cmd] : commands())
    if (cmd == c) return n;
  return "?";
}

struct RunOptions {
  Command command = Command::Score;
  config::RunConfig cfg;
  fs::path input_dir = ".";
  fs::path out_dir = "out";
  bool plots = false;
};

// Tracks every file read and written so the manifest can hash them.
class Context {
 public:
  explicit Context(RunOptions opts) : opts_(std::move(opts)) { opts_.cfg.validate(); }

  const config::RunConfig& cfg() const noexcept { return opts_.cfg; }
  const RunOptions& options() const noexcept { return opts_; }

  fs::path input(const std::string& name) {
    const fs::path p = opts_.input_dir / name;
    if (!fs::is_regular_file(p)) throw IngestionError("missing input file '" + p.string() + "'");
    if (!inputs_.contains(name)) inputs_[name] = io::sha256_file(p);
    return p;
  }

  bool has_input(const std::string& name) const { return fs::is_regular_file(opts_.input_dir / name); }

  void emit(const std::string& name, const std::string& content) {
    io::write_file_atomic(opts_.out_dir / name, content);
    outputs_[name] = io::sha256_hex(content);
  }

  void emit_json(const std::string& name, const json& j) { emit(name, j.dump(2) + "\n"); }

  void plot(const std::string& name, const std::string& title, const std::vector<svg::Line>& lines) {
    if (opts_.plots) emit(name, svg::line_plot(title, lines));
  }

  // Written last; lists everything above.
  void write_manifest() {
    json m;
    m["command"] = command_name(opts_.command);
    const std::string canon = config::canonical(opts_.cfg);
    json cfgj = json::object();
    for (const auto& [key, field] : config::detail::fields()) cfgj[key] = field.get(opts_.cfg);
    m["config"] = cfgj;
    m["config_sha256"] = io::sha256_hex(canon);
    json in = json::array();
    for (const auto& [name, hash] : inputs_) in.push_back({{"file", name}, {"sha256", hash}});
    m["inputs"] = in;
    json out = json::array();
    for (const auto& [name, hash] : outputs_) out.push_back({{"file", name}, {"sha256", hash}});
    m["outputs"] = out;
    m["seeds"] = {{"seed", opts_.cfg.seed}, {"gp_seed", opts_.cfg.seed}};
    m["plots"] = opts_.plots;
    io::write_file_atomic(opts_.out_dir / ("manifest_" + command_name(opts_.command) + ".json"), m.dump(2) + "\n");
  }

 private:
  RunOptions opts_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

// ---- input layout ----

inline std::string queries_file(const std::string& cc) { return "queries_" + cc + ".csv"; }
inline std::string categories_file(const std::string& cc) { return "categories_" + cc + ".csv"; }
inline std::string news_file(const std::string& cc) { return "news_" + cc + ".csv"; }
inline const std::string kClinicalFile = "clinical.csv";

struct LoadFlags {
  bool clinical = false;
  bool news = false;
};

inline CountryDataset load_country(Context& ctx, const std::string& cc, LoadFlags flags) {
  CountryDataset ds;
  ds.country = cc;
  ds.queries = io::load_query_frequencies(ctx.input(queries_file(cc)));
  if (ctx.has_input(categories_file(cc))) ds.categories = io::load_categories(ctx.input(categories_file(cc)));
  if (flags.clinical) {
    auto clin = io::load_clinical(ctx.input(kClinicalFile), cc);
    ds.cases = std::move(clin.cases);
    ds.deaths = std::move(clin.deaths);
  }
  if (flags.news) ds.news = io::load_news_ratio(ctx.input(news_file(cc)));
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw IngestionError(categories_file(cc) + ": " + e.what());
  }
  return ds;
}

// Intersection of two inclusive spans; throws when empty.
inline std::pair<Date, Date> intersect(std::pair<Date, Date> a, std::pair<Date, Date> b, const std::string& what) {
  const Date lo = std::max(a.first, b.first), hi = std::min(a.second, b.second);
  if (hi < lo) throw AlignmentError(what + ": spans do not overlap");
  return {lo, hi};
}

inline std::pair<Date, Date> span_of(const TimeSeries& s) { return {s.start(), s.end()}; }

// Current analysis window clipped to the data.
inline std::pair<Date, Date> current_window(const config::RunConfig& cfg, std::pair<Date, Date> data) {
  const Date hi = cfg.window_end ? std::min(*cfg.window_end, data.second) : data.second;
  return intersect({cfg.window_start, hi}, data, "analysis window");
}

inline const TimeSeries& outcome_of(const CountryDataset& ds, const std::string& which) {
  const auto& s = which == "deaths" ? ds.deaths : ds.cases;
  if (!s) throw IngestionError("no " + which + " series for country '" + ds.country + "'");
  return *s;
}

// ---- score ----

inline unsupervised::PanelScores compute_scores(const CountryDataset& ds, const config::RunConfig& cfg) {
  if (ds.categories.empty()) throw IngestionError("no categories defined for country '" + ds.country + "'");
  const auto [lo, data_hi] = ds.common_query_span();
  const Date hi = cfg.window_end ? std::min(*cfg.window_end, data_hi) : data_hi;
  if (!(cfg.window_start > lo && cfg.window_start <= hi))
    throw InsufficientHistory("query history must start before window_start and reach it");
  std::vector<TimeSeries> series;
  for (const auto& c : ds.categories) series.push_back(ds.category_series(c, lo, hi));
  const auto panel = unsupervised::assemble_panel(ds.categories, series, cfg.window_start, cfg.smoothing);
  return unsupervised::build_panel_scores(panel, cfg.include_covid_terms,
                                          cfg.uniform_weights ? unsupervised::WeightScheme::Uniform
                                                              : unsupervised::WeightScheme::OccurrenceProbability);
}

inline void run_score(Context& ctx) {
  const auto& cc = ctx.cfg().country;
  const auto ds = load_country(ctx, cc, {});
  const auto scores = compute_scores(ds, ctx.cfg());
  ctx.emit("score_" + cc + ".csv", io::series_csv({"score"}, {scores.score}));
  const auto& b = scores.band;
  ctx.emit("baseline_" + cc + ".csv", io::series_csv({"mean", "lower", "upper"}, {b.mean_trend, b.lower, b.upper}));
  ctx.emit_json("score_" + cc + ".json", {{"country", cc},
                                          {"categories", ds.categories.size()},
                                          {"baseline_seasons", b.years},
                                          {"include_covid_terms", ctx.cfg().include_covid_terms},
                                          {"uniform_weights", ctx.cfg().uniform_weights}});
  ctx.plot("score_" + cc + ".svg", "Weighted search score " + cc, {{"score", scores.score}});
  ctx.plot("baseline_" + cc + ".svg", "Historical baseline " + cc,
           {{"mean", b.mean_trend}, {"upper", b.upper, "#d62728", true}, {"lower", b.lower, "#d62728", true}});
}

// ---- adjust ----

struct Adjusted {
  TimeSeries score;
  news::GammaSeries gamma;
  TimeSeries adjusted;
};

inline Adjusted compute_adjusted(const CountryDataset& ds, const config::RunConfig& cfg) {
  const auto scores = compute_scores(ds, cfg);
  if (!ds.news) throw IngestionError("no news ratio for country '" + ds.country + "'");
  const auto span = intersect(span_of(scores.score), span_of(*ds.news), "score and news ratio");
  const TimeSeries g = scores.score.slice(span.first, span.second);
  auto gamma = news::gamma_series(g, ds.news->slice(span.first, span.second), cfg.news_window);
  TimeSeries adj = news::adjust_signal(g, gamma.smoothed);
  return {g, std::move(gamma), std::move(adj)};
}

inline json peak_json(const news::PeakReductionReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"peak_date", format_date(r.peak_date)},
          {"reduction_in_window_pct", num(r.reduction_in_window_pct)},
          {"reduction_outside_pct", num(r.reduction_outside_pct)},
          {"r_in_window", num(r.r_in_window)},
          {"truncated", r.truncated},
          {"no_outside_days", r.no_outside_days},
          {"correlation_undefined", r.correlation_undefined}};
}

inline void run_adjust(Context& ctx) {
  const auto& cc = ctx.cfg().country;
  const auto ds = load_country(ctx, cc, {.news = true});
  const auto a = compute_adjusted(ds, ctx.cfg());
  const TimeSeries raw = a.score.slice(a.adjusted.start(), a.adjusted.end());
  const TimeSeries gamma_raw = a.gamma.raw.slice(a.adjusted.start(), a.adjusted.end());
  ctx.emit("gamma_" + cc + ".csv", io::series_csv({"gamma_raw", "gamma"}, {gamma_raw, a.gamma.smoothed}));
  ctx.emit("adjusted_" + cc + ".csv", io::series_csv({"score", "adjusted"}, {raw, a.adjusted}));
  const auto rep = news::peak_reduction_report(raw, a.adjusted, ctx.cfg().peak_half_window);
  ctx.emit_json("adjust_" + cc + ".json", {{"country", cc},
                                           {"news_window", ctx.cfg().news_window},
                                           {"rank_deficient_days", a.gamma.rank_deficient_days},
                                           {"peak", peak_json(rep)}});
  ctx.plot("adjusted_" + cc + ".svg", "Search score before and after news adjustment " + cc,
           {{"score", raw}, {"adjusted", a.adjusted, "#ff7f0e"}});
}

// ---- transfer ----

inline void run_transfer(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const std::string& src = cfg.transfer_source;
  const std::string& tgt = cfg.country;
  if (src == tgt) throw InvalidArgument("transfer source and target country are the same");
  const auto S = load_country(ctx, src, {.clinical = true});
  const bool target_truth = ctx.has_input(kClinicalFile) && io::load_clinical(ctx.input(kClinicalFile)).contains(tgt);
  const auto T = load_country(ctx, tgt, {.clinical = target_truth});
  const TimeSeries& truth = outcome_of(S, cfg.transfer_outcome);
  auto span = intersect(S.common_query_span(), T.common_query_span(), "source and target queries");
  span = current_window(cfg, intersect(span, span_of(truth), "source queries and outcome"));

  transfer::TransferConfig tc;
  tc.smoothing_days = cfg.smoothing;
  tc.path_size = cfg.path_size;
  tc.lambda_ratio = cfg.lambda_ratio;
  tc.min_active = cfg.min_active;
  tc.max_active = cfg.max_active;
  tc.alignment_window = cfg.alignment_window;
  const auto res = transfer::run_transfer(S.query_set(span.first, span.second), truth.slice(span.first, span.second),
                                          T.query_set(span.first, span.second), tc);

  const std::string stem = "transfer_" + src + "_" + tgt;
  const auto& e = res.estimate;
  std::vector<std::string> names{"mean", "lower", "upper"};
  std::vector<TimeSeries> cols{e.mean, e.lower, e.upper};
  if (target_truth) {
    const TimeSeries& tt = outcome_of(T, cfg.transfer_outcome);
    if (tt.start() <= e.mean.start() && tt.end() >= e.mean.end()) {
      names.push_back("target_" + cfg.transfer_outcome);
      cols.push_back(tt.slice(e.mean.start(), e.mean.end()));
    }
  }
  ctx.emit(stem + ".csv", io::series_csv(names, cols));

  io::CsvWriter mapping({"source_query", "target_query", "category", "r", "fallback", "r_undefined", "scale_ratio"});
  for (std::size_t i = 0; i < res.mapping.pairs.size(); ++i) {
    const auto& p = res.mapping.pairs[i];
    mapping.row({p.source_id, p.target_id, p.category, io::format_number(p.r), p.fallback ? "1" : "0",
                 p.r_undefined ? "1" : "0", io::format_number(res.scaled.ratios[static_cast<Eigen::Index>(i)])});
  }
  ctx.emit(stem + "_mapping.csv", mapping.str());
  ctx.emit_json(stem + ".json", {{"source", src},
                                 {"target", tgt},
                                 {"outcome", cfg.transfer_outcome},
                                 {"window_start", format_date(span.first)},
                                 {"window_end", format_date(span.second)},
                                 {"shift", res.alignment.shift},
                                 {"alignment_mean_r", res.alignment.mean_r},
                                 {"ensemble_size", e.ensemble_size},
                                 {"path_size", res.path.models.size()}});
  ctx.plot(stem + ".svg", "Transferred estimate " + src + " to " + tgt,
           {{"mean", e.mean}, {"2.5%", e.lower, "#7f7f7f", true}, {"97.5%", e.upper, "#7f7f7f", true}});
}

// ---- impact ----

inline std::vector<std::string> countries_with_queries(const fs::path& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) throw IngestionError("input directory '" + dir.string() + "' does not exist");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("queries_") && name.ends_with(".csv"))
      out.push_back(name.substr(8, name.size() - 12));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void run_impact(Context& ctx) {
  const auto& cfg = ctx.cfg();
  auto countries = cfg.impact_countries.empty() ? countries_with_queries(ctx.options().input_dir) : cfg.impact_countries;
  if (countries.empty()) throw IngestionError("no query files found for the impact analysis");
  std::vector<CountryDataset> data;
  std::optional<std::pair<Date, Date>> span;
  for (const auto& cc : countries) {
    data.push_back(load_country(ctx, cc, {.clinical = true}));
    auto s = intersect(data.back().common_query_span(), span_of(outcome_of(data.back(), cfg.impact_outcome)), cc);
    span = span ? intersect(*span, s, "impact countries") : s;
  }
  const auto win = current_window(cfg, *span);

  std::vector<impact::CountryBlock> blocks;
  for (const auto& ds : data) {
    const auto qs = ds.query_set(win.first, win.second);
    const TimeSeries y = outcome_of(ds, cfg.impact_outcome).slice(win.first, win.second);
    blocks.push_back({ds.country, qs.ids, qs.data,
                      Eigen::Map<const Eigen::VectorXd>(y.data().data(), static_cast<Eigen::Index>(y.size()))});
  }
  const auto panel = impact::aggregate_countries(blocks);
  impact::ImpactConfig ic;
  ic.test_days = cfg.impact_test_days;
  ic.max_density = cfg.impact_max_density;
  ic.density_levels = cfg.impact_levels;
  ic.path_size = cfg.impact_path_size;
  ic.lambda_ratio = cfg.lambda_ratio;
  const auto rep = impact::impact_analysis(panel, ic);

  std::map<std::string, int> pos_rank, neg_rank;
  for (const auto& q : rep.positive) pos_rank[q.query] = q.rank;
  for (const auto& q : rep.negative) neg_rank[q.query] = q.rank;
  io::CsvWriter theta({"query", "theta", "numerator", "positive_rank", "negative_rank"});
  for (std::size_t j = 0; j < rep.query_ids.size(); ++j) {
    const auto& q = rep.query_ids[j];
    const auto jj = static_cast<Eigen::Index>(j);
    theta.row({q, io::format_number(rep.theta[jj]), io::format_number(rep.numerators[jj]),
               pos_rank.contains(q) ? std::to_string(pos_rank[q]) : "", neg_rank.contains(q) ? std::to_string(neg_rank[q]) : ""});
  }
  ctx.emit("impact_theta.csv", theta.str());

  std::vector<std::string> header{"level", "day", "country", "lambda1", "active_count", "intercept", "yhat"};
  for (const auto& q : rep.query_ids) header.push_back("f:" + q);
  for (const auto& q : rep.query_ids) header.push_back("w:" + q);
  io::CsvWriter records(header);
  for (const auto& r : rep.records) {
    std::vector<std::string> row{std::to_string(r.level), std::to_string(r.day), panel.countries[r.country],
                                 io::format_number(r.lambda1), std::to_string(r.active_count),
                                 io::format_number(r.intercept), io::format_number(r.yhat)};
    for (Eigen::Index j = 0; j < r.f.size(); ++j) row.push_back(io::format_number(r.f[j]));
    for (Eigen::Index j = 0; j < r.w.size(); ++j) row.push_back(io::format_number(r.w[j]));
    records.row(row);
  }
  ctx.emit("impact_records.csv", records.str());

  io::CsvWriter corr({"query", "r", "rank", "undefined"});
  for (const auto& c : impact::correlate_features(panel, 0))
    corr.row({c.query, c.undefined ? "" : io::format_number(c.r), std::to_string(c.rank), c.undefined ? "1" : "0"});
  ctx.emit("impact_correlation.csv", corr.str());

  json skipped = json::array();
  for (auto d : rep.skipped_days) skipped.push_back(d);
  ctx.emit_json("impact.json", {{"countries", panel.countries},
                                {"outcome", cfg.impact_outcome},
                                {"window_start", format_date(win.first)},
                                {"window_end", format_date(win.second)},
                                {"levels", rep.levels},
                                {"denominator", rep.denominator},
                                {"nonpositive_denominator", rep.nonpositive_denominator},
                                {"skipped_days", skipped}});
}

// ---- forecast ----

inline TimeSeries forecast_signal(const CountryDataset& ds, const config::RunConfig& cfg) {
  if (cfg.forecast_signal == "score") return compute_scores(ds, cfg).score;
  return compute_adjusted(ds, cfg).adjusted;
}

inline void run_forecast(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& cc = cfg.country;
  const auto ds = load_country(ctx, cc, {.clinical = true, .news = cfg.forecast_signal == "adjusted"});
  const TimeSeries z_full = forecast_signal(ds, cfg);
  const TimeSeries& deaths = outcome_of(ds, "deaths");
  const auto span = current_window(cfg, intersect(span_of(z_full), span_of(deaths), "search signal and deaths"));
  const TimeSeries z = z_full.slice(span.first, span.second);
  const TimeSeries y = deaths.slice(span.first, span.second);

  forecast::RollingOptions ro;
  ro.start_threshold = cfg.forecast_start_threshold;
  ro.gp.restarts = cfg.gp_restarts;
  ro.gp.max_iterations = cfg.gp_iterations;
  ro.gp.seed = cfg.seed;

  io::CsvWriter summary({"horizon", "model", "mae_mean", "mae_sd", "missing_days", "test_days", "leakage_violations"});
  json reductions = json::object();
  std::size_t leakage = 0;
  for (int h : cfg.horizons) {
    const auto res = forecast::rolling_evaluation(z, y, cfg.lags, h, ro);
    leakage += res.leakage_violations;
    io::CsvWriter pts({"origin", "target", "model", "forecast", "stddev", "truth", "missing"});
    std::map<forecast::ModelKind, double> mae;
    std::vector<svg::Line> lines{{"deaths", y}};
    for (const auto& rec : res.records) {
      mae[rec.kind] = rec.mae_mean;
      summary.row({std::to_string(h), forecast::to_string(rec.kind), io::format_number(rec.mae_mean),
                   io::format_number(rec.mae_sd), std::to_string(rec.missing_days), std::to_string(res.test_days),
                   std::to_string(res.leakage_violations)});
      std::vector<double> fv;
      for (const auto& p : rec.points) {
        pts.row({format_date(p.origin), format_date(p.target), forecast::to_string(rec.kind),
                 p.missing ? "" : io::format_number(p.forecast), io::format_number(p.stddev), io::format_number(p.truth),
                 p.missing ? "1" : "0"});
        fv.push_back(p.missing ? std::numeric_limits<double>::quiet_NaN() : p.forecast);
      }
      if (!rec.points.empty())
        lines.push_back({forecast::to_string(rec.kind), TimeSeries(rec.points.front().target, fv),
                         rec.kind == forecast::ModelKind::SARF ? "#2ca02c" : "#ff7f0e", rec.kind == forecast::ModelKind::PERF});
    }
    ctx.emit("forecast_" + cc + "_h" + std::to_string(h) + ".csv", pts.str());
    ctx.plot("forecast_" + cc + "_h" + std::to_string(h) + ".svg",
             "Deaths forecasts " + cc + ", " + std::to_string(h) + "-day horizon", lines);
    if (mae.contains(forecast::ModelKind::ARF) && mae.contains(forecast::ModelKind::SARF) &&
        mae[forecast::ModelKind::ARF] > 0.0)
      reductions[std::to_string(h)] = 100.0 * (1.0 - mae[forecast::ModelKind::SARF] / mae[forecast::ModelKind::ARF]);
  }
  ctx.emit("forecast_" + cc + "_summary.csv", summary.str());
  ctx.emit_json("forecast_" + cc + ".json", {{"country", cc},
                                             {"signal", cfg.forecast_signal},
                                             {"lags", cfg.lags},
                                             {"horizons", cfg.horizons},
                                             {"sar_vs_ar_mae_reduction_pct", reductions},
                                             {"leakage_violations", leakage}});
  if (leakage > 0)
    throw NumericalError("rolling evaluation trained on rows at or beyond the test cutoff (" + std::to_string(leakage) + ")");
}

// ---- synth ----

inline synth::SyntheticScenario synthetic_scenario(const config::RunConfig& cfg, std::size_t index) {
  synth::SyntheticScenario sc;
  sc.seed = cfg.seed * 1000003ULL + index;
  sc.country = cfg.synth_countries[index];
  sc.current_start = cfg.window_start;
  sc.history_start = make_date(static_cast<int>(std::chrono::year_month_day{cfg.window_start}.year()) - 4, 9, 17);
  sc.current_days = cfg.synth_days;
  sc.beta = cfg.synth_beta;
  sc.query_noise = cfg.synth_query_noise;
  auto rng = synth::stream(sc.seed, 500);
  std::uniform_real_distribution<double> peak(0.3, 0.45), growth(0.07, 0.12), height(1000.0, 4000.0);
  sc.peak_day = std::round(peak(rng) * cfg.synth_days);
  sc.growth_rate = growth(rng);
  sc.infection_peak = std::round(height(rng));
  return sc;
}

inline void run_synth(Context& ctx) {
  const auto& cfg = ctx.cfg();
  std::map<std::string, io::ClinicalSeries> clinical;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < cfg.synth_countries.size(); ++i) {
    const auto sc = synthetic_scenario(cfg, i);
    if (!seen.insert(sc.country).second) throw InvalidArgument("synth_countries lists '" + sc.country + "' twice");
    const auto out = synth::generate_synthetic(sc);
    const auto& d = out.data;
    ctx.emit(queries_file(sc.country), io::query_frequencies_csv(d.queries));
    ctx.emit(categories_file(sc.country), io::categories_csv(d.categories));
    ctx.emit(news_file(sc.country), io::news_counts_csv(io::news_counts_from_ratio(*d.news)));
    ctx.emit("infections_" + sc.country + ".csv", io::series_csv({"infections"}, {out.infections}));
    clinical.emplace(sc.country, io::ClinicalSeries{*d.cases, *d.deaths});
    json cats = json::array();
    for (const auto& c : sc.categories)
      cats.push_back({{"name", c.name}, {"weight", c.weight}, {"delay", c.delay}, {"covid_terms", c.covid_terms}});
    ctx.emit_json("planted_" + sc.country + ".json",
                  {{"country", sc.country},
                   {"seed", sc.seed},
                   {"history_start", format_date(sc.history_start)},
                   {"current_start", format_date(sc.current_start)},
                   {"current_days", sc.current_days},
                   {"infection_peak", sc.infection_peak},
                   {"growth_rate", sc.growth_rate},
                   {"peak_day", sc.peak_day},
                   {"coupling", sc.coupling},
                   {"beta", sc.beta},
                   {"query_noise", sc.query_noise},
                   {"case_lag", sc.case_lag},
                   {"death_lag", sc.death_lag},
                   {"case_ratio", sc.case_ratio},
                   {"death_ratio", sc.death_ratio},
                   {"news_lag", sc.news_lag},
                   {"categories", cats}});
    ctx.plot("infections_" + sc.country + ".svg", "Planted infections " + sc.country, {{"infections", out.infections}});
  }
  ctx.emit(kClinicalFile, io::clinical_csv(clinical));
}

// ---- report ----

// Cross-country MAE table from forecast summaries found in the input directory.
inline void run_report(Context& ctx) {
  const fs::path dir = ctx.options().input_dir;
  if (!fs::is_directory(dir)) throw IngestionError("input directory '" + dir.string() + "' does not exist");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("forecast_") && name.ends_with("_summary.csv")) files.push_back(name);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IngestionError("no forecast summaries in '" + dir.string() + "'");

  const std::vector<std::string> models{"AR-F", "SAR-F", "PER-F"};
  std::vector<std::string> countries;
  std::vector<std::map<std::pair<int, std::string>, double>> cells;
  std::set<int> horizons;
  for (const auto& f : files) {
    const std::string cc = f.substr(9, f.size() - 9 - 12);
    const auto path = ctx.input(f);
    std::map<std::pair<int, std::string>, double> row;
    for (const auto& r : io::read_csv(path, {"horizon", "model", "mae_mean", "mae_sd", "missing_days", "test_days",
                                             "leakage_violations"})) {
      const int h = static_cast<int>(io::parse_count(r.fields[0], path.string(), r.line, "horizon"));
      row[{h, r.fields[1]}] = io::parse_real(r.fields[2], path.string(), r.line, "mae_mean");
      horizons.insert(h);
    }
    countries.push_back(cc);
    cells.push_back(std::move(row));
  }

  std::vector<std::string> header{"country"};
  std::vector<std::pair<int, std::string>> keys;
  for (int h : horizons)
    for (const auto& m : models) {
      keys.emplace_back(h, m);
      header.push_back(std::to_string(h) + "d " + m);
    }
  std::vector<std::vector<double>> table;
  io::CsvWriter raw(header);
  for (std::size_t i = 0; i < countries.size(); ++i) {
    std::vector<double> vals;
    std::vector<std::string> row{countries[i]};
    for (const auto& k : keys) {
      const auto it = cells[i].find(k);
      if (it == cells[i].end())
        throw IngestionError("forecast summary for '" + countries[i] + "' lacks " + std::to_string(k.first) + "d " + k.second);
      vals.push_back(it->second);
      row.push_back(io::format_number(it->second));
    }
    table.push_back(vals);
    raw.row(row);
  }
  ctx.emit("mae_table.csv", raw.str());

  const auto norm = forecast::normalize_mae_table(table);
  io::CsvWriter nt(header);
  for (std::size_t i = 0; i < countries.size(); ++i) {
    std::vector<std::string> row{countries[i]};
    for (double v : norm.cells[i]) row.push_back(io::format_number(v));
    nt.row(row);
  }
  std::vector<std::string> mean_row{"norm_mean"}, sd_row{"norm_sd"};
  for (std::size_t j = 0; j < keys.size(); ++j) {
    mean_row.push_back(io::format_number(norm.column_mean[j]));
    sd_row.push_back(io::format_number(norm.column_sd[j]));
  }
  nt.row(mean_row).row(sd_row);
  ctx.emit("mae_normalized.csv", nt.str());

  std::string md = "# Forecast MAE\n\n| " + header[0];
  for (std::size_t j = 1; j < header.size(); ++j) md += " | " + header[j];
  md += " |\n|---";
  for (std::size_t j = 1; j < header.size(); ++j) md += "|---:";
  md += "|\n";
  char buf[64];
  for (std::size_t i = 0; i < countries.size(); ++i) {
    md += "| " + countries[i];
    for (double v : table[i]) {
      std::snprintf(buf, sizeof buf, "%.3f", v);
      md += std::string(" | ") + buf;
    }
    md += " |\n";
  }
  md += "| norm. mean";
  for (double v : norm.column_mean) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
    md += std::string(" | ") + buf;
  }
  md += " |\n\n";
  for (int h : horizons) {
    const auto ar = std::find(keys.begin(), keys.end(), std::make_pair(h, std::string("AR-F"))) - keys.begin();
    const auto sar = std::find(keys.begin(), keys.end(), std::make_pair(h, std::string("SAR-F"))) - keys.begin();
    const double a = norm.column_mean[static_cast<std::size_t>(ar)], s = norm.column_mean[static_cast<std::size_t>(sar)];
    md += "- " + std::to_string(h) + "-day horizon: SAR-F normalised mean " + (s <= a ? "at or below" : "above") +
          " AR-F\n";
  }
  ctx.emit("report.md", md);
}

// Runs one subcommand and writes its manifest.
inline void run(const RunOptions& opts) {
  Context ctx(opts);
  switch (opts.command) {
    case Command::Score: run_score(ctx); break;
    case Command::Adjust: run_adjust(ctx); break;
    case Command::Transfer: run_transfer(ctx); break;
    case Command::Impact: run_impact(ctx); break;
    case Command::Forecast: run_forecast(ctx); break;
    case Command::Synth: run_synth(ctx); break;
    case Command::Report: run_report(ctx); break;
  }
  ctx.write_manifest();
}

// Maps library errors onto process exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 2;
}

}  // namespace searchsurv::pipeline
