#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "searchsurv/pipeline.hpp"

namespace pl = searchsurv::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Search-query surveillance pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path, input_dir = ".", out_dir = "out", country;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  bool plots = false;

  const std::map<std::string, std::string> about{
      {"score", "unsupervised category score and baseline for one country"},
      {"adjust", "news-adjusted score and peak report"},
      {"transfer", "transfer a supervised model from a source country"},
      {"impact", "pooled feature impact across countries"},
      {"forecast", "rolling AR/SAR/persistence forecasts"},
      {"synth", "write a synthetic input corpus"},
      {"report", "summarise forecast MAE across countries"},
  };
  for (const auto& [name, cmd] : pl::commands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--input-dir", input_dir, "directory holding the input CSV files");
    sub->add_option("--out-dir", out_dir, "directory for outputs");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--country", country, "country code (overrides the config)");
    sub->add_option("--horizon", horizon, "single forecast horizon in days (overrides the config)");
    sub->add_flag("--plots", plots, "also write SVG plots");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    pl::RunOptions opts;
    opts.command = pl::parse_command(app.get_subcommands().front()->get_name());
    if (!config_path.empty()) opts.cfg = searchsurv::config::load_config(config_path);
    if (seed) opts.cfg.seed = *seed;
    if (!country.empty()) opts.cfg.country = country;
    if (horizon) opts.cfg.horizons = {*horizon};
    opts.input_dir = input_dir;
    opts.out_dir = out_dir;
    opts.plots = plots;
    pl::run(opts);
  } catch (const searchsurv::Error& e) {
    std::cerr << "searchsurv: " << e.what() << "\n";
    return pl::exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "searchsurv: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "searchsurv: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
