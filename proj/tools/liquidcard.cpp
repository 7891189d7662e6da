// liquidcard: fit, tune, synthesize, smooth and serve liquid scorecards.
//
// Exit status: 0 success, 2 configuration or input error, 3 numerical failure.
// On failure a {code, message, detail} JSON object is printed on stdout.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "liquid/dataset.hpp"
#include "liquid/divergence_fit.hpp"
#include "liquid/errors.hpp"
#include "liquid/legacy_smoothing.hpp"
#include "liquid/model_io.hpp"
#include "liquid/smoothness_tuning.hpp"
#include "liquid/synth.hpp"
#include "liquid/tuning_service.hpp"

namespace fs = std::filesystem;
using namespace liquid;

namespace {

struct Args {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> lambda2;
  std::string grid;
  bool use_patterns = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_rows = 1'000'000;
  int ttl = 3600;
};

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::ConfigError, what + ": '" + s + "' is not a number");
  return v;
}

Lambda2Map parse_lambda2(const std::vector<std::string>& items) {
  Lambda2Map out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::ConfigError, "--lambda2 expects NAME=VALUE, got '" + item + "'");
    }
    out[item.substr(0, eq)] = parse_number(item.substr(eq + 1), "--lambda2 " + item.substr(0, eq));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  if (s.empty() || s == "default") return default_lambda2_grid();
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    grid.push_back(parse_number(s.substr(start, end - start), "--grid"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return grid;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::ConfigError, std::string("missing required option ") + flag);
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

struct Prepared {
  RunConfig cfg;
  DataSplit split;
};

Prepared prepare(const Args& a) {
  require(a.config, "--config");
  require(a.data, "--data");
  Prepared p;
  p.cfg = run_config_from_json(read_json_file(a.config));
  if (a.seed) p.cfg.seed = *a.seed;
  const Dataset full = read_csv(a.data);
  bind_columns(p.cfg.spec, full);
  p.split = split_dataset(full, p.cfg.val_fraction, p.cfg.seed);
  spdlog::info("split {} rows into {} development and {} validation", full.rows(), p.split.dev.rows(),
               p.split.val.rows());
  return p;
}

void write_curve_csv(const fs::path& path, const CurveSample& curve) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
  out << (curve.log1p_xs.empty() ? "x,cs\n" : "x,log1p_x,cs\n");
  for (std::size_t i = 0; i < curve.xs.size(); ++i) {
    out << format_double(curve.xs[i]) << ',';
    if (!curve.log1p_xs.empty()) out << format_double(curve.log1p_xs[i]) << ',';
    out << format_double(curve.cs[i]) << '\n';
  }
}

int cmd_fit(const Args& a) {
  const Prepared p = prepare(a);
  const FitData data(p.cfg.spec, p.split.dev, &p.split.val);
  FitOptions opt;
  opt.lambda2 = parse_lambda2(a.lambda2);
  const FittedModel fitted = woe_rescale(fit(data, opt));
  spdlog::info("fit converged in {} iterations", fitted.iterations);

  const fs::path dir = a.out.empty() ? fs::path(".") : fs::path(a.out);
  fs::create_directories(dir);
  write_json_file(dir / "model.json", fitted_model_to_json(fitted));
  Json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["dev_divergence"] = fitted.dev_divergence;
  summary["val_divergence"] = fitted.val_divergence;
  summary["dev_rows"] = p.split.dev.rows();
  summary["val_rows"] = p.split.val.rows();
  summary["lambda2"] = Json::object();
  summary["curves"] = Json::array();
  for (const auto& c : fitted.spec.characteristics) {
    summary["lambda2"][c.name] = c.has_liquid() ? Json(c.lambda2) : Json(nullptr);
    if (!c.has_liquid()) continue;
    const std::string file = "curve_" + c.name + ".csv";
    write_curve_csv(dir / file, sample_curve(fitted, c.name));
    summary["curves"].push_back(file);
  }
  summary["model"] = "model.json";
  print(summary);
  return 0;
}

int cmd_tune(const Args& a) {
  const Prepared p = prepare(a);
  ModelSpec spec = p.cfg.spec;
  for (const auto& [name, value] : parse_lambda2(a.lambda2)) {
    CharacteristicSpec& c = spec.characteristics[spec.index_of(name)];
    c.lambda2 = value;
  }
  const FitData data(spec, p.split.dev, &p.split.val);
  const TuneReport report = greedy_tune(data, parse_grid(a.grid));
  const fs::path out = a.out.empty() ? fs::path("tune_report.json") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_json_file(out, tune_report_to_json(report));
  Json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["baseline_val_divergence"] = report.baseline_val_divergence;
  summary["final_val_divergence"] = report.final_val_divergence;
  summary["chosen_lambda2"] = tune_report_to_json(report)["chosen_lambda2"];
  summary["report"] = out.string();
  print(summary);
  return 0;
}

int cmd_synth(const Args& a) {
  require(a.config, "--config");
  SynthConfig cfg = synth_config_from_json(read_json_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const fs::path out = a.out.empty() ? fs::path("synth.csv") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const Dataset data = generate_synthetic(cfg);
  {
    std::ofstream f(out);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write '" + out.string() + "'");
    write_csv(data, f);
  }
  fs::path truth = out;
  truth.replace_extension(".truth.json");
  write_json_file(truth, synth_truth_json(cfg));
  std::size_t good = 0;
  for (int o : data.outcome) good += o == 1;
  print(Json{{"schema_version", kSchemaVersion},
             {"rows", data.rows()},
             {"good", good},
             {"bad", data.rows() - good},
             {"data", out.string()},
             {"truth", truth.string()}});
  return 0;
}

int cmd_smooth(const Args& a) {
  require(a.config, "--config");
  require(a.data, "--data");
  const StepScorecard card = step_card_from_json(read_json_file(a.config));
  const Dataset data = read_csv(a.data);
  SmoothingOptions opt;
  opt.lambda2 = parse_lambda2(a.lambda2);
  opt.use_patterns = a.use_patterns;
  const SmoothingResult result = smooth_step_scorecard(card, data, opt);
  const fs::path out = a.out.empty() ? fs::path("smoothed_card.json") : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_json_file(out, step_card_to_json(result.card));
  std::size_t flagged = 0;
  for (const auto& c : result.card.characteristics) {
    for (const auto& b : c.bins) flagged += !b.flags.empty();
  }
  print(Json{{"schema_version", kSchemaVersion},
             {"dev_divergence", result.model.dev_divergence},
             {"flagged_bins", flagged},
             {"card", out.string()}});
  return 0;
}

int cmd_serve(const Args& a) {
  ServiceOptions opt;
  opt.max_rows = a.max_rows;
  opt.ttl = std::chrono::seconds(a.ttl);
  TuningService service(opt);
  service.serve(a.host, a.port, [&](int port) { spdlog::warn("listening on {}:{}", a.host, port); });
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("liquidcard");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("LIQUIDCARD_LOG_LEVEL");
  spdlog::set_level(level != nullptr ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Liquid scorecard fitting and smoothness tuning"};
  app.require_subcommand(1);
  Args a;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "config JSON");
    sub->add_option("--out", a.out, "output path");
    sub->add_option("--seed", a.seed, "overrides the configured seed");
  };
  auto* fit = app.add_subcommand("fit", "fit a model and write model.json plus curves");
  add_common(fit);
  fit->add_option("--data", a.data, "CSV dataset");
  fit->add_option("--lambda2", a.lambda2, "NAME=VALUE smoothness override")->allow_extra_args(false);

  auto* tune = app.add_subcommand("tune", "greedy per-characteristic lambda2 search");
  add_common(tune);
  tune->add_option("--data", a.data, "CSV dataset");
  tune->add_option("--lambda2", a.lambda2, "NAME=VALUE starting value")->allow_extra_args(false);
  tune->add_option("--grid", a.grid, "comma-separated lambda2 values (default: 0 and 10^(k/2), k=0..20)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);

  auto* smooth = app.add_subcommand("smooth", "smooth a step scorecard");
  add_common(smooth);
  smooth->add_option("--data", a.data, "development CSV");
  smooth->add_option("--lambda2", a.lambda2, "NAME=VALUE smoothness")->allow_extra_args(false);
  smooth->add_flag("--use-patterns", a.use_patterns, "apply each characteristic's pattern");

  auto* serve = app.add_subcommand("serve", "run the tuning HTTP service");
  serve->add_option("--host", a.host);
  serve->add_option("--port", a.port);
  serve->add_option("--max-rows", a.max_rows);
  serve->add_option("--ttl", a.ttl, "session time-to-live in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    print(Json{{"code", "CONFIG_ERROR"}, {"message", e.what()}, {"detail", Json::object()}});
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(a);
    if (tune->parsed()) return cmd_tune(a);
    if (synth->parsed()) return cmd_synth(a);
    if (smooth->parsed()) return cmd_smooth(a);
    if (serve->parsed()) return cmd_serve(a);
  } catch (const Error& e) {
    spdlog::error("{}: {}", error_code_name(e.code()), e.what());
    print(error_to_json(e));
    return is_numerical(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    print(error_to_json(e));
    return 2;
  }
  return 2;
}
