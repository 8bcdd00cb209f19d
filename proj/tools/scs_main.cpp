// scs: command-line front end for sequential correct screening.
//
//   scs simulate        Monte Carlo study on simulated arms
//   scs screen          run screening over a t,arm,value CSV stream
//   scs psi             screening followed by FCR-adjusted intervals at the stop time
//   scs compare-levels  the three levels and which ordering case applies
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scs/errors.hpp"
#include "scs/io.hpp"
#include "scs/psi.hpp"
#include "scs/screening.hpp"
#include "scs/simharness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct CommonOptions {
  std::size_t k = 0;
  std::size_t m = 1;
  double alpha = 0.1;
  std::string constructor = "subgaussian";
  double sigma2 = 0.25;
  std::optional<double> lambda;
  double p = 2.0;
  double v = 1.0;
  double q = 0.5;
  std::string output;
  std::string format = "json";
};

struct SimulateOptions {
  std::string model = "bernoulli";
  std::vector<double> theta;
  double model_sigma = 1.0;
  std::uint64_t seed = 20240601;
  std::size_t reps = 200;
  std::vector<std::size_t> checkpoints{100, 1000, 10000};
  std::string stop_rule = "stable:50";
  std::string psi_method = "psi";
  std::optional<double> fcr_alpha;
  unsigned threads = 0;
};

struct StreamOptions {
  std::string input;
  std::string stop_rule = "none";
  std::string psi_method = "psi";
  std::optional<double> fcr_alpha;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_k) {
  auto* k = cmd->add_option("--k", o.k, "number of arms");
  if (needs_k) k->required();
  cmd->add_option("--m", o.m, "number of top arms to retain")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "screening level")->capture_default_str();
  cmd->add_option("--constructor", o.constructor,
                  "bound family: subgaussian | heavytail | quantile | missing | lucb")
      ->capture_default_str();
  cmd->add_option("--sigma2", o.sigma2, "variance proxy (subgaussian, missing)")
      ->capture_default_str();
  cmd->add_option("--lambda", o.lambda,
                  "fixed weight; subgaussian/heavytail default to the shrinking schedule");
  cmd->add_option("--p", o.p, "moment order in (1,2] (heavytail)")->capture_default_str();
  cmd->add_option("--v", o.v, "central moment bound (heavytail)")->capture_default_str();
  cmd->add_option("--q", o.q, "target quantile (quantile)")->capture_default_str();
  cmd->add_option("--output", o.output, "output file (default: stdout or $SCS_OUTPUT_DIR)");
  cmd->add_option("--format", o.format, "json | csv")->capture_default_str();
}

scs::BoundConstructor make_constructor(const CommonOptions& o, std::size_t k) {
  const double level = scs::effective_level(k, o.m, o.alpha);
  auto schedule = [&] {
    return o.lambda ? scs::LambdaSchedule::constant(*o.lambda)
                    : scs::LambdaSchedule::shrinking(level);
  };
  if (o.constructor == "subgaussian") {
    return scs::SubGaussianConfig{.sigma2 = o.sigma2, .schedule = schedule()};
  }
  if (o.constructor == "heavytail") {
    scs::HeavyTailConfig cfg;
    cfg.p = o.p;
    cfg.v = o.v;
    cfg.schedule = schedule();
    return cfg;
  }
  if (o.constructor == "quantile") return scs::QuantileConfig{.q = o.q};
  if (o.constructor == "missing") {
    return scs::MissingDataConfig{.sigma2 = o.sigma2, .lambda = o.lambda.value_or(0.15)};
  }
  if (o.constructor == "lucb") return scs::ModifiedLucbConfig{.k = k};
  throw scs::ValidationError("unknown constructor '" + o.constructor + "'");
}

scs::ScreeningConfig make_screening(const CommonOptions& o, std::size_t k) {
  scs::ScreeningConfig cfg;
  cfg.k = k;
  cfg.m = o.m;
  cfg.alpha = o.alpha;
  if (k >= 2 && o.m >= 1 && o.m < k) cfg.constructor = make_constructor(o, k);
  cfg.validate();
  return cfg;
}

scs::io::ordered_json metadata(const std::string& command, const CommonOptions& o,
                               const scs::ScreeningConfig& cfg) {
  scs::io::ordered_json meta;
  meta["tool"] = "scs";
  meta["version"] = scs::io::kFormatVersion;
  meta["command"] = command;
  meta["k"] = cfg.k;
  meta["m"] = cfg.m;
  meta["alpha"] = cfg.alpha;
  meta["constructor"] = cfg.constructor.name();
  meta["sigma2"] = o.sigma2;
  if (o.lambda) {
    meta["lambda"] = *o.lambda;
  } else {
    meta["lambda"] = "schedule";
  }
  meta["p"] = o.p;
  meta["v"] = o.v;
  meta["q"] = o.q;
  return meta;
}

void emit(const std::string& command, const CommonOptions& o, const std::string& content) {
  std::string path = o.output;
  if (path.empty()) {
    if (const char* dir = std::getenv("SCS_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      path = std::string(dir) + "/" + command + "." + o.format;
    }
  }
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  scs::io::write_file(path, content);
}

int run_simulate(const CommonOptions& o, const SimulateOptions& s) {
  const auto format = scs::io::parse_format(o.format);
  scs::ExperimentConfig cfg;
  cfg.model.kind = scs::parse_arm_kind(s.model);
  if (s.theta.empty()) {
    cfg.model.theta = scs::ArmModel::bernoulli_linear(o.k).theta;
  } else {
    cfg.model.theta = s.theta;
  }
  cfg.model.sigma = s.model_sigma;
  cfg.model.q = o.q;
  cfg.screening = make_screening(o, cfg.model.theta.size());
  cfg.reps = s.reps;
  cfg.checkpoints = s.checkpoints;
  cfg.psi_method = scs::parse_psi_method(s.psi_method);
  cfg.fcr_alpha = s.fcr_alpha;
  cfg.seed = s.seed;
  cfg.threads = s.threads;
  cfg.keep_replications = false;
  if (s.stop_rule == "none") {
    cfg.stable_window.reset();
  } else if (s.stop_rule.rfind("stable:", 0) == 0) {
    cfg.stable_window = std::stoull(s.stop_rule.substr(7));
  } else {
    throw scs::ValidationError("simulate supports --stop-rule none | stable:W");
  }

  const auto report = scs::run_experiment(cfg);
  auto meta = metadata("simulate", o, cfg.screening);
  meta["seed"] = s.seed;
  meta["model"] = s.model;
  if (format == scs::io::Format::json) {
    emit("simulate", o, scs::io::experiment_to_json(report, meta).dump(2) + "\n");
  } else {
    std::ostringstream out;
    scs::io::write_experiment_csv(out, report);
    emit("simulate", o, out.str());
  }
  return kExitOk;
}

int run_screen(const CommonOptions& o, const StreamOptions& s) {
  const auto format = scs::io::parse_format(o.format);
  const auto stream = scs::io::ingest_csv(s.input);
  if (o.k != 0 && o.k != stream.k) {
    throw scs::ValidationError("--k " + std::to_string(o.k) + " does not match the " +
                               std::to_string(stream.k) + " arms in the input");
  }
  const auto cfg = make_screening(o, stream.k);
  const auto trace = scs::run_scs(stream, cfg, scs::parse_stop_rule(s.stop_rule, cfg.m));
  auto meta = metadata("screen", o, cfg);
  meta["input"] = s.input;
  if (format == scs::io::Format::json) {
    emit("screen", o, scs::io::trace_to_json(trace, stream.labels, meta).dump(2) + "\n");
  } else {
    std::ostringstream out;
    scs::io::write_trace_csv(out, trace, stream.labels);
    emit("screen", o, out.str());
  }
  return kExitOk;
}

int run_psi(const CommonOptions& o, const StreamOptions& s) {
  const auto format = scs::io::parse_format(o.format);
  const auto stream = scs::io::ingest_csv(s.input);
  if (o.k != 0 && o.k != stream.k) {
    throw scs::ValidationError("--k does not match the number of arms in the input");
  }
  const auto cfg = make_screening(o, stream.k);
  const auto method = scs::parse_psi_method(s.psi_method);
  const double fcr_alpha = s.fcr_alpha.value_or(cfg.alpha);
  const auto trace = scs::run_scs(stream, cfg, scs::parse_stop_rule(s.stop_rule, cfg.m),
                                  {.record_bounds = false, .snapshot_times = {}});
  const auto& final_state = trace.final_state();
  const auto report = scs::build_psi_report(final_state, method, cfg, fcr_alpha);
  auto meta = metadata("psi", o, cfg);
  meta["input"] = s.input;
  meta["stop_rule"] = trace.stop_rule;
  const std::size_t tau = final_state.time;
  meta["tau_stamp"] = tau == 0 ? 0 : stream.times[tau - 1];
  if (format == scs::io::Format::json) {
    emit("psi", o, scs::io::psi_report_to_json(report, stream.labels, meta).dump(2) + "\n");
  } else {
    std::ostringstream out;
    scs::io::write_psi_csv(out, report, stream.labels);
    emit("psi", o, out.str());
  }
  return kExitOk;
}

int run_compare(std::size_t k, std::size_t m, std::size_t selected, double alpha,
                const std::string& format) {
  const auto cmp = scs::compare_levels(k, m, selected, alpha);
  if (scs::io::parse_format(format) == scs::io::Format::json) {
    std::cout << scs::io::levels_to_json(cmp, k, m, selected, alpha).dump(2) << "\n";
  } else {
    std::cout << "alpha_km,alpha_B,alpha_psi,case,ordering\n"
              << scs::io::format_number(cmp.alpha_km) << ','
              << scs::io::format_number(cmp.bonferroni) << ',' << scs::io::format_number(cmp.psi)
              << ',' << scs::to_string(cmp.level_case) << ',' << cmp.ordering << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime-valid top-m screening and post-screening inference"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  CommonOptions sim_common;
  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo screening study");
  sim_common.k = 50;
  sim_common.m = 3;
  add_common(simulate, sim_common, false);
  simulate->add_option("--model", sim.model, "bernoulli | gaussian | custom-quantile")
      ->capture_default_str();
  simulate->add_option("--theta", sim.theta, "per-arm parameters (default 1 - i/k)")
      ->delimiter(',');
  simulate->add_option("--model-sigma", sim.model_sigma, "gaussian noise sd")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "master seed")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "replications")->capture_default_str();
  simulate->add_option("--checkpoints", sim.checkpoints, "report times")->delimiter(',');
  simulate->add_option("--stop-rule", sim.stop_rule, "data-dependent stop: none | stable:W")
      ->capture_default_str();
  simulate->add_option("--psi-method", sim.psi_method, "psi | bonferroni")->capture_default_str();
  simulate->add_option("--fcr-alpha", sim.fcr_alpha, "FCR target (default: --alpha)");
  simulate->add_option("--threads", sim.threads, "worker threads (0: all cores)");

  CommonOptions screen_common;
  StreamOptions screen_opts;
  auto* screen = app.add_subcommand("screen", "screen a t,arm,value CSV stream");
  add_common(screen, screen_common, false);
  screen->add_option("--input", screen_opts.input, "CSV stream")->required();
  screen->add_option("--stop-rule", screen_opts.stop_rule, "none | fixed:T | size-m | stable:W")
      ->capture_default_str();

  CommonOptions psi_common;
  StreamOptions psi_opts;
  auto* psi = app.add_subcommand("psi", "adjusted intervals for the arms kept at the stop time");
  add_common(psi, psi_common, false);
  psi->add_option("--input", psi_opts.input, "CSV stream")->required();
  psi->add_option("--stop-rule", psi_opts.stop_rule, "none | fixed:T | size-m | stable:W")
      ->capture_default_str();
  psi->add_option("--psi-method", psi_opts.psi_method, "psi | bonferroni")->capture_default_str();
  psi->add_option("--fcr-alpha", psi_opts.fcr_alpha, "FCR target (default: --alpha)");

  std::size_t cmp_k = 0, cmp_m = 1, cmp_selected = 0;
  double cmp_alpha = 0.1;
  std::string cmp_format = "json";
  auto* compare = app.add_subcommand("compare-levels", "ordering of alpha_km, alpha_B, alpha_psi");
  compare->add_option("--k", cmp_k, "number of arms")->required();
  compare->add_option("--m", cmp_m, "number of top arms")->required();
  compare->add_option("--selected", cmp_selected, "|S_tau| (default: m)");
  compare->add_option("--alpha", cmp_alpha, "level")->capture_default_str();
  compare->add_option("--format", cmp_format, "json | csv")->capture_default_str();

  // --config may follow the subcommand name; CLI11 only reads it at the top level.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      std::rotate(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(i),
                  args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      std::rotate(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(i),
                  args.begin() + static_cast<std::ptrdiff_t>(i + 1));
    }
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return run_simulate(sim_common, sim);
    if (*screen) return run_screen(screen_common, screen_opts);
    if (*psi) return run_psi(psi_common, psi_opts);
    if (*compare) {
      return run_compare(cmp_k, cmp_m, cmp_selected == 0 ? cmp_m : cmp_selected, cmp_alpha,
                         cmp_format);
    }
  } catch (const scs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const scs::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
