// Command-line front end: run scenarios, summarize logs, export plot data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pmpc/closed_loop.hpp"
#include "pmpc/plots.hpp"
#include "pmpc/run_log.hpp"
#include "pmpc/scenario.hpp"
#include "pmpc/summary.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBlowup = 3;
constexpr int kExitUnsafe = 4;

struct RunArgs {
  std::string scenario;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<double> dt;
  bool exact_measure = false;
  bool reconstruct_payload = false;
  bool no_safety = false;
  bool certify_kkt = false;
  bool quiet = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pmpc::Error("cannot write '" + path.string() + "'");
  out << text;
}

int run_command(const RunArgs& a) {
  pmpc::ScenarioSpec spec;
  try {
    spec = pmpc::load_scenario(a.scenario);
    if (a.seed) spec.seed = *a.seed;
    if (a.horizon) spec.ocp.horizon = *a.horizon;
    if (a.dt) spec.ocp.ts = *a.dt;
    if (a.exact_measure) spec.measure = pmpc::MeasureMode::kExact;
    if (a.reconstruct_payload) spec.measure = pmpc::MeasureMode::kReconstructPayload;
    if (a.no_safety) {
      spec.ocp.safety = false;
      spec.name += "_no_safety";
    }
    spec.validate();
  } catch (const pmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::cout << "scenario: " << spec.name << "\nhorizon: " << spec.ocp.horizon << "\nts_s: " << spec.ocp.ts
            << "\nsafety: " << (spec.ocp.safety ? "on" : "off") << "\nduration_s: " << spec.duration << "\n";
  pmpc::RunOptions opts;
  opts.certify_kkt = a.certify_kkt;
  long tick = 0;
  if (!a.quiet) {
    opts.on_tick = [&](const pmpc::LogRow& r) {
      if (++tick % 300 == 0) std::cout << "  t = " << r.t << " s\n" << std::flush;
    };
  }
  const pmpc::RunLog log = pmpc::run_closed_loop(spec, opts);

  fs::create_directories(a.out);
  const fs::path base = fs::path(a.out) / spec.name;
  pmpc::write_log_csv(log, base.string() + ".csv");
  pmpc::write_log_binary(log, base.string() + ".bin");
  const pmpc::RunSummary summary = pmpc::summarize(log);
  const std::string text = pmpc::summary_yaml(summary);
  write_text(base.string() + "_summary.yaml", text);
  write_text(base.string() + "_timing.yaml", pmpc::timing_yaml(pmpc::timing(log)));
  std::cout << text << pmpc::timing_yaml(pmpc::timing(log));

  if (log.meta.termination != "completed") {
    std::cerr << "run aborted: " << log.meta.message << "\n";
    return kExitBlowup;
  }
  if (!summary.safe()) return kExitUnsafe;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-critical NMPC for cooperative payload transport"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a scenario in closed loop");
  run->add_option("scenario", ra.scenario, "Scenario YAML file")->required();
  run->add_option("--out", ra.out, "Output directory");
  run->add_option("--seed", ra.seed, "Random seed override");
  run->add_option("--horizon", ra.horizon, "Horizon length override");
  run->add_option("--dt", ra.dt, "Control period override, s");
  auto* exact = run->add_flag("--exact-measure", ra.exact_measure, "Measure exact plant states");
  run->add_flag("--reconstruct-payload", ra.reconstruct_payload, "Rebuild the payload state from the robots")
      ->excludes(exact);
  run->add_flag("--no-safety", ra.no_safety, "Drop the HOCBF constraints (ablation)");
  run->add_flag("--certify-kkt", ra.certify_kkt, "Check every converged solve with the independent KKT checker");
  run->add_flag("--quiet", ra.quiet, "No progress output");

  std::string summarize_log, summarize_out;
  auto* summarize = app.add_subcommand("summarize", "Recompute the summary of a stored log");
  summarize->add_option("log", summarize_log, "Run log (text or binary)")->required();
  summarize->add_option("--out", summarize_out, "Write the summary here instead of stdout");

  std::string plot_log, plot_out;
  auto* plots = app.add_subcommand("export-plots", "Write plot-data files for a stored log");
  plots->add_option("log", plot_log, "Run log (text or binary)")->required();
  plots->add_option("--out", plot_out, "Output directory (defaults to the log's directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(ra);
    if (*summarize) {
      const pmpc::RunLog log = pmpc::read_log(summarize_log);
      const std::string text = pmpc::summary_yaml(pmpc::summarize(log));
      if (summarize_out.empty()) {
        std::cout << text << pmpc::timing_yaml(pmpc::timing(log));
      } else {
        write_text(summarize_out, text);
      }
      return kExitOk;
    }
    if (*plots) {
      const pmpc::RunLog log = pmpc::read_log(plot_log);
      const fs::path p(plot_log);
      const std::string dir = plot_out.empty() ? (p.has_parent_path() ? p.parent_path().string() : ".") : plot_out;
      const auto files = pmpc::export_plots(log, dir, p.stem().string());
      std::cout << files.velocities << "\n" << files.wrenches << "\n" << files.barriers << "\n" << files.traces << "\n";
      return kExitOk;
    }
  } catch (const pmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pmpc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
