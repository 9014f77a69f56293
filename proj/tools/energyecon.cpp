#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "energyecon/report.hpp"
#include "energyecon/runner.hpp"

int main(int argc, char** argv) {
  using namespace energyecon;

  CLI::App app{"Energy-transfer equilibrium solver"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::vector<std::string> files;
  RunOptions opts;
  std::string out_dir = ".";
  ReportFormat format = ReportFormat::kBoth;
  DemandMode mode = DemandMode::kFixedConsumption;
  const std::map<std::string, ReportFormat> formats{
      {"both", ReportFormat::kBoth}, {"csv", ReportFormat::kCsv}, {"structured", ReportFormat::kStructured}};
  const std::map<std::string, DemandMode> modes{{"fixed-consumption", DemandMode::kFixedConsumption},
                                                {"re-solve", DemandMode::kReSolve}};

  auto add = [&](const char* name, const char* help, bool many) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("scenario", files, many ? "Scenario files, one per agent" : "Scenario file")->required();
    if (!many) opt->expected(1);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", format, "csv, structured or both")->transform(CLI::CheckedTransformer(formats));
    sub->add_option("--seed", opts.seed, "Seed for randomized checks")->capture_default_str();
    sub->add_option("--mode", mode, "Consumption during exchange")->transform(CLI::CheckedTransformer(modes));
    sub->add_option("--period", opts.period, "Period (1-based) for price tables and trade")->capture_default_str();
    return sub;
  };
  add("solve-autarky", "Solve one agent's autarky equilibrium", false);
  add("solve-exchange", "Trade between two or more agents", true);
  add("price-report", "Price table, embodied energy and proportionality fit", false);
  add("verify", "Run the invariant suite and oracle cross-checks", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_line(ErrorCode::kInvalidArgument, e.what()) << "\n";
    return kExitInvalid;
  }

  opts.out = out_dir;
  opts.format = format;
  opts.mode = mode;
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  const auto command = parse_command(app.get_subcommands().front()->get_name());
  return run_scenario(*command, paths, opts, std::cout, std::cerr);
}
