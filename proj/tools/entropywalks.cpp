#include <CLI11.hpp>

#include <iostream>

#include "entropywalks/error.hpp"
#include "entropywalks/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Down-up walks, Glauber dynamics and independence certificates"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool emit_csv = false;

  for (const char* kind : {"certify", "contraction", "mlsi", "mix", "scale", "exchange", "walk"}) {
    auto* sub = app.add_subcommand(kind, std::string("run a ") + kind + " experiment");
    sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_flag("--emit-csv", emit_csv, "also write tidy plotting CSVs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto kind = app.get_subcommands().front()->get_name();
  try {
    auto cfg = ew::bench::load_config(config, seed);
    if (std::string(ew::bench::to_string(cfg.kind)) != kind)
      ew::fail(ew::ErrorCode::ConfigParseError, "config kind \"" + std::string(ew::bench::to_string(cfg.kind)) +
                                                    "\" does not match subcommand \"" + kind + "\"");
    if (!out.empty()) cfg.output_dir = out;
    const auto report = ew::bench::run(cfg);
    if (emit_csv) ew::bench::emit_plotdata(report, report.directory);
    std::cout << report.directory.string() << '\n' << report.summary.dump(2) << '\n';
    if (report.falsified) {
      std::cerr << "falsified; witness in " << (report.directory / "witness.json").string() << '\n';
      return 1;
    }
    return 0;
  } catch (const ew::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
