#include <iostream>

#include "CLI11.hpp"
#include "sandnet/cli.hpp"

int main(int argc, char** argv) {
  sandnet::RunConfig cfg;
  cfg.tol = sandnet::Tolerances::from_env();

  CLI::App app{"Equilibrium sandpiles on metric networks"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Expand all help");

  double h = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("input", cfg.input, ".net file")->required();
    sub->add_option("--h", h, "Uniform target step replacing every edge's node count")->check(CLI::PositiveNumber);
    sub->add_option("--out", cfg.out_dir, "Output directory");
    sub->add_flag("--strict", cfg.strict, "Plain format only; skip extension lines and comments with a warning");
    sub->add_option("--grid", cfg.grid, "Cell count policy for --h: nearest, odd, quarter");
  };

  auto* solve = app.add_subcommand("solve", "Solve and write d.csv, v.csv, report.txt and plots");
  add_common(solve);
  solve->add_option("--format", cfg.format, "csv, gnuplot or svg");

  auto* check = app.add_subcommand("check", "Run the invariant audit");
  add_common(check);
  check->add_option("--v-file", cfg.v_file, "Audit rolling values read from a v.csv instead of the computed ones");

  auto* converge = app.add_subcommand("converge", "Convergence study; writes errors.csv");
  add_common(converge);
  converge->add_option("--h-list", cfg.h_list, "Comma-separated steps")->delimiter(',');
  converge->add_option("--samples", cfg.samples, "Sampling intervals per edge");
  converge->add_flag("--reference", cfg.reference, "Compare against a 10x finer grid even when a closed form exists");

  auto* gen = app.add_subcommand("gen", "Write a generated network");
  gen->add_option("kind", cfg.input, "test1, test2, test3, sierpinski or star")->required();
  gen->add_option("--h", h, "Target step for the node counts (default 0.01)")->check(CLI::PositiveNumber);
  auto* gen_out = gen->add_option("--out", cfg.out_dir, "Output file or directory (stdout when omitted)");
  gen->add_option("--level", cfg.level, "Sierpinski level");
  gen->add_option("--arms", cfg.arms, "Star arm count");
  gen->add_option("--lengths", cfg.lengths, "Star arm lengths")->delimiter(',');
  gen->add_option("--f", cfg.source, "Source expression in t");
  gen->add_option("--eta", cfg.eta_inv, "Inverse slope bound expression in t");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sandnet::exit_code::parse;
  }

  for (auto* sub : {solve, check, converge, gen})
    if (sub->parsed()) cfg.command = sub->get_name();
  if (h > 0.0) cfg.h = h;
  if (gen->parsed() && gen_out->count() == 0) cfg.out_dir = "-";
  return sandnet::run(cfg, std::cout, std::cerr);
}
