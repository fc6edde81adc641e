#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using ualg::cli::RunConfig;
  RunConfig cfg;
  CLI::App app{"Strongly abelian algebras: term conditions, boxmaps, flat algebras, graph interpretation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t max_elements = cfg.limits.max_elements;
  std::size_t max_tables = cfg.limits.max_tables;
  app.add_option("--arity-bound", cfg.arity_bound, "Arity bound for term or boxmap enumeration")
      ->check(CLI::PositiveNumber);
  app.add_option("--ceiling", cfg.ceiling, "Largest decomposition arity searched per class")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-elements", max_elements, "Cap on generated elements")->check(CLI::PositiveNumber);
  app.add_option("--max-tables", max_tables, "Cap on enumerated tables and tuples")->check(CLI::PositiveNumber);
  app.add_option("--report", cfg.report, "Also write the report to this file");

  auto* an = app.add_subcommand("analyze", "Check a congruence and both term conditions");
  an->add_option("algebra", cfg.algebra)->required()->check(CLI::ExistingFile);
  an->add_option("congruence", cfg.congruence)->required()->check(CLI::ExistingFile);

  auto* ra = app.add_subcommand("radical", "List strongly abelian congruences");
  ra->add_option("algebra", cfg.algebra)->required()->check(CLI::ExistingFile);

  auto* bx = app.add_subcommand("boxmaps", "Decomposition arities and violating boxmaps");
  bx->add_option("algebra", cfg.algebra)->required()->check(CLI::ExistingFile);
  bx->add_option("congruence", cfg.congruence)->required()->check(CLI::ExistingFile);

  auto* fl = app.add_subcommand("flat", "Build the coordinate-sorted algebra");
  fl->add_option("algebra", cfg.algebra)->required()->check(CLI::ExistingFile);
  fl->add_option("congruence", cfg.congruence)->required()->check(CLI::ExistingFile);
  fl->add_option("out", cfg.out, "Where to write the sorted algebra dump");

  auto* cu = app.add_subcommand("check-unary", "Decide whether a sorted algebra is essentially unary");
  cu->add_option("flat", cfg.flat)->required()->check(CLI::ExistingFile);

  auto* in = app.add_subcommand("interpret", "Encode a bipartite graph and recover it");
  in->add_option("algebra", cfg.algebra)->required()->check(CLI::ExistingFile);
  in->add_option("congruence", cfg.congruence)->required()->check(CLI::ExistingFile);
  in->add_option("graph", cfg.graph)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : ualg::cli::kInputError;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  cfg.limits.max_elements = max_elements;
  cfg.limits.max_tables = max_tables;
  auto res = ualg::cli::run(cfg);
  std::cout << res.report;
  return res.exit_code;
}
