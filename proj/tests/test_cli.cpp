#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "fixtures.hpp"

using namespace ualg;
using cli::RunConfig;

namespace {

std::string temp_file(const std::string& name, const std::string& text) {
  auto path = std::filesystem::temp_directory_path() / ("ualg_cli_" + name);
  std::ofstream(path) << text;
  return path.string();
}

RunConfig config(std::string command, std::string alg = "", std::string cong = "") {
  RunConfig c;
  c.command = std::move(command);
  if (!alg.empty()) c.algebra = fixtures::data(alg);
  if (!cong.empty()) c.congruence = fixtures::data(cong);
  return c;
}

bool has(const std::string& report, const std::string& piece) { return report.find(piece) != std::string::npos; }

// Value of KEY in the trailing block.
std::string value(const std::string& report, const std::string& key) {
  std::istringstream in(report);
  std::string line, found;
  while (std::getline(in, line))
    if (line.rfind(key + "=", 0) == 0) found = line.substr(key.size() + 1);
  return found;
}

}  // namespace

TEST_CASE("analyze") {
  auto d4 = cli::run(config("analyze", "d4.alg", "d4_all.cong"));
  CHECK(d4.exit_code == 0);
  CHECK(has(d4.report, "strongly abelian: pass (bound 4)"));
  CHECK(value(d4.report, "STRONGLY_ABELIAN") == "pass");
  CHECK(value(d4.report, "EXIT") == "0");

  auto s2 = cli::run(config("analyze", "s2.alg", "s2_all.cong"));
  CHECK(s2.exit_code == 0);
  CHECK(has(s2.report, "abelian: FAIL"));
  CHECK(has(s2.report, "witness: term m"));

  for (auto [alg, cong] : {std::pair{"d4.alg", "d4_eq.cong"}, {"s2.alg", "s2_eq.cong"}}) {
    auto r = cli::run(config("analyze", alg, cong));
    CHECK(value(r.report, "STRONGLY_ABELIAN") == "pass");
    CHECK(value(r.report, "ABELIAN") == "pass");
  }
}

TEST_CASE("input errors") {
  auto wrong_size = cli::run(config("analyze", "d4.alg", "s2_all.cong"));
  CHECK(wrong_size.exit_code == cli::kInputError);
  CHECK(value(wrong_size.report, "ERROR") == "SizeMismatch");

  auto c = config("analyze", "d4.alg");
  c.congruence = temp_file("bad.cong", "cong 4\n0 0 0 1\n");
  auto bad = cli::run(c);
  CHECK(bad.exit_code == cli::kInputError);
  CHECK(value(bad.report, "ERROR") == "NotACongruence");

  auto missing = config("analyze", "d4.alg");
  missing.congruence = "/nonexistent.cong";
  CHECK(cli::run(missing).exit_code == cli::kInputError);

  CHECK(cli::run(config("frobnicate")).exit_code == cli::kInputError);
}

TEST_CASE("radical") {
  CHECK(value(cli::run(config("radical", "s2.alg")).report, "CANDIDATE") == "equality");
  CHECK(value(cli::run(config("radical", "one.alg")).report, "CANDIDATE") == "all");
  auto w8 = config("radical", "w8.alg");
  w8.arity_bound = 3;
  CHECK(value(cli::run(w8).report, "CANDIDATE") == "all");
}

TEST_CASE("boxmaps") {
  auto d4 = cli::run(config("boxmaps", "d4.alg", "d4_all.cong"));
  CHECK(value(d4.report, "K") == "2");
  CHECK(value(d4.report, "VIOLATION") == "none");
  auto w8 = cli::run(config("boxmaps", "w8.alg", "w8_all.cong"));
  CHECK(value(w8.report, "K") == "1");
  CHECK(value(w8.report, "VIOLATION").rfind("t(", 0) == 0);
  auto eq = cli::run(config("boxmaps", "d4.alg", "d4_eq.cong"));
  CHECK(value(eq.report, "K") == "1,1,1,1");
  CHECK(value(eq.report, "VIOLATION") == "none");
}

TEST_CASE("flat and check-unary") {
  auto c = config("flat", "d4.alg", "d4_all.cong");
  c.out = (std::filesystem::temp_directory_path() / "ualg_cli_d4.salg").string();
  auto d4 = cli::run(c);
  CHECK(d4.exit_code == 0);
  CHECK(value(d4.report, "SORT_SIZES") == "2,2");
  auto cu = config("check-unary");
  cu.flat = c.out;
  CHECK(value(cli::run(cu).report, "UNARY") == "yes");

  auto w8 = cli::run(config("flat", "w8.alg", "w8_all.cong"));
  CHECK(value(w8.report, "SORT_SIZES") == "8");
  cu.flat = fixtures::data("w8_flat.salg");
  auto w8u = cli::run(cu);
  CHECK(value(w8u.report, "UNARY") == "no");
  CHECK(value(w8u.report, "WITNESS") != "none");

  auto eq = cli::run(config("flat", "d4.alg", "d4_eq.cong"));
  CHECK(value(eq.report, "SORT_SIZES") == "1,1,1,1");

  cu.flat = temp_file("noops.salg", "sorts 2\nsort a 2\nsort b 3\n");
  CHECK(value(cli::run(cu).report, "UNARY") == "yes");
}

TEST_CASE("interpret") {
  auto c = config("interpret", "d4.alg", "d4_all.cong");
  c.graph = fixtures::data("edge.graph");
  auto d4 = cli::run(c);
  CHECK(d4.exit_code == cli::kInputError);
  CHECK(value(d4.report, "ERROR") == "NotApplicable");

  c = config("interpret", "w8.alg", "w8_all.cong");
  c.graph = fixtures::data("isolated.graph");
  auto iso = cli::run(c);
  CHECK(iso.exit_code == cli::kInputError);
  CHECK(value(iso.report, "ERROR") == "ParseError");

  c.graph = fixtures::data("edge.graph");
  c.report = (std::filesystem::temp_directory_path() / "ualg_cli_report.txt").string();
  auto a = cli::run(c);
  auto b = cli::run(c);
  CHECK(a.report == b.report);
  CHECK(a.exit_code == (value(a.report, "ISOMORPHIC") == "yes" ? cli::kOk : cli::kMismatch));
  std::ifstream in(c.report);
  std::stringstream written;
  written << in.rdbuf();
  CHECK(written.str() == b.report);
}

TEST_CASE("resource limits") {
  auto c = config("boxmaps", "w8.alg", "w8_all.cong");
  c.limits.max_tables = 10;
  auto r = cli::run(c);
  CHECK(r.exit_code == cli::kResourceLimit);
  CHECK(value(r.report, "ERROR") == "ResourceLimit");
}
