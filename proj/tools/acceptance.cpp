// Runs acceptance criteria 1-8 and prints one PASS/FAIL line per criterion.
#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "corpus.hpp"
#include "ualg/boxmap.hpp"
#include "ualg/congruence.hpp"
#include "ualg/interp.hpp"
#include "ualg/sorted.hpp"

using namespace ualg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string data_dir = UALG_DATA_DIR;

std::string data(const std::string& name) { return data_dir + "/" + name; }

// Rectangularity of every term operation up to the bound, on every class tuple.
bool rectangular_up_to(const FiniteAlgebra& alg, const Congruence& tau, int bound) {
  auto cls = tau.classes();
  for (int n = 1; n <= bound; ++n) {
    bool ok = true;
    for_each_term_operation(alg, n, [&](const TermOperation& t) {
      std::vector<std::size_t> radix(n, cls.size());
      std::vector<Elem> ct(n);
      for (std::size_t g = 0; g < ipow(cls.size(), n) && ok; ++g) {
        tuple_digits(g, radix, ct);
        ok = rectangularity_certificate(alg, tau, t, {ct.begin(), ct.end()}).ok;
      }
      return ok;
    });
    if (!ok) return false;
  }
  return true;
}

FiniteAlgebra binary_algebra(std::size_t n, std::vector<Elem> table) {
  return FiniteAlgebra(n, {Operation{"m", 2, std::move(table)}});
}

Outcome criterion1() {
  std::size_t disagreements = 0, checked = 0;
  auto compare = [&](const FiniteAlgebra& alg, int bound) {
    auto tau = Congruence::all(alg.size());
    if (rectangular_up_to(alg, tau, bound) != strong_term_condition(alg, tau, bound).pass) ++disagreements;
    ++checked;
  };
  for (unsigned code = 0; code < 16; ++code) {
    std::vector<Elem> t(4);
    for (int i = 0; i < 4; ++i) t[i] = static_cast<Elem>(code >> i & 1u);
    compare(binary_algebra(2, t), 3);
  }
  std::mt19937 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::vector<Elem> t(9);
    for (auto& x : t) x = static_cast<Elem>(rng() % 3);
    compare(binary_algebra(3, t), 2);
  }
  std::ostringstream d;
  d << checked << " algebras (16 on 2 elements at bound 3, 1000 on 3 elements at bound 2), " << disagreements
    << " disagreements";
  return {disagreements == 0, d.str()};
}

Outcome criterion2() {
  auto d4 = FiniteAlgebra::load(data("d4.alg"));
  auto tau = Congruence::all(4);
  ClassIndex ci(tau);
  std::vector<std::string> fails;
  auto boxmaps = enumerate_boxmaps(d4, tau, std::nullopt, 2);
  const Boxmap* d = nullptr;
  for (const auto& b : boxmaps)
    if (b.term.str() == "d(v0,v1)" && b.arity() == 2) d = &b;
  if (!d) {
    fails.push_back("d not enumerated");
  } else {
    if (!is_decomposition_op(*d).ok) fails.push_back("d is not a decomposition operation");
    auto co = coordinatize(ci, *d);
    if (co.factor_sizes != std::vector<std::size_t>{2, 2}) fails.push_back("factors are not 2x2");
    // d(x, y) has the first coordinate of x and the second of y.
    for (Elem x = 0; x < 4; ++x)
      for (Elem y = 0; y < 4; ++y) {
        std::vector<Elem> xy{x, y};
        Elem r = d->apply(ci, xy);
        if (co.coords[r][0] != co.coords[x][0] || co.coords[r][1] != co.coords[y][1]) {
          fails.push_back("diagonal selection fails at " + std::to_string(x) + "," + std::to_string(y));
          break;
        }
      }
  }
  auto a4 = analyze_boxmaps(d4, tau);
  if (a4.decomps.at(0).k != 2) fails.push_back("D4 K=" + std::to_string(a4.decomps[0].k));
  auto w8 = FiniteAlgebra::load(data("w8.alg"));
  auto a8 = analyze_boxmaps(w8, Congruence::all(8));
  if (a8.decomps.at(0).k != 1) fails.push_back("W8 K=" + std::to_string(a8.decomps[0].k));
  std::string detail = "D4 K=" + std::to_string(a4.decomps[0].k) + ", W8 K=" + std::to_string(a8.decomps[0].k);
  for (const auto& f : fails) detail += "; " + f;
  return {fails.empty(), detail};
}

struct CorpusEntry {
  std::string name;
  FiniteAlgebra alg;
  Congruence tau;
  BoxmapAnalysis analysis;
};

std::vector<CorpusEntry> build_corpus() {
  std::vector<CorpusEntry> out;
  auto add = [&](std::string name, FiniteAlgebra alg) {
    auto tau = Congruence::all(alg.size());
    auto an = analyze_boxmaps(alg, tau);
    out.push_back({std::move(name), std::move(alg), tau, std::move(an)});
  };
  add("D4", FiniteAlgebra::load(data("d4.alg")));
  add("W8", FiniteAlgebra::load(data("w8.alg")));
  std::mt19937 rng(99);
  for (int i = 0; i < 100; ++i) add("random " + std::to_string(i), corpus::random_selector_algebra(rng).alg);
  return out;
}

Outcome criterion3(const std::vector<CorpusEntry>& corpus) {
  std::size_t boxmaps = 0, violations = 0;
  std::string first;
  for (const auto& e : corpus) {
    ClassIndex ci(e.tau);
    for (const auto& b : e.analysis.boxmaps) {
      ++boxmaps;
      const auto ess = essential_variables(b.table, b.radix).size();
      const double bound = std::log2(static_cast<double>(ci.size(b.output_class)));
      if (static_cast<double>(ess) > bound + 1e-9) {
        if (violations++ == 0) first = e.name + ": " + b.str();
      }
    }
  }
  std::ostringstream d;
  d << corpus.size() << " algebras, " << boxmaps << " boxmaps, " << violations << " violations";
  if (!first.empty()) d << " (first " << first << ")";
  return {violations == 0, d.str()};
}

Outcome criterion4(const std::vector<CorpusEntry>& corpus) {
  std::size_t mismatches = 0, unary = 0;
  std::string notes;
  for (const auto& e : corpus) {
    auto flat = build_frzflt(e.analysis, e.tau);
    const bool u = is_essentially_unary_algebra(sorted_term_operations(flat)).unary;
    const bool none = !e.analysis.violation.has_value();
    unary += u;
    if (u != none) {
      ++mismatches;
      notes += "; " + e.name;
    }
    if (e.name == "D4" || e.name == "W8") notes += "; " + e.name + (u ? " unary" : " not unary");
  }
  std::ostringstream d;
  d << corpus.size() << " algebras, " << unary << " unary, " << mismatches << " mismatches" << notes;
  return {mismatches == 0, d.str()};
}

SortedAlgebra flat_of(const std::string& alg_file, std::size_t n) {
  auto alg = FiniteAlgebra::load(data(alg_file));
  auto tau = Congruence::all(n);
  return build_frzflt(analyze_boxmaps(alg, tau), tau);
}

Outcome criterion5(const TermData& w8) {
  std::size_t ri = 0, exceptions = 0;
  auto td4 = analyze_terms(flat_of("d4.alg", 4));
  for (const TermData* td : {&w8, static_cast<const TermData*>(&td4)})
    for (std::size_t c = 0; c < td->T.terms.size(); ++c)
      if (td->right_invertible[c]) {
        ++ri;
        if (td->T.terms[c].arity() > 1) ++exceptions;
      }
  std::ostringstream d;
  d << "|T| " << w8.T.terms.size() << " (W8-flat) + " << td4.T.terms.size() << " (D4-flat), " << ri
    << " right-invertible, " << exceptions << " not essentially unary";
  return {exceptions == 0, d.str()};
}

Outcome criterion6(const InterpretationReport& r) {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream d;
  d << "embeds " << yn(r.embeds) << ", z isolated " << yn(r.z_isolated) << ", 0 propto z " << yn(r.zero_propto_z)
    << ", constants distinct " << yn(r.constants_distinct) << ", pairwise not propto " << yn(r.constants_not_propto);
  for (auto [i, j] : r.propto_constant_pairs) d << " (" << i << " propto " << j << ")";
  return {r.embeds && r.z_isolated && r.zero_propto_z && r.constants_distinct && r.constants_not_propto, d.str()};
}

Outcome criterion7(const std::vector<BipartiteGraph>& graphs, const std::vector<InterpretationReport>& reps) {
  std::size_t ok = 0;
  std::string first;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (reps[i].isomorphic) {
      ++ok;
    } else if (first.empty()) {
      first = std::to_string(graphs[i].reds) + "R/" + std::to_string(graphs[i].blues) + "B with " +
              std::to_string(graphs[i].edges.size()) + " edges: " + reps[i].problem;
    }
  }
  std::ostringstream d;
  d << ok << "/" << graphs.size() << " graphs recovered";
  if (!first.empty()) d << " (first failure " << first << ")";
  return {ok == graphs.size(), d.str()};
}

Outcome criterion8(const std::vector<InterpretationReport>& reps) {
  std::size_t stalk = 0, checked = 0, failed = 0;
  for (const auto& r : reps) {
    stalk += r.propto_stalkwise;
    checked += r.preservation_checked;
    failed += r.preservation_failed;
  }
  std::ostringstream d;
  d << stalk << "/" << reps.size() << " graphs with direct = stalkwise, preservation " << checked - failed << "/"
    << checked;
  return {stalk == reps.size() && failed == 0 && checked > 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::set<int> only;
  app.add_option("--data", data_dir, "Directory with the example algebras and graphs");
  app.add_option("--only", only, "Run just these criteria")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
  auto report = [&](int c, const std::string& name, auto&& run) {
    if (!want(c)) return;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << c << " " << name << ": " << (o.pass ? "PASS" : "FAIL") << " [" << o.detail << "]" << std::endl;
  };

  report(1, "term-condition oracle equivalence", criterion1);
  report(2, "decomposition law and coordinatization", criterion2);
  if (want(3) || want(4)) {
    auto corpus = build_corpus();
    report(3, "essential-arity bound", [&] { return criterion3(corpus); });
    report(4, "unarity equivalence", [&] { return criterion4(corpus); });
  }
  if (want(5) || want(6) || want(7) || want(8)) {
    auto td = analyze_terms(flat_of("w8.alg", 8));
    report(5, "right-invertible terms are unary", [&] { return criterion5(td); });
    if (want(6) || want(7) || want(8)) {
      auto graphs = small_bipartite_graphs(4);
      std::vector<InterpretationReport> reps;
      std::string error;
      try {
        reps = interpret_all(td, graphs);
      } catch (const std::exception& e) {
        error = e.what();
      }
      auto guarded = [&](auto f) {
        return [&, f] { return error.empty() ? f() : Outcome{false, "error: " + error}; };
      };
      report(6, "construction integrity", guarded([&] { return criterion6(reps.front()); }));
      report(7, "end-to-end interpretation", guarded([&] { return criterion7(graphs, reps); }));
      report(8, "propto stalkwise law and preservation", guarded([&] { return criterion8(reps); }));
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
