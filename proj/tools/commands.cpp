#include "commands.hpp"

#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "ualg/boxmap.hpp"
#include "ualg/congruence.hpp"
#include "ualg/interp.hpp"
#include "ualg/sorted.hpp"

namespace ualg::cli {

namespace {

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string name_of(const Congruence& c) {
  if (c.num_blocks() == 1) return c.str() + " (all)";
  if (static_cast<std::size_t>(c.num_blocks()) == c.algebra_size()) return c.str() + " (equality)";
  return c.str();
}

std::string short_name(const Congruence& c) {
  if (c.num_blocks() == 1) return "all";
  if (static_cast<std::size_t>(c.num_blocks()) == c.algebra_size()) return "equality";
  return c.str();
}

FiniteAlgebra load_algebra(const RunConfig& cfg) {
  if (cfg.algebra.empty()) throw Error(Errc::ParseError, "no algebra file given");
  return FiniteAlgebra::load(cfg.algebra);
}

Congruence load_congruence(const RunConfig& cfg, const FiniteAlgebra& alg) {
  if (cfg.congruence.empty()) throw Error(Errc::ParseError, "no congruence file given");
  auto tau = Congruence::load(cfg.congruence);
  if (tau.algebra_size() != alg.size())
    throw Error(Errc::SizeMismatch, "congruence on " + std::to_string(tau.algebra_size()) + " elements, algebra has " +
                                        std::to_string(alg.size()));
  if (!is_congruence(alg, tau.blocks)) throw Error(Errc::NotACongruence, tau.str() + " is not a congruence");
  return tau;
}

std::string verdict(const TCResult& r) { return r.pass ? "pass" : "FAIL"; }

int analyze(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  auto alg = load_algebra(cfg);
  auto tau = load_congruence(cfg, alg);
  const int bound = cfg.arity_bound.value_or(default_arity_bound(tau));
  auto [strong, abel] = both_term_conditions(alg, tau, bound, cfg.limits);
  out << "algebra: " << alg.size() << " elements, " << alg.ops().size() << " operations\n";
  out << "congruence: " << name_of(tau) << " is a congruence\n";
  out << "strongly abelian: " << verdict(strong) << " (bound " << bound << ")\n";
  if (strong.failure) out << "  witness: " << strong.failure->str() << "\n";
  out << "abelian: " << verdict(abel) << " (bound " << bound << ")\n";
  if (abel.failure) out << "  witness: " << abel.failure->str() << "\n";
  kv = {{"CONGRUENCE", "valid"},
        {"ARITY_BOUND", std::to_string(bound)},
        {"STRONGLY_ABELIAN", verdict(strong)},
        {"STRONG_TERMS_CHECKED", std::to_string(strong.terms_checked)},
        {"ABELIAN", verdict(abel)},
        {"ABELIAN_TERMS_CHECKED", std::to_string(abel.terms_checked)}};
  return kOk;
}

int radical(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  auto alg = load_algebra(cfg);
  auto rep = strongly_abelian_congruences(alg, cfg.arity_bound, cfg.limits);
  out << "strongly abelian congruences";
  if (rep.arity_bound > 0) out << " (bound " << rep.arity_bound << ")";
  out << ":\n";
  std::size_t maximal = 0;
  std::string candidate = "none";
  for (std::size_t i = 0; i < rep.congruences.size(); ++i) {
    out << "  " << name_of(rep.congruences[i]) << (rep.maximal[i] ? "  maximal" : "") << "\n";
    if (rep.maximal[i]) {
      ++maximal;
      if (rep.unique_maximum) candidate = short_name(rep.congruences[i]);
    }
  }
  out << "radical candidate: " << candidate << "\n";
  kv = {{"STRONGLY_ABELIAN_COUNT", std::to_string(rep.congruences.size())},
        {"MAXIMAL_COUNT", std::to_string(maximal)},
        {"UNIQUE_MAXIMUM", yes_no(rep.unique_maximum)},
        {"CANDIDATE", candidate}};
  return kOk;
}

int boxmaps(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  auto alg = load_algebra(cfg);
  auto tau = load_congruence(cfg, alg);
  auto an = analyze_boxmaps(alg, tau, cfg.arity_bound, cfg.ceiling, cfg.limits);
  out << "boxmaps up to arity " << an.arity_bound << ": " << an.boxmaps.size() << "\n";
  std::string ks;
  for (const auto& d : an.decomps) {
    out << "class " << d.cls << " (size " << d.size << "): K=" << d.k;
    if (d.k > 1) out << " witness " << d.witness.str();
    out << "\n";
    if (d.k > 1) {
      out << "  factors";
      for (auto f : d.coords.factor_sizes) out << " " << f;
      out << "\n";
    }
    ks += (ks.empty() ? "" : ",") + std::to_string(d.k);
  }
  out << "violation: " << (an.violation ? an.violation->str() : "none") << "\n";
  kv = {{"ARITY_BOUND", std::to_string(an.arity_bound)},
        {"BOXMAPS", std::to_string(an.boxmaps.size())},
        {"K", ks},
        {"VIOLATION", an.violation ? an.violation->str() : "none"}};
  return kOk;
}

int flat(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  auto alg = load_algebra(cfg);
  auto tau = load_congruence(cfg, alg);
  auto salg = build_frzflt(analyze_boxmaps(alg, tau, cfg.arity_bound, cfg.ceiling, cfg.limits), tau);
  const std::string dump = salg.to_text();
  if (!cfg.out.empty()) {
    std::ofstream f(cfg.out);
    if (!(f << dump)) throw Error(Errc::ParseError, "cannot write " + cfg.out);
  }
  std::string sizes;
  out << "sorts: " << salg.num_sorts() << "\n";
  for (std::size_t s = 0; s < salg.num_sorts(); ++s) {
    out << "  " << salg.sort_names[s] << " size " << salg.carriers[s] << "\n";
    sizes += (sizes.empty() ? "" : ",") + std::to_string(salg.carriers[s]);
  }
  out << "operations: " << salg.ops.size() << "\n";
  for (const auto& op : salg.ops) out << "  " << op.name << " from " << op.origin << "\n";
  if (cfg.out.empty()) out << "\n" << dump;
  kv = {{"SORTS", std::to_string(salg.num_sorts())},
        {"SORT_SIZES", sizes},
        {"OPS", std::to_string(salg.ops.size())},
        {"OUT", cfg.out.empty() ? "-" : cfg.out}};
  return kOk;
}

std::string sorts_text(const SortedAlgebra& salg, const SortedTermOp& t) {
  std::string s;
  for (int i : t.in_sorts) s += salg.sort_names[i] + " ";
  return s + "-> " + salg.sort_names[t.out_sort];
}

int check_unary(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  if (cfg.flat.empty()) throw Error(Errc::ParseError, "no sorted algebra file given");
  auto salg = SortedAlgebra::load(cfg.flat);
  auto T = sorted_term_operations(salg, std::nullopt, cfg.limits);
  auto v = is_essentially_unary_algebra(T);
  out << "term set: " << T.terms.size() << " members, " << T.vars_per_sort << " variables per sort\n";
  out << "verdict: " << (v.unary ? "unary" : "not unary") << "\n";
  if (v.witness) out << "witness: " << v.witness->witness.str() << " : " << sorts_text(salg, *v.witness) << "\n";
  kv = {{"T_SIZE", std::to_string(T.terms.size())},
        {"VARS_PER_SORT", std::to_string(T.vars_per_sort)},
        {"UNARY", yes_no(v.unary)},
        {"WITNESS", v.witness ? v.witness->witness.str() : "none"}};
  return kOk;
}

int interpret_cmd(const RunConfig& cfg, std::ostream& out, Summary& kv) {
  if (cfg.graph.empty()) throw Error(Errc::ParseError, "no graph file given");
  auto g = BipartiteGraph::load(cfg.graph);
  auto alg = load_algebra(cfg);
  auto tau = load_congruence(cfg, alg);
  auto salg = build_frzflt(analyze_boxmaps(alg, tau, cfg.arity_bound, cfg.ceiling, cfg.limits), tau);
  auto td = analyze_terms(salg, cfg.limits);
  if (is_essentially_unary_algebra(td.T).unary)
    throw Error(Errc::NotApplicable, "the flat algebra is essentially unary");
  auto rep = interpret(td, g, cfg.limits);
  out << "input graph:\n" << g.to_text() << rep.text();
  out << "verdict: " << (rep.isomorphic ? "isomorphic" : "not isomorphic") << "\n";
  kv = {{"T_SIZE", std::to_string(rep.T_size)},
        {"Q", rep.q},
        {"F_SIZE", std::to_string(rep.F_size)},
        {"FP_SIZE", std::to_string(rep.Fp_size)},
        {"C_SIZE", std::to_string(rep.C_size)},
        {"D_SIZE", std::to_string(rep.D_size)},
        {"EMBEDS", yes_no(rep.embeds)},
        {"Z_ISOLATED", yes_no(rep.z_isolated)},
        {"ZERO_PROPTO_Z", yes_no(rep.zero_propto_z)},
        {"CONSTANTS_DISTINCT", yes_no(rep.constants_distinct)},
        {"CONSTANTS_NOT_PROPTO", yes_no(rep.constants_not_propto)},
        {"PROPTO_STALKWISE", yes_no(rep.propto_stalkwise)},
        {"PRESERVATION_FAILED", std::to_string(rep.preservation_failed)},
        {"NRINV", std::to_string(rep.nrinv)},
        {"GEN", std::to_string(rep.gen)},
        {"EDGEGEN", std::to_string(rep.edgegen)},
        {"VERTEXGEN", std::to_string(rep.vertexgen)},
        {"RECOVERED_REDS", std::to_string(rep.recovered.reds)},
        {"RECOVERED_BLUES", std::to_string(rep.recovered.blues)},
        {"RECOVERED_EDGES", std::to_string(rep.recovered.edges.size())},
        {"ISOMORPHIC", yes_no(rep.isomorphic)}};
  return rep.isomorphic ? kOk : kMismatch;
}

}  // namespace

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::ResourceLimit: return kResourceLimit;
    case Errc::NonTermination:
    case Errc::EmbeddingFailure:
    case Errc::IsolationFailure:
    case Errc::NotDistinct: return kMismatch;
    default: return kInputError;
  }
}

CommandResult run(const RunConfig& cfg) {
  CommandResult res;
  std::ostringstream out;
  Summary kv;
  std::string status = "ok";
  try {
    if (cfg.command == "analyze") {
      res.exit_code = analyze(cfg, out, kv);
    } else if (cfg.command == "radical") {
      res.exit_code = radical(cfg, out, kv);
    } else if (cfg.command == "boxmaps") {
      res.exit_code = boxmaps(cfg, out, kv);
    } else if (cfg.command == "flat") {
      res.exit_code = flat(cfg, out, kv);
    } else if (cfg.command == "check-unary") {
      res.exit_code = check_unary(cfg, out, kv);
    } else if (cfg.command == "interpret") {
      res.exit_code = interpret_cmd(cfg, out, kv);
    } else {
      throw Error(Errc::ParseError, "unknown command '" + cfg.command + "'");
    }
    if (res.exit_code == kMismatch) status = "mismatch";
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    kv = {{"ERROR", errc_name(e.code())}};
    res.exit_code = exit_code_for(e.code());
    status = "error";
  } catch (const std::bad_alloc&) {
    out << "error: out of memory\n";
    kv = {{"ERROR", "ResourceLimit"}};
    res.exit_code = kResourceLimit;
    status = "error";
  }
  out << "\n";
  out << "COMMAND=" << cfg.command << "\n";
  out << "STATUS=" << status << "\n";
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  out << "EXIT=" << res.exit_code << "\n";
  res.report = out.str();
  if (!cfg.report.empty()) {
    std::ofstream f(cfg.report);
    if (!(f << res.report)) {
      res.report += "error: cannot write " + cfg.report + "\n";
      res.exit_code = kInputError;
    }
  }
  return res;
}

}  // namespace ualg::cli
