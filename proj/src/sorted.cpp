#include "ualg/sorted.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "ualg/union_find.hpp"

namespace ualg {

std::vector<std::size_t> SortedAlgebra::radix(const std::vector<int>& sorts) const {
  std::vector<std::size_t> r(sorts.size());
  for (std::size_t i = 0; i < sorts.size(); ++i) r[i] = carriers[sorts[i]];
  return r;
}

Elem SortedAlgebra::apply(int op, std::span<const Elem> args) const {
  const auto& o = ops[op];
  std::size_t idx = 0;
  for (std::size_t i = 0; i < args.size(); ++i) idx = idx * carriers[o.in_sorts[i]] + args[i];
  return o.table[idx];
}

int SortedAlgebra::op_index(std::string_view name) const {
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (ops[i].name == name) return static_cast<int>(i);
  return -1;
}

void SortedAlgebra::validate() const {
  if (sort_names.size() != carriers.size()) throw Error(Errc::ParseError, "sort names and carriers differ");
  for (auto c : carriers)
    if (c == 0) throw Error(Errc::ParseError, "empty carrier");
  std::set<std::string> names;
  for (const auto& op : ops) {
    if (!names.insert(op.name).second) throw Error(Errc::ParseError, "duplicate op " + op.name);
    std::size_t len = 1;
    for (int s : op.in_sorts) {
      if (s < 0 || static_cast<std::size_t>(s) >= carriers.size())
        throw Error(Errc::SortMismatch, "bad sort in " + op.name);
      len *= carriers[s];
    }
    if (op.out_sort < 0 || static_cast<std::size_t>(op.out_sort) >= carriers.size())
      throw Error(Errc::SortMismatch, "bad output sort in " + op.name);
    if (op.table.size() != len) throw Error(Errc::ParseError, "table of " + op.name + " has wrong length");
    for (Elem e : op.table)
      if (e >= carriers[op.out_sort]) throw Error(Errc::ParseError, "entry out of range in " + op.name);
  }
}

std::string SortedAlgebra::to_text() const {
  std::ostringstream out;
  out << "sorts " << carriers.size() << "\n";
  for (std::size_t s = 0; s < carriers.size(); ++s) out << "sort " << sort_names[s] << " " << carriers[s] << "\n";
  for (const auto& op : ops) {
    out << "sop " << op.name << " :";
    for (int s : op.in_sorts) out << " " << sort_names[s];
    out << " -> " << sort_names[op.out_sort] << "\n";
    for (std::size_t i = 0; i < op.table.size(); ++i) out << (i ? " " : "") << op.table[i];
    out << "\n";
  }
  return out.str();
}

SortedAlgebra SortedAlgebra::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= toks.size()) throw Error(Errc::ParseError, "unexpected end of sorted algebra");
    return toks[pos++];
  };
  auto number = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      long v = std::stol(t, &used);
      if (used != t.size() || v < 0) throw std::invalid_argument(t);
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "expected a number, got '" + t + "'");
    }
  };
  if (next() != "sorts") throw Error(Errc::ParseError, "expected 'sorts k'");
  SortedAlgebra a;
  const std::size_t k = number(next());
  std::map<std::string, int> ids;
  for (std::size_t s = 0; s < k; ++s) {
    if (next() != "sort") throw Error(Errc::ParseError, "expected 'sort NAME SIZE'");
    std::string name = next();
    if (!ids.emplace(name, static_cast<int>(s)).second) throw Error(Errc::ParseError, "duplicate sort " + name);
    a.sort_names.push_back(name);
    a.carriers.push_back(number(next()));
  }
  auto sort_id = [&](const std::string& n) {
    auto it = ids.find(n);
    if (it == ids.end()) throw Error(Errc::ParseError, "unknown sort " + n);
    return it->second;
  };
  while (pos < toks.size()) {
    if (next() != "sop") throw Error(Errc::ParseError, "expected 'sop'");
    SortedOp op;
    op.name = next();
    if (next() != ":") throw Error(Errc::ParseError, "expected ':' after op name");
    for (std::string t = next(); t != "->"; t = next()) op.in_sorts.push_back(sort_id(t));
    op.out_sort = sort_id(next());
    std::size_t len = 1;
    for (int s : op.in_sorts) len *= a.carriers[s];
    for (std::size_t i = 0; i < len; ++i) op.table.push_back(static_cast<Elem>(number(next())));
    a.ops.push_back(std::move(op));
  }
  a.validate();
  return a;
}

SortedAlgebra SortedAlgebra::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool operator<(const SortedTermOp& a, const SortedTermOp& b) {
  return std::forward_as_tuple(a.in_sorts.size(), a.in_sorts, a.out_sort, a.table) <
         std::forward_as_tuple(b.in_sorts.size(), b.in_sorts, b.out_sort, b.table);
}

namespace {

// Returns (value, sort).
std::pair<Elem, int> eval_sorted(const SortedAlgebra& salg, const Term& t,
                                 std::span<const Elem> assignment) {
  if (t.is_var()) {
    if (static_cast<std::size_t>(t.var) >= assignment.size())
      throw Error(Errc::UnassignedVariable, "variable v" + std::to_string(t.var) + " unassigned");
    return {assignment[t.var], -1};
  }
  int op = salg.op_index(t.op);
  if (op < 0) throw Error(Errc::UnknownOp, "unknown operation " + t.op);
  const auto& o = salg.ops[op];
  if (o.in_sorts.size() != t.args.size()) throw Error(Errc::ArityMismatch, "arity mismatch for " + t.op);
  std::vector<Elem> args;
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    auto [v, s] = eval_sorted(salg, t.args[i], assignment);
    if (s >= 0 && s != o.in_sorts[i]) throw Error(Errc::SortMismatch, "ill-sorted argument of " + t.op);
    if (v >= salg.carriers[o.in_sorts[i]]) throw Error(Errc::SortMismatch, "value outside carrier in " + t.op);
    args.push_back(v);
  }
  return {salg.apply(op, args), o.out_sort};
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += "_" + std::to_string(x);
  return s;
}

}  // namespace

Elem eval_sorted_term(const SortedAlgebra& salg, const Term& t, std::span<const Elem> assignment) {
  return eval_sorted(salg, t, assignment).first;
}

SortedAlgebra build_frz(const FiniteAlgebra& alg, const Congruence& tau) {
  ClassIndex ci(tau);
  const int m = static_cast<int>(ci.classes.size());
  SortedAlgebra s;
  for (int i = 0; i < m; ++i) {
    s.sort_names.push_back("s" + std::to_string(i));
    s.carriers.push_back(ci.size(i));
  }
  for (std::size_t o = 0; o < alg.ops().size(); ++o) {
    const auto& f = alg.ops()[o];
    std::vector<std::size_t> cradix(f.arity, m);
    std::vector<Elem> ct(f.arity), pos(f.arity), args(f.arity);
    for (std::size_t g = 0; g < ipow(m, f.arity); ++g) {
      tuple_digits(g, cradix, ct);
      SortedOp op;
      op.in_sorts.assign(ct.begin(), ct.end());
      op.name = f.name + join_ints(op.in_sorts);
      op.origin = f.name;
      auto radix = s.radix(op.in_sorts);
      std::size_t len = 1;
      for (auto r : radix) len *= r;
      for (std::size_t idx = 0; idx < len; ++idx) {
        tuple_digits(idx, radix, pos);
        for (int i = 0; i < f.arity; ++i) args[i] = ci.classes[ct[i]][pos[i]];
        Elem out = alg.apply(static_cast<int>(o), args);
        if (idx == 0) op.out_sort = tau.blocks[out];
        op.table.push_back(static_cast<Elem>(ci.position[out]));
      }
      s.ops.push_back(std::move(op));
    }
  }
  return s;
}

SortedAlgebra build_frzflt(const BoxmapAnalysis& analysis, const Congruence& tau) {
  ClassIndex ci(tau);
  const int m = static_cast<int>(ci.classes.size());
  if (static_cast<int>(analysis.decomps.size()) != m)
    throw Error(Errc::NotCoordinatized, "one coordinatization per class required");
  SortedAlgebra s;
  std::vector<std::vector<int>> sort_id(m);
  for (int i = 0; i < m; ++i) {
    const auto& co = analysis.decomps[i].coords;
    if (co.cls != i || co.elements.size() != ci.size(i))
      throw Error(Errc::NotCoordinatized, "class " + std::to_string(i) + " is not coordinatized");
    for (int j = 0; j < co.k(); ++j) {
      sort_id[i].push_back(static_cast<int>(s.carriers.size()));
      s.sort_names.push_back("s" + std::to_string(i) + "_" + std::to_string(j));
      s.carriers.push_back(co.factor_sizes[j]);
    }
  }
  std::set<std::tuple<std::vector<int>, int, std::vector<Elem>>> seen;
  for (std::size_t bi = 0; bi < analysis.boxmaps.size(); ++bi) {
    const Boxmap& b = analysis.boxmaps[bi];
    std::vector<int> in_sorts;
    for (int c : b.input_classes)
      for (int sid : sort_id[c]) in_sorts.push_back(sid);
    const auto radix = s.radix(in_sorts);
    std::size_t len = 1;
    for (auto r : radix) len *= r;
    const auto& out_co = analysis.decomps[b.output_class].coords;
    // Output element positions for every input coordinate tuple.
    std::vector<Elem> outs(len), digits(in_sorts.size()), pos(b.arity());
    for (std::size_t idx = 0; idx < len; ++idx) {
      tuple_digits(idx, radix, digits);
      std::size_t at = 0;
      for (int k = 0; k < b.arity(); ++k) {
        const auto& co = analysis.decomps[b.input_classes[k]].coords;
        std::span<const Elem> coord(digits.data() + at, co.k());
        pos[k] = static_cast<Elem>(ci.position[co.element_of(coord)]);
        at += co.k();
      }
      outs[idx] = static_cast<Elem>(ci.position[b.at_positions(pos)]);
    }
    for (int jo = 0; jo < out_co.k(); ++jo) {
      SortedOp op;
      op.in_sorts = in_sorts;
      op.out_sort = sort_id[b.output_class][jo];
      op.table.resize(len);
      for (std::size_t idx = 0; idx < len; ++idx) op.table[idx] = out_co.coords[outs[idx]][jo];
      if (!seen.insert({op.in_sorts, op.out_sort, op.table}).second) continue;
      op.name = "f" + std::to_string(bi) + "_" + std::to_string(jo);
      op.origin = b.str() + " coordinate " + std::to_string(jo);
      s.ops.push_back(std::move(op));
    }
  }
  return s;
}

int default_vars_per_sort(const SortedAlgebra& salg) {
  int m = 1;
  for (auto c : salg.carriers) {
    int lg = 0;
    while ((std::size_t{2} << lg) <= c) ++lg;
    m = std::max(m, lg);
  }
  return m;
}

Pool build_pool(const SortedAlgebra& salg, int vars_per_sort, const Limits& limits) {
  Pool p;
  for (std::size_t s = 0; s < salg.num_sorts(); ++s)
    for (int k = 0; k < vars_per_sort; ++k) {
      p.var_sorts.push_back(static_cast<int>(s));
      p.radix.push_back(salg.carriers[s]);
    }
  std::size_t len = 1;
  for (auto r : p.radix) {
    len *= r;
    if (len > limits.max_elements)
      throw Error(Errc::ResourceLimit, "pool index set exceeds " + std::to_string(limits.max_elements));
  }
  std::vector<std::vector<Elem>> gens(p.var_sorts.size(), std::vector<Elem>(len));
  std::vector<Elem> digits(p.radix.size());
  for (std::size_t c = 0; c < len; ++c) {
    tuple_digits(c, p.radix, digits);
    for (std::size_t v = 0; v < digits.size(); ++v) gens[v][c] = digits[v];
  }
  std::vector<ClosureOp> ops;
  for (const auto& op : salg.ops) {
    ops.push_back({op.in_sorts, op.out_sort, salg.radix(op.in_sorts), op.table});
    p.op_names.push_back(op.name);
  }
  p.closure = close_points(len, ops, gens, p.var_sorts, limits.max_elements);
  return p;
}

namespace {

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& radix) {
  std::vector<std::size_t> st(radix.size());
  std::size_t s = 1;
  for (std::size_t p = radix.size(); p-- > 0;) {
    st[p] = s;
    s *= radix[p];
  }
  return st;
}

// Restricts a table to the given slots, other slots held at 0.
std::vector<Elem> restrict_table(std::span<const Elem> table, const std::vector<std::size_t>& radix,
                                 const std::vector<int>& keep) {
  auto st = strides_of(radix);
  std::vector<std::size_t> sub;
  for (int k : keep) sub.push_back(radix[k]);
  std::size_t len = 1;
  for (auto r : sub) len *= r;
  std::vector<Elem> out(len), digits(sub.size());
  for (std::size_t idx = 0; idx < len; ++idx) {
    tuple_digits(idx, sub, digits);
    std::size_t full = 0;
    for (std::size_t j = 0; j < keep.size(); ++j) full += digits[j] * st[keep[j]];
    out[idx] = table[full];
  }
  return out;
}

}  // namespace

std::vector<SortedTermOp> pool_cores(const SortedAlgebra& salg, const Pool& pool) {
  (void)salg;
  std::map<std::tuple<std::vector<int>, int, std::vector<Elem>>, SortedTermOp> seen;
  const auto& pts = pool.closure.points;
  const int nv = static_cast<int>(pool.var_sorts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto vec = pts.at(i);
    auto ess = essential_variables(vec, pool.radix);
    SortedTermOp t;
    t.out_sort = pool.closure.sorts[i];
    for (int v : ess) t.in_sorts.push_back(pool.var_sorts[v]);
    t.table = restrict_table(vec, pool.radix, ess);
    auto key = std::make_tuple(t.in_sorts, t.out_sort, t.table);
    if (seen.count(key)) continue;
    std::vector<Term> subst(nv);
    int extra = static_cast<int>(ess.size());
    for (int v = 0; v < nv; ++v) {
      auto it = std::find(ess.begin(), ess.end(), v);
      if (it != ess.end()) {
        subst[v] = Term::variable(static_cast<int>(it - ess.begin()));
      } else {
        subst[v] = Term::variable(extra++);
        t.extra_sorts.push_back(pool.var_sorts[v]);
      }
    }
    t.witness = pool.closure.witness(i, pool.op_names).substitute(subst);
    // Drop extras that the witness never mentions.
    int used = std::max(t.witness.max_var() + 1, t.arity());
    t.extra_sorts.resize(std::max(0, used - t.arity()));
    seen.emplace(std::move(key), std::move(t));
  }
  std::vector<SortedTermOp> out;
  for (auto& [k, t] : seen) out.push_back(std::move(t));
  std::sort(out.begin(), out.end());
  return out;
}

bool is_rectangular(const SortedAlgebra& salg, const SortedTermOp& t) {
  const int k = t.arity();
  if (k <= 1) return true;
  auto radix = salg.radix(t.in_sorts);
  auto st = strides_of(radix);
  const std::size_t len = t.table.size();
  std::vector<std::vector<int>> rel(k);
  for (int p = 0; p < k; ++p) {
    UnionFind uf(radix[p]);
    for (std::size_t x = 0; x < radix[p]; ++x)
      for (std::size_t y = x + 1; y < radix[p]; ++y) {
        bool same = true;
        for (std::size_t idx = 0; idx < len && same; ++idx) {
          if ((idx / st[p]) % radix[p] != 0) continue;
          same = t.table[idx + x * st[p]] == t.table[idx + y * st[p]];
        }
        if (same) uf.unite(x, y);
      }
    rel[p] = uf.labels();
  }
  std::map<Elem, std::vector<int>> seen;
  std::vector<Elem> digits(k);
  for (std::size_t idx = 0; idx < len; ++idx) {
    tuple_digits(idx, radix, digits);
    std::vector<int> key(k);
    for (int p = 0; p < k; ++p) key[p] = rel[p][digits[p]];
    auto [it, fresh] = seen.emplace(t.table[idx], key);
    if (!fresh && it->second != key) return false;
  }
  return true;
}

TermSet sorted_term_operations(const SortedAlgebra& salg, std::optional<int> vars_per_sort,
                               const Limits& limits) {
  TermSet T;
  T.vars_per_sort = vars_per_sort.value_or(default_vars_per_sort(salg));
  auto pool = build_pool(salg, T.vars_per_sort, limits);
  T.terms = pool_cores(salg, pool);
  for (const auto& t : T.terms)
    if (!is_rectangular(salg, t))
      throw Error(Errc::NotStronglyAbelian, "term " + t.witness.str() + " is not rectangular");
  return T;
}

bool sorted_strong_term_condition(const SortedAlgebra& salg, int vars_per_sort, const Limits& limits) {
  auto pool = build_pool(salg, vars_per_sort, limits);
  for (const auto& t : pool_cores(salg, pool))
    if (!is_rectangular(salg, t)) return false;
  return true;
}

std::vector<int> essential_variables_sorted(const SortedAlgebra& salg, const SortedTermOp& t) {
  return essential_variables(t.table, salg.radix(t.in_sorts));
}

std::optional<LeftInverse> is_left_invertible_at(const SortedAlgebra& salg, const TermSet& T,
                                                 const SortedTermOp& t, int slot) {
  const auto radix = salg.radix(t.in_sorts);
  const int target = t.in_sorts.at(slot);
  // The output must determine v_slot; h records that function on the image.
  std::vector<int> h(salg.carriers[t.out_sort], -1);
  std::vector<Elem> digits(t.arity());
  for (std::size_t idx = 0; idx < t.table.size(); ++idx) {
    tuple_digits(idx, radix, digits);
    int& slot_val = h[t.table[idx]];
    if (slot_val >= 0 && slot_val != digits[slot]) return std::nullopt;
    slot_val = digits[slot];
  }
  for (std::size_t ri = 0; ri < T.terms.size(); ++ri) {
    const auto& r = T.terms[ri];
    if (r.out_sort != target) continue;
    const auto rr = salg.radix(r.in_sorts);
    for (int j = 0; j < r.arity(); ++j) {
      if (r.in_sorts[j] != t.out_sort) continue;
      bool ok = true;
      std::vector<Elem> rd(r.arity());
      for (std::size_t idx = 0; idx < r.table.size() && ok; ++idx) {
        tuple_digits(idx, rr, rd);
        int want = h[rd[j]];
        if (want >= 0 && r.table[idx] != want) ok = false;
      }
      if (ok) return LeftInverse{static_cast<int>(ri), j};
    }
  }
  return std::nullopt;
}

std::optional<std::vector<Term>> is_right_invertible(const SortedAlgebra& salg, const Pool& pool,
                                                     const SortedTermOp& t) {
  (void)salg;
  const auto& pts = pool.closure.points;
  const std::size_t len = pool.coords();
  // First pool variable of each sort.
  std::vector<int> first(salg.num_sorts(), -1);
  for (int v = static_cast<int>(pool.var_sorts.size()); v-- > 0;) first[pool.var_sorts[v]] = v;
  std::vector<std::vector<std::size_t>> cand(salg.num_sorts());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto ess = essential_variables(pts.at(i), pool.radix);
    bool ok = std::all_of(ess.begin(), ess.end(), [&](int v) { return first[pool.var_sorts[v]] == v; });
    if (ok) cand[pool.closure.sorts[i]].push_back(i);
  }
  const int n = t.arity();
  std::vector<Elem> target(len), digits(pool.radix.size());
  for (std::size_t c = 0; c < len; ++c) {
    tuple_digits(c, pool.radix, digits);
    target[c] = digits[first[t.out_sort]];
  }
  const auto radix = salg.radix(t.in_sorts);
  std::vector<std::size_t> pick(n, 0);
  for (int k = 0; k < n; ++k)
    if (cand[t.in_sorts[k]].empty()) return std::nullopt;
  std::vector<Elem> args(n);
  while (true) {
    bool ok = true;
    for (std::size_t c = 0; c < len && ok; ++c) {
      for (int k = 0; k < n; ++k) args[k] = pts.at(cand[t.in_sorts[k]][pick[k]])[c];
      ok = t.table[tuple_index(args, radix)] == target[c];
    }
    if (ok) {
      std::vector<Term> out;
      for (int k = 0; k < n; ++k) out.push_back(pool.closure.witness(cand[t.in_sorts[k]][pick[k]], pool.op_names));
      return out;
    }
    int k = n - 1;
    while (k >= 0 && ++pick[k] == cand[t.in_sorts[k]].size()) pick[k--] = 0;
    if (k < 0) break;
  }
  return std::nullopt;
}

UnaryVerdict is_essentially_unary_algebra(const TermSet& T) {
  for (const auto& t : T.terms)
    if (t.arity() >= 2) return {false, t};
  return {true, std::nullopt};
}

SortedTermOp reduce_term(const SortedAlgebra& salg, const SortedTermOp& t) {
  const auto radix = salg.radix(t.in_sorts);
  auto ess = essential_variables(t.table, radix);
  // Essential slots ordered by sort, stable in slot order.
  std::stable_sort(ess.begin(), ess.end(), [&](int a, int b) { return t.in_sorts[a] < t.in_sorts[b]; });
  SortedTermOp r;
  r.out_sort = t.out_sort;
  for (int v : ess) r.in_sorts.push_back(t.in_sorts[v]);
  r.table = restrict_table(t.table, radix, ess);
  const int total = std::max(t.witness.max_var() + 1, t.arity());
  std::vector<Term> subst(total);
  int extra = static_cast<int>(ess.size());
  for (int v = 0; v < total; ++v) {
    auto it = std::find(ess.begin(), ess.end(), v);
    if (it != ess.end()) {
      subst[v] = Term::variable(static_cast<int>(it - ess.begin()));
    } else {
      subst[v] = Term::variable(extra++);
      r.extra_sorts.push_back(v < t.arity() ? t.in_sorts[v] : t.extra_sorts[v - t.arity()]);
    }
  }
  r.witness = t.witness.substitute(subst);
  return r;
}

int find_in_termset(const TermSet& T, const SortedTermOp& t) {
  auto it = std::lower_bound(T.terms.begin(), T.terms.end(), t);
  if (it != T.terms.end() && it->same_key(t)) return static_cast<int>(it - T.terms.begin());
  return -1;
}

SortedTermOp find_binary_noninvertible_term(const SortedAlgebra& salg, const TermSet& T) {
  auto start = std::find_if(T.terms.begin(), T.terms.end(), [](const SortedTermOp& t) { return t.arity() >= 2; });
  if (start == T.terms.end()) throw Error(Errc::EssentiallyUnary, "every term is essentially unary");
  SortedTermOp cur = *start;
  for (std::size_t iter = 0; iter <= T.terms.size(); ++iter) {
    std::optional<std::pair<int, LeftInverse>> inv;
    for (int i = 0; i < cur.arity() && !inv; ++i)
      if (auto li = is_left_invertible_at(salg, T, cur, i)) inv = {{i, *li}};
    if (!inv) return cur;
    const auto [i, li] = *inv;
    const auto& r = T.terms[li.term];
    // s(x) = r with x at the inverse slot and every other slot at 0.
    const auto rr = salg.radix(r.in_sorts);
    const auto rst = strides_of(rr);
    auto s = [&](Elem x) { return r.table[x * rst[li.slot]]; };
    SortedTermOp hat;
    hat.in_sorts = cur.in_sorts;
    hat.in_sorts[i] = cur.out_sort;
    hat.out_sort = cur.out_sort;
    const auto hr = salg.radix(hat.in_sorts);
    const auto cr = salg.radix(cur.in_sorts);
    std::size_t len = 1;
    for (auto x : hr) len *= x;
    hat.table.resize(len);
    std::vector<Elem> digits(hat.arity());
    for (std::size_t idx = 0; idx < len; ++idx) {
      tuple_digits(idx, hr, digits);
      digits[i] = s(digits[i]);
      hat.table[idx] = cur.table[tuple_index(digits, cr)];
    }
    // Witness: cur with v_i replaced by the inverse applied to v_i.
    std::vector<Term> rsub(std::max(r.witness.max_var() + 1, r.arity()));
    for (std::size_t v = 0; v < rsub.size(); ++v)
      rsub[v] = Term::variable(static_cast<int>(v) == li.slot ? i : -1);
    int total = std::max(cur.witness.max_var() + 1, cur.arity());
    int extra = total;
    for (std::size_t v = 0; v < rsub.size(); ++v)
      if (static_cast<int>(v) != li.slot) {
        rsub[v] = Term::variable(extra++);
        hat.extra_sorts.push_back(static_cast<int>(v) < r.arity() ? r.in_sorts[v] : r.extra_sorts[v - r.arity()]);
      }
    std::vector<Term> csub(total);
    for (int v = 0; v < total; ++v) csub[v] = Term::variable(v);
    csub[i] = r.witness.substitute(rsub);
    hat.extra_sorts.insert(hat.extra_sorts.begin(), cur.extra_sorts.begin(), cur.extra_sorts.end());
    hat.witness = cur.witness.substitute(csub);
    auto red = reduce_term(salg, hat);
    if (red.arity() < 2 || find_in_termset(T, red) < 0)
      throw Error(Errc::NonTermination, "transformed term left the representative set");
    cur = red;
  }
  throw Error(Errc::NonTermination, "no non-invertible binary term within |T| steps");
}

namespace {

// Finds the op of a class-sorted algebra from its base name and class tuple.
int frz_op(const SortedAlgebra& s, const std::string& base, const std::vector<int>& classes) {
  return s.op_index(base + join_ints(classes));
}

}  // namespace

StructuralReport check_structural_correspondence(const FiniteAlgebra& alg, const Congruence& tau,
                                                 const std::vector<Elem>& sub_generators,
                                                 const Congruence& theta) {
  StructuralReport rep;
  std::ostringstream detail;
  const auto A = build_frz(alg, tau);
  ClassIndex ci(tau);

  // Substructure: the subalgebra generated by sub_generators.
  {
    std::vector<std::vector<Elem>> gens;
    for (Elem g : sub_generators) gens.push_back({g});
    auto sub = generate_subpower(alg, 1, gens);
    std::vector<Elem> elems;
    for (std::size_t i = 0; i < sub.count(); ++i) elems.push_back(sub.point(i)[0]);
    std::sort(elems.begin(), elems.end());
    std::vector<int> index(alg.size(), -1);
    for (std::size_t i = 0; i < elems.size(); ++i) index[elems[i]] = static_cast<int>(i);
    std::set<int> met;
    for (Elem e : elems) met.insert(tau.blocks[e]);
    if (static_cast<int>(met.size()) != tau.num_blocks()) {
      detail << "subalgebra misses a class; ";
    } else {
      std::vector<Operation> ops;
      for (const auto& f : alg.ops()) {
        Operation g{f.name, f.arity, {}};
        std::vector<Elem> d(f.arity), args(f.arity);
        for (std::size_t idx = 0; idx < ipow(elems.size(), f.arity); ++idx) {
          tuple_digits(idx, std::vector<std::size_t>(f.arity, elems.size()), d);
          for (int i = 0; i < f.arity; ++i) args[i] = elems[d[i]];
          g.table.push_back(static_cast<Elem>(index[f.table[tuple_index(args, alg.size())]]));
        }
        ops.push_back(std::move(g));
      }
      FiniteAlgebra B(elems.size(), std::move(ops));
      std::vector<int> labels;
      for (Elem e : elems) labels.push_back(tau.blocks[e]);
      auto tb = Congruence::from_labels(labels);
      auto SB = build_frz(B, tb);
      ClassIndex cb(tb);
      // Sort k of SB sits inside class sort_map[k] of A; elements map by value.
      std::vector<int> sort_map(SB.num_sorts());
      for (std::size_t k = 0; k < SB.num_sorts(); ++k) sort_map[k] = tau.blocks[elems[cb.classes[k][0]]];
      auto embed = [&](int k, Elem p) { return static_cast<Elem>(ci.position[elems[cb.classes[k][p]]]); };
      bool ok = true;
      for (const auto& op : SB.ops) {
        std::vector<int> mapped;
        for (int s : op.in_sorts) mapped.push_back(sort_map[s]);
        int ai = frz_op(A, op.origin, mapped);
        if (ai < 0 || A.ops[ai].out_sort != sort_map[op.out_sort]) {
          ok = false;
          break;
        }
        auto radix = SB.radix(op.in_sorts);
        std::vector<Elem> d(op.in_sorts.size()), args(op.in_sorts.size());
        for (std::size_t idx = 0; idx < op.table.size() && ok; ++idx) {
          tuple_digits(idx, radix, d);
          for (std::size_t i = 0; i < d.size(); ++i) args[i] = embed(op.in_sorts[i], d[i]);
          ok = A.apply(ai, args) == embed(op.out_sort, op.table[idx]);
        }
        if (!ok) break;
      }
      rep.substructure = ok;
      detail << "substructure carriers";
      for (auto c : SB.carriers) detail << " " << c;
      detail << "; ";
    }
  }

  // Quotient by theta <= tau.
  if (!theta.refines(tau)) {
    detail << "theta is not below tau; ";
  } else {
    auto Q = quotient(alg, theta);
    std::vector<int> labels(Q.size());
    for (Elem x = 0; x < alg.size(); ++x) labels[theta.blocks[x]] = tau.blocks[x];
    auto tq = Congruence::from_labels(labels);
    auto SQ = build_frz(Q, tq);
    ClassIndex cq(tq);
    // h maps sort i of A (class i) to the sort of its image.
    std::vector<int> sort_map(A.num_sorts());
    for (std::size_t i = 0; i < A.num_sorts(); ++i) sort_map[i] = tq.blocks[theta.blocks[ci.classes[i][0]]];
    auto h = [&](int s, Elem p) { return static_cast<Elem>(cq.position[theta.blocks[ci.classes[s][p]]]); };
    bool ok = static_cast<int>(SQ.num_sorts()) == tau.num_blocks();
    for (std::size_t s = 0; s < A.num_sorts() && ok; ++s) {
      std::set<Elem> hit;
      for (Elem p = 0; p < A.carriers[s]; ++p) hit.insert(h(static_cast<int>(s), p));
      ok = hit.size() == SQ.carriers[sort_map[s]];
    }
    for (const auto& op : A.ops) {
      if (!ok) break;
      std::vector<int> mapped;
      for (int s : op.in_sorts) mapped.push_back(sort_map[s]);
      int qi = frz_op(SQ, op.origin, mapped);
      if (qi < 0) {
        ok = false;
        break;
      }
      auto radix = A.radix(op.in_sorts);
      std::vector<Elem> d(op.in_sorts.size()), args(op.in_sorts.size());
      for (std::size_t idx = 0; idx < op.table.size() && ok; ++idx) {
        tuple_digits(idx, radix, d);
        for (std::size_t i = 0; i < d.size(); ++i) args[i] = h(op.in_sorts[i], d[i]);
        ok = SQ.apply(qi, args) == h(op.out_sort, op.table[idx]);
      }
    }
    rep.quotient = ok;
    detail << "quotient carriers";
    for (auto c : SQ.carriers) detail << " " << c;
    detail << "; ";
  }

  // Fiber product A x_tau A against the sortwise product of A^tau with itself.
  {
    std::vector<std::pair<Elem, Elem>> pairs;
    for (Elem x = 0; x < alg.size(); ++x)
      for (Elem y = 0; y < alg.size(); ++y)
        if (tau.related(x, y)) pairs.push_back({x, y});
    std::map<std::pair<Elem, Elem>, Elem> index;
    for (std::size_t i = 0; i < pairs.size(); ++i) index[pairs[i]] = static_cast<Elem>(i);
    std::vector<Operation> ops;
    for (const auto& f : alg.ops()) {
      Operation g{f.name, f.arity, {}};
      std::vector<Elem> d(f.arity), xs(f.arity), ys(f.arity);
      for (std::size_t idx = 0; idx < ipow(pairs.size(), f.arity); ++idx) {
        tuple_digits(idx, std::vector<std::size_t>(f.arity, pairs.size()), d);
        for (int i = 0; i < f.arity; ++i) {
          xs[i] = pairs[d[i]].first;
          ys[i] = pairs[d[i]].second;
        }
        g.table.push_back(index.at({f.table[tuple_index(xs, alg.size())], f.table[tuple_index(ys, alg.size())]}));
      }
      ops.push_back(std::move(g));
    }
    FiniteAlgebra P(pairs.size(), std::move(ops));
    std::vector<int> labels;
    for (auto [x, y] : pairs) labels.push_back(tau.blocks[x]);
    auto tp = Congruence::from_labels(labels);
    auto SP = build_frz(P, tp);
    ClassIndex cp(tp);
    bool ok = SP.num_sorts() == A.num_sorts();
    for (std::size_t s = 0; s < SP.num_sorts() && ok; ++s)
      ok = SP.carriers[s] == A.carriers[s] * A.carriers[s];
    // Element p of sort s is the pair at class positions (p / n, p % n).
    auto split = [&](int s, Elem p) {
      auto [x, y] = pairs[cp.classes[s][p]];
      return std::make_pair(static_cast<Elem>(ci.position[x]), static_cast<Elem>(ci.position[y]));
    };
    for (std::size_t s = 0; s < SP.num_sorts() && ok; ++s) {
      std::set<std::pair<Elem, Elem>> seen;
      for (Elem p = 0; p < SP.carriers[s]; ++p) seen.insert(split(static_cast<int>(s), p));
      ok = seen.size() == SP.carriers[s];
    }
    for (const auto& op : SP.ops) {
      if (!ok) break;
      int ai = A.op_index(op.name);
      if (ai < 0 || A.ops[ai].out_sort != op.out_sort) {
        ok = false;
        break;
      }
      auto radix = SP.radix(op.in_sorts);
      std::vector<Elem> d(op.in_sorts.size()), xs(d.size()), ys(d.size());
      for (std::size_t idx = 0; idx < op.table.size() && ok; ++idx) {
        tuple_digits(idx, radix, d);
        for (std::size_t i = 0; i < d.size(); ++i) std::tie(xs[i], ys[i]) = split(op.in_sorts[i], d[i]);
        auto [ox, oy] = split(op.out_sort, op.table[idx]);
        ok = A.apply(ai, xs) == ox && A.apply(ai, ys) == oy;
      }
    }
    rep.product = ok;
    detail << "product carriers";
    for (auto c : SP.carriers) detail << " " << c;
  }
  rep.detail = detail.str();
  return rep;
}

}  // namespace ualg
