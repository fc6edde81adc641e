#include "ualg/interp.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ualg/union_find.hpp"

namespace ualg {

// ---------------------------------------------------------------- graphs

void BipartiteGraph::validate() const {
  if (reds <= 0 || blues <= 0) throw Error(Errc::ParseError, "graph needs at least one red and one blue vertex");
  std::vector<bool> rs(reds), bs(blues);
  std::set<std::pair<int, int>> seen;
  for (auto [r, b] : edges) {
    if (r < 0 || r >= reds || b < 0 || b >= blues)
      throw Error(Errc::ParseError, "edge " + std::to_string(r) + " " + std::to_string(b) + " out of range");
    if (!seen.insert({r, b}).second)
      throw Error(Errc::ParseError, "repeated edge " + std::to_string(r) + " " + std::to_string(b));
    rs[r] = bs[b] = true;
  }
  for (int r = 0; r < reds; ++r)
    if (!rs[r]) throw Error(Errc::ParseError, "red vertex " + std::to_string(r) + " is isolated");
  for (int b = 0; b < blues; ++b)
    if (!bs[b]) throw Error(Errc::ParseError, "blue vertex " + std::to_string(b) + " is isolated");
}

std::string BipartiteGraph::to_text() const {
  std::ostringstream out;
  out << "reds " << reds << "\nblues " << blues << "\n";
  for (auto [r, b] : edges) out << "edge " << r << " " << b << "\n";
  return out.str();
}

BipartiteGraph BipartiteGraph::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  BipartiteGraph g;
  bool have_r = false, have_b = false;
  std::string line;
  while (std::getline(in, line)) {
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto read_int = [&]() {
      long v;
      if (!(ls >> v)) throw Error(Errc::ParseError, "expected a number after '" + key + "'");
      return static_cast<int>(v);
    };
    if (key == "reds") {
      g.reds = read_int();
      have_r = true;
    } else if (key == "blues") {
      g.blues = read_int();
      have_b = true;
    } else if (key == "edge") {
      int r = read_int();
      int b = read_int();
      g.edges.push_back({r, b});
    } else {
      throw Error(Errc::ParseError, "unknown graph keyword '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) throw Error(Errc::ParseError, "trailing token '" + extra + "'");
  }
  if (!have_r || !have_b) throw Error(Errc::ParseError, "graph needs 'reds' and 'blues' lines");
  g.validate();
  return g;
}

BipartiteGraph BipartiteGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<GraphIsomorphism> find_isomorphism(const BipartiteGraph& a, const BipartiteGraph& b) {
  if (a.reds != b.reds || a.blues != b.blues || a.edges.size() != b.edges.size()) return std::nullopt;
  std::set<std::pair<int, int>> target(b.edges.begin(), b.edges.end());
  std::vector<int> rm(a.reds), bm(a.blues);
  std::iota(rm.begin(), rm.end(), 0);
  do {
    std::iota(bm.begin(), bm.end(), 0);
    do {
      bool ok = std::all_of(a.edges.begin(), a.edges.end(),
                            [&](auto e) { return target.count({rm[e.first], bm[e.second]}) > 0; });
      if (ok) return GraphIsomorphism{rm, bm};
    } while (std::next_permutation(bm.begin(), bm.end()));
  } while (std::next_permutation(rm.begin(), rm.end()));
  return std::nullopt;
}

std::vector<BipartiteGraph> small_bipartite_graphs(int max_vertices) {
  std::vector<BipartiteGraph> out;
  for (int r = 1; r < max_vertices; ++r)
    for (int b = 1; r + b <= max_vertices; ++b) {
      const int cells = r * b;
      for (std::uint32_t mask = 1; mask < (1u << cells); ++mask) {
        BipartiteGraph g{r, b, {}};
        for (int c = 0; c < cells; ++c)
          if (mask >> c & 1u) g.edges.push_back({c / b, c % b});
        try {
          g.validate();
        } catch (const Error&) {
          continue;
        }
        bool fresh = std::none_of(out.begin(), out.end(), [&](const BipartiteGraph& h) {
          return find_isomorphism(g, h).has_value();
        });
        if (fresh) out.push_back(std::move(g));
      }
    }
  return out;
}

// ----------------------------------------------------------------- helpers

namespace {

// Calls f on every tuple drawing position k from choices[k].
template <class F>
void for_each_tuple(const std::vector<const std::vector<int>*>& choices, F&& f) {
  const std::size_t n = choices.size();
  for (const auto* c : choices)
    if (c->empty()) return;
  std::vector<std::size_t> at(n, 0);
  std::vector<int> tuple(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) tuple[k] = (*choices[k])[at[k]];
    f(std::span<const int>(tuple));
    std::size_t k = n;
    while (k-- > 0) {
      if (++at[k] < choices[k]->size()) break;
      at[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) return;
  }
}

// Splits every class of label by key; key -1 leaves an element's class alone.
void refine(std::vector<int>& label, const std::vector<std::int64_t>& key) {
  std::unordered_map<std::uint64_t, int> ids;
  std::vector<int> out(label.size());
  for (std::size_t i = 0; i < label.size(); ++i) {
    std::uint64_t k = (static_cast<std::uint64_t>(label[i]) << 32) | static_cast<std::uint32_t>(key[i] + 1);
    auto [it, fresh] = ids.emplace(k, static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  label = std::move(out);
}

std::vector<Elem> restrict_to(std::span<const Elem> table, const std::vector<std::size_t>& radix,
                              const std::vector<int>& keep) {
  std::vector<std::size_t> st(radix.size());
  std::size_t s = 1;
  for (std::size_t p = radix.size(); p-- > 0;) {
    st[p] = s;
    s *= radix[p];
  }
  std::vector<std::size_t> sub;
  for (int k : keep) sub.push_back(radix[k]);
  std::size_t len = 1;
  for (auto r : sub) len *= r;
  std::vector<Elem> out(len), d(sub.size());
  for (std::size_t idx = 0; idx < len; ++idx) {
    tuple_digits(idx, sub, d);
    std::size_t full = 0;
    for (std::size_t j = 0; j < keep.size(); ++j) full += d[j] * st[keep[j]];
    out[idx] = table[full];
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------- term data

TermData analyze_terms(const SortedAlgebra& salg, const Limits& limits) {
  TermData td;
  td.salg = salg;
  td.T = sorted_term_operations(salg, std::nullopt, limits);
  td.pool = build_pool(salg, std::max(td.T.vars_per_sort, 2), limits);
  const auto& T = td.T.terms;
  for (const auto& t : T) {
    td.right_invertible.push_back(is_right_invertible(salg, td.pool, t).has_value());
    std::vector<bool> li;
    for (int i = 0; i < t.arity(); ++i) li.push_back(is_left_invertible_at(salg, td.T, t, i).has_value());
    td.left_invertible.push_back(li);
  }
  for (std::size_t c = 0; c < T.size(); ++c)
    for (int j = 0; j < T[c].arity(); ++j)
      if (!td.left_invertible[c][j]) td.N.push_back({static_cast<int>(c), j});

  // Parameter instances, computed in the pool.
  const auto& pool = td.pool;
  const auto& pts = pool.closure.points;
  const std::size_t len = pool.coords();
  std::vector<int> first(salg.num_sorts(), -1);
  for (int v = static_cast<int>(pool.var_sorts.size()); v-- > 0;) first[pool.var_sorts[v]] = v;
  std::vector<std::vector<int>> ess(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ess[i] = essential_variables(pts.at(i), pool.radix);
  std::set<std::pair<int, int>> inst;
  std::vector<Elem> digits(pool.radix.size()), out(len);
  std::size_t work = 0;
  for (auto [c, j] : td.N) {
    const auto& t = T[c];
    const int v0 = first[t.in_sorts[j]];
    std::vector<std::vector<int>> cand(t.arity());
    std::vector<const std::vector<int>*> choices;
    for (int k = 0; k < t.arity(); ++k) {
      if (k == j) {
        cand[k] = {-1};
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i)
          if (pool.closure.sorts[i] == t.in_sorts[k] &&
              std::find(ess[i].begin(), ess[i].end(), v0) == ess[i].end())
            cand[k].push_back(static_cast<int>(i));
      }
      choices.push_back(&cand[k]);
    }
    const auto radix = salg.radix(t.in_sorts);
    std::vector<Elem> args(t.arity());
    for_each_tuple(choices, [&](std::span<const int> pick) {
      if (++work > limits.max_tables) throw Error(Errc::ResourceLimit, "parameter instances exceed the table cap");
      for (std::size_t x = 0; x < len; ++x) {
        tuple_digits(x, pool.radix, digits);
        for (int k = 0; k < t.arity(); ++k) args[k] = k == j ? digits[v0] : pts.at(pick[k])[x];
        out[x] = t.table[tuple_index(args, radix)];
      }
      auto e = essential_variables(out, pool.radix);
      auto pos = std::find(e.begin(), e.end(), v0);
      if (pos == e.end()) return;
      SortedTermOp core;
      core.out_sort = t.out_sort;
      for (int v : e) core.in_sorts.push_back(pool.var_sorts[v]);
      core.table = restrict_to(out, pool.radix, e);
      int idx = find_in_termset(td.T, core);
      if (idx < 0) throw Error(Errc::NotApplicable, "parameter instance missing from the term set");
      inst.insert({idx, static_cast<int>(pos - e.begin())});
    });
  }
  td.instances.assign(inst.begin(), inst.end());

  // Greedy generating subset of the basic ops, highest arity first.
  std::vector<int> order(salg.ops.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return salg.ops[a].in_sorts.size() > salg.ops[b].in_sorts.size();
  });
  SortedAlgebra sub = salg;
  sub.ops.clear();
  auto covered = pool_cores(sub, build_pool(sub, td.T.vars_per_sort, limits));
  for (int o : order) {
    const auto& op = salg.ops[o];
    const auto radix = salg.radix(op.in_sorts);
    auto ess = essential_variables(op.table, radix);
    std::stable_sort(ess.begin(), ess.end(), [&](int a, int b) { return op.in_sorts[a] < op.in_sorts[b]; });
    SortedTermOp core;
    core.out_sort = op.out_sort;
    for (int v : ess) core.in_sorts.push_back(op.in_sorts[v]);
    core.table = restrict_to(op.table, radix, ess);
    bool have = std::any_of(covered.begin(), covered.end(), [&](const SortedTermOp& c) { return c.same_key(core); });
    if (have) continue;
    td.generating_ops.push_back(o);
    sub.ops.push_back(salg.ops[o]);
    covered = pool_cores(sub, build_pool(sub, td.T.vars_per_sort, limits));
  }
  std::sort(td.generating_ops.begin(), td.generating_ops.end());
  return td;
}

// ----------------------------------------------------------- free algebras

bool FreeAlgebra::uses(int e, int g) const {
  const auto& v = elements[e].vars;
  return std::find(v.begin(), v.end(), g) != v.end();
}

namespace {

Elem eval_reduced(const ReducedFn& f, const std::vector<std::size_t>& gen_radix, std::span<const Elem> assignment) {
  std::size_t idx = 0;
  for (int v : f.vars) idx = idx * gen_radix[v] + assignment[v];
  return f.table[idx];
}

}  // namespace

int FreeAlgebra::apply(const SortedAlgebra& salg, const SortedTermOp& t, std::span<const int> args) const {
  const std::size_t len = assignments.size();
  thread_local std::vector<Elem> buf;
  thread_local std::vector<std::size_t> stride;
  buf.assign(len, 0);
  stride.assign(args.size(), 1);
  for (std::size_t k = args.size(); k-- > 1;) stride[k - 1] = stride[k] * salg.carriers[t.in_sorts[k]];
  for (std::size_t s = 0; s < len; ++s) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < args.size(); ++k) idx += values.raw()[args[k] * len + s] * stride[k];
    buf[s] = t.table[idx];
  }
  auto f = values.find(buf, t.out_sort);
  if (!f) throw Error(Errc::NotApplicable, "term value outside the enumerated free algebra");
  return static_cast<int>(*f);
}

int FreeAlgebra::apply_op(const SortedAlgebra& salg, int op, std::span<const int> args) const {
  const auto& o = salg.ops[op];
  const std::size_t len = assignments.size();
  thread_local std::vector<Elem> buf;
  thread_local std::vector<std::size_t> stride;
  buf.assign(len, 0);
  stride.assign(args.size(), 1);
  for (std::size_t k = args.size(); k-- > 1;) stride[k - 1] = stride[k] * salg.carriers[o.in_sorts[k]];
  for (std::size_t s = 0; s < len; ++s) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < args.size(); ++k) idx += values.raw()[args[k] * len + s] * stride[k];
    buf[s] = o.table[idx];
  }
  auto f = values.find(buf, o.out_sort);
  if (!f) throw Error(Errc::NotApplicable, "op value outside the enumerated free algebra");
  return static_cast<int>(*f);
}

FreeAlgebra free_algebra(const TermData& td, const std::vector<int>& gen_sorts, const Limits& limits) {
  const auto& salg = td.salg;
  FreeAlgebra F;
  F.gen_sorts = gen_sorts;
  for (int s : gen_sorts) F.gen_radix.push_back(salg.carriers[s]);
  std::vector<std::vector<int>> by_sort(salg.num_sorts());
  for (std::size_t g = 0; g < gen_sorts.size(); ++g) by_sort[gen_sorts[g]].push_back(static_cast<int>(g));

  std::set<ReducedFn> fns;
  std::size_t work = 0;
  for (const auto& c : td.T.terms) {
    std::vector<const std::vector<int>*> choices;
    for (int s : c.in_sorts) choices.push_back(&by_sort[s]);
    const auto radix = salg.radix(c.in_sorts);
    auto add = [&](std::span<const int> sigma) {
      if (++work > limits.max_tables) throw Error(Errc::ResourceLimit, "free algebra enumeration exceeds the table cap");
      std::vector<int> vars(sigma.begin(), sigma.end());
      std::sort(vars.begin(), vars.end());
      vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
      std::vector<std::size_t> vr;
      for (int v : vars) vr.push_back(F.gen_radix[v]);
      std::size_t len = 1;
      for (auto r : vr) len *= r;
      std::vector<Elem> table(len), d(vars.size()), args(sigma.size());
      for (std::size_t idx = 0; idx < len; ++idx) {
        tuple_digits(idx, vr, d);
        for (std::size_t k = 0; k < sigma.size(); ++k)
          args[k] = d[std::lower_bound(vars.begin(), vars.end(), sigma[k]) - vars.begin()];
        table[idx] = c.table[tuple_index(args, radix)];
      }
      auto e = essential_variables(table, vr);
      ReducedFn f;
      f.sort = c.out_sort;
      for (int k : e) f.vars.push_back(vars[k]);
      f.table = restrict_to(table, vr, e);
      fns.insert(std::move(f));
    };
    if (c.arity() == 0) {
      add({});
    } else {
      for_each_tuple(choices, add);
    }
    if (fns.size() > limits.max_elements) throw Error(Errc::ResourceLimit, "free algebra exceeds the element cap");
  }
  F.elements.assign(fns.begin(), fns.end());
  const std::size_t n = F.elements.size();

  // Separating assignments: a few pseudo-random ones, then one per
  // unseparated pair.
  std::mt19937 rng(12345);
  std::vector<int> label(n);
  for (std::size_t e = 0; e < n; ++e) label[e] = F.elements[e].sort;
  auto add_assignment = [&](std::vector<Elem> a) {
    std::vector<std::int64_t> key(n);
    for (std::size_t e = 0; e < n; ++e) key[e] = eval_reduced(F.elements[e], F.gen_radix, a);
    refine(label, key);
    F.assignments.push_back(std::move(a));
  };
  const std::size_t k = gen_sorts.size();
  add_assignment(std::vector<Elem>(k, 0));
  for (int r = 0; r < 16; ++r) {
    std::vector<Elem> a(k);
    for (std::size_t g = 0; g < k; ++g) a[g] = static_cast<Elem>(rng() % F.gen_radix[g]);
    add_assignment(std::move(a));
  }
  while (true) {
    std::unordered_map<int, int> first;
    int e1 = -1, e2 = -1;
    for (std::size_t e = 0; e < n && e1 < 0; ++e) {
      auto [it, fresh] = first.emplace(label[e], static_cast<int>(e));
      if (!fresh) {
        e1 = it->second;
        e2 = static_cast<int>(e);
      }
    }
    if (e1 < 0) break;
    std::vector<int> vars = F.elements[e1].vars;
    vars.insert(vars.end(), F.elements[e2].vars.begin(), F.elements[e2].vars.end());
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    std::vector<std::size_t> vr;
    for (int v : vars) vr.push_back(F.gen_radix[v]);
    std::size_t len = 1;
    for (auto r : vr) len *= r;
    std::vector<Elem> d(vars.size()), a(k, 0);
    bool found = false;
    for (std::size_t idx = 0; idx < len && !found; ++idx) {
      tuple_digits(idx, vr, d);
      for (std::size_t j = 0; j < vars.size(); ++j) a[vars[j]] = d[j];
      found = eval_reduced(F.elements[e1], F.gen_radix, a) != eval_reduced(F.elements[e2], F.gen_radix, a);
    }
    if (!found) throw Error(Errc::NotApplicable, "two reduced functions coincide");
    add_assignment(a);
  }

  F.values = PointStore(F.assignments.size());
  std::vector<Elem> v(F.assignments.size());
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = eval_reduced(F.elements[e], F.gen_radix, F.assignments[s]);
    F.values.insert(v, F.elements[e].sort);
  }
  for (std::size_t g = 0; g < k; ++g) {
    ReducedFn p{gen_sorts[g], {static_cast<int>(g)}, {}};
    for (std::size_t x = 0; x < F.gen_radix[g]; ++x) p.table.push_back(static_cast<Elem>(x));
    auto it = std::lower_bound(F.elements.begin(), F.elements.end(), p);
    if (it == F.elements.end() || *it != p) throw Error(Errc::NotApplicable, "generator missing from the free algebra");
    F.gen_elements.push_back(static_cast<int>(it - F.elements.begin()));
  }
  return F;
}

ClosureResult free_algebra_literal(const SortedAlgebra& salg, const std::vector<int>& gen_sorts,
                                   const Limits& limits) {
  std::vector<std::size_t> radix;
  for (int s : gen_sorts) radix.push_back(salg.carriers[s]);
  std::size_t len = 1;
  for (auto r : radix) {
    len *= r;
    if (len > limits.max_elements) throw Error(Errc::ResourceLimit, "assignment space exceeds the element cap");
  }
  std::vector<std::vector<Elem>> gens(gen_sorts.size(), std::vector<Elem>(len));
  std::vector<Elem> d(radix.size());
  for (std::size_t c = 0; c < len; ++c) {
    tuple_digits(c, radix, d);
    for (std::size_t g = 0; g < d.size(); ++g) gens[g][c] = d[g];
  }
  std::vector<ClosureOp> ops;
  for (const auto& op : salg.ops) ops.push_back({op.in_sorts, op.out_sort, salg.radix(op.in_sorts), op.table});
  return close_points(len, ops, gens, gen_sorts, limits.max_elements);
}

// ------------------------------------------------------ the construction

Generators interp_generators(const SortedAlgebra& salg, const SortedTermOp& q) {
  if (q.arity() < 2) throw Error(Errc::NotApplicable, "q needs two slots");
  Generators g;
  for (std::size_t s = 0; s < salg.num_sorts(); ++s) {
    g.x.push_back(static_cast<int>(s));
    g.sorts.push_back(static_cast<int>(s));
    g.names.push_back("x" + std::to_string(s));
  }
  auto add = [&](int sort, const char* name) {
    g.sorts.push_back(sort);
    g.names.push_back(name);
    return static_cast<int>(g.sorts.size()) - 1;
  };
  g.a0 = add(q.in_sorts[0], "a0");
  g.a1 = add(q.in_sorts[0], "a1");
  g.b0 = add(q.in_sorts[1], "b0");
  g.b1 = add(q.in_sorts[1], "b1");
  g.z = add(q.out_sort, "z");
  return g;
}

Star star_and_constants(const TermData& td, const FreeAlgebra& F, const Generators& gens,
                        const SortedTermOp& q) {
  Star st;
  st.q = q;
  for (int i = 2; i < q.arity(); ++i) st.fill.push_back(gens.x[q.in_sorts[i]]);
  std::vector<int> args(q.arity());
  for (int i = 2; i < q.arity(); ++i) args[i] = F.generator(st.fill[i - 2]);
  int k = 0;
  for (int a : {gens.a0, gens.a1})
    for (int b : {gens.b0, gens.b1}) {
      args[0] = F.generator(a);
      args[1] = F.generator(b);
      st.constants[k++] = F.apply(td.salg, q, args);
    }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (st.constants[i] == st.constants[j])
        throw Error(Errc::NotDistinct, "constants " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  return st;
}

Congruence build_theta(const TermData& td, const FreeAlgebra& Fp, int f0, int z_gen) {
  const auto& salg = td.salg;
  const int n = static_cast<int>(Fp.size());
  const int z = Fp.generator(z_gen);
  std::vector<std::vector<int>> F_by_sort(salg.num_sorts()), all_by_sort(salg.num_sorts());
  for (int e = 0; e < n; ++e) {
    all_by_sort[Fp.sort(e)].push_back(e);
    if (!Fp.uses(e, z_gen)) F_by_sort[Fp.sort(e)].push_back(e);
  }
  UnionFind uf(n);
  std::vector<std::pair<int, int>> work;
  auto join = [&](int a, int b) {
    if (uf.unite(a, b)) work.push_back({a, b});
  };
  const int s0 = Fp.sort(f0);
  for (auto [c, j] : td.N) {
    const auto& t = td.T.terms[c];
    if (t.in_sorts[j] != s0) continue;
    std::vector<int> fixed{-1};
    std::vector<const std::vector<int>*> choices;
    for (int k = 0; k < t.arity(); ++k) choices.push_back(k == j ? &fixed : &F_by_sort[t.in_sorts[k]]);
    std::vector<int> args(t.arity());
    for_each_tuple(choices, [&](std::span<const int> u) {
      std::copy(u.begin(), u.end(), args.begin());
      args[j] = f0;
      int lhs = Fp.apply(salg, t, args);
      args[j] = z;
      join(lhs, Fp.apply(salg, t, args));
    });
  }
  // Close under translations by the generating ops.
  while (!work.empty()) {
    auto [a, b] = work.back();
    work.pop_back();
    for (int o : td.generating_ops) {
      const auto& op = salg.ops[o];
      const int k = static_cast<int>(op.in_sorts.size());
      for (int i = 0; i < k; ++i) {
        if (op.in_sorts[i] != Fp.sort(a)) continue;
        std::vector<int> fixed{-1};
        std::vector<const std::vector<int>*> choices;
        for (int p = 0; p < k; ++p) choices.push_back(p == i ? &fixed : &all_by_sort[op.in_sorts[p]]);
        std::vector<int> args(k);
        for_each_tuple(choices, [&](std::span<const int> u) {
          std::copy(u.begin(), u.end(), args.begin());
          args[i] = a;
          int lhs = Fp.apply_op(salg, o, args);
          args[i] = b;
          join(lhs, Fp.apply_op(salg, o, args));
        });
      }
    }
  }
  return Congruence::from_labels(uf.labels());
}

QuotientAlgebra::QuotientAlgebra(const TermData& td, const FreeAlgebra& Fp, Congruence theta)
    : td_(&td), Fp_(&Fp), theta_(std::move(theta)) {
  reps_.assign(theta_.num_blocks(), -1);
  for (std::size_t e = 0; e < theta_.blocks.size(); ++e)
    if (reps_[theta_.blocks[e]] < 0) reps_[theta_.blocks[e]] = static_cast<int>(e);
}

int QuotientAlgebra::apply(int t, std::span<const int> args) const {
  const bool cacheable = args.size() <= 3 && t < (1 << 16);
  std::uint64_t key = static_cast<std::uint64_t>(t);
  if (cacheable) {
    for (std::size_t k = 0; k < args.size(); ++k) key |= static_cast<std::uint64_t>(args[k] + 1) << (16 * (k + 1));
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  std::vector<int> r(args.size());
  for (std::size_t k = 0; k < args.size(); ++k) r[k] = reps_[args[k]];
  int out = cls(Fp_->apply(td_->salg, td_->T.terms[t], r));
  if (cacheable) memo_.emplace(key, out);
  return out;
}

CChecks check_C(const QuotientAlgebra& C, int z_gen) {
  CChecks ch;
  const auto& Fp = C.free();
  std::ostringstream d;
  std::unordered_map<int, int> seen;
  ch.embeds = true;
  for (int e = 0; e < static_cast<int>(Fp.size()); ++e) {
    if (Fp.uses(e, z_gen)) continue;
    auto [it, fresh] = seen.emplace(C.cls(e), e);
    if (!fresh && ch.embeds) {
      ch.embeds = false;
      d << "elements " << it->second << " and " << e << " of F collapse; ";
    }
  }
  const int z = Fp.generator(z_gen);
  int mates = 0;
  for (int e = 0; e < static_cast<int>(Fp.size()); ++e)
    if (e != z && C.cls(e) == C.cls(z)) ++mates;
  ch.z_isolated = mates == 0;
  if (!ch.z_isolated) d << "z shares its class with " << mates << " elements; ";
  ch.detail = d.str();
  return ch;
}

ProptoPartition propto_C(const QuotientAlgebra& C) {
  const auto& td = C.terms();
  const auto& Fp = C.free();
  const int n = static_cast<int>(C.size());
  ProptoPartition p;
  p.label.resize(n);
  for (int c = 0; c < n; ++c) p.label[c] = C.sort(c);
  std::vector<std::vector<int>> gens_by_sort(td.salg.num_sorts());
  for (std::size_t g = 0; g < Fp.gen_sorts.size(); ++g)
    gens_by_sort[Fp.gen_sorts[g]].push_back(C.cls(Fp.generator(static_cast<int>(g))));
  for (auto [c, j] : td.instances) {
    const auto& t = td.T.terms[c];
    std::vector<int> fixed{-1};
    std::vector<const std::vector<int>*> choices;
    for (int k = 0; k < t.arity(); ++k) choices.push_back(k == j ? &fixed : &gens_by_sort[t.in_sorts[k]]);
    std::vector<int> args(t.arity());
    for_each_tuple(choices, [&](std::span<const int> u) {
      std::copy(u.begin(), u.end(), args.begin());
      std::vector<std::int64_t> key(n, -1);
      for (int a = 0; a < n; ++a) {
        if (C.sort(a) != t.in_sorts[j]) continue;
        args[j] = a;
        key[a] = C.apply(c, args);
      }
      refine(p.label, key);
    });
  }
  return p;
}

// ----------------------------------------------------------------- D(G)

int DAlgebra::apply(int t, std::span<const int> args) const {
  std::vector<Elem> buf(gamma);
  std::vector<int> a(args.size());
  for (std::size_t g = 0; g < gamma; ++g) {
    for (std::size_t k = 0; k < args.size(); ++k) a[k] = points.at(args[k])[g];
    buf[g] = static_cast<Elem>(C->apply(t, a));
  }
  auto f = points.find(buf, C->terms().T.terms[t].out_sort);
  return f ? static_cast<int>(*f) : -1;
}

DAlgebra build_D(const QuotientAlgebra& C, const Generators& gens, const Star& star,
                 const BipartiteGraph& g, const Limits& limits) {
  g.validate();
  const auto& Fp = C.free();
  const auto& td = C.terms();
  DAlgebra D;
  D.C = &C;
  D.gamma = static_cast<std::size_t>(g.reds + g.blues + 2);
  D.points = PointStore(D.gamma);
  auto cls_of_gen = [&](int gen) { return static_cast<Elem>(C.cls(Fp.generator(gen))); };
  auto add_gen = [&](std::vector<Elem> v, int sort, std::string name) {
    D.gens.push_back(std::move(v));
    D.gen_sorts.push_back(sort);
    D.gen_names.push_back(std::move(name));
  };
  for (std::size_t s = 0; s < gens.x.size(); ++s)
    add_gen(std::vector<Elem>(D.gamma, cls_of_gen(gens.x[s])), gens.sorts[gens.x[s]], "iota_x" + std::to_string(s));
  for (int gen : {gens.a0, gens.a1, gens.b0, gens.b1})
    add_gen(std::vector<Elem>(D.gamma, cls_of_gen(gen)), gens.sorts[gen], "iota_" + gens.names[gen]);
  for (int v = 0; v < g.reds; ++v) {
    std::vector<Elem> p(D.gamma, cls_of_gen(gens.a0));
    p[v] = cls_of_gen(gens.a1);
    add_gen(p, gens.sorts[gens.a0], "chi_r" + std::to_string(v));
  }
  for (int w = 0; w < g.blues; ++w) {
    std::vector<Elem> p(D.gamma, cls_of_gen(gens.b0));
    p[g.reds + w] = cls_of_gen(gens.b1);
    add_gen(p, gens.sorts[gens.b0], "chi_b" + std::to_string(w));
  }
  std::array<Elem, 4> k{};
  for (int i = 0; i < 4; ++i) k[i] = static_cast<Elem>(C.cls(star.constants[i]));
  const Elem zc = cls_of_gen(gens.z);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [v, w] = g.edges[e];
    for (int suit = 0; suit < 2; ++suit) {
      std::vector<Elem> p(D.gamma, k[0]);
      p[v] = k[2];
      p[g.reds + w] = k[1];
      p[suit == 0 ? D.club() : D.spade()] = zc;
      add_gen(p, star.q.out_sort, (suit == 0 ? "chi_club_e" : "chi_spade_e") + std::to_string(e));
    }
  }

  // Every element is a member of T applied to generators.
  std::vector<std::vector<int>> by_sort(td.salg.num_sorts());
  for (std::size_t i = 0; i < D.gens.size(); ++i) by_sort[D.gen_sorts[i]].push_back(static_cast<int>(i));
  std::vector<Elem> buf(D.gamma);
  std::size_t work = 0;
  for (std::size_t c = 0; c < td.T.terms.size(); ++c) {
    const auto& t = td.T.terms[c];
    std::vector<const std::vector<int>*> choices;
    for (int s : t.in_sorts) choices.push_back(&by_sort[s]);
    std::vector<int> a(t.arity());
    auto add = [&](std::span<const int> sigma) {
      if (++work > limits.max_tables) throw Error(Errc::ResourceLimit, "D enumeration exceeds the table cap");
      for (std::size_t x = 0; x < D.gamma; ++x) {
        for (int i = 0; i < t.arity(); ++i) a[i] = D.gens[sigma[i]][x];
        buf[x] = static_cast<Elem>(C.apply(static_cast<int>(c), a));
      }
      D.points.insert(buf, t.out_sort);
    };
    if (t.arity() == 0) {
      add({});
    } else {
      for_each_tuple(choices, add);
    }
    if (D.points.size() > limits.max_elements) throw Error(Errc::ResourceLimit, "D exceeds the element cap");
  }
  for (std::size_t i = 0; i < D.gens.size(); ++i) {
    auto f = D.points.find(D.gens[i], D.gen_sorts[i]);
    if (!f) throw Error(Errc::NotApplicable, "generator " + D.gen_names[i] + " missing from D");
    D.gen_index.push_back(static_cast<int>(*f));
  }
  return D;
}

ProptoPartition propto_D(const DAlgebra& D) {
  const auto& td = D.C->terms();
  const int n = static_cast<int>(D.size());
  ProptoPartition p;
  p.label.resize(n);
  for (int e = 0; e < n; ++e) p.label[e] = D.sort(e);
  std::vector<std::vector<int>> gens_by_sort(td.salg.num_sorts());
  for (std::size_t g = 0; g < D.gens.size(); ++g) gens_by_sort[D.gen_sorts[g]].push_back(D.gen_index[g]);
  for (auto [c, j] : td.instances) {
    const auto& t = td.T.terms[c];
    std::vector<int> fixed{-1};
    std::vector<const std::vector<int>*> choices;
    for (int k = 0; k < t.arity(); ++k) choices.push_back(k == j ? &fixed : &gens_by_sort[t.in_sorts[k]]);
    std::vector<int> args(t.arity());
    for_each_tuple(choices, [&](std::span<const int> u) {
      std::copy(u.begin(), u.end(), args.begin());
      std::vector<std::int64_t> key(n, -1);
      for (int a = 0; a < n; ++a) {
        if (D.sort(a) != t.in_sorts[j]) continue;
        args[j] = a;
        int r = D.apply(c, args);
        if (r < 0) throw Error(Errc::NotApplicable, "D is not closed under a term");
        key[a] = r;
      }
      refine(p.label, key);
    });
  }
  return p;
}

ProptoPartition propto_D_stalkwise(const DAlgebra& D, const ProptoPartition& onC) {
  const int n = static_cast<int>(D.size());
  ProptoPartition p;
  p.label.resize(n);
  for (int e = 0; e < n; ++e) p.label[e] = D.sort(e);
  for (std::size_t g = 0; g < D.gamma; ++g) {
    std::vector<std::int64_t> key(n);
    for (int e = 0; e < n; ++e) key[e] = onC.label[D.points.at(e)[g]];
    refine(p.label, key);
  }
  return p;
}

bool Preorder::leq(int x, int y) const { return std::binary_search(down[y].begin(), down[y].end(), x); }

Preorder leq_sim(const DAlgebra& D) {
  const auto& T = D.C->terms().T.terms;
  const int n = static_cast<int>(D.size());
  Preorder pre;
  pre.down.resize(n);
  std::vector<int> consts;
  for (std::size_t c = 0; c < T.size(); ++c)
    if (T[c].arity() == 0) consts.push_back(D.apply(static_cast<int>(c), {}));
  for (int y = 0; y < n; ++y) {
    auto& d = pre.down[y];
    for (std::size_t c = 0; c < T.size(); ++c) {
      if (T[c].arity() != 1 || T[c].in_sorts[0] != D.sort(y)) continue;
      int arg = y;
      d.push_back(D.apply(static_cast<int>(c), std::span<const int>(&arg, 1)));
    }
    d.insert(d.end(), consts.begin(), consts.end());
    if (std::find(d.begin(), d.end(), -1) != d.end()) throw Error(Errc::NotApplicable, "D is not closed under a unary term");
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  UnionFind uf(n);
  for (int y = 0; y < n; ++y)
    for (int x : pre.down[y])
      if (pre.leq(y, x)) uf.unite(x, y);
  pre.sim = uf.labels();
  return pre;
}

DefinableSets definable_sets(const DAlgebra& D, const Star& star, const ProptoPartition& propto,
                             const Preorder& pre) {
  const auto& td = D.C->terms();
  const auto& T = td.T.terms;
  const int n = static_cast<int>(D.size());
  DefinableSets ds;

  // Images of terms that are not right-invertible.
  std::vector<bool> image(n, false);
  std::vector<std::vector<int>> gens_by_sort(td.salg.num_sorts());
  for (std::size_t g = 0; g < D.gens.size(); ++g) gens_by_sort[D.gen_sorts[g]].push_back(D.gen_index[g]);
  for (std::size_t c = 0; c < T.size(); ++c) {
    if (td.right_invertible[c]) continue;
    std::vector<const std::vector<int>*> choices;
    for (int s : T[c].in_sorts) choices.push_back(&gens_by_sort[s]);
    auto mark = [&](std::span<const int> args) { image[D.apply(static_cast<int>(c), args)] = true; };
    if (T[c].arity() == 0) {
      mark({});
    } else {
      for_each_tuple(choices, mark);
    }
  }
  ds.nrinv.resize(n);
  for (int e = 0; e < n; ++e) {
    auto p = D.points.at(e);
    bool diag = std::all_of(p.begin(), p.end(), [&](Elem v) { return v == p[0]; });
    ds.nrinv[e] = !diag && !image[e];
  }

  // Maximal classes among NRINV.
  std::vector<bool> bad(n, false);
  for (int y = 0; y < n; ++y) {
    if (!ds.nrinv[y]) continue;
    for (int x : pre.down[y])
      if (ds.nrinv[x] && !pre.leq(y, x)) bad[x] = true;
  }
  ds.gen.resize(n);
  for (int e = 0; e < n; ++e) ds.gen[e] = ds.nrinv[e] && !bad[e];

  // EDGEGEN: some x' ~ x is propto-related to a GEN element outside its class.
  std::unordered_map<int, std::set<int>> sims_by_propto;
  for (int e = 0; e < n; ++e)
    if (ds.gen[e]) sims_by_propto[propto.label[e]].insert(pre.sim[e]);
  std::set<int> edge_sims;
  for (int e = 0; e < n; ++e)
    if (ds.gen[e] && sims_by_propto[propto.label[e]].size() > 1) edge_sims.insert(pre.sim[e]);
  ds.edgegen.resize(n);
  ds.vertexgen.resize(n);
  for (int e = 0; e < n; ++e) {
    ds.edgegen[e] = ds.gen[e] && edge_sims.count(pre.sim[e]) > 0;
    ds.vertexgen[e] = ds.gen[e] && !ds.edgegen[e];
  }

  for (int e = 0; e < n; ++e)
    if (ds.vertexgen[e] &&
        std::find(ds.vertex_classes.begin(), ds.vertex_classes.end(), pre.sim[e]) == ds.vertex_classes.end())
      ds.vertex_classes.push_back(pre.sim[e]);

  // EDGE(x, y): some x' ~ x, y' ~ y with x' * y' propto an EDGEGEN element.
  std::set<int> edge_propto;
  for (int e = 0; e < n; ++e)
    if (ds.edgegen[e]) edge_propto.insert(propto.label[e]);
  const int qi = find_in_termset(td.T, star.q);
  if (qi < 0) throw Error(Errc::NotApplicable, "q is not a member of the term set");
  std::vector<int> args(star.q.arity());
  for (std::size_t i = 0; i < star.fill.size(); ++i) {
    int fill_sort = star.q.in_sorts[i + 2];
    // The diagonal generator iota_x of that sort is generator number fill_sort.
    args[i + 2] = D.gen_index[fill_sort];
  }
  std::unordered_map<int, std::vector<int>> members;
  for (int e = 0; e < n; ++e) members[pre.sim[e]].push_back(e);
  for (std::size_t xi = 0; xi < ds.vertex_classes.size(); ++xi)
    for (std::size_t yi = 0; yi < ds.vertex_classes.size(); ++yi) {
      bool found = false;
      for (int xp : members[ds.vertex_classes[xi]]) {
        if (found) break;
        if (D.sort(xp) != star.q.in_sorts[0]) continue;
        for (int yp : members[ds.vertex_classes[yi]]) {
          if (D.sort(yp) != star.q.in_sorts[1]) continue;
          args[0] = xp;
          args[1] = yp;
          int w = D.apply(qi, args);
          if (w >= 0 && edge_propto.count(propto.label[w])) {
            found = true;
            break;
          }
        }
      }
      if (found) ds.edge.push_back({static_cast<int>(xi), static_cast<int>(yi)});
    }
  return ds;
}

Recovery recover_graph(const DefinableSets& sets, const BipartiteGraph& input) {
  Recovery r;
  const int m = static_cast<int>(sets.vertex_classes.size());
  std::vector<bool> left(m), right(m);
  for (auto [x, y] : sets.edge) {
    left[x] = true;
    right[y] = true;
  }
  std::vector<int> red_of(m, -1), blue_of(m, -1);
  std::ostringstream why;
  for (int v = 0; v < m; ++v) {
    if (left[v] && right[v]) why << "vertex class " << v << " is on both sides; ";
    if (!left[v] && !right[v]) why << "vertex class " << v << " has no edge; ";
    if (left[v]) red_of[v] = r.graph.reds++;
    if (right[v] && !left[v]) blue_of[v] = r.graph.blues++;
  }
  for (auto [x, y] : sets.edge)
    if (red_of[x] >= 0 && blue_of[y] >= 0) r.graph.edges.push_back({red_of[x], blue_of[y]});
  r.problem = why.str();
  if (r.problem.empty()) r.iso = find_isomorphism(r.graph, input);
  return r;
}

// ----------------------------------------------------------- the pipeline

namespace {

std::string fn_text(const FreeAlgebra& F, const Generators& g, int e) {
  const auto& f = F.elements[e];
  std::ostringstream s;
  s << "f(";
  for (std::size_t i = 0; i < f.vars.size(); ++i) s << (i ? "," : "") << g.names[f.vars[i]];
  s << ")=[";
  for (std::size_t i = 0; i < f.table.size(); ++i) s << (i ? " " : "") << f.table[i];
  s << "]";
  return s.str();
}

}  // namespace

InterpretationReport interpret(const SortedAlgebra& flat, const BipartiteGraph& g, const Limits& limits) {
  return interpret(analyze_terms(flat, limits), g, limits);
}

namespace {

InterpretationReport graph_stage(const TermData& td, const QuotientAlgebra& C, const Generators& gens,
                                 const Star& star, const ProptoPartition& pC, const BipartiteGraph& g,
                                 InterpretationReport rep, const Limits& limits) {
  auto D = build_D(C, gens, star, g, limits);
  rep.D_size = D.size();
  auto pD = propto_D(D);
  auto pS = propto_D_stalkwise(D, pC);
  rep.propto_stalkwise = Congruence::from_labels(pD.label) == Congruence::from_labels(pS.label);

  // Right-invertible unary members preserve propto.
  for (std::size_t c = 0; c < td.T.terms.size(); ++c) {
    const auto& t = td.T.terms[c];
    if (t.arity() != 1 || !td.right_invertible[c]) continue;
    std::map<int, std::map<int, std::size_t>> by_class;
    for (int a = 0; a < static_cast<int>(D.size()); ++a) {
      if (D.sort(a) != t.in_sorts[0]) continue;
      int img = D.apply(static_cast<int>(c), std::span<const int>(&a, 1));
      ++by_class[pD.label[a]][pD.label[img]];
    }
    for (const auto& [cls, images] : by_class) {
      std::size_t total = 0, same = 0;
      for (auto [lbl, cnt] : images) {
        total += cnt;
        same += cnt * cnt;
      }
      rep.preservation_checked += total * total;
      rep.preservation_failed += total * total - same;
    }
  }

  auto pre = leq_sim(D);
  auto sets = definable_sets(D, star, pD, pre);
  for (int e = 0; e < static_cast<int>(D.size()); ++e) {
    rep.nrinv += sets.nrinv[e];
    rep.gen += sets.gen[e];
    rep.edgegen += sets.edgegen[e];
    rep.vertexgen += sets.vertexgen[e];
  }
  // Off-diagonal generators follow the diagonal ones.
  const std::size_t diag = gens.x.size() + 4;
  rep.generators_in_nrinv = true;
  std::set<int> gen_sims, class_sims;
  rep.gen_classes_match = true;
  rep.edgegen_matches = true;
  for (std::size_t i = diag; i < D.gens.size(); ++i) {
    int e = D.gen_index[i];
    rep.generators_in_nrinv = rep.generators_in_nrinv && sets.nrinv[e];
    if (!gen_sims.insert(pre.sim[e]).second) rep.gen_classes_match = false;
    bool edge_type = D.gen_names[i].rfind("chi_club", 0) == 0 || D.gen_names[i].rfind("chi_spade", 0) == 0;
    if (sets.edgegen[e] != edge_type || !sets.gen[e]) rep.edgegen_matches = false;
  }
  for (int e = 0; e < static_cast<int>(D.size()); ++e)
    if (sets.gen[e]) class_sims.insert(pre.sim[e]);
  if (class_sims != gen_sims) rep.gen_classes_match = false;

  auto rec = recover_graph(sets, g);
  rep.recovered = rec.graph;
  rep.isomorphic = rec.iso.has_value();
  rep.problem = rec.problem;
  if (!rep.isomorphic && rep.problem.empty()) rep.problem = "recovered graph is not isomorphic to the input";
  return rep;
}


}  // namespace

InterpretationReport interpret(const TermData& td, const BipartiteGraph& g, const Limits& limits) {
  return interpret_all(td, {g}, limits).front();
}

std::vector<InterpretationReport> interpret_all(const TermData& td, const std::vector<BipartiteGraph>& graphs,
                                                const Limits& limits) {
  for (const auto& g : graphs) g.validate();
  InterpretationReport base;
  auto& rep = base;
  rep.T_size = td.T.terms.size();
  SortedTermOp q;
  try {
    q = find_binary_noninvertible_term(td.salg, td.T);
  } catch (const Error& e) {
    if (e.code() == Errc::EssentiallyUnary) throw Error(Errc::NotApplicable, "the flat algebra is essentially unary");
    throw;
  }
  rep.q = q.witness.str();
  auto gens = interp_generators(td.salg, q);
  auto Fp = free_algebra(td, gens.sorts, limits);
  rep.Fp_size = Fp.size();
  for (int e = 0; e < static_cast<int>(Fp.size()); ++e)
    if (!Fp.uses(e, gens.z)) ++rep.F_size;
  auto star = star_and_constants(td, Fp, gens, q);
  rep.constants_distinct = true;
  for (int i = 0; i < 4; ++i) rep.constants[i] = fn_text(Fp, gens, star.constants[i]);

  QuotientAlgebra C(td, Fp, build_theta(td, Fp, star.constants[0], gens.z));
  rep.C_size = C.size();
  auto ch = check_C(C, gens.z);
  rep.embeds = ch.embeds;
  rep.z_isolated = ch.z_isolated;
  auto pC = propto_C(C);
  rep.zero_propto_z = pC.related(C.cls(star.constants[0]), C.cls(Fp.generator(gens.z)));
  rep.constants_not_propto = true;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (pC.related(C.cls(star.constants[i]), C.cls(star.constants[j]))) {
        rep.constants_not_propto = false;
        rep.propto_constant_pairs.push_back({i, j});
      }

  std::vector<InterpretationReport> out;
  for (const auto& g : graphs) {
    out.push_back(graph_stage(td, C, gens, star, pC, g, base, limits));
  }
  return out;
}

std::string InterpretationReport::text() const {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::ostringstream out;
  out << "term set size: " << T_size << "\n";
  out << "q: " << q << "\n";
  out << "F: " << F_size << " elements, F': " << Fp_size << ", C: " << C_size << ", D: " << D_size << "\n";
  for (int i = 0; i < 4; ++i) out << "constant " << i << ": " << constants[i] << "\n";
  out << "F embeds in C: " << yn(embeds) << "\n";
  out << "z isolated: " << yn(z_isolated) << "\n";
  out << "0 propto z: " << yn(zero_propto_z) << "\n";
  out << "constants distinct: " << yn(constants_distinct) << "\n";
  out << "constants pairwise not propto: " << yn(constants_not_propto);
  for (auto [i, j] : propto_constant_pairs) out << " (" << i << "~" << j << ")";
  out << "\n";
  out << "NRINV " << nrinv << ", GEN " << gen << ", EDGEGEN " << edgegen << ", VERTEXGEN " << vertexgen << "\n";
  out << "off-diagonal generators in NRINV: " << yn(generators_in_nrinv) << "\n";
  out << "GEN classes match generators: " << yn(gen_classes_match) << "\n";
  out << "EDGEGEN matches edge generators: " << yn(edgegen_matches) << "\n";
  out << "propto direct equals stalkwise: " << yn(propto_stalkwise) << "\n";
  out << "propto preservation: " << preservation_checked - preservation_failed << "/" << preservation_checked << "\n";
  out << "recovered graph:\n" << recovered.to_text();
  out << "isomorphic: " << yn(isomorphic) << "\n";
  if (!problem.empty()) out << "problem: " << problem << "\n";
  return out.str();
}

}  // namespace ualg
