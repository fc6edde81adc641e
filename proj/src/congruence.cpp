#include "ualg/congruence.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ualg/union_find.hpp"

namespace ualg {

Congruence Congruence::from_labels(const std::vector<int>& labels) {
  Congruence c;
  c.blocks.resize(labels.size());
  std::map<int, int> ids;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = ids.emplace(labels[i], static_cast<int>(ids.size()));
    c.blocks[i] = it->second;
  }
  return c;
}

Congruence Congruence::equality(std::size_t n) {
  Congruence c;
  for (std::size_t i = 0; i < n; ++i) c.blocks.push_back(static_cast<int>(i));
  return c;
}

Congruence Congruence::all(std::size_t n) {
  Congruence c;
  c.blocks.assign(n, 0);
  return c;
}

Congruence Congruence::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
  }
  if (toks.size() < 2 || toks[0] != "cong") throw Error(Errc::ParseError, "expected 'cong n'");
  long n = 0;
  try {
    n = std::stol(toks[1]);
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, "bad congruence size '" + toks[1] + "'");
  }
  if (n <= 0 || static_cast<std::size_t>(n) + 2 != toks.size())
    throw Error(Errc::ParseError, "congruence file must list exactly n block ids");
  std::vector<int> labels;
  for (long i = 0; i < n; ++i) {
    try {
      labels.push_back(std::stoi(toks[2 + i]));
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad block id '" + toks[2 + i] + "'");
    }
  }
  return from_labels(labels);
}

Congruence Congruence::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

int Congruence::num_blocks() const {
  int m = 0;
  for (int b : blocks) m = std::max(m, b + 1);
  return m;
}

std::vector<std::vector<Elem>> Congruence::classes() const {
  std::vector<std::vector<Elem>> out(num_blocks());
  for (std::size_t i = 0; i < blocks.size(); ++i) out[blocks[i]].push_back(static_cast<Elem>(i));
  return out;
}

std::size_t Congruence::max_class_size() const {
  std::size_t m = 0;
  for (const auto& c : classes()) m = std::max(m, c.size());
  return m;
}

bool Congruence::refines(const Congruence& other) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    for (std::size_t j = i + 1; j < blocks.size(); ++j)
      if (blocks[i] == blocks[j] && other.blocks[i] != other.blocks[j]) return false;
  return true;
}

std::string Congruence::to_text() const {
  std::ostringstream out;
  out << "cong " << blocks.size() << "\n";
  for (std::size_t i = 0; i < blocks.size(); ++i) out << (i ? " " : "") << blocks[i];
  out << "\n";
  return out.str();
}

std::string Congruence::str() const {
  std::string s;
  for (const auto& c : classes()) {
    s += "{";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    s += "}";
  }
  return s;
}

bool is_congruence(const FiniteAlgebra& alg, const std::vector<int>& partition) {
  const std::size_t n = alg.size();
  if (partition.size() != n) throw Error(Errc::SizeMismatch, "partition does not cover the universe");
  std::vector<Elem> args;
  for (const auto& op : alg.ops()) {
    args.assign(op.arity, 0);
    std::size_t cnt = op.table.size();
    std::vector<std::size_t> radix(op.arity, n);
    // Compatibility with single-slot changes inside a block suffices.
    for (std::size_t idx = 0; idx < cnt; ++idx) {
      tuple_digits(idx, radix, args);
      Elem out = op.table[idx];
      for (int p = 0; p < op.arity; ++p) {
        Elem orig = args[p];
        for (std::size_t b = 0; b < n; ++b) {
          if (b == orig || partition[b] != partition[orig]) continue;
          args[p] = static_cast<Elem>(b);
          if (partition[op.table[tuple_index(args, n)]] != partition[out]) return false;
        }
        args[p] = orig;
      }
    }
  }
  return true;
}

namespace {

// Closes a union-find under all basic translations.
void close_under_translations(const FiniteAlgebra& alg, UnionFind& uf,
                              std::deque<std::pair<Elem, Elem>> queue) {
  const std::size_t n = alg.size();
  std::vector<Elem> args;
  while (!queue.empty()) {
    auto [a, b] = queue.front();
    queue.pop_front();
    for (const auto& op : alg.ops()) {
      if (op.arity == 0) continue;
      std::vector<std::size_t> radix(op.arity - 1, n);
      std::size_t cnt = ipow(n, op.arity - 1);
      std::vector<Elem> rest(op.arity - 1);
      args.resize(op.arity);
      for (int p = 0; p < op.arity; ++p) {
        for (std::size_t r = 0; r < cnt; ++r) {
          tuple_digits(r, radix, rest);
          for (int q = 0, k = 0; q < op.arity; ++q) args[q] = q == p ? a : rest[k++];
          Elem x = op.table[tuple_index(args, n)];
          args[p] = b;
          Elem y = op.table[tuple_index(args, n)];
          if (uf.unite(x, y)) queue.emplace_back(x, y);
        }
      }
    }
  }
}

}  // namespace

Congruence cg(const FiniteAlgebra& alg, const std::vector<std::pair<Elem, Elem>>& pairs) {
  UnionFind uf(alg.size());
  std::deque<std::pair<Elem, Elem>> queue;
  for (auto [a, b] : pairs) {
    if (a >= alg.size() || b >= alg.size()) throw Error(Errc::SizeMismatch, "pair outside universe");
    if (uf.unite(a, b)) queue.emplace_back(a, b);
  }
  close_under_translations(alg, uf, std::move(queue));
  return Congruence::from_labels(uf.labels());
}

std::vector<Congruence> con_lattice(const FiniteAlgebra& alg, const Limits& limits) {
  const std::size_t n = alg.size();
  std::set<Congruence> seen;
  std::vector<Congruence> out;
  auto add = [&](const Congruence& c) {
    if (seen.insert(c).second) {
      out.push_back(c);
      if (out.size() > limits.max_elements)
        throw Error(Errc::ResourceLimit, "congruence lattice exceeds element cap");
    }
  };
  add(Congruence::equality(n));
  for (Elem a = 0; a < n; ++a)
    for (Elem b = a + 1; b < n; ++b) add(cg(alg, {{a, b}}));
  // Joins of congruences are transitive closures of their union.
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      UnionFind uf(n);
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = x + 1; y < n; ++y)
          if (out[i].blocks[x] == out[i].blocks[y] || out[j].blocks[x] == out[j].blocks[y])
            uf.unite(x, y);
      add(Congruence::from_labels(uf.labels()));
    }
  std::sort(out.begin(), out.end(), [](const Congruence& x, const Congruence& y) {
    int bx = x.num_blocks(), by = y.num_blocks();
    return bx != by ? bx > by : x < y;
  });
  return out;
}

FiniteAlgebra quotient(const FiniteAlgebra& alg, const Congruence& theta) {
  if (theta.algebra_size() != alg.size()) throw Error(Errc::SizeMismatch, "congruence size mismatch");
  if (!is_congruence(alg, theta.blocks)) throw Error(Errc::NotACongruence, "not a congruence");
  auto cls = theta.classes();
  const std::size_t m = cls.size();
  std::vector<Operation> ops;
  for (const auto& op : alg.ops()) {
    Operation q{op.name, op.arity, std::vector<Elem>(ipow(m, op.arity))};
    std::vector<std::size_t> radix(op.arity, m);
    std::vector<Elem> blk(op.arity), reps(op.arity);
    for (std::size_t idx = 0; idx < q.table.size(); ++idx) {
      tuple_digits(idx, radix, blk);
      for (int p = 0; p < op.arity; ++p) reps[p] = cls[blk[p]].front();
      q.table[idx] = static_cast<Elem>(theta.blocks[alg.apply(static_cast<int>(&op - alg.ops().data()), reps)]);
    }
    ops.push_back(std::move(q));
  }
  return FiniteAlgebra(m, std::move(ops));
}

std::string TCFailure::str() const {
  auto tup = [](const std::vector<Elem>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
  };
  std::ostringstream out;
  out << "term " << term.str() << " rows a=" << a << " b=" << b << " c=" << c << " columns u="
      << tup(u) << " v=" << tup(v) << " outputs " << outputs[0] << "," << outputs[1] << ","
      << outputs[2] << "," << outputs[3];
  return out.str();
}

int default_arity_bound(const Congruence& tau) {
  std::size_t m = tau.max_class_size();
  int lg = 0;
  while ((std::size_t{1} << lg) < m) ++lg;
  return lg + 2;
}

namespace {

// Column functions r -> t(r, u) for one row class and one column class tuple.
struct ColumnGroup {
  std::vector<std::vector<Elem>> funcs;
  std::vector<std::vector<Elem>> first_column;
};

template <class Visit>
void for_each_group(const FiniteAlgebra&, const Congruence& tau, const TermOperation& t,
                    Visit&& visit) {
  auto cls = tau.classes();
  const std::size_t m = cls.size();
  const int k = t.arity - 1;
  std::vector<std::size_t> class_radix(k, m);
  std::size_t groups = ipow(m, k);
  std::vector<Elem> ctuple(k), col(k), args(t.arity);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = cls[r];
    for (std::size_t g = 0; g < groups; ++g) {
      tuple_digits(g, class_radix, ctuple);
      std::vector<std::size_t> radix(k);
      for (int i = 0; i < k; ++i) radix[i] = cls[ctuple[i]].size();
      std::size_t cols = 1;
      for (auto x : radix) cols *= x;
      ColumnGroup grp;
      std::map<std::vector<Elem>, std::size_t> index;
      std::vector<Elem> f(row.size());
      for (std::size_t c = 0; c < cols; ++c) {
        tuple_digits(c, radix, col);
        for (int i = 0; i < k; ++i) args[i + 1] = cls[ctuple[i]][col[i]];
        for (std::size_t x = 0; x < row.size(); ++x) {
          args[0] = row[x];
          f[x] = t.at(args);
        }
        if (index.emplace(f, grp.funcs.size()).second) {
          grp.funcs.push_back(f);
          grp.first_column.emplace_back(args.begin() + 1, args.end());
        }
      }
      visit(row, grp);
    }
  }
}

std::vector<Elem> key_of(const TCFailure& f) {
  std::vector<Elem> key{f.a, f.b, f.c};
  key.insert(key.end(), f.u.begin(), f.u.end());
  key.insert(key.end(), f.v.begin(), f.v.end());
  return key;
}

void keep_least(std::optional<TCFailure>& best, TCFailure cand) {
  if (!best || key_of(cand) < key_of(*best)) best = std::move(cand);
}

}  // namespace

std::optional<TCFailure> strong_tc_for(const FiniteAlgebra& alg, const Congruence& tau,
                                       const TermOperation& t) {
  if (t.arity < 2) return std::nullopt;
  std::optional<TCFailure> best;
  for_each_group(alg, tau, t, [&](const std::vector<Elem>& row, const ColumnGroup& grp) {
    const std::size_t n = row.size();
    for (std::size_t i = 0; i < grp.funcs.size(); ++i)
      for (std::size_t j = 0; j < grp.funcs.size(); ++j) {
        if (i == j) continue;
        const auto& F = grp.funcs[i];
        const auto& G = grp.funcs[j];
        std::size_t c = 0;
        while (F[c] == G[c]) ++c;
        for (std::size_t a = 0; a < n; ++a) {
          std::size_t b = 0;
          while (b < n && F[a] != G[b]) ++b;
          if (b == n) continue;
          TCFailure f{t.witness, t.arity, row[a], row[b], row[c], grp.first_column[i],
                      grp.first_column[j], {F[a], G[b], F[c], G[c]}};
          keep_least(best, std::move(f));
          break;
        }
      }
  });
  return best;
}

std::optional<TCFailure> abelian_tc_for(const FiniteAlgebra& alg, const Congruence& tau,
                                        const TermOperation& t) {
  if (t.arity < 2) return std::nullopt;
  std::optional<TCFailure> best;
  for_each_group(alg, tau, t, [&](const std::vector<Elem>& row, const ColumnGroup& grp) {
    const std::size_t n = row.size();
    for (std::size_t i = 0; i < grp.funcs.size(); ++i)
      for (std::size_t j = 0; j < grp.funcs.size(); ++j) {
        if (i == j) continue;
        const auto& F = grp.funcs[i];
        const auto& G = grp.funcs[j];
        std::size_t a = 0;
        while (a < n && F[a] != G[a]) ++a;
        if (a == n) continue;
        std::size_t b = 0;
        while (F[b] == G[b]) ++b;
        TCFailure f{t.witness, t.arity, row[a], row[b], row[b], grp.first_column[i],
                    grp.first_column[j], {F[a], G[a], F[b], G[b]}};
        keep_least(best, std::move(f));
      }
  });
  return best;
}

namespace {

template <class Check>
TCResult run_tc(const FiniteAlgebra& alg, const Congruence& tau, int arity_bound,
                const Limits& limits, Check check) {
  if (tau.algebra_size() != alg.size()) throw Error(Errc::SizeMismatch, "congruence size mismatch");
  TCResult res;
  res.arity_bound = arity_bound;
  for (int n = 2; n <= arity_bound && res.pass; ++n) {
    for_each_term_operation(
        alg, n,
        [&](const TermOperation& t) {
          ++res.terms_checked;
          if (auto f = check(alg, tau, t)) {
            res.pass = false;
            res.failure = std::move(f);
            return false;
          }
          return true;
        },
        std::nullopt, limits);
  }
  return res;
}

}  // namespace

TCResult strong_term_condition(const FiniteAlgebra& alg, const Congruence& tau, int arity_bound,
                               const Limits& limits) {
  return run_tc(alg, tau, arity_bound, limits, strong_tc_for);
}

TCResult abelian_term_condition(const FiniteAlgebra& alg, const Congruence& tau, int arity_bound,
                                const Limits& limits) {
  return run_tc(alg, tau, arity_bound, limits, abelian_tc_for);
}

std::pair<TCResult, TCResult> both_term_conditions(const FiniteAlgebra& alg, const Congruence& tau,
                                                   int arity_bound, const Limits& limits) {
  if (tau.algebra_size() != alg.size()) throw Error(Errc::SizeMismatch, "congruence size mismatch");
  TCResult strong, abel;
  strong.arity_bound = abel.arity_bound = arity_bound;
  for (int n = 2; n <= arity_bound && (strong.pass || abel.pass); ++n) {
    for_each_term_operation(
        alg, n,
        [&](const TermOperation& t) {
          for (auto [res, check] : {std::pair{&strong, &strong_tc_for}, {&abel, &abelian_tc_for}}) {
            if (!res->pass) continue;
            ++res->terms_checked;
            if (auto f = check(alg, tau, t)) {
              res->pass = false;
              res->failure = std::move(f);
            }
          }
          return strong.pass || abel.pass;
        },
        std::nullopt, limits);
  }
  return {strong, abel};
}

RectangularityCertificate rectangularity_certificate(const FiniteAlgebra&,
                                                     const Congruence& tau,
                                                     const TermOperation& top,
                                                     const std::vector<int>& class_tuple) {
  if (static_cast<int>(class_tuple.size()) != top.arity)
    throw Error(Errc::ArityMismatch, "class tuple length differs from arity");
  auto cls = tau.classes();
  const int k = top.arity;
  std::vector<std::size_t> radix(k);
  for (int i = 0; i < k; ++i) radix[i] = cls.at(class_tuple[i]).size();
  std::size_t box = 1;
  for (auto r : radix) box *= r;
  std::vector<Elem> digits(k), args(k);
  std::vector<Elem> image(box);
  for (std::size_t idx = 0; idx < box; ++idx) {
    tuple_digits(idx, radix, digits);
    for (int i = 0; i < k; ++i) args[i] = cls[class_tuple[i]][digits[i]];
    image[idx] = top.at(args);
  }
  RectangularityCertificate cert;
  cert.output_class = tau.blocks[image[0]];
  for (Elem v : image)
    if (tau.blocks[v] != cert.output_class)
      throw Error(Errc::ClassMismatch, "box is not mapped into a single class");

  // E_i: x ~ y iff swapping x for y in slot i never changes the output.
  std::size_t stride = 1;
  std::vector<std::size_t> strides(k);
  for (int p = k; p-- > 0;) {
    strides[p] = stride;
    stride *= radix[p];
  }
  for (int p = 0; p < k; ++p) {
    UnionFind uf(radix[p]);
    for (std::size_t x = 0; x < radix[p]; ++x)
      for (std::size_t y = x + 1; y < radix[p]; ++y) {
        bool same = true;
        for (std::size_t idx = 0; idx < box && same; ++idx) {
          if ((idx / strides[p]) % radix[p] != 0) continue;
          same = image[idx + x * strides[p]] == image[idx + y * strides[p]];
        }
        if (same) uf.unite(x, y);
      }
    cert.relations.push_back(Congruence::from_labels(uf.labels()).blocks);
  }
  // Slotwise-related tuples agree by construction; check the converse.
  std::map<Elem, std::pair<std::vector<int>, std::size_t>> seen;
  for (std::size_t idx = 0; idx < box; ++idx) {
    tuple_digits(idx, radix, digits);
    std::vector<int> key(k);
    for (int i = 0; i < k; ++i) key[i] = cert.relations[i][digits[i]];
    auto [it, fresh] = seen.emplace(image[idx], std::make_pair(key, idx));
    if (!fresh && it->second.first != key) {
      std::vector<Elem> other(k);
      tuple_digits(it->second.second, radix, other);
      cert.x.resize(k);
      cert.y.resize(k);
      for (int i = 0; i < k; ++i) {
        cert.x[i] = cls[class_tuple[i]][other[i]];
        cert.y[i] = cls[class_tuple[i]][digits[i]];
      }
      cert.ok = false;
      return cert;
    }
  }
  cert.ok = true;
  return cert;
}

StronglyAbelianReport strongly_abelian_congruences(const FiniteAlgebra& alg,
                                                   std::optional<int> arity_bound,
                                                   const Limits& limits) {
  StronglyAbelianReport rep;
  rep.arity_bound = arity_bound.value_or(0);
  auto lattice = con_lattice(alg, limits);
  // Coarsest first; anything below a strongly abelian congruence is one too,
  // at its own default bound as well since that bound is no larger.
  std::vector<std::size_t> order(lattice.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lattice[a].num_blocks() < lattice[b].num_blocks(); });
  std::vector<bool> pass(lattice.size(), false);
  std::vector<std::size_t> passed;
  for (std::size_t i : order) {
    const auto& c = lattice[i];
    pass[i] = std::any_of(passed.begin(), passed.end(), [&](std::size_t p) { return c.refines(lattice[p]); });
    if (!pass[i]) pass[i] = strong_term_condition(alg, c, arity_bound.value_or(default_arity_bound(c)), limits).pass;
    if (pass[i]) passed.push_back(i);
  }
  for (std::size_t i = 0; i < lattice.size(); ++i)
    if (pass[i]) rep.congruences.push_back(lattice[i]);
  const std::size_t n = rep.congruences.size();
  rep.maximal.assign(n, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && rep.congruences[i] != rep.congruences[j] &&
          rep.congruences[i].refines(rep.congruences[j]))
        rep.maximal[i] = false;
  rep.unique_maximum = std::count(rep.maximal.begin(), rep.maximal.end(), true) == 1;
  return rep;
}

}  // namespace ualg
