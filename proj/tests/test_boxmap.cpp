#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "ualg/boxmap.hpp"

using namespace ualg;

namespace {

using Key = std::tuple<std::vector<int>, int, std::vector<Elem>>;

// Recomputes the boxmap keys directly: a slot is an input when some pair of
// box tuples differing only there has different images.
std::set<Key> naive_boxmap_keys(const FiniteAlgebra& alg, const Congruence& tau, int bound) {
  auto cls = tau.classes();
  const int m = static_cast<int>(cls.size());
  std::set<Key> keys;
  for (int n = 1; n <= bound; ++n)
    for (const auto& t : enumerate_term_operations(alg, n)) {
      std::vector<int> ct(n, 0);
      while (true) {
        std::vector<std::vector<Elem>> box{{}};
        for (int i = 0; i < n; ++i) {
          std::vector<std::vector<Elem>> next;
          for (const auto& p : box)
            for (Elem e : cls[ct[i]]) {
              auto q = p;
              q.push_back(e);
              next.push_back(q);
            }
          box = next;
        }
        std::vector<int> inputs;
        for (int i = 0; i < n; ++i) {
          bool ess = false;
          for (const auto& p : box)
            for (Elem e : cls[ct[i]]) {
              auto q = p;
              q[i] = e;
              if (t.at(p) != t.at(q)) ess = true;
            }
          if (ess) inputs.push_back(i);
        }
        std::vector<int> in_classes;
        for (int i : inputs) in_classes.push_back(ct[i]);
        std::vector<Elem> table;
        for (const auto& p : box) {
          bool at_least = true;
          for (int i = 0; i < n; ++i)
            if (std::find(inputs.begin(), inputs.end(), i) == inputs.end() && p[i] != cls[ct[i]][0])
              at_least = false;
          if (at_least) table.push_back(t.at(p));
        }
        keys.insert({in_classes, tau.blocks[table[0]], table});
        int i = n - 1;
        while (i >= 0 && ++ct[i] == m) ct[i--] = 0;
        if (i < 0) break;
      }
    }
  return keys;
}

const Boxmap* find_table(const std::vector<Boxmap>& bs, const std::vector<Elem>& table) {
  for (const auto& b : bs)
    if (b.table == table) return &b;
  return nullptr;
}

}  // namespace

TEST_CASE("boxmap enumeration") {
  auto d4 = fixtures::d4();
  auto w8 = fixtures::w8();

  auto wb = enumerate_boxmaps(w8, Congruence::all(8), std::nullopt, 3);
  auto* t = find_table(wb, w8.ops()[0].table);
  REQUIRE(t);
  CHECK(t->arity() == 3);
  CHECK(t->constants.empty());
  auto* id8 = find_table(wb, {0, 1, 2, 3, 4, 5, 6, 7});
  REQUIRE(id8);
  CHECK(id8->arity() == 1);

  auto db = enumerate_boxmaps(d4, Congruence::all(4), std::nullopt, 2);
  auto* d = find_table(db, d4.ops()[0].table);
  REQUIRE(d);
  CHECK(d->arity() == 2);
  CHECK(std::is_sorted(db.begin(), db.end()));

  SUBCASE("identity boxmap on every class") {
    auto hi = Congruence::load(fixtures::data("d4_hi.cong"));
    ClassIndex ci(hi);
    auto bs = enumerate_boxmaps(d4, hi, std::nullopt, 2);
    for (int c = 0; c < 2; ++c) {
      auto id = identity_boxmap(ci, c);
      CHECK(std::any_of(bs.begin(), bs.end(), [&](const Boxmap& b) { return b.same_key(id); }));
    }
    auto into1 = enumerate_boxmaps(d4, hi, 1, 2);
    for (const auto& b : into1) CHECK(b.output_class == 1);
  }

  SUBCASE("agrees with direct recomputation") {
    std::vector<std::pair<FiniteAlgebra, Congruence>> cases{
        {d4, Congruence::all(4)},
        {d4, Congruence::load(fixtures::data("d4_hi.cong"))},
        {d4, Congruence::equality(4)},
        {w8, Congruence::all(8)},
        {fixtures::s2(), Congruence::all(2)},
    };
    for (const auto& [alg, tau] : cases) {
      std::set<Key> got;
      for (const auto& b : enumerate_boxmaps(alg, tau, std::nullopt, 3))
        got.insert({b.input_classes, b.output_class, b.table});
      CHECK(got == naive_boxmap_keys(alg, tau, 3));
    }
  }

  SUBCASE("tables do not depend on the chosen constants") {
    auto hi = Congruence::load(fixtures::data("d4_hi.cong"));
    ClassIndex ci(hi);
    for (const auto& b : enumerate_boxmaps(d4, hi, std::nullopt, 3)) {
      auto op = term_operation(d4, b.term, b.term_arity);
      std::vector<std::size_t> radix;
      for (int c : b.constant_classes) radix.push_back(ci.size(c));
      std::size_t choices = 1;
      for (auto r : radix) choices *= r;
      std::vector<Elem> cpos(radix.size()), ipos(b.radix.size()), args(b.term_arity);
      for (std::size_t ch = 0; ch < choices; ++ch) {
        tuple_digits(ch, radix, cpos);
        for (std::size_t cell = 0; cell < b.table.size(); ++cell) {
          tuple_digits(cell, b.radix, ipos);
          for (std::size_t j = 0; j < ipos.size(); ++j)
            args[b.input_slots[j]] = ci.classes[b.input_classes[j]][ipos[j]];
          for (std::size_t j = 0; j < cpos.size(); ++j)
            args[b.constant_slots[j]] = ci.classes[b.constant_classes[j]][cpos[j]];
          CHECK(op.at(args) == b.table[cell]);
        }
      }
    }
  }
}

TEST_CASE("decomposition operations") {
  auto d4 = fixtures::d4();
  auto all4 = Congruence::all(4);
  ClassIndex ci(all4);
  CHECK(is_decomposition_op(identity_boxmap(ci, 0)).ok);

  auto db = enumerate_boxmaps(d4, all4, std::nullopt, 2);
  const Boxmap* d = find_table(db, d4.ops()[0].table);
  REQUIRE(d);
  CHECK(is_decomposition_op(*d).ok);

  // Direct check of the 2x2 law on the raw table.
  auto D = [&](Elem x, Elem y) { return d4.ops()[0].table[x * 4 + y]; };
  bool law = true;
  for (Elem a = 0; a < 4; ++a)
    for (Elem b = 0; b < 4; ++b)
      for (Elem c = 0; c < 4; ++c)
        for (Elem e = 0; e < 4; ++e) law = law && D(D(a, b), D(c, e)) == D(a, e);
  CHECK(law);

  auto s2 = fixtures::s2();
  auto sb = enumerate_boxmaps(s2, Congruence::all(2), std::nullopt, 2);
  const Boxmap* m = find_table(sb, s2.ops()[0].table);
  REQUIRE(m);
  auto mc = is_decomposition_op(*m);
  CHECK_FALSE(mc.ok);
  CHECK(mc.violated == "composition");

  auto hi = Congruence::load(fixtures::data("d4_hi.cong"));
  for (const auto& b : enumerate_boxmaps(d4, hi, std::nullopt, 2))
    if (std::any_of(b.input_classes.begin(), b.input_classes.end(),
                    [&](int c) { return c != b.output_class; }))
      CHECK_THROWS_AS(is_decomposition_op(b), Error);

  SUBCASE("identifying two inputs breaks dependence") {
    // e(x, y) = d(x, x) keeps arity 2 but ignores its second slot.
    Boxmap e = *d;
    for (Elem x = 0; x < 4; ++x)
      for (Elem y = 0; y < 4; ++y) e.table[x * 4 + y] = D(x, x);
    auto r = is_decomposition_op(e);
    CHECK_FALSE(r.ok);
    CHECK(r.violated == "dependence");
  }
}

TEST_CASE("maximal decomposition arity and coordinatization") {
  auto d4 = fixtures::d4();
  auto a = analyze_boxmaps(d4, Congruence::all(4));
  REQUIRE(a.decomps.size() == 1);
  CHECK(a.decomps[0].k == 2);
  // Least table among the two decomposition ops d(v0,v1) and d(v1,v0).
  std::vector<Elem> flipped(16);
  for (Elem x = 0; x < 4; ++x)
    for (Elem y = 0; y < 4; ++y) flipped[x * 4 + y] = d4.ops()[0].table[y * 4 + x];
  CHECK(a.decomps[0].witness.table == flipped);
  const Boxmap* d = find_table(a.boxmaps, d4.ops()[0].table);
  REQUIRE(d);
  ClassIndex ci4(Congruence::all(4));
  const auto co = coordinatize(ci4, *d);
  CHECK(co.factor_sizes == std::vector<std::size_t>{2, 2});
  for (Elem x = 0; x < 4; ++x) CHECK(co.coords[x] == std::vector<Elem>{Elem(x / 2), Elem(x % 2)});
  for (Elem x = 0; x < 4; ++x)
    for (Elem y = 0; y < 4; ++y) {
      Elem out = d4.ops()[0].table[x * 4 + y];
      CHECK(co.coords[out][0] == co.coords[x][0]);
      CHECK(co.coords[out][1] == co.coords[y][1]);
    }
  CHECK_FALSE(a.violation);

  auto eq = analyze_boxmaps(d4, Congruence::equality(4));
  for (const auto& c : eq.decomps) {
    CHECK(c.k == 1);
    CHECK(c.coords.factor_sizes == std::vector<std::size_t>{1});
  }
  CHECK_FALSE(eq.violation);

  auto w8 = fixtures::w8();
  auto w = analyze_boxmaps(w8, Congruence::all(8), 3);
  CHECK(w.decomps[0].k == 1);
  CHECK(w.decomps[0].coords.factor_sizes == std::vector<std::size_t>{8});
  REQUIRE(w.violation);
  CHECK(w.violation->arity() > 1);
  const Boxmap* t = find_table(w.boxmaps, w8.ops()[0].table);
  REQUIRE(t);
  CHECK(t->arity() == 3);
  CHECK(find_violating_boxmap({*t}, w.decomps));

  auto s2 = fixtures::s2();
  ClassIndex ci2(Congruence::all(2));
  auto sb = enumerate_boxmaps(s2, Congruence::all(2), std::nullopt, 2);
  CHECK_THROWS_AS(coordinatize(ci2, *find_table(sb, s2.ops()[0].table)), Error);
}

TEST_CASE("boxmap properties on strongly abelian algebras") {
  for (const auto& [alg, tau] : std::vector<std::pair<FiniteAlgebra, Congruence>>{
           {fixtures::d4(), Congruence::all(4)},
           {fixtures::d4(), Congruence::load(fixtures::data("d4_hi.cong"))},
           {fixtures::w8(), Congruence::all(8)}}) {
    auto a = analyze_boxmaps(alg, tau);
    ClassIndex ci(tau);
    for (const auto& b : a.boxmaps)
      CHECK(b.arity() <= std::log2(static_cast<double>(ci.size(b.output_class))) + 1e-9);
    for (const auto& c : a.decomps) {
      CHECK(is_decomposition_op(c.witness).ok);
      // Largest idempotent boxmap on the class bounds K from below.
      int idem = 1;
      for (const auto& b : a.boxmaps) {
        if (b.output_class != c.cls) continue;
        if (std::any_of(b.input_classes.begin(), b.input_classes.end(), [&](int x) { return x != c.cls; }))
          continue;
        std::vector<Elem> diag(b.arity());
        bool ok = true;
        for (std::size_t x = 0; x < ci.size(c.cls); ++x) {
          std::fill(diag.begin(), diag.end(), static_cast<Elem>(x));
          ok = ok && b.at_positions(diag) == ci.classes[c.cls][x];
        }
        if (ok) idem = std::max(idem, b.arity());
      }
      CHECK(c.k >= idem);
    }
  }
}
