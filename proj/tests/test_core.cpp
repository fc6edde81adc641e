#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "ualg/core.hpp"

using namespace ualg;

namespace {

// Naive clone oracle: repeatedly compose every basic op with every tuple of
// known tables until nothing new appears.
std::set<std::vector<Elem>> naive_clone(const FiniteAlgebra& alg, int n) {
  const std::size_t len = ipow(alg.size(), n);
  std::set<std::vector<Elem>> known;
  for (int i = 0; i < n; ++i) {
    std::vector<Elem> p(len);
    for (std::size_t c = 0; c < len; ++c) p[c] = (c / ipow(alg.size(), n - 1 - i)) % alg.size();
    known.insert(p);
  }
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::vector<Elem>> cur(known.begin(), known.end());
    for (const auto& op : alg.ops()) {
      if (cur.empty() && op.arity > 0) continue;
      std::vector<std::size_t> pick(op.arity, 0);
      while (true) {
        std::vector<Elem> out(len);
        for (std::size_t c = 0; c < len; ++c) {
          std::size_t idx = 0;
          for (int k = 0; k < op.arity; ++k) idx = idx * alg.size() + cur[pick[k]][c];
          out[c] = op.table[idx];
        }
        if (known.insert(out).second) grew = true;
        int k = op.arity - 1;
        while (k >= 0 && ++pick[k] == cur.size()) pick[k--] = 0;
        if (k < 0) break;
      }
    }
  }
  return known;
}

std::set<std::vector<Elem>> tables(const std::vector<TermOperation>& ops) {
  std::set<std::vector<Elem>> s;
  for (const auto& o : ops) s.insert(o.table);
  return s;
}

}  // namespace

TEST_CASE("algebra files parse and round trip") {
  auto d4 = fixtures::d4();
  CHECK(d4.size() == 4);
  REQUIRE(d4.ops().size() == 1);
  CHECK(d4.ops()[0].name == "d");
  auto again = FiniteAlgebra::parse(d4.to_text());
  CHECK(again.ops()[0].table == d4.ops()[0].table);

  CHECK_THROWS_AS(FiniteAlgebra::parse("size 2\nop f 1\n0\n"), Error);
  CHECK_THROWS_AS(FiniteAlgebra::parse("size 2\nop f 1\n0 2\n"), Error);
  CHECK_THROWS_AS(FiniteAlgebra::parse("op f 1 0 1"), Error);
  CHECK_THROWS_AS(FiniteAlgebra::parse("size 2\nop f 1 0 1\nop f 1 1 0\n"), Error);
  auto with_comments = FiniteAlgebra::parse("# header\nsize 2 # two\nop c 0\n1\n");
  CHECK(with_comments.ops()[0].table == std::vector<Elem>{1});
}

TEST_CASE("eval_term") {
  auto d4 = fixtures::d4();
  Term t = Term::apply("d", {Term::variable(0), Term::variable(1)});
  for (Elem x = 0; x < 4; ++x)
    for (Elem y = 0; y < 4; ++y) {
      std::vector<Elem> asg{x, y};
      CHECK(eval_term(d4, t, asg) == 2 * (x / 2) + (y % 2));
    }
  std::vector<Elem> asg{2, 1};
  CHECK(eval_term(d4, t, asg) == 3);

  std::vector<Elem> one{3};
  CHECK(eval_term(d4, Term::variable(0), one) == 3);

  auto s2 = fixtures::s2();
  Term absorb = Term::apply("m", {Term::variable(0), Term::apply("m", {Term::variable(0), Term::variable(1)})});
  std::vector<Elem> a10{1, 0};
  CHECK(eval_term(s2, absorb, a10) == 0);

  auto code = [&](const Term& term, std::span<const Elem> a) {
    try {
      eval_term(d4, term, a);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::NotApplicable;
  };
  CHECK(code(Term::apply("q", {Term::variable(0)}), asg) == Errc::UnknownOp);
  CHECK(code(Term::apply("d", {Term::variable(0)}), asg) == Errc::ArityMismatch);
  CHECK(code(Term::apply("d", {Term::variable(0), Term::variable(5)}), asg) == Errc::UnassignedVariable);
}

TEST_CASE("clone enumeration") {
  auto s2 = fixtures::s2();
  auto unary = enumerate_term_operations(s2, 1);
  REQUIRE(unary.size() == 1);
  CHECK(unary[0].table == std::vector<Elem>{0, 1});

  FiniteAlgebra bare(3, {});
  auto projs = enumerate_term_operations(bare, 2);
  CHECK(projs.size() == 2);

  auto w8 = fixtures::w8();
  auto ternary = enumerate_term_operations(w8, 3);
  CHECK(std::find_if(ternary.begin(), ternary.end(), [&](const TermOperation& o) {
          return o.table == w8.ops()[0].table;
        }) != ternary.end());

  SUBCASE("matches the naive oracle") {
    for (const auto& alg : {fixtures::s2(), fixtures::d4()})
      for (int n = 0; n <= 3; ++n) CHECK(tables(enumerate_term_operations(alg, n)) == naive_clone(alg, n));
    CHECK(tables(enumerate_term_operations(w8, 2)) == naive_clone(w8, 2));
  }

  SUBCASE("witnesses reproduce tables") {
    for (const auto& alg : {fixtures::s2(), fixtures::d4(), fixtures::w8()})
      for (const auto& op : enumerate_term_operations(alg, 3))
        CHECK(term_operation(alg, op.witness, 3).table == op.table);
  }

  SUBCASE("depth bound is monotone and reaches the fixed point") {
    auto d4 = fixtures::d4();
    auto full = tables(enumerate_term_operations(d4, 3));
    std::set<std::vector<Elem>> prev;
    for (int depth = 0; depth <= 4; ++depth) {
      auto cur = tables(enumerate_term_operations(d4, 3, depth));
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      CHECK(std::includes(full.begin(), full.end(), cur.begin(), cur.end()));
      prev = cur;
    }
    CHECK(prev == full);
  }

  SUBCASE("table cap") {
    Limits lim;
    lim.max_tables = 5;
    CHECK_THROWS_AS(enumerate_term_operations(w8, 3, std::nullopt, lim), Error);
  }
}

TEST_CASE("essential variables") {
  TermOperation p0{3, 2, {0, 0, 0, 1, 1, 1, 2, 2, 2}, Term::variable(0)};
  CHECK(essential_variables(p0) == std::vector<int>{0});
  TermOperation k{2, 3, std::vector<Elem>(8, 1), Term{}};
  CHECK(essential_variables(k).empty());
  auto d4 = fixtures::d4();
  TermOperation d{4, 2, d4.ops()[0].table, Term{}};
  CHECK(essential_variables(d) == std::vector<int>{0, 1});

  SUBCASE("identifying an inessential slot changes nothing") {
    for (const auto& op : enumerate_term_operations(fixtures::w8(), 3)) {
      auto ess = essential_variables(op);
      for (int i = 0; i < 3; ++i) {
        if (std::find(ess.begin(), ess.end(), i) != ess.end()) continue;
        int j = (i + 1) % 3;
        std::vector<Elem> args(3);
        for (std::size_t idx = 0; idx < op.table.size(); ++idx) {
          tuple_digits(idx, std::vector<std::size_t>(3, 8), args);
          auto same = args;
          same[i] = same[j];
          CHECK(op.at(args) == op.at(same));
        }
      }
    }
  }
}

TEST_CASE("generated subpowers") {
  auto s2 = fixtures::s2();
  auto diag = generate_subpower(s2, 2, {{1, 1}});
  CHECK(diag.count() == 1);

  auto pa = generate_subpower(s2, 2, {{1, 0}, {0, 1}});
  std::set<std::vector<Elem>> got;
  for (std::size_t i = 0; i < pa.count(); ++i) got.insert({pa.point(i).begin(), pa.point(i).end()});
  CHECK(got == std::set<std::vector<Elem>>{{1, 0}, {0, 1}, {0, 0}});

  auto d4 = fixtures::d4();
  auto all = generate_subpower(d4, 1, {{0}, {3}});
  CHECK(all.count() == 4);
  for (std::size_t i = 0; i < all.count(); ++i) {
    std::vector<Elem> g0{0}, g3{3};
    std::vector<Elem> asg{0, 3};
    CHECK(eval_term(d4, all.witnesses[i], asg) == all.point(i)[0]);
  }

  SUBCASE("diagonal generators give the diagonal copy of a subalgebra") {
    std::mt19937 rng(7);
    auto w8 = fixtures::w8();
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::vector<Elem>> gens, single;
      for (int g = 0; g < 2; ++g) {
        Elem e = rng() % 8;
        gens.push_back({e, e, e});
        single.push_back({e});
      }
      auto three = generate_subpower(w8, 3, gens);
      auto one = generate_subpower(w8, 1, single);
      CHECK(three.count() == one.count());
      for (std::size_t i = 0; i < three.count(); ++i) {
        auto p = three.point(i);
        CHECK(p[0] == p[1]);
        CHECK(p[1] == p[2]);
      }
    }
  }

  Limits lim;
  lim.max_elements = 3;
  CHECK_THROWS_AS(generate_subpower(d4, 1, {{0}, {3}}, lim), Error);
}
