#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "ualg/congruence.hpp"

using namespace ualg;

namespace {

// All set partitions of {0..n-1} as restricted growth strings.
std::vector<std::vector<int>> all_partitions(std::size_t n) {
  std::vector<std::vector<int>> out;
  std::vector<int> rgs(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == n) {
      out.push_back(rgs);
      return;
    }
    for (int b = 0; b <= used; ++b) {
      rgs[i] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  if (n) rec(1, 1);
  return out;
}

bool naive_compatible(const FiniteAlgebra& alg, const std::vector<int>& p) {
  const std::size_t n = alg.size();
  for (const auto& op : alg.ops()) {
    const std::size_t len = ipow(n, op.arity);
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; j < len; ++j) {
        bool rel = true;
        for (std::size_t x = i, y = j, k = 0; k < static_cast<std::size_t>(op.arity); ++k, x /= n, y /= n)
          rel = rel && p[x % n] == p[y % n];
        if (rel && p[op.table[i]] != p[op.table[j]]) return false;
      }
  }
  return true;
}

std::set<std::vector<int>> naive_lattice(const FiniteAlgebra& alg) {
  std::set<std::vector<int>> s;
  for (const auto& p : all_partitions(alg.size()))
    if (naive_compatible(alg, p)) s.insert(p);
  return s;
}

// Direct search over every tuple for a strong (or ordinary) TC violation.
bool naive_tc_fails(const FiniteAlgebra& alg, const Congruence& tau, const TermOperation& t,
                    bool strong) {
  const std::size_t n = alg.size();
  const int k = t.arity - 1;
  const std::size_t cols = ipow(n, k);
  std::vector<Elem> u(k), v(k), args(t.arity);
  auto val = [&](Elem r, const std::vector<Elem>& col) {
    args[0] = r;
    std::copy(col.begin(), col.end(), args.begin() + 1);
    return t.at(args);
  };
  for (std::size_t ci = 0; ci < cols; ++ci)
    for (std::size_t cj = 0; cj < cols; ++cj) {
      tuple_digits(ci, std::vector<std::size_t>(k, n), u);
      tuple_digits(cj, std::vector<std::size_t>(k, n), v);
      bool rel = true;
      for (int i = 0; i < k; ++i) rel = rel && tau.related(u[i], v[i]);
      if (!rel) continue;
      for (Elem a = 0; a < n; ++a)
        for (Elem b = 0; b < n; ++b) {
          if (!tau.related(a, b)) continue;
          if (strong) {
            if (val(a, u) != val(b, v)) continue;
            for (Elem c = 0; c < n; ++c)
              if (tau.related(a, c) && val(c, u) != val(c, v)) return true;
          } else if (val(a, u) == val(a, v) && val(b, u) != val(b, v)) {
            return true;
          }
        }
    }
  return false;
}

bool naive_tc(const FiniteAlgebra& alg, const Congruence& tau, int bound, bool strong) {
  for (int n = 2; n <= bound; ++n)
    for (const auto& t : enumerate_term_operations(alg, n))
      if (naive_tc_fails(alg, tau, t, strong)) return false;
  return true;
}

FiniteAlgebra random_binary(std::size_t n, std::mt19937& rng) {
  std::vector<Elem> tab(n * n);
  for (auto& e : tab) e = rng() % n;
  return FiniteAlgebra(n, {{"f", 2, tab}});
}

bool small_binary_clone(const FiniteAlgebra& alg) {
  Limits lim;
  lim.max_tables = 2000;
  try {
    enumerate_term_operations(alg, 2, std::nullopt, lim);
  } catch (const Error&) {
    return false;
  }
  return true;
}

bool rect_all(const FiniteAlgebra& alg, const Congruence& tau, int bound) {
  auto cls = tau.classes();
  for (int n = 1; n <= bound; ++n)
    for (const auto& t : enumerate_term_operations(alg, n)) {
      std::vector<std::size_t> radix(n, cls.size());
      std::vector<Elem> ct(n);
      for (std::size_t g = 0; g < ipow(cls.size(), n); ++g) {
        tuple_digits(g, radix, ct);
        if (!rectangularity_certificate(alg, tau, t, {ct.begin(), ct.end()}).ok) return false;
      }
    }
  return true;
}

}  // namespace

TEST_CASE("congruence files") {
  auto c = Congruence::load(fixtures::data("d4_hi.cong"));
  CHECK(c.str() == "{0,1}{2,3}");
  CHECK(Congruence::parse(c.to_text()) == c);
  CHECK(Congruence::from_labels({5, 5, 2, 7}).blocks == std::vector<int>{0, 0, 1, 2});
  CHECK_THROWS_AS(Congruence::parse("cong 3 0 1"), Error);
}

TEST_CASE("is_congruence") {
  auto d4 = fixtures::d4();
  CHECK(is_congruence(d4, Congruence::equality(4).blocks));
  CHECK(is_congruence(d4, Congruence::all(4).blocks));
  CHECK(is_congruence(d4, {0, 0, 1, 1}));
  auto s2 = fixtures::s2();
  for (const auto& p : all_partitions(2)) CHECK(is_congruence(s2, p));
  CHECK_THROWS_AS(is_congruence(d4, {0, 0, 1}), Error);

  for (const auto& alg : {fixtures::d4(), fixtures::w8()})
    for (const auto& p : all_partitions(alg.size()))
      CHECK(is_congruence(alg, p) == naive_compatible(alg, p));
}

TEST_CASE("cg") {
  auto d4 = fixtures::d4();
  CHECK(cg(d4, {}) == Congruence::equality(4));
  CHECK(cg(d4, {{2, 2}}) == Congruence::equality(4));
  CHECK(cg(d4, {{0, 1}}).str() == "{0,1}{2,3}");

  SUBCASE("matches the least compatible partition") {
    for (const auto& alg : {fixtures::s2(), fixtures::d4(), fixtures::w8()}) {
      auto lat = naive_lattice(alg);
      for (Elem a = 0; a < alg.size(); ++a)
        for (Elem b = a + 1; b < alg.size(); ++b) {
          std::optional<std::vector<int>> least;
          for (const auto& p : lat) {
            if (p[a] != p[b]) continue;
            if (!least || Congruence{p}.refines(Congruence{*least})) least = p;
          }
          CHECK(cg(alg, {{a, b}}).blocks == *least);
        }
    }
  }

  SUBCASE("closure operator") {
    std::mt19937 rng(11);
    auto w8 = fixtures::w8();
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<std::pair<Elem, Elem>> p, q;
      for (int i = 0; i < 2; ++i) p.push_back({Elem(rng() % 8), Elem(rng() % 8)});
      q = p;
      q.push_back({Elem(rng() % 8), Elem(rng() % 8)});
      auto cp = cg(w8, p);
      for (auto [a, b] : p) CHECK(cp.related(a, b));
      CHECK(cp.refines(cg(w8, q)));
      std::vector<std::pair<Elem, Elem>> all_pairs;
      for (Elem a = 0; a < 8; ++a)
        for (Elem b = 0; b < 8; ++b)
          if (cp.related(a, b)) all_pairs.push_back({a, b});
      CHECK(cg(w8, all_pairs) == cp);
    }
  }
}

TEST_CASE("con_lattice") {
  FiniteAlgebra one = FiniteAlgebra::load(fixtures::data("one.alg"));
  auto l1 = con_lattice(one);
  REQUIRE(l1.size() == 1);
  CHECK(l1[0] == Congruence::equality(1));

  auto s2 = con_lattice(fixtures::s2());
  CHECK(s2 == std::vector<Congruence>{Congruence::equality(2), Congruence::all(2)});

  for (const auto& alg : {fixtures::s2(), fixtures::d4(), fixtures::w8()}) {
    std::set<std::vector<int>> got;
    for (const auto& c : con_lattice(alg)) got.insert(c.blocks);
    CHECK(got == naive_lattice(alg));
  }
  auto w8 = con_lattice(fixtures::w8());
  CHECK(std::find(w8.begin(), w8.end(), Congruence::equality(8)) != w8.end());
  CHECK(std::find(w8.begin(), w8.end(), Congruence::all(8)) != w8.end());
}

TEST_CASE("quotient") {
  auto d4 = fixtures::d4();
  CHECK(quotient(d4, Congruence::equality(4)).ops()[0].table == d4.ops()[0].table);
  auto q1 = quotient(d4, Congruence::all(4));
  CHECK(q1.size() == 1);
  auto q = quotient(d4, Congruence::load(fixtures::data("d4_hi.cong")));
  CHECK(q.size() == 2);
  CHECK(q.ops()[0].table == std::vector<Elem>{0, 0, 1, 1});
  CHECK_THROWS_AS(quotient(d4, Congruence{{0, 1, 1, 0}}), Error);
}

TEST_CASE("term conditions on the reference algebras") {
  auto s2 = fixtures::s2();
  auto d4 = fixtures::d4();
  auto w8 = fixtures::w8();
  for (const auto& alg : {s2, d4, w8}) {
    auto eq = Congruence::equality(alg.size());
    CHECK(strong_term_condition(alg, eq, 3).pass);
    CHECK(abelian_term_condition(alg, eq, 3).pass);
  }
  CHECK(strong_term_condition(w8, Congruence::all(8), 3).pass);
  CHECK(abelian_term_condition(d4, Congruence::all(4), 2).pass);
  CHECK(strong_term_condition(d4, Congruence::all(4), 4).pass);
  auto sf = strong_term_condition(s2, Congruence::all(2), 2);
  auto af = abelian_term_condition(s2, Congruence::all(2), 2);
  CHECK_FALSE(sf.pass);
  CHECK_FALSE(af.pass);
  CHECK(default_arity_bound(Congruence::all(4)) == 4);
  CHECK(default_arity_bound(Congruence::all(8)) == 5);
  CHECK(default_arity_bound(Congruence::equality(3)) == 2);

  SUBCASE("failures re-evaluate to genuine violations") {
    for (const auto* res : {&sf, &af}) {
      REQUIRE(res->failure);
      const auto& f = *res->failure;
      auto t = term_operation(s2, f.term, f.arity);
      auto eval = [&](Elem r, const std::vector<Elem>& col) {
        std::vector<Elem> args{r};
        args.insert(args.end(), col.begin(), col.end());
        return t.at(args);
      };
      if (res == &sf) {
        CHECK(eval(f.a, f.u) == f.outputs[0]);
        CHECK(eval(f.b, f.v) == f.outputs[1]);
        CHECK(eval(f.c, f.u) == f.outputs[2]);
        CHECK(eval(f.c, f.v) == f.outputs[3]);
        CHECK(f.outputs[0] == f.outputs[1]);
        CHECK(f.outputs[2] != f.outputs[3]);
      } else {
        CHECK(eval(f.a, f.u) == f.outputs[0]);
        CHECK(eval(f.a, f.v) == f.outputs[1]);
        CHECK(eval(f.b, f.u) == f.outputs[2]);
        CHECK(eval(f.b, f.v) == f.outputs[3]);
        CHECK(f.outputs[0] == f.outputs[1]);
        CHECK(f.outputs[2] != f.outputs[3]);
      }
    }
  }
}

TEST_CASE("term conditions agree with a direct search") {
  std::vector<std::pair<FiniteAlgebra, Congruence>> cases{
      {fixtures::s2(), Congruence::all(2)},
      {fixtures::d4(), Congruence::all(4)},
      {fixtures::d4(), Congruence::load(fixtures::data("d4_hi.cong"))},
      {fixtures::w8(), Congruence::all(8)},
  };
  std::mt19937 rng(3);
  for (int i = 0; i < 25; ++i) {
    auto alg = random_binary(3, rng);
    if (!small_binary_clone(alg)) continue;
    // Equality passes trivially but forces the whole binary clone.
    for (const auto& c : con_lattice(alg))
      if (c != Congruence::equality(3)) cases.push_back({alg, c});
  }
  CHECK(cases.size() > 10);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [alg, tau] = cases[i];
    // Ternary clones of random 3-element algebras can be huge.
    const int max_bound = (i < 3) ? 3 : 2;
    for (int bound = 2; bound <= max_bound; ++bound) {
      bool s = strong_term_condition(alg, tau, bound).pass;
      bool a = abelian_term_condition(alg, tau, bound).pass;
      CHECK(s == naive_tc(alg, tau, bound, true));
      CHECK(a == naive_tc(alg, tau, bound, false));
      if (s) CHECK(a);
    }
  }
}

TEST_CASE("rectangularity certificates") {
  auto w8 = fixtures::w8();
  auto all8 = Congruence::all(8);
  TermOperation t{8, 3, w8.ops()[0].table, Term::apply("t", {Term::variable(0), Term::variable(1), Term::variable(2)})};
  auto cert = rectangularity_certificate(w8, all8, t, {0, 0, 0});
  REQUIRE(cert.ok);
  for (const auto& rel : cert.relations) CHECK(rel == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});

  TermOperation u{8, 1, {3, 3, 1, 1, 0, 0, 0, 7}, Term{}};
  auto uc = rectangularity_certificate(w8, all8, u, {0});
  CHECK(uc.ok);
  CHECK(uc.relations[0] == std::vector<int>{0, 0, 1, 1, 2, 2, 2, 3});

  auto s2 = fixtures::s2();
  TermOperation m{2, 2, s2.ops()[0].table, Term{}};
  auto mc = rectangularity_certificate(s2, Congruence::all(2), m, {0, 0});
  CHECK_FALSE(mc.ok);
  CHECK(m.at(mc.x) == m.at(mc.y));

  SUBCASE("dual oracle against the strong term condition") {
    std::vector<std::pair<FiniteAlgebra, Congruence>> cases{
        {fixtures::s2(), Congruence::all(2)},
        {fixtures::d4(), Congruence::all(4)},
        {fixtures::d4(), Congruence::load(fixtures::data("d4_hi.cong"))},
        {fixtures::w8(), Congruence::all(8)},
    };
    std::mt19937 rng(5);
    for (int i = 0; i < 40; ++i) {
      auto alg = random_binary(2 + i % 2, rng);
      if (small_binary_clone(alg)) cases.push_back({alg, Congruence::all(alg.size())});
    }
    for (const auto& [alg, tau] : cases)
      for (int bound = 2; bound <= (alg.size() == 3 ? 2 : 3); ++bound)
        CHECK(rect_all(alg, tau, bound) == strong_term_condition(alg, tau, bound).pass);
  }
}

TEST_CASE("strongly abelian congruences") {
  auto one = strongly_abelian_congruences(FiniteAlgebra::load(fixtures::data("one.alg")));
  REQUIRE(one.congruences.size() == 1);
  CHECK(one.unique_maximum);

  auto w8 = strongly_abelian_congruences(fixtures::w8(), 3);
  CHECK(w8.unique_maximum);
  auto top = std::find(w8.congruences.begin(), w8.congruences.end(), Congruence::all(8));
  REQUIRE(top != w8.congruences.end());
  CHECK(w8.maximal[top - w8.congruences.begin()]);

  auto s2 = strongly_abelian_congruences(fixtures::s2());
  REQUIRE(s2.congruences.size() == 1);
  CHECK(s2.congruences[0] == Congruence::equality(2));
  CHECK(s2.unique_maximum);
}

TEST_CASE("strongly abelian congruences match a check of every congruence") {
  for (const auto& alg : {fixtures::d4(), fixtures::s2(), fixtures::w8()}) {
    auto rep = strongly_abelian_congruences(alg, 3);
    std::vector<Congruence> direct;
    for (const auto& c : con_lattice(alg))
      if (strong_term_condition(alg, c, 3).pass) direct.push_back(c);
    CHECK(rep.congruences == direct);
  }
}

TEST_CASE("both term conditions in one pass") {
  std::mt19937 rng(5);
  std::vector<std::pair<FiniteAlgebra, Congruence>> cases{{fixtures::d4(), Congruence::all(4)},
                                                          {fixtures::s2(), Congruence::all(2)},
                                                          {fixtures::w8(), Congruence::all(8)}};
  for (int i = 0; i < 30; ++i) {
    auto alg = random_binary(2 + i % 2, rng);
    cases.push_back({alg, Congruence::all(alg.size())});
  }
  for (const auto& [alg, tau] : cases) {
    const int bound = alg.size() == 8 ? 3 : 2;
    auto [strong, abel] = both_term_conditions(alg, tau, bound);
    auto s = strong_term_condition(alg, tau, bound);
    auto a = abelian_term_condition(alg, tau, bound);
    CHECK(strong.pass == s.pass);
    CHECK(abel.pass == a.pass);
    CHECK(strong.terms_checked == s.terms_checked);
    CHECK(abel.terms_checked == a.terms_checked);
    CHECK((strong.failure ? strong.failure->str() : "") == (s.failure ? s.failure->str() : ""));
    CHECK((abel.failure ? abel.failure->str() : "") == (a.failure ? a.failure->str() : ""));
  }
}
