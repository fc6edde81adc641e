// Multi-sorted algebras, the class-sorted and coordinate-sorted constructions
// over a congruence, finite representative term sets and invertibility.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ualg/boxmap.hpp"
#include "ualg/closure.hpp"
#include "ualg/congruence.hpp"
#include "ualg/core.hpp"

namespace ualg {

struct SortedOp {
  std::string name;
  std::vector<int> in_sorts;
  int out_sort = 0;
  std::vector<Elem> table;
  std::string origin;  // free text: where the op came from
};

class SortedAlgebra {
 public:
  std::vector<std::string> sort_names;
  std::vector<std::size_t> carriers;
  std::vector<SortedOp> ops;

  std::size_t num_sorts() const { return carriers.size(); }
  std::vector<std::size_t> radix(const std::vector<int>& sorts) const;
  Elem apply(int op, std::span<const Elem> args) const;
  int op_index(std::string_view name) const;
  void validate() const;

  std::string to_text() const;
  static SortedAlgebra parse(std::string_view text);
  static SortedAlgebra load(const std::string& path);
};

// A term operation of a sorted algebra with a term producing it. Witness
// variables 0..arity-1 are the slots; higher ones are inessential extras
// whose sorts are listed in extra_sorts.
struct SortedTermOp {
  std::vector<int> in_sorts;
  int out_sort = 0;
  std::vector<Elem> table;
  Term witness;
  std::vector<int> extra_sorts;

  int arity() const { return static_cast<int>(in_sorts.size()); }
  // Canonical order: arity, input sorts, output sort, table.
  friend bool operator<(const SortedTermOp& a, const SortedTermOp& b);
  bool same_key(const SortedTermOp& o) const {
    return in_sorts == o.in_sorts && out_sort == o.out_sort && table == o.table;
  }
};

Elem eval_sorted_term(const SortedAlgebra& salg, const Term& t, std::span<const Elem> assignment);

// Sorts are the classes of tau, named s{i}.
SortedAlgebra build_frz(const FiniteAlgebra& alg, const Congruence& tau);

// Sorts are the coordinate factors of each class, named s{i}_{j}; one op
// per canonical boxmap and output coordinate, deduplicated by table.
SortedAlgebra build_frzflt(const BoxmapAnalysis& analysis, const Congruence& tau);

// The free algebra of the variety on a pool of variables, as functions of
// all assignments of the pool. Variable v has sort var_sorts[v].
struct Pool {
  std::vector<int> var_sorts;
  std::vector<std::size_t> radix;  // carrier of each variable
  ClosureResult closure;
  std::vector<std::string> op_names;

  std::size_t coords() const { return closure.points.len(); }
};

Pool build_pool(const SortedAlgebra& salg, int vars_per_sort, const Limits& limits = {});

// The reduced term operations of a pool: each element restricted to its
// essential variables, in variable order, deduplicated and sorted.
std::vector<SortedTermOp> pool_cores(const SortedAlgebra& salg, const Pool& pool);

// floor(log2 of the largest carrier), at least 1.
int default_vars_per_sort(const SortedAlgebra& salg);

bool is_rectangular(const SortedAlgebra& salg, const SortedTermOp& t);

struct TermSet {
  int vars_per_sort = 0;
  std::vector<SortedTermOp> terms;
};

// The finite set T of term operations up to renaming of variables. Throws
// NotStronglyAbelian if some member is not rectangular.
TermSet sorted_term_operations(const SortedAlgebra& salg, std::optional<int> vars_per_sort = {},
                               const Limits& limits = {});

// Passes iff every term operation over the given pool is rectangular.
bool sorted_strong_term_condition(const SortedAlgebra& salg, int vars_per_sort,
                                  const Limits& limits = {});

std::vector<int> essential_variables_sorted(const SortedAlgebra& salg, const SortedTermOp& t);

struct LeftInverse {
  int term = -1;  // index into T
  int slot = -1;  // slot of the inverse receiving t
};

std::optional<LeftInverse> is_left_invertible_at(const SortedAlgebra& salg, const TermSet& T,
                                                 const SortedTermOp& t, int slot);

// Right inverses s_1..s_n as pool elements over the first variable of each sort.
std::optional<std::vector<Term>> is_right_invertible(const SortedAlgebra& salg, const Pool& pool,
                                                     const SortedTermOp& t);

struct UnaryVerdict {
  bool unary = true;
  std::optional<SortedTermOp> witness;
};

UnaryVerdict is_essentially_unary_algebra(const TermSet& T);

// Transforms the least essentially binary member of T until it is left
// invertible at none of its slots.
SortedTermOp find_binary_noninvertible_term(const SortedAlgebra& salg, const TermSet& T);

// Position of a term operation in T after sorting its slots by sort, or -1.
int find_in_termset(const TermSet& T, const SortedTermOp& t);
SortedTermOp reduce_term(const SortedAlgebra& salg, const SortedTermOp& t);

struct StructuralReport {
  bool substructure = false;
  bool quotient = false;
  bool product = false;
  std::string detail;
};

// Checks the sub/quotient/fiber-product correspondences on an instance:
// the subalgebra generated by sub_generators, theta <= tau, and A x_tau A.
StructuralReport check_structural_correspondence(const FiniteAlgebra& alg, const Congruence& tau,
                                                 const std::vector<Elem>& sub_generators,
                                                 const Congruence& theta);

}  // namespace ualg
