// Finite algebras given by operation tables, terms over them, clone
// enumeration and generated subpowers.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ualg {

using Elem = std::uint16_t;

enum class Errc {
  ParseError,
  UnknownOp,
  ArityMismatch,
  UnassignedVariable,
  ResourceLimit,
  SizeMismatch,
  NotACongruence,
  ClassMismatch,
  NotADecomposition,
  NotCoordinatized,
  NotStronglyAbelian,
  EssentiallyUnary,
  NonTermination,
  EmbeddingFailure,
  IsolationFailure,
  NotDistinct,
  SortMismatch,
  NotApplicable,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const { return code_; }

 private:
  Errc code_;
};

struct Limits {
  std::size_t max_tables = 1'000'000;
  std::size_t max_elements = 1'000'000;
};

// Row-major index of a tuple over carriers of the given sizes.
std::size_t tuple_index(std::span<const Elem> args, std::span<const std::size_t> radix);
std::size_t tuple_index(std::span<const Elem> args, std::size_t base);
// Inverse of tuple_index.
void tuple_digits(std::size_t index, std::span<const std::size_t> radix, std::span<Elem> out);
std::size_t ipow(std::size_t base, std::size_t exp);

struct Operation {
  std::string name;
  int arity = 0;
  std::vector<Elem> table;
};

class FiniteAlgebra {
 public:
  FiniteAlgebra() = default;
  FiniteAlgebra(std::size_t size, std::vector<Operation> ops);

  std::size_t size() const { return size_; }
  const std::vector<Operation>& ops() const { return ops_; }
  // Index of the named operation, or -1.
  int op_index(std::string_view name) const;
  const Operation* find(std::string_view name) const;

  Elem apply(int op, std::span<const Elem> args) const {
    return ops_[op].table[tuple_index(args, size_)];
  }

  static FiniteAlgebra parse(std::istream& in);
  static FiniteAlgebra parse(std::string_view text);
  static FiniteAlgebra load(const std::string& path);
  std::string to_text() const;

 private:
  std::size_t size_ = 0;
  std::vector<Operation> ops_;
};

struct Term {
  int var = -1;
  std::string op;
  std::vector<Term> args;

  static Term variable(int index);
  static Term apply(std::string op, std::vector<Term> args);
  bool is_var() const { return var >= 0; }
  // Largest variable index occurring, or -1 for a ground term.
  int max_var() const;
  std::string str() const;
  // Replaces each variable i by subst[i].
  Term substitute(const std::vector<Term>& subst) const;
  friend bool operator==(const Term&, const Term&) = default;
};

// A table together with a term producing it. Equality ignores the witness.
struct TermOperation {
  std::size_t base = 0;
  int arity = 0;
  std::vector<Elem> table;
  Term witness;

  Elem at(std::span<const Elem> args) const { return table[tuple_index(args, base)]; }
  friend bool operator==(const TermOperation& a, const TermOperation& b) {
    return a.base == b.base && a.arity == b.arity && a.table == b.table;
  }
};

Elem eval_term(const FiniteAlgebra& alg, const Term& t, std::span<const Elem> assignment);

// Table of t as an operation of the given arity.
TermOperation term_operation(const FiniteAlgebra& alg, const Term& t, int arity);

// All n-ary term operations, keyed by table, with a shortest witness each.
// Without a depth bound the closure runs to its fixed point.
std::vector<TermOperation> enumerate_term_operations(const FiniteAlgebra& alg, int n,
                                                     std::optional<int> depth_bound = {},
                                                     const Limits& limits = {});

// Streams the n-ary term operations in enumeration order; the visitor may
// return false to stop early. Returns true if the closure completed.
bool for_each_term_operation(const FiniteAlgebra& alg, int n,
                             const std::function<bool(const TermOperation&)>& visit,
                             std::optional<int> depth_bound = {}, const Limits& limits = {});

std::vector<int> essential_variables(const TermOperation& op);
std::vector<int> essential_variables(std::span<const Elem> table,
                                     std::span<const std::size_t> radix);

// Elements of a subpower alg^index_count, stored as consecutive rows.
struct PointAlgebra {
  std::size_t index_count = 0;
  std::vector<Elem> data;
  std::vector<std::vector<Elem>> generators;
  // Term over the generators producing each element.
  std::vector<Term> witnesses;

  std::size_t count() const { return index_count ? data.size() / index_count : witnesses.size(); }
  std::span<const Elem> point(std::size_t i) const {
    return {data.data() + i * index_count, index_count};
  }
  std::optional<std::size_t> find(std::span<const Elem> p) const;
};

PointAlgebra generate_subpower(const FiniteAlgebra& alg, std::size_t index_count,
                               const std::vector<std::vector<Elem>>& generators,
                               const Limits& limits = {});

}  // namespace ualg
