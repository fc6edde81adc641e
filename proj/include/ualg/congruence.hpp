// Congruences, congruence generation and lattices, quotients, and the
// abelian / strongly abelian term conditions.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ualg/core.hpp"

namespace ualg {

struct Congruence {
  // Block id per element; blocks are numbered in order of their least element.
  std::vector<int> blocks;

  static Congruence from_labels(const std::vector<int>& labels);
  static Congruence equality(std::size_t n);
  static Congruence all(std::size_t n);
  static Congruence parse(std::string_view text);
  static Congruence load(const std::string& path);

  std::size_t algebra_size() const { return blocks.size(); }
  int num_blocks() const;
  bool related(Elem a, Elem b) const { return blocks[a] == blocks[b]; }
  // Elements of each block in increasing order.
  std::vector<std::vector<Elem>> classes() const;
  std::size_t max_class_size() const;
  bool refines(const Congruence& other) const;
  std::string to_text() const;
  std::string str() const;  // e.g. {0,1}{2,3}
  friend bool operator==(const Congruence&, const Congruence&) = default;
  friend auto operator<=>(const Congruence&, const Congruence&) = default;
};

bool is_congruence(const FiniteAlgebra& alg, const std::vector<int>& partition);

Congruence cg(const FiniteAlgebra& alg, const std::vector<std::pair<Elem, Elem>>& pairs);

// Equality, all principal congruences, and their joins.
std::vector<Congruence> con_lattice(const FiniteAlgebra& alg, const Limits& limits = {});

FiniteAlgebra quotient(const FiniteAlgebra& alg, const Congruence& theta);

// A violated instance of a term condition. For the strong condition
// t(a,u)=t(b,v) but t(c,u)!=t(c,v); for the ordinary one t(a,u)=t(a,v) but
// t(b,u)!=t(b,v), and c is unused.
struct TCFailure {
  Term term;
  int arity = 0;
  Elem a = 0, b = 0, c = 0;
  std::vector<Elem> u, v;
  std::array<Elem, 4> outputs{};

  std::string str() const;
};

struct TCResult {
  bool pass = true;
  int arity_bound = 0;
  std::size_t terms_checked = 0;
  std::optional<TCFailure> failure;
};

// ceil(log2(largest class)) + 2
int default_arity_bound(const Congruence& tau);

TCResult strong_term_condition(const FiniteAlgebra& alg, const Congruence& tau, int arity_bound,
                               const Limits& limits = {});
TCResult abelian_term_condition(const FiniteAlgebra& alg, const Congruence& tau, int arity_bound,
                                const Limits& limits = {});
// Both conditions from one enumeration of the clone: (strong, abelian).
std::pair<TCResult, TCResult> both_term_conditions(const FiniteAlgebra& alg, const Congruence& tau,
                                                   int arity_bound, const Limits& limits = {});

// Both conditions for a single term operation, with slot 0 as the row slot.
std::optional<TCFailure> strong_tc_for(const FiniteAlgebra& alg, const Congruence& tau,
                                       const TermOperation& t);
std::optional<TCFailure> abelian_tc_for(const FiniteAlgebra& alg, const Congruence& tau,
                                        const TermOperation& t);

struct RectangularityCertificate {
  bool ok = false;
  int output_class = -1;
  // Per slot, a block id for each element of that slot's class (in class order).
  std::vector<std::vector<int>> relations;
  // On failure: two box tuples with equal images that are not slotwise related.
  std::vector<Elem> x, y;
};

RectangularityCertificate rectangularity_certificate(const FiniteAlgebra& alg,
                                                     const Congruence& tau,
                                                     const TermOperation& top,
                                                     const std::vector<int>& class_tuple);

struct StronglyAbelianReport {
  std::vector<Congruence> congruences;
  std::vector<bool> maximal;
  bool unique_maximum = false;
  int arity_bound = 0;  // 0 means the per-congruence default was used
};

StronglyAbelianReport strongly_abelian_congruences(const FiniteAlgebra& alg,
                                                   std::optional<int> arity_bound = {},
                                                   const Limits& limits = {});

}  // namespace ualg
