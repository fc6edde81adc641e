// Boxmaps (terms restricted to products of congruence classes with an
// inessential tail), decomposition operations and class coordinatization.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ualg/congruence.hpp"
#include "ualg/core.hpp"

namespace ualg {

// Classes of a congruence plus each element's position inside its class.
struct ClassIndex {
  std::vector<std::vector<Elem>> classes;
  std::vector<int> position;

  explicit ClassIndex(const Congruence& tau);
  std::size_t size(int c) const { return classes[c].size(); }
};

struct Boxmap {
  Term term;
  int term_arity = 0;
  std::vector<int> input_slots;
  std::vector<int> input_classes;
  std::vector<int> constant_slots;
  std::vector<int> constant_classes;
  std::vector<Elem> constants;
  int output_class = -1;
  std::vector<Elem> output_elements;
  // Indexed by class positions of the inputs; entries are elements of A.
  std::vector<std::size_t> radix;
  std::vector<Elem> table;

  int arity() const { return static_cast<int>(input_classes.size()); }
  Elem at_positions(std::span<const Elem> pos) const { return table[tuple_index(pos, radix)]; }
  // Applies the boxmap to elements of the input classes.
  Elem apply(const ClassIndex& ci, std::span<const Elem> elems) const;
  std::string str() const;

  // Canonical order: arity, input classes, output class, table.
  friend bool operator<(const Boxmap& a, const Boxmap& b);
  bool same_key(const Boxmap& o) const {
    return input_classes == o.input_classes && output_class == o.output_class && table == o.table;
  }
};

// The boxmap induced by a term operation on the box given by class_tuple,
// with inessential slots fixed to the least element of their class.
Boxmap make_boxmap(const ClassIndex& ci, const Congruence& tau, const TermOperation& t,
                   const std::vector<int>& class_tuple);

// All boxmaps of terms of arity 1..arity_bound, optionally only those into
// one class, deduplicated and in canonical order.
std::vector<Boxmap> enumerate_boxmaps(const FiniteAlgebra& alg, const Congruence& tau,
                                      std::optional<int> output_class, int arity_bound,
                                      const Limits& limits = {});

struct DecompositionCheck {
  bool ok = false;
  std::string violated;  // "idempotence", "dependence" or "composition"
};

DecompositionCheck is_decomposition_op(const Boxmap& b);

Boxmap identity_boxmap(const ClassIndex& ci, int cls);

struct Coordinatization {
  int cls = -1;
  std::vector<Elem> elements;
  std::vector<std::size_t> factor_sizes;
  // coords[p][j]: factor-j block of the element at class position p.
  std::vector<std::vector<Elem>> coords;
  // Class position of each coordinate tuple, row-major over factor_sizes.
  std::vector<Elem> inverse;

  int k() const { return static_cast<int>(factor_sizes.size()); }
  Elem element_of(std::span<const Elem> coord) const {
    return elements[inverse[tuple_index(coord, factor_sizes)]];
  }
};

Coordinatization coordinatize(const ClassIndex& ci, const Boxmap& d);

struct ClassDecomposition {
  int cls = -1;
  std::size_t size = 0;
  int k = 1;
  Boxmap witness;
  Coordinatization coords;
};

// Largest-arity decomposition boxmap on a class, searched up to
// ceil(log2 |C|) (or the given ceiling), ties broken by least table.
ClassDecomposition max_decomposition_arity(const std::vector<Boxmap>& boxmaps,
                                           const ClassIndex& ci, int cls,
                                           std::optional<int> ceiling = {});

std::optional<Boxmap> find_violating_boxmap(const std::vector<Boxmap>& boxmaps,
                                            const std::vector<ClassDecomposition>& decomps);

struct BoxmapAnalysis {
  int arity_bound = 0;
  std::vector<Boxmap> boxmaps;
  std::vector<ClassDecomposition> decomps;
  std::optional<Boxmap> violation;
};

// floor(log2(largest class)) + 1: the least arity at which a boxmap could
// exceed the log2 bound on essential inputs.
int default_boxmap_arity_bound(const Congruence& tau);

// Runs the whole pipeline with the boxmap default arity bound unless given.
BoxmapAnalysis analyze_boxmaps(const FiniteAlgebra& alg, const Congruence& tau,
                               std::optional<int> arity_bound = {},
                               std::optional<int> ceiling = {}, const Limits& limits = {});

int ceil_log2(std::size_t n);

}  // namespace ualg
