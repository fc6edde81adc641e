// Free sorted algebras, the quotient with an isolated generator, the
// bipartite-graph algebra D(G), its definable relations and graph recovery.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ualg/closure.hpp"
#include "ualg/congruence.hpp"
#include "ualg/sorted.hpp"

namespace ualg {

struct BipartiteGraph {
  int reds = 0;
  int blues = 0;
  std::vector<std::pair<int, int>> edges;  // (red, blue)

  // ParseError on empty graphs, bad indices, repeated edges or isolated vertices.
  void validate() const;
  std::string to_text() const;
  static BipartiteGraph parse(std::string_view text);
  static BipartiteGraph load(const std::string& path);
};

// Maps red i of a to red_map[i] of b and likewise for blues.
struct GraphIsomorphism {
  std::vector<int> red_map;
  std::vector<int> blue_map;
};

std::optional<GraphIsomorphism> find_isomorphism(const BipartiteGraph& a, const BipartiteGraph& b);

// All bipartite graphs without isolated vertices on at most max_vertices
// vertices, one per isomorphism class.
std::vector<BipartiteGraph> small_bipartite_graphs(int max_vertices);

// Invertibility classification of the representative term set.
struct TermData {
  SortedAlgebra salg;
  TermSet T;
  Pool pool;  // at least two variables per sort
  std::vector<bool> right_invertible;
  std::vector<std::vector<bool>> left_invertible;  // per member and slot
  // (member, slot) pairs not left-invertible at the slot.
  std::vector<std::pair<int, int>> N;
  // Cores of t(v, u...) for (t, slot) in N with parameters free of v, each
  // with the slot holding v. Quantifying these over generators covers all
  // parameters of the N-terms.
  std::vector<std::pair<int, int>> instances;
  // Basic ops whose terms already give every basic op.
  std::vector<int> generating_ops;
};

TermData analyze_terms(const SortedAlgebra& salg, const Limits& limits = {});

// A term function restricted to the generators it depends on.
struct ReducedFn {
  int sort = 0;
  std::vector<int> vars;
  std::vector<Elem> table;
  friend auto operator<=>(const ReducedFn&, const ReducedFn&) = default;
};

// Free algebra of the variety on sorted generators. Elements are exact
// reduced functions; values holds each on a separating set of assignments.
struct FreeAlgebra {
  std::vector<int> gen_sorts;
  std::vector<std::size_t> gen_radix;
  std::vector<ReducedFn> elements;
  std::vector<std::vector<Elem>> assignments;
  PointStore values;  // tagged by sort
  std::vector<int> gen_elements;

  std::size_t size() const { return elements.size(); }
  int sort(int e) const { return elements[e].sort; }
  int generator(int g) const { return gen_elements[g]; }
  bool uses(int e, int g) const;
  // Applies a member of T to elements.
  int apply(const SortedAlgebra& salg, const SortedTermOp& t, std::span<const int> args) const;
  int apply_op(const SortedAlgebra& salg, int op, std::span<const int> args) const;
};

FreeAlgebra free_algebra(const TermData& td, const std::vector<int>& gen_sorts, const Limits& limits = {});

// The same free algebra as a subpower over every assignment of the generators.
ClosureResult free_algebra_literal(const SortedAlgebra& salg, const std::vector<int>& gen_sorts,
                                   const Limits& limits = {});

// Generator layout of F(X) and F' = F(X + z): x_s for every sort, then
// a0, a1, b0, b1, then z.
struct Generators {
  std::vector<int> x;  // per sort
  int a0 = -1, a1 = -1, b0 = -1, b1 = -1, z = -1;
  std::vector<int> sorts;
  std::vector<std::string> names;
};

Generators interp_generators(const SortedAlgebra& salg, const SortedTermOp& q);

// q(v1, v2, x...) with the remaining slots at the diagonal generators.
struct Star {
  SortedTermOp q;
  std::vector<int> fill;  // generator for slots 2.. of q
  std::array<int, 4> constants{};  // elements a0*b0, a0*b1, a1*b0, a1*b1
};

// NotDistinct if the four products collide.
Star star_and_constants(const TermData& td, const FreeAlgebra& F, const Generators& gens,
                        const SortedTermOp& q);

// Congruence on F' generated by (t(f0, u), t(z, u)) with (t, slot) in N
// and u from the elements not using z.
Congruence build_theta(const TermData& td, const FreeAlgebra& Fp, int f0, int z_gen);

// C = F'/theta with its operations evaluated through representatives.
class QuotientAlgebra {
 public:
  QuotientAlgebra(const TermData& td, const FreeAlgebra& Fp, Congruence theta);

  std::size_t size() const { return reps_.size(); }
  int sort(int c) const { return Fp_->sort(reps_[c]); }
  int rep(int c) const { return reps_[c]; }
  int cls(int e) const { return theta_.blocks[e]; }
  const Congruence& theta() const { return theta_; }
  const FreeAlgebra& free() const { return *Fp_; }
  const TermData& terms() const { return *td_; }
  // Applies member t of T to classes.
  int apply(int t, std::span<const int> args) const;

 private:
  const TermData* td_;
  const FreeAlgebra* Fp_;
  Congruence theta_;
  std::vector<int> reps_;
  mutable std::unordered_map<std::uint64_t, int> memo_;
};

struct CChecks {
  bool embeds = false;       // distinct elements without z stay distinct
  bool z_isolated = false;   // z/theta = {z}
  std::string detail;
};

CChecks check_C(const QuotientAlgebra& C, int z_gen);

// Partition of the elements of an algebra by the relation propto.
struct ProptoPartition {
  std::vector<int> label;
  bool related(int a, int b) const { return label[a] == label[b]; }
};

// On C, quantifying the parameter instances over the generators of F'.
ProptoPartition propto_C(const QuotientAlgebra& C);

// D(G) inside C^Gamma, Gamma = reds, blues, club, spade.
struct DAlgebra {
  const QuotientAlgebra* C = nullptr;
  std::size_t gamma = 0;
  PointStore points;  // tagged by sort
  std::vector<std::vector<Elem>> gens;
  std::vector<int> gen_sorts;
  std::vector<std::string> gen_names;
  std::vector<int> gen_index;  // element index of each generator
  int club() const { return static_cast<int>(gamma) - 2; }
  int spade() const { return static_cast<int>(gamma) - 1; }
  std::size_t size() const { return points.size(); }
  int sort(int e) const { return points.tag(e); }
  // Applies member t of T coordinatewise; -1 if the result is not in D.
  int apply(int t, std::span<const int> args) const;
};

// Generators: diagonals of X, vertex points, two edge points per edge.
DAlgebra build_D(const QuotientAlgebra& C, const Generators& gens, const Star& star,
                 const BipartiteGraph& g, const Limits& limits = {});

// Direct: parameters range over D. Stalkwise: related in C at every index.
ProptoPartition propto_D(const DAlgebra& D);
ProptoPartition propto_D_stalkwise(const DAlgebra& D, const ProptoPartition& onC);

struct Preorder {
  std::vector<std::vector<int>> down;  // down[y]: every x <= y
  std::vector<int> sim;                // class label of ~
  bool leq(int x, int y) const;
};

Preorder leq_sim(const DAlgebra& D);

struct DefinableSets {
  std::vector<bool> nrinv, gen, edgegen, vertexgen;
  std::vector<int> vertex_classes;  // one ~-class label per recovered vertex
  std::vector<std::pair<int, int>> edge;  // pairs of indices into vertex_classes
};

DefinableSets definable_sets(const DAlgebra& D, const Star& star, const ProptoPartition& propto,
                             const Preorder& pre);

struct Recovery {
  BipartiteGraph graph;
  std::optional<GraphIsomorphism> iso;
  std::string problem;  // why no graph could be read off, if so
};

Recovery recover_graph(const DefinableSets& sets, const BipartiteGraph& input);

struct InterpretationReport {
  std::size_t T_size = 0, F_size = 0, Fp_size = 0, C_size = 0, D_size = 0;
  std::string q;
  std::array<std::string, 4> constants;
  bool embeds = false, z_isolated = false, zero_propto_z = false, constants_distinct = false;
  bool constants_not_propto = false;
  std::vector<std::pair<int, int>> propto_constant_pairs;
  bool generators_in_nrinv = false, gen_classes_match = false, edgegen_matches = false;
  bool propto_stalkwise = false;
  std::size_t preservation_checked = 0, preservation_failed = 0;
  std::size_t nrinv = 0, gen = 0, edgegen = 0, vertexgen = 0;
  BipartiteGraph recovered;
  bool isomorphic = false;
  std::string problem;

  std::string text() const;
};

// Runs the whole construction on a flat algebra. Throws NotApplicable if
// the flat algebra is essentially unary; construction checks are recorded,
// not thrown.
InterpretationReport interpret(const SortedAlgebra& flat, const BipartiteGraph& g,
                               const Limits& limits = {});
InterpretationReport interpret(const TermData& td, const BipartiteGraph& g, const Limits& limits = {});
// One report per graph; everything up to C is built once.
std::vector<InterpretationReport> interpret_all(const TermData& td, const std::vector<BipartiteGraph>& graphs,
                                                const Limits& limits = {});

}  // namespace ualg
