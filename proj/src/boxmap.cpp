#include "ualg/boxmap.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "ualg/union_find.hpp"

namespace ualg {

int ceil_log2(std::size_t n) {
  int lg = 0;
  while ((std::size_t{1} << lg) < n) ++lg;
  return lg;
}

ClassIndex::ClassIndex(const Congruence& tau) : classes(tau.classes()), position(tau.algebra_size()) {
  for (const auto& c : classes)
    for (std::size_t p = 0; p < c.size(); ++p) position[c[p]] = static_cast<int>(p);
}

Elem Boxmap::apply(const ClassIndex& ci, std::span<const Elem> elems) const {
  std::vector<Elem> pos(elems.size());
  for (std::size_t i = 0; i < elems.size(); ++i) pos[i] = static_cast<Elem>(ci.position[elems[i]]);
  return at_positions(pos);
}

std::string Boxmap::str() const {
  std::ostringstream out;
  out << term.str() << " on";
  for (std::size_t i = 0; i < input_slots.size(); ++i)
    out << (i ? " x" : "") << " v" << input_slots[i] << ":C" << input_classes[i];
  if (input_slots.empty()) out << " ()";
  for (std::size_t i = 0; i < constant_slots.size(); ++i)
    out << (i ? "," : " with ") << "v" << constant_slots[i] << "=" << constants[i];
  out << " -> C" << output_class;
  return out.str();
}

bool operator<(const Boxmap& a, const Boxmap& b) {
  return std::forward_as_tuple(a.input_classes.size(), a.input_classes, a.output_class, a.table) <
         std::forward_as_tuple(b.input_classes.size(), b.input_classes, b.output_class, b.table);
}

Boxmap make_boxmap(const ClassIndex& ci, const Congruence& tau, const TermOperation& t,
                   const std::vector<int>& class_tuple) {
  const int n = t.arity;
  std::vector<std::size_t> radix(n);
  for (int i = 0; i < n; ++i) radix[i] = ci.size(class_tuple[i]);
  std::size_t box = 1;
  for (auto r : radix) box *= r;
  std::vector<Elem> image(box), digits(n), args(n);
  for (std::size_t idx = 0; idx < box; ++idx) {
    tuple_digits(idx, radix, digits);
    for (int i = 0; i < n; ++i) args[i] = ci.classes[class_tuple[i]][digits[i]];
    image[idx] = t.at(args);
  }
  Boxmap b;
  b.term = t.witness;
  b.term_arity = n;
  b.output_class = tau.blocks[image[0]];
  b.output_elements = ci.classes[b.output_class];
  auto ess = essential_variables(image, radix);
  std::vector<bool> is_input(n, false);
  for (int i : ess) is_input[i] = true;
  for (int i = 0; i < n; ++i) {
    if (is_input[i]) {
      b.input_slots.push_back(i);
      b.input_classes.push_back(class_tuple[i]);
      b.radix.push_back(radix[i]);
    } else {
      b.constant_slots.push_back(i);
      b.constant_classes.push_back(class_tuple[i]);
      b.constants.push_back(ci.classes[class_tuple[i]][0]);
    }
  }
  std::size_t cells = 1;
  for (auto r : b.radix) cells *= r;
  b.table.resize(cells);
  std::vector<Elem> sub(b.radix.size());
  std::fill(digits.begin(), digits.end(), 0);
  for (std::size_t idx = 0; idx < cells; ++idx) {
    tuple_digits(idx, b.radix, sub);
    for (std::size_t j = 0; j < sub.size(); ++j) digits[b.input_slots[j]] = sub[j];
    b.table[idx] = image[tuple_index(digits, radix)];
  }
  return b;
}

std::vector<Boxmap> enumerate_boxmaps(const FiniteAlgebra& alg, const Congruence& tau,
                                      std::optional<int> output_class, int arity_bound,
                                      const Limits& limits) {
  ClassIndex ci(tau);
  const std::size_t m = ci.classes.size();
  std::map<std::tuple<std::vector<int>, int, std::vector<Elem>>, Boxmap> seen;
  for (int n = 1; n <= arity_bound; ++n) {
    std::vector<std::size_t> cradix(n, m);
    std::vector<Elem> ct(n);
    const std::size_t tuples = ipow(m, n);
    for_each_term_operation(
        alg, n,
        [&](const TermOperation& t) {
          for (std::size_t g = 0; g < tuples; ++g) {
            tuple_digits(g, cradix, ct);
            auto b = make_boxmap(ci, tau, t, {ct.begin(), ct.end()});
            if (output_class && b.output_class != *output_class) continue;
            auto key = std::make_tuple(b.input_classes, b.output_class, b.table);
            if (seen.count(key)) continue;
            seen.emplace(std::move(key), std::move(b));
            if (seen.size() > limits.max_tables)
              throw Error(Errc::ResourceLimit,
                          "boxmap count exceeded " + std::to_string(limits.max_tables));
          }
          return true;
        },
        std::nullopt, limits);
  }
  std::vector<Boxmap> out;
  out.reserve(seen.size());
  for (auto& [k, b] : seen) out.push_back(std::move(b));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

DecompositionCheck check_decomposition(const Boxmap& b, const std::vector<Elem>& val) {
  for (int c : b.input_classes)
    if (c != b.output_class) throw Error(Errc::ClassMismatch, "decomposition inputs must lie in the output class");
  const int k = b.arity();
  if (k == 0) return {false, "dependence"};
  const std::size_t n = b.radix[0];
  std::vector<Elem> tup(k);
  for (std::size_t x = 0; x < n; ++x) {
    std::fill(tup.begin(), tup.end(), static_cast<Elem>(x));
    if (val[tuple_index(tup, n)] != x) return {false, "idempotence"};
  }
  // Nothing depends on anything over a one-point class; the identity still
  // counts there so that every class has K >= 1.
  const bool trivial_identity = n == 1 && k == 1;
  if (!trivial_identity && static_cast<int>(essential_variables(val, b.radix).size()) != k)
    return {false, "dependence"};
  // rows[i] is a k-tuple index; compare d(d(row_1),...,d(row_k)) with
  // d(row_1[0], row_2[1], ..., row_k[k-1]).
  const std::size_t rows = val.size();
  std::vector<std::size_t> r(k, 0);
  std::vector<Elem> outer(k), diag(k), digits(k);
  std::vector<std::vector<Elem>> row_digits(rows, std::vector<Elem>(k));
  for (std::size_t i = 0; i < rows; ++i) tuple_digits(i, b.radix, row_digits[i]);
  while (true) {
    for (int i = 0; i < k; ++i) {
      outer[i] = val[r[i]];
      diag[i] = row_digits[r[i]][i];
    }
    if (val[tuple_index(outer, n)] != val[tuple_index(diag, n)]) return {false, "composition"};
    int i = k - 1;
    while (i >= 0 && ++r[i] == rows) r[i--] = 0;
    if (i < 0) break;
  }
  return {true, ""};
}

}  // namespace

DecompositionCheck is_decomposition_op(const Boxmap& b) {
  std::map<Elem, Elem> pos;
  for (std::size_t x = 0; x < b.output_elements.size(); ++x)
    pos.emplace(b.output_elements[x], static_cast<Elem>(x));
  std::vector<Elem> val(b.table.size());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = pos.at(b.table[i]);
  return check_decomposition(b, val);
}

Boxmap identity_boxmap(const ClassIndex& ci, int cls) {
  Boxmap b;
  b.term = Term::variable(0);
  b.term_arity = 1;
  b.input_slots = {0};
  b.input_classes = {cls};
  b.output_class = cls;
  b.radix = {ci.size(cls)};
  b.table = ci.classes[cls];
  b.output_elements = ci.classes[cls];
  return b;
}

Coordinatization coordinatize(const ClassIndex& ci, const Boxmap& d) {
  std::vector<Elem> val(d.table.size());
  for (std::size_t i = 0; i < val.size(); ++i) val[i] = static_cast<Elem>(ci.position[d.table[i]]);
  auto chk = check_decomposition(d, val);
  if (!chk.ok) throw Error(Errc::NotADecomposition, "not a decomposition operation: " + chk.violated);
  const int k = d.arity();
  const std::size_t n = d.radix[0];
  Coordinatization co;
  co.cls = d.output_class;
  co.elements = ci.classes[co.cls];
  co.coords.assign(n, std::vector<Elem>(k));
  std::vector<std::size_t> strides(k);
  std::size_t st = 1;
  for (int p = k; p-- > 0;) {
    strides[p] = st;
    st *= n;
  }
  for (int j = 0; j < k; ++j) {
    UnionFind uf(n);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = x + 1; y < n; ++y) {
        bool same = true;
        for (std::size_t idx = 0; idx < val.size() && same; ++idx) {
          if ((idx / strides[j]) % n != 0) continue;
          same = val[idx + x * strides[j]] == val[idx + y * strides[j]];
        }
        if (same) uf.unite(x, y);
      }
    auto labels = Congruence::from_labels(uf.labels());
    co.factor_sizes.push_back(static_cast<std::size_t>(labels.num_blocks()));
    for (std::size_t x = 0; x < n; ++x) co.coords[x][j] = static_cast<Elem>(labels.blocks[x]);
  }
  std::size_t prod = 1;
  for (auto s : co.factor_sizes) prod *= s;
  if (prod != n) throw Error(Errc::NotADecomposition, "factor sizes do not multiply to the class size");
  co.inverse.assign(n, 0);
  std::vector<bool> hit(n, false);
  for (std::size_t x = 0; x < n; ++x) {
    std::size_t idx = tuple_index(co.coords[x], co.factor_sizes);
    if (hit[idx]) throw Error(Errc::NotADecomposition, "coordinate map is not injective");
    hit[idx] = true;
    co.inverse[idx] = static_cast<Elem>(x);
  }
  // d acts as diagonal selection through the coordinates.
  std::vector<Elem> xs(k);
  for (std::size_t idx = 0; idx < val.size(); ++idx) {
    tuple_digits(idx, d.radix, xs);
    for (int j = 0; j < k; ++j)
      if (co.coords[val[idx]][j] != co.coords[xs[j]][j])
        throw Error(Errc::NotADecomposition, "diagonal selection identity fails");
  }
  return co;
}

ClassDecomposition max_decomposition_arity(const std::vector<Boxmap>& boxmaps,
                                           const ClassIndex& ci, int cls,
                                           std::optional<int> ceiling) {
  ClassDecomposition res;
  res.cls = cls;
  res.size = ci.size(cls);
  const int top = ceiling.value_or(ceil_log2(res.size));
  for (int k = top; k >= 2 && res.k == 1; --k)
    for (const auto& b : boxmaps) {
      if (b.arity() != k || b.output_class != cls) continue;
      if (std::any_of(b.input_classes.begin(), b.input_classes.end(), [&](int c) { return c != cls; }))
        continue;
      if (is_decomposition_op(b).ok) {
        res.k = k;
        res.witness = b;
        break;
      }
    }
  if (res.k == 1) res.witness = identity_boxmap(ci, cls);
  res.coords = coordinatize(ci, res.witness);
  return res;
}

std::optional<Boxmap> find_violating_boxmap(const std::vector<Boxmap>& boxmaps,
                                            const std::vector<ClassDecomposition>& decomps) {
  for (const auto& b : boxmaps)
    if (b.arity() > decomps[b.output_class].k) return b;
  return std::nullopt;
}

int default_boxmap_arity_bound(const Congruence& tau) {
  int lg = 0;
  while ((std::size_t{2} << lg) <= tau.max_class_size()) ++lg;
  return lg + 1;
}

BoxmapAnalysis analyze_boxmaps(const FiniteAlgebra& alg, const Congruence& tau,
                               std::optional<int> arity_bound, std::optional<int> ceiling,
                               const Limits& limits) {
  BoxmapAnalysis res;
  res.arity_bound = arity_bound.value_or(default_boxmap_arity_bound(tau));
  res.boxmaps = enumerate_boxmaps(alg, tau, std::nullopt, res.arity_bound, limits);
  ClassIndex ci(tau);
  for (int c = 0; c < static_cast<int>(ci.classes.size()); ++c)
    res.decomps.push_back(max_decomposition_arity(res.boxmaps, ci, c, ceiling));
  res.violation = find_violating_boxmap(res.boxmaps, res.decomps);
  return res;
}

}  // namespace ualg
