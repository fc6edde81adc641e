// Random rectangular algebras: carriers are products of small factors and
// every output coordinate is one input's coordinate, passed through a
// unary map on that factor.
#pragma once

#include <random>
#include <vector>

#include "ualg/core.hpp"

namespace ualg::corpus {

struct SelectorAlgebra {
  std::vector<std::size_t> factors;
  FiniteAlgebra alg;
};

inline SelectorAlgebra random_selector_algebra(std::mt19937& rng) {
  static const std::vector<std::vector<std::size_t>> shapes{{2}, {3}, {2, 2}, {2, 3}, {3, 2}};
  SelectorAlgebra out;
  out.factors = shapes[rng() % shapes.size()];
  std::size_t size = 1;
  for (auto f : out.factors) size *= f;
  const std::size_t k = out.factors.size();
  const int num_ops = 1 + static_cast<int>(rng() % 2);
  std::vector<Operation> ops;
  for (int o = 0; o < num_ops; ++o) {
    const int arity = 1 + static_cast<int>(rng() % 3);
    std::vector<int> slot(k);
    std::vector<std::vector<Elem>> map(k);
    for (std::size_t i = 0; i < k; ++i) {
      slot[i] = static_cast<int>(rng() % arity);
      for (std::size_t v = 0; v < out.factors[i]; ++v) map[i].push_back(static_cast<Elem>(rng() % out.factors[i]));
    }
    Operation op{"f" + std::to_string(o), arity, {}};
    const std::size_t len = ipow(size, arity);
    std::vector<Elem> args(arity), coords(k), in(k);
    for (std::size_t idx = 0; idx < len; ++idx) {
      tuple_digits(idx, std::vector<std::size_t>(arity, size), args);
      for (std::size_t i = 0; i < k; ++i) {
        tuple_digits(args[slot[i]], out.factors, in);
        coords[i] = map[i][in[i]];
      }
      op.table.push_back(static_cast<Elem>(tuple_index(coords, out.factors)));
    }
    ops.push_back(std::move(op));
  }
  out.alg = FiniteAlgebra(size, std::move(ops));
  return out;
}

}  // namespace ualg::corpus
