// Coordinatewise closure of point sets under typed operation tables.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ualg/core.hpp"

namespace ualg {

// Deduplicating store of fixed-length Elem vectors, keyed by (tag, vector).
class PointStore {
 public:
  explicit PointStore(std::size_t len = 0) : len_(len) {}

  std::size_t len() const { return len_; }
  std::size_t size() const { return count_; }
  std::span<const Elem> at(std::size_t i) const { return {data_.data() + i * len_, len_}; }
  const std::vector<Elem>& raw() const { return data_; }

  // Returns (index, inserted).
  std::pair<std::size_t, bool> insert(std::span<const Elem> v, int tag = 0);
  std::optional<std::size_t> find(std::span<const Elem> v, int tag = 0) const;
  int tag(std::size_t i) const { return tags_[i]; }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;
  std::size_t hash(std::span<const Elem> v, int tag) const;
  void grow();

  std::size_t len_;
  std::size_t count_ = 0;
  std::vector<Elem> data_;
  std::vector<int> tags_;
  std::vector<std::uint32_t> slots_;
};

struct ClosureOp {
  std::vector<int> in_sorts;
  int out_sort = 0;
  std::vector<std::size_t> radix;  // carrier size of each input sort
  std::vector<Elem> table;
};

struct ClosureResult {
  PointStore points;
  std::vector<int> sorts;
  // For each element: generator index (op == -1) or op and argument elements.
  struct Origin {
    int op = -1;
    int gen = -1;
    std::vector<std::uint32_t> args;
  };
  std::vector<Origin> origins;

  // Term over generator variables; op names supplied by the caller.
  Term witness(std::size_t i, const std::vector<std::string>& op_names) const;
};

// Called with each new element index; returning false stops the closure.
using ClosureVisitor = std::function<bool(const ClosureResult&, std::size_t)>;

// Closes the generators under the operations, applied coordinatewise.
// Generators keep their first occurrence; duplicates are dropped.
ClosureResult close_points(std::size_t len, const std::vector<ClosureOp>& ops,
                           const std::vector<std::vector<Elem>>& generators,
                           const std::vector<int>& generator_sorts, std::size_t max_elements,
                           std::optional<int> depth_bound = {},
                           const ClosureVisitor& visit = {});

}  // namespace ualg
