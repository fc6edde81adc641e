#include "ualg/closure.hpp"

#include <algorithm>
#include <cstring>

namespace ualg {

std::size_t PointStore::hash(std::span<const Elem> v, int tag) const {
  std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ull;
  for (Elem e : v) {
    h ^= e;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h ^ (h >> 29));
}

void PointStore::grow() {
  std::size_t cap = slots_.empty() ? 64 : slots_.size() * 2;
  slots_.assign(cap, kEmpty);
  for (std::size_t i = 0; i < count_; ++i) {
    std::size_t s = hash(at(i), tags_[i]) & (cap - 1);
    while (slots_[s] != kEmpty) s = (s + 1) & (cap - 1);
    slots_[s] = static_cast<std::uint32_t>(i);
  }
}

std::optional<std::size_t> PointStore::find(std::span<const Elem> v, int tag) const {
  if (slots_.empty()) return std::nullopt;
  std::size_t mask = slots_.size() - 1;
  std::size_t s = hash(v, tag) & mask;
  while (slots_[s] != kEmpty) {
    auto cand = at(slots_[s]);
    if (tags_[slots_[s]] == tag &&
        (len_ == 0 || std::memcmp(cand.data(), v.data(), len_ * sizeof(Elem)) == 0))
      return slots_[s];
    s = (s + 1) & mask;
  }
  return std::nullopt;
}

std::pair<std::size_t, bool> PointStore::insert(std::span<const Elem> v, int tag) {
  if (auto f = find(v, tag)) return {*f, false};
  if ((count_ + 1) * 2 > slots_.size()) grow();
  data_.insert(data_.end(), v.begin(), v.end());
  tags_.push_back(tag);
  std::size_t idx = count_++;
  std::size_t mask = slots_.size() - 1;
  std::size_t s = hash(v, tag) & mask;
  while (slots_[s] != kEmpty) s = (s + 1) & mask;
  slots_[s] = static_cast<std::uint32_t>(idx);
  return {idx, true};
}

Term ClosureResult::witness(std::size_t i, const std::vector<std::string>& op_names) const {
  const Origin& o = origins[i];
  if (o.op < 0) return Term::variable(o.gen);
  std::vector<Term> args;
  args.reserve(o.args.size());
  for (auto a : o.args) args.push_back(witness(a, op_names));
  return Term::apply(op_names[o.op], std::move(args));
}

namespace {

struct Engine {
  std::size_t len;
  const std::vector<ClosureOp>& ops;
  std::size_t max_elements;
  ClosureResult res;
  std::vector<std::vector<std::uint32_t>> by_sort;
  std::vector<Elem> buf;
  const ClosureVisitor* visit = nullptr;
  bool stopped = false;

  void add(std::span<const Elem> v, int sort, ClosureResult::Origin origin) {
    auto [idx, fresh] = res.points.insert(v, sort);
    if (!fresh) return;
    if (res.points.size() > max_elements)
      throw Error(Errc::ResourceLimit,
                  "subpower closure exceeded " + std::to_string(max_elements) + " elements");
    res.sorts.push_back(sort);
    res.origins.push_back(std::move(origin));
    if (static_cast<std::size_t>(sort) >= by_sort.size()) by_sort.resize(sort + 1);
    by_sort[sort].push_back(static_cast<std::uint32_t>(idx));
    if (visit && *visit && !(*visit)(res, idx)) stopped = true;
  }

  void apply(int opi, const std::vector<std::uint32_t>& args) {
    const ClosureOp& op = ops[opi];
    const std::size_t k = args.size();
    std::size_t strides[16];
    const Elem* rows[16];
    std::size_t st = 1;
    for (std::size_t p = k; p-- > 0;) {
      strides[p] = st;
      st *= op.radix[p];
      rows[p] = res.points.raw().data() + static_cast<std::size_t>(args[p]) * len;
    }
    for (std::size_t c = 0; c < len; ++c) {
      std::size_t idx = 0;
      for (std::size_t p = 0; p < k; ++p) idx += rows[p][c] * strides[p];
      buf[c] = op.table[idx];
    }
    if (res.points.find(buf, op.out_sort)) return;
    add(buf, op.out_sort, {opi, -1, args});
  }
};

}  // namespace

ClosureResult close_points(std::size_t len, const std::vector<ClosureOp>& ops,
                           const std::vector<std::vector<Elem>>& generators,
                           const std::vector<int>& generator_sorts, std::size_t max_elements,
                           std::optional<int> depth_bound, const ClosureVisitor& visit) {
  Engine e{len, ops, max_elements, ClosureResult{PointStore(len), {}, {}}, {}, std::vector<Elem>(len), &visit};
  e.res.points = PointStore(len);
  for (const auto& op : ops)
    if (op.in_sorts.size() > 16) throw Error(Errc::ResourceLimit, "operation arity above 16");
  for (std::size_t g = 0; g < generators.size(); ++g) {
    if (generators[g].size() != len) throw Error(Errc::SizeMismatch, "generator length mismatch");
    e.add(generators[g], generator_sorts.empty() ? 0 : generator_sorts[g],
          {-1, static_cast<int>(g), {}});
    if (e.stopped) return std::move(e.res);
  }
  for (std::size_t o = 0; o < ops.size(); ++o)
    if (ops[o].in_sorts.empty()) {
      std::fill(e.buf.begin(), e.buf.end(), ops[o].table[0]);
      e.add(e.buf, ops[o].out_sort, {static_cast<int>(o), -1, {}});
      if (e.stopped) return std::move(e.res);
    }

  // prev[s]: elements of sort s known before the current round; cur[s]: all
  // elements available to the current round.
  std::vector<std::size_t> prev;
  int round = 0;
  while (true) {
    if (depth_bound && round >= *depth_bound) break;
    std::vector<std::size_t> cur(e.by_sort.size());
    for (std::size_t s = 0; s < cur.size(); ++s) cur[s] = e.by_sort[s].size();
    prev.resize(cur.size(), 0);
    if (cur == prev) break;
    for (std::size_t o = 0; o < ops.size(); ++o) {
      const ClosureOp& op = ops[o];
      const std::size_t k = op.in_sorts.size();
      if (k == 0) continue;
      auto avail = [&](int s) { return static_cast<std::size_t>(s) < cur.size() ? cur[s] : 0; };
      auto old = [&](int s) { return static_cast<std::size_t>(s) < prev.size() ? prev[s] : 0; };
      std::vector<std::size_t> lo(k), hi(k), at(k);
      std::vector<std::uint32_t> args(k);
      for (std::size_t p = 0; p < k; ++p) {
        // Tuples whose first new component sits at position p.
        bool empty = false;
        for (std::size_t q = 0; q < k; ++q) {
          int s = op.in_sorts[q];
          if (q < p) { lo[q] = 0; hi[q] = old(s); }
          else if (q == p) { lo[q] = old(s); hi[q] = avail(s); }
          else { lo[q] = 0; hi[q] = avail(s); }
          if (lo[q] >= hi[q]) empty = true;
        }
        if (empty) continue;
        at = lo;
        while (true) {
          for (std::size_t q = 0; q < k; ++q) args[q] = e.by_sort[op.in_sorts[q]][at[q]];
          e.apply(static_cast<int>(o), args);
          if (e.stopped) return std::move(e.res);
          std::size_t q = k;
          while (q-- > 0) {
            if (++at[q] < hi[q]) break;
            at[q] = lo[q];
          }
          if (q == static_cast<std::size_t>(-1)) break;
        }
      }
    }
    prev = cur;
    ++round;
  }
  return std::move(e.res);
}

}  // namespace ualg
