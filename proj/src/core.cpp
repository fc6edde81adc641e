#include "ualg/core.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "ualg/closure.hpp"

namespace ualg {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownOp: return "UnknownOp";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::UnassignedVariable: return "UnassignedVariable";
    case Errc::ResourceLimit: return "ResourceLimit";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::NotACongruence: return "NotACongruence";
    case Errc::ClassMismatch: return "ClassMismatch";
    case Errc::NotADecomposition: return "NotADecomposition";
    case Errc::NotCoordinatized: return "NotCoordinatized";
    case Errc::NotStronglyAbelian: return "NotStronglyAbelian";
    case Errc::EssentiallyUnary: return "EssentiallyUnary";
    case Errc::NonTermination: return "NonTermination";
    case Errc::EmbeddingFailure: return "EmbeddingFailure";
    case Errc::IsolationFailure: return "IsolationFailure";
    case Errc::NotDistinct: return "NotDistinct";
    case Errc::SortMismatch: return "SortMismatch";
    case Errc::NotApplicable: return "NotApplicable";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

std::size_t tuple_index(std::span<const Elem> args, std::span<const std::size_t> radix) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < args.size(); ++i) idx = idx * radix[i] + args[i];
  return idx;
}

std::size_t tuple_index(std::span<const Elem> args, std::size_t base) {
  std::size_t idx = 0;
  for (Elem a : args) idx = idx * base + a;
  return idx;
}

void tuple_digits(std::size_t index, std::span<const std::size_t> radix, std::span<Elem> out) {
  for (std::size_t i = radix.size(); i-- > 0;) {
    out[i] = static_cast<Elem>(index % radix[i]);
    index /= radix[i];
  }
}

FiniteAlgebra::FiniteAlgebra(std::size_t size, std::vector<Operation> ops)
    : size_(size), ops_(std::move(ops)) {
  if (size == 0) throw Error(Errc::ParseError, "algebra size must be positive");
  if (size > 0xffff) throw Error(Errc::ResourceLimit, "algebra size above 65535");
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const auto& op = ops_[i];
    if (op.arity < 0) throw Error(Errc::ParseError, "negative arity for " + op.name);
    if (op.table.size() != ipow(size, op.arity))
      throw Error(Errc::ParseError, "table of " + op.name + " has wrong length");
    for (Elem v : op.table)
      if (v >= size) throw Error(Errc::ParseError, "table of " + op.name + " leaves the universe");
    for (std::size_t j = 0; j < i; ++j)
      if (ops_[j].name == op.name) throw Error(Errc::ParseError, "duplicate op " + op.name);
  }
}

int FiniteAlgebra::op_index(std::string_view name) const {
  for (std::size_t i = 0; i < ops_.size(); ++i)
    if (ops_[i].name == name) return static_cast<int>(i);
  return -1;
}

const Operation* FiniteAlgebra::find(std::string_view name) const {
  int i = op_index(name);
  return i < 0 ? nullptr : &ops_[i];
}

namespace {

// Whitespace tokens with '#' comments removed.
std::vector<std::string> tokenize(std::istream& in) {
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (auto p = line.find('#'); p != std::string::npos) line.resize(p);
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
  }
  return toks;
}

long parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, std::string("expected integer for ") + what + ", got '" + s + "'");
  }
}

}  // namespace

FiniteAlgebra FiniteAlgebra::parse(std::istream& in) {
  auto toks = tokenize(in);
  std::size_t pos = 0;
  auto next = [&](const char* what) -> const std::string& {
    if (pos >= toks.size()) throw Error(Errc::ParseError, std::string("unexpected end, wanted ") + what);
    return toks[pos++];
  };
  if (next("size") != "size") throw Error(Errc::ParseError, "algebra file must start with 'size'");
  long n = parse_int(next("size"), "size");
  if (n <= 0) throw Error(Errc::ParseError, "size must be positive");
  std::vector<Operation> ops;
  while (pos < toks.size()) {
    if (next("op") != "op") throw Error(Errc::ParseError, "expected 'op', got '" + toks[pos - 1] + "'");
    Operation op;
    op.name = next("op name");
    long ar = parse_int(next("arity"), "arity");
    if (ar < 0 || ar > 16) throw Error(Errc::ParseError, "arity out of range for " + op.name);
    op.arity = static_cast<int>(ar);
    std::size_t cnt = ipow(n, ar);
    op.table.reserve(cnt);
    for (std::size_t i = 0; i < cnt; ++i) {
      long v = parse_int(next("table entry"), "table entry");
      if (v < 0 || v >= n) throw Error(Errc::ParseError, "entry out of range in " + op.name);
      op.table.push_back(static_cast<Elem>(v));
    }
    ops.push_back(std::move(op));
  }
  return FiniteAlgebra(static_cast<std::size_t>(n), std::move(ops));
}

FiniteAlgebra FiniteAlgebra::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

FiniteAlgebra FiniteAlgebra::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  return parse(in);
}

std::string FiniteAlgebra::to_text() const {
  std::ostringstream out;
  out << "size " << size_ << "\n";
  for (const auto& op : ops_) {
    out << "op " << op.name << " " << op.arity << "\n";
    std::size_t row = op.arity == 0 ? 1 : size_;
    for (std::size_t i = 0; i < op.table.size(); ++i)
      out << op.table[i] << ((i + 1) % row == 0 ? "\n" : " ");
  }
  return out.str();
}

Term Term::variable(int index) {
  Term t;
  t.var = index;
  return t;
}

Term Term::apply(std::string op, std::vector<Term> args) {
  Term t;
  t.op = std::move(op);
  t.args = std::move(args);
  return t;
}

int Term::max_var() const {
  if (is_var()) return var;
  int m = -1;
  for (const auto& a : args) m = std::max(m, a.max_var());
  return m;
}

std::string Term::str() const {
  if (is_var()) return "v" + std::to_string(var);
  std::string s = op;
  if (args.empty()) return s;
  s += "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i].str();
  }
  return s + ")";
}

Term Term::substitute(const std::vector<Term>& subst) const {
  if (is_var()) return subst.at(var);
  std::vector<Term> a;
  a.reserve(args.size());
  for (const auto& c : args) a.push_back(c.substitute(subst));
  return apply(op, std::move(a));
}

Elem eval_term(const FiniteAlgebra& alg, const Term& t, std::span<const Elem> assignment) {
  if (t.is_var()) {
    if (static_cast<std::size_t>(t.var) >= assignment.size())
      throw Error(Errc::UnassignedVariable, "variable v" + std::to_string(t.var) + " has no value");
    return assignment[t.var];
  }
  int oi = alg.op_index(t.op);
  if (oi < 0) throw Error(Errc::UnknownOp, "no operation named " + t.op);
  if (static_cast<int>(t.args.size()) != alg.ops()[oi].arity)
    throw Error(Errc::ArityMismatch, t.op + " expects " + std::to_string(alg.ops()[oi].arity) +
                                         " arguments, got " + std::to_string(t.args.size()));
  Elem vals[16];
  for (std::size_t i = 0; i < t.args.size(); ++i) vals[i] = eval_term(alg, t.args[i], assignment);
  return alg.apply(oi, std::span<const Elem>(vals, t.args.size()));
}

TermOperation term_operation(const FiniteAlgebra& alg, const Term& t, int arity) {
  TermOperation op{alg.size(), arity, {}, t};
  std::size_t cnt = ipow(alg.size(), arity);
  op.table.resize(cnt);
  std::vector<std::size_t> radix(arity, alg.size());
  std::vector<Elem> args(arity);
  for (std::size_t i = 0; i < cnt; ++i) {
    tuple_digits(i, radix, args);
    op.table[i] = eval_term(alg, t, args);
  }
  return op;
}

namespace {

std::vector<ClosureOp> closure_ops(const FiniteAlgebra& alg) {
  std::vector<ClosureOp> ops;
  for (const auto& op : alg.ops())
    ops.push_back({std::vector<int>(op.arity, 0), 0, std::vector<std::size_t>(op.arity, alg.size()),
                   op.table});
  return ops;
}

std::vector<std::string> op_names(const FiniteAlgebra& alg) {
  std::vector<std::string> names;
  for (const auto& op : alg.ops()) names.push_back(op.name);
  return names;
}

}  // namespace

namespace {

std::vector<std::vector<Elem>> projections(std::size_t base, int n) {
  const std::size_t len = ipow(base, n);
  std::vector<std::size_t> radix(n, base);
  std::vector<std::vector<Elem>> gens(n, std::vector<Elem>(len));
  std::vector<Elem> digits(n);
  for (std::size_t c = 0; c < len; ++c) {
    tuple_digits(c, radix, digits);
    for (int i = 0; i < n; ++i) gens[i][c] = digits[i];
  }
  return gens;
}

}  // namespace

bool for_each_term_operation(const FiniteAlgebra& alg, int n,
                             const std::function<bool(const TermOperation&)>& visit,
                             std::optional<int> depth_bound, const Limits& limits) {
  if (n < 0) throw Error(Errc::ArityMismatch, "negative arity");
  auto names = op_names(alg);
  bool completed = true;
  // Once every table of this arity has appeared the closure cannot grow.
  const std::size_t len = ipow(alg.size(), n);
  std::size_t all_tables = 0;
  if (len < 64) {
    all_tables = 1;
    for (std::size_t i = 0; i < len && all_tables <= limits.max_tables; ++i) all_tables *= alg.size();
  }
  ClosureVisitor v = [&](const ClosureResult& r, std::size_t i) {
    auto row = r.points.at(i);
    TermOperation op{alg.size(), n, std::vector<Elem>(row.begin(), row.end()), r.witness(i, names)};
    if (!visit(op)) completed = false;
    return completed && r.points.size() != all_tables;
  };
  close_points(ipow(alg.size(), n), closure_ops(alg), projections(alg.size(), n), {},
               limits.max_tables, depth_bound, v);
  return completed;
}

std::vector<TermOperation> enumerate_term_operations(const FiniteAlgebra& alg, int n,
                                                     std::optional<int> depth_bound,
                                                     const Limits& limits) {
  std::vector<TermOperation> out;
  for_each_term_operation(
      alg, n,
      [&](const TermOperation& op) {
        out.push_back(op);
        return true;
      },
      depth_bound, limits);
  return out;
}

std::vector<int> essential_variables(std::span<const Elem> table,
                                     std::span<const std::size_t> radix) {
  std::vector<int> ess;
  const std::size_t k = radix.size();
  std::size_t stride = 1;
  std::vector<std::size_t> strides(k);
  for (std::size_t p = k; p-- > 0;) {
    strides[p] = stride;
    stride *= radix[p];
  }
  for (std::size_t p = 0; p < k; ++p) {
    bool found = false;
    // Compare each tuple whose p-th digit is 0 with every other value there.
    for (std::size_t idx = 0; idx < table.size() && !found; ++idx) {
      if ((idx / strides[p]) % radix[p] != 0) continue;
      for (std::size_t v = 1; v < radix[p]; ++v)
        if (table[idx + v * strides[p]] != table[idx]) {
          found = true;
          break;
        }
    }
    if (found) ess.push_back(static_cast<int>(p));
  }
  return ess;
}

std::vector<int> essential_variables(const TermOperation& op) {
  std::vector<std::size_t> radix(op.arity, op.base);
  return essential_variables(op.table, radix);
}

std::optional<std::size_t> PointAlgebra::find(std::span<const Elem> p) const {
  for (std::size_t i = 0; i < count(); ++i) {
    auto q = point(i);
    if (std::equal(q.begin(), q.end(), p.begin(), p.end())) return i;
  }
  return std::nullopt;
}

PointAlgebra generate_subpower(const FiniteAlgebra& alg, std::size_t index_count,
                               const std::vector<std::vector<Elem>>& generators,
                               const Limits& limits) {
  for (const auto& g : generators) {
    if (g.size() != index_count) throw Error(Errc::SizeMismatch, "generator has wrong length");
    for (Elem e : g)
      if (e >= alg.size()) throw Error(Errc::SizeMismatch, "generator entry outside universe");
  }
  auto res = close_points(index_count, closure_ops(alg), generators, {}, limits.max_elements);
  PointAlgebra pa;
  pa.index_count = index_count;
  pa.data = res.points.raw();
  pa.generators = generators;
  auto names = op_names(alg);
  for (std::size_t i = 0; i < res.points.size(); ++i) pa.witnesses.push_back(res.witness(i, names));
  return pa;
}

}  // namespace ualg
