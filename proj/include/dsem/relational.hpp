#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsem/errors.hpp"

namespace dsem {

// Default guard for world enumerations: 2^24 worlds (24 ground atoms).
inline constexpr std::uint64_t kDefaultWorldBudget = std::uint64_t(1) << 24;

struct Relation {
  std::string name;
  int arity = 0;
  friend bool operator==(const Relation& a, const Relation& b) {
    return a.name == b.name && a.arity == b.arity;
  }
  friend auto operator<=>(const Relation& a, const Relation& b) = default;
};

// A finite relational vocabulary. Declaration order is fixed and determines
// the canonical ground-atom order (relation order, then lexicographic tuples).
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::vector<Relation> rels) : rels_(std::move(rels)) {
    std::set<std::string> seen;
    for (const Relation& r : rels_) {
      if (r.arity < 1) throw ValidationError("relation '" + r.name + "' must have arity >= 1");
      if (r.name.empty()) throw ValidationError("relation with empty name");
      if (!seen.insert(r.name).second)
        throw ValidationError("duplicate relation name '" + r.name + "'");
    }
  }

  const std::vector<Relation>& relations() const { return rels_; }
  int size() const { return static_cast<int>(rels_.size()); }
  bool empty() const { return rels_.empty(); }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < rels_.size(); ++i)
      if (rels_[i].name == name) return static_cast<int>(i);
    return -1;
  }
  const Relation& relation(int idx) const { return rels_[static_cast<std::size_t>(idx)]; }
  int max_arity() const {
    int m = 0;
    for (const Relation& r : rels_) m = std::max(m, r.arity);
    return m;
  }

  // True if every relation of `sub` occurs here with the same arity.
  bool contains(const Signature& sub) const {
    for (const Relation& r : sub.relations()) {
      int i = index_of(r.name);
      if (i < 0 || relation(i).arity != r.arity) return false;
    }
    return true;
  }

  friend bool operator==(const Signature& a, const Signature& b) { return a.rels_ == b.rels_; }
  friend auto operator<=>(const Signature& a, const Signature& b) = default;

 private:
  std::vector<Relation> rels_;
};

using SignaturePtr = std::shared_ptr<const Signature>;

inline SignaturePtr make_signature(std::vector<Relation> rels) {
  return std::make_shared<const Signature>(std::move(rels));
}

struct GroundAtom {
  int rel = 0;  // index into the signature
  std::vector<int> args;
  friend bool operator==(const GroundAtom& a, const GroundAtom& b) = default;
  friend auto operator<=>(const GroundAtom& a, const GroundAtom& b) = default;
};

inline int distinct_arg_count(const GroundAtom& a) {
  std::vector<int> v = a.args;
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return static_cast<int>(v.size());
}

inline std::string format_atom(const Signature& sig, const GroundAtom& a) {
  std::string s = sig.relation(a.rel).name + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a.args[i]);
  }
  return s + ")";
}

// Canonical ground-atom enumeration for a signature over domain {0..n-1}.
class AtomSpace {
 public:
  AtomSpace(const Signature& sig, int n) : sig_(&sig), n_(n) {
    if (n < 1) throw ValidationError("domain size must be >= 1");
    std::uint64_t off = 0;
    for (const Relation& r : sig.relations()) {
      offsets_.push_back(off);
      std::uint64_t tuples = 1;
      for (int i = 0; i < r.arity; ++i) {
        if (tuples > (std::uint64_t(1) << 40) / static_cast<std::uint64_t>(n))
          throw BudgetError("ground-atom count overflow", 0, 0);
        tuples *= static_cast<std::uint64_t>(n);
      }
      off += tuples;
    }
    count_ = off;
  }

  std::uint64_t count() const { return count_; }
  int domain_size() const { return n_; }

  std::uint64_t index(const GroundAtom& a) const {
    const Relation& r = sig_->relation(a.rel);
    std::uint64_t t = 0;
    for (int arg : a.args) t = t * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(arg);
    (void)r;
    return offsets_[static_cast<std::size_t>(a.rel)] + t;
  }

  GroundAtom atom(std::uint64_t idx) const {
    int rel = static_cast<int>(offsets_.size()) - 1;
    while (rel > 0 && offsets_[static_cast<std::size_t>(rel)] > idx) --rel;
    std::uint64_t t = idx - offsets_[static_cast<std::size_t>(rel)];
    int arity = sig_->relation(rel).arity;
    std::vector<int> args(static_cast<std::size_t>(arity));
    for (int i = arity - 1; i >= 0; --i) {
      args[static_cast<std::size_t>(i)] = static_cast<int>(t % static_cast<std::uint64_t>(n_));
      t /= static_cast<std::uint64_t>(n_);
    }
    return GroundAtom{rel, std::move(args)};
  }

 private:
  const Signature* sig_;
  int n_;
  std::vector<std::uint64_t> offsets_;
  std::uint64_t count_ = 0;
};

// A finite structure: the set of true ground atoms over domain {0..n-1},
// stored as a bitmask in canonical atom order.
class World {
 public:
  World() = default;
  World(SignaturePtr sig, int n)
      : sig_(std::move(sig)), n_(n), bits_((AtomSpace(*sig_, n).count() + 63) / 64, 0) {}

  const Signature& signature() const { return *sig_; }
  const SignaturePtr& signature_ptr() const { return sig_; }
  int domain_size() const { return n_; }

  bool test(std::uint64_t idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1; }
  void set(std::uint64_t idx, bool value) {
    std::uint64_t mask = std::uint64_t(1) << (idx & 63);
    if (value)
      bits_[idx >> 6] |= mask;
    else
      bits_[idx >> 6] &= ~mask;
  }

  bool holds(const GroundAtom& a) const { return test(AtomSpace(*sig_, n_).index(a)); }
  void assert_atom(const GroundAtom& a, bool value = true) {
    set(AtomSpace(*sig_, n_).index(a), value);
  }

  std::vector<GroundAtom> true_atoms() const {
    AtomSpace space(*sig_, n_);
    std::vector<GroundAtom> out;
    for (std::uint64_t i = 0; i < space.count(); ++i)
      if (test(i)) out.push_back(space.atom(i));
    return out;
  }

  std::uint64_t true_atom_count() const {
    std::uint64_t c = 0;
    for (std::uint64_t w : bits_) c += static_cast<std::uint64_t>(__builtin_popcountll(w));
    return c;
  }

  const std::vector<std::uint64_t>& blocks() const { return bits_; }
  std::vector<std::uint64_t>& blocks() { return bits_; }

  friend bool operator==(const World& a, const World& b) {
    if (a.n_ != b.n_ || a.bits_ != b.bits_) return false;
    return a.sig_ == b.sig_ || *a.sig_ == *b.sig_;
  }
  // Bitmask order within one world space: block 0 holds the low atoms.
  friend bool operator<(const World& a, const World& b) {
    if (a.n_ != b.n_) return a.n_ < b.n_;
    if (!(a.sig_ == b.sig_ || *a.sig_ == *b.sig_)) return *a.sig_ < *b.sig_;
    for (std::size_t i = std::max(a.bits_.size(), b.bits_.size()); i-- > 0;) {
      std::uint64_t x = i < a.bits_.size() ? a.bits_[i] : 0;
      std::uint64_t y = i < b.bits_.size() ? b.bits_[i] : 0;
      if (x != y) return x < y;
    }
    return false;
  }

 private:
  SignaturePtr sig_;
  int n_ = 0;
  std::vector<std::uint64_t> bits_;
};

inline std::string format_world(const World& w) {
  std::string s;
  for (const GroundAtom& a : w.true_atoms()) {
    if (!s.empty()) s += " ";
    s += format_atom(w.signature(), a);
  }
  return s.empty() ? "{}" : s;
}

namespace detail {

inline void skip_spaces(const std::string& t, std::size_t& i) {
  while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
}

inline std::string parse_ident(const std::string& t, std::size_t& i) {
  std::size_t start = i;
  while (i < t.size() && (std::isalnum(static_cast<unsigned char>(t[i])) || t[i] == '_')) ++i;
  return t.substr(start, i - start);
}

// NAME "(" INT {"," INT} ")" validated against the signature and domain.
inline GroundAtom parse_ground_atom(const Signature& sig, int n, const std::string& t,
                                    std::size_t& i) {
  skip_spaces(t, i);
  std::size_t col = i + 1;
  std::string name = parse_ident(t, i);
  if (name.empty()) throw ParseError("expected relation name", 1, static_cast<int>(col));
  int rel = sig.index_of(name);
  if (rel < 0) throw ParseError("unknown relation '" + name + "'", 1, static_cast<int>(col));
  skip_spaces(t, i);
  if (i >= t.size() || t[i] != '(')
    throw ParseError("expected '(' after relation name", 1, static_cast<int>(i + 1));
  ++i;
  std::vector<int> args;
  while (true) {
    skip_spaces(t, i);
    std::size_t acol = i + 1;
    std::size_t start = i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == start) throw ParseError("expected domain element", 1, static_cast<int>(acol));
    int v = std::stoi(t.substr(start, i - start));
    if (v < 0 || v >= n)
      throw ParseError("element " + std::to_string(v) + " outside domain {0.." +
                           std::to_string(n - 1) + "}",
                       1, static_cast<int>(acol));
    args.push_back(v);
    skip_spaces(t, i);
    if (i < t.size() && t[i] == ',') {
      ++i;
      continue;
    }
    break;
  }
  if (i >= t.size() || t[i] != ')')
    throw ParseError("expected ')'", 1, static_cast<int>(i + 1));
  ++i;
  if (static_cast<int>(args.size()) != sig.relation(rel).arity)
    throw ParseError("arity mismatch for '" + name + "': got " + std::to_string(args.size()) +
                     ", declared " + std::to_string(sig.relation(rel).arity));
  return GroundAtom{rel, std::move(args)};
}

}  // namespace detail

// One line of space-separated true atoms; the empty world is the literal "{}".
inline World parse_world(SignaturePtr sig, int n, const std::string& text) {
  World w(sig, n);
  std::size_t i = 0;
  detail::skip_spaces(text, i);
  if (text.compare(i, 2, "{}") == 0) {
    i += 2;
    detail::skip_spaces(text, i);
    if (i != text.size()) throw ParseError("trailing input after '{}'");
    return w;
  }
  while (i < text.size()) {
    w.assert_atom(detail::parse_ground_atom(*sig, n, text, i), true);
    detail::skip_spaces(text, i);
  }
  return w;
}

inline void check_world_budget(std::uint64_t atom_count, std::uint64_t budget) {
  if (atom_count >= 64 || (std::uint64_t(1) << atom_count) > budget)
    throw BudgetError("enumeration too large: " + std::to_string(atom_count) +
                          " ground atoms (2^" + std::to_string(atom_count) +
                          " worlds exceeds budget " + std::to_string(budget) + ")",
                      atom_count, budget);
}

// All 2^k worlds in canonical atom-bitmask order.
inline std::vector<World> enumerate_worlds(SignaturePtr sig, int n,
                                           std::uint64_t budget = kDefaultWorldBudget) {
  AtomSpace space(*sig, n);
  check_world_budget(space.count(), budget);
  std::uint64_t total = std::uint64_t(1) << space.count();
  std::vector<World> out;
  out.reserve(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    World w(sig, n);
    if (!w.blocks().empty()) w.blocks()[0] = mask;
    out.push_back(std::move(w));
  }
  return out;
}

// An injective map {0..source_size-1} -> {0..target_size-1}.
struct DomainMap {
  int source_size = 0;
  int target_size = 0;
  std::vector<int> images;

  DomainMap() = default;
  DomainMap(int source, int target, std::vector<int> imgs)
      : source_size(source), target_size(target), images(std::move(imgs)) {
    if (static_cast<int>(images.size()) != source_size)
      throw ValidationError("domain map needs one image per source element");
    std::set<int> seen;
    for (int v : images) {
      if (v < 0 || v >= target_size) throw ValidationError("domain map image out of range");
      if (!seen.insert(v).second) throw ValidationError("domain map is not injective");
    }
  }

  int operator()(int x) const { return images[static_cast<std::size_t>(x)]; }
  bool is_permutation() const { return source_size == target_size; }

  static DomainMap identity(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return DomainMap(n, n, std::move(v));
  }
  // Inclusion {0..m-1} into {0..n-1}.
  static DomainMap inclusion(int m, int n) {
    std::vector<int> v(static_cast<std::size_t>(m));
    std::iota(v.begin(), v.end(), 0);
    return DomainMap(m, n, std::move(v));
  }

  friend bool operator==(const DomainMap& a, const DomainMap& b) = default;
};

// (outer . inner)(x) = outer(inner(x)).
inline DomainMap compose(const DomainMap& outer, const DomainMap& inner) {
  if (inner.target_size != outer.source_size)
    throw ValidationError("domain maps are not composable");
  std::vector<int> v(static_cast<std::size_t>(inner.source_size));
  for (int i = 0; i < inner.source_size; ++i) v[static_cast<std::size_t>(i)] = outer(inner(i));
  return DomainMap(inner.source_size, outer.target_size, std::move(v));
}

inline std::vector<DomainMap> all_permutations(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  std::vector<DomainMap> out;
  do {
    out.emplace_back(n, n, v);
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

inline std::vector<DomainMap> all_injections(int m, int n) {
  std::vector<DomainMap> out;
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == m) {
      out.emplace_back(m, n, pick);
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      pick[static_cast<std::size_t>(depth)] = v;
      self(self, depth + 1);
      used[static_cast<std::size_t>(v)] = false;
    }
  };
  rec(rec, 0);
  return out;
}

// Restriction along an injection: the result holds R(a) iff w holds R(m(a)).
// For a bijective m this is the permutation action pulling w back along m.
inline World apply_map(const World& w, const DomainMap& m) {
  if (m.target_size != w.domain_size())
    throw ValidationError("domain map target size " + std::to_string(m.target_size) +
                          " does not match world domain " + std::to_string(w.domain_size()));
  World out(w.signature_ptr(), m.source_size);
  AtomSpace small(w.signature(), m.source_size);
  AtomSpace big(w.signature(), w.domain_size());
  for (std::uint64_t i = 0; i < small.count(); ++i) {
    GroundAtom a = small.atom(i);
    for (int& arg : a.args) arg = m(arg);
    if (w.test(big.index(a))) out.set(i, true);
  }
  return out;
}

// Same domain, atoms restricted to the relations of `sub`.
inline World reduct(const World& w, SignaturePtr sub) {
  if (!w.signature().contains(*sub))
    throw ValidationError("reduct target is not a subsignature");
  World out(sub, w.domain_size());
  AtomSpace space(*sub, w.domain_size());
  for (std::uint64_t i = 0; i < space.count(); ++i) {
    GroundAtom a = space.atom(i);
    GroundAtom orig{w.signature().index_of(sub->relation(a.rel).name), a.args};
    if (w.holds(orig)) out.set(i, true);
  }
  return out;
}

// A partial truth assignment: every atom over `scope` with at most g distinct
// arguments is mapped to a truth value.
struct Trace {
  SignaturePtr sig;
  std::vector<int> scope;  // sorted ascending
  int g = 0;
  std::map<GroundAtom, bool> assignment;

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.scope == b.scope && a.g == b.g && a.assignment == b.assignment &&
           (a.sig == b.sig || *a.sig == *b.sig);
  }
  friend bool operator<(const Trace& a, const Trace& b) {
    if (a.g != b.g) return a.g < b.g;
    if (a.scope != b.scope) return a.scope < b.scope;
    return a.assignment < b.assignment;
  }
};

namespace detail {

inline void collect_trace_atoms(const Signature& sig, const std::vector<int>& scope, int g,
                                std::vector<GroundAtom>& out) {
  for (int rel = 0; rel < sig.size(); ++rel) {
    int arity = sig.relation(rel).arity;
    std::vector<std::size_t> idx(static_cast<std::size_t>(arity), 0);
    while (true) {
      GroundAtom a{rel, {}};
      a.args.reserve(static_cast<std::size_t>(arity));
      for (std::size_t p : idx) a.args.push_back(scope[p]);
      if (distinct_arg_count(a) <= g) out.push_back(std::move(a));
      int pos = arity - 1;
      while (pos >= 0) {
        if (++idx[static_cast<std::size_t>(pos)] < scope.size()) break;
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
}

}  // namespace detail

// Atoms over `scope` with at most g distinct arguments, in canonical order.
inline std::vector<GroundAtom> trace_atoms(const Signature& sig, const std::vector<int>& scope,
                                           int g) {
  std::vector<GroundAtom> out;
  detail::collect_trace_atoms(sig, scope, g, out);
  return out;
}

// The truth values w takes on every atom with at most g distinct arguments.
inline Trace g_trace(const World& w, int g) {
  if (g < 1) throw ValidationError("trace degree must be >= 1");
  Trace t;
  t.sig = w.signature_ptr();
  t.scope.resize(static_cast<std::size_t>(w.domain_size()));
  std::iota(t.scope.begin(), t.scope.end(), 0);
  t.g = g;
  for (GroundAtom& a : trace_atoms(w.signature(), t.scope, g)) {
    bool v = w.holds(a);
    t.assignment.emplace(std::move(a), v);
  }
  return t;
}

// The trace of w on the elements of `scope` (sorted ascending), still labelled
// by the original elements.
inline Trace trace_on(const World& w, std::vector<int> scope, int g) {
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  Trace t;
  t.sig = w.signature_ptr();
  t.scope = std::move(scope);
  t.g = g;
  for (GroundAtom& a : trace_atoms(w.signature(), t.scope, g)) {
    bool v = w.holds(a);
    t.assignment.emplace(std::move(a), v);
  }
  return t;
}

// All worlds on {0..n-1} consistent with the trace's assignment.
inline std::vector<World> trace_models(const Trace& t, int n,
                                       std::uint64_t budget = kDefaultWorldBudget) {
  for (int e : t.scope)
    if (e < 0 || e >= n) throw ValidationError("trace scope exceeds domain");
  AtomSpace space(*t.sig, n);
  std::vector<std::pair<std::uint64_t, bool>> pinned;
  pinned.reserve(t.assignment.size());
  for (const auto& [atom, value] : t.assignment) pinned.emplace_back(space.index(atom), value);
  std::vector<World> out;
  for (World& w : enumerate_worlds(t.sig, n, budget)) {
    bool ok = true;
    for (const auto& [idx, value] : pinned) {
      if (w.test(idx) != value) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(std::move(w));
  }
  return out;
}

// Relabels a trace over an arbitrary scope to the canonical scope {0..s-1};
// `order` gives the element that each canonical position stands for.
inline Trace canonicalize_trace(const Trace& t, const std::vector<int>& order) {
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != t.scope) throw ValidationError("order is not a permutation of the trace scope");
  Trace out;
  out.sig = t.sig;
  out.g = t.g;
  out.scope.resize(order.size());
  std::iota(out.scope.begin(), out.scope.end(), 0);
  for (const auto& [atom, value] : t.assignment) {
    GroundAtom a = atom;
    for (int& arg : a.args) {
      auto it = std::find(order.begin(), order.end(), arg);
      arg = static_cast<int>(it - order.begin());
    }
    out.assignment.emplace(std::move(a), value);
  }
  return out;
}

// transport(t, p)[R(a)] = t[R(p(a))] for a permutation p of the scope
// (given as images indexed by scope position; scope must be {0..s-1}).
inline Trace transport_trace(const Trace& t, const std::vector<int>& perm) {
  Trace out;
  out.sig = t.sig;
  out.g = t.g;
  out.scope = t.scope;
  for (const auto& [atom, value] : t.assignment) {
    (void)value;
    GroundAtom a = atom;
    for (int& arg : a.args) arg = perm[static_cast<std::size_t>(arg)];
    auto it = t.assignment.find(a);
    GroundAtom key = atom;
    out.assignment.emplace(std::move(key), it->second);
  }
  return out;
}

// Positive atoms of a trace, in canonical order.
inline std::string format_trace(const Trace& t) {
  std::string s;
  for (const auto& [atom, value] : t.assignment) {
    if (!value) continue;
    if (!s.empty()) s += " ";
    s += format_atom(*t.sig, atom);
  }
  return s.empty() ? "{}" : s;
}

// When g covers min(maximal arity, domain size) and the scope is the full
// domain, the trace pins down a unique world.
inline World trace_to_world(const Trace& t, int n) {
  if (t.g < std::min(t.sig->max_arity(), n) || static_cast<int>(t.scope.size()) != n)
    throw ValidationError("trace does not determine a world");
  World w(t.sig, n);
  for (const auto& [atom, value] : t.assignment)
    if (value) w.assert_atom(atom, true);
  return w;
}

// Brute force over all n! permutations; returns m with apply_map(w1, m) == w2.
inline std::optional<DomainMap> isomorphic(const World& w1, const World& w2) {
  if (!(w1.signature() == w2.signature()) || w1.domain_size() != w2.domain_size())
    return std::nullopt;
  if (w1.true_atom_count() != w2.true_atom_count()) return std::nullopt;
  for (const DomainMap& m : all_permutations(w1.domain_size()))
    if (apply_map(w1, m) == w2) return m;
  return std::nullopt;
}

// True iff every permutation of the shared scope that fixes theta also fixes
// gamma. Both traces must be canonical over {0..g} with gamma extending theta.
inline bool symmetric_extension(const Trace& theta, const Trace& gamma) {
  if (gamma.g != theta.g + 1 || theta.scope != gamma.scope)
    throw ValidationError("symmetric_extension expects a g-trace and a (g+1)-trace on one scope");
  for (const auto& [atom, value] : theta.assignment) {
    auto it = gamma.assignment.find(atom);
    if (it == gamma.assignment.end() || it->second != value)
      throw ValidationError("gamma does not extend theta");
  }
  int s = static_cast<int>(theta.scope.size());
  for (const DomainMap& m : all_permutations(s)) {
    if (transport_trace(theta, m.images) == theta && !(transport_trace(gamma, m.images) == gamma))
      return false;
  }
  return true;
}

// Ground quantifier-free formulas: atoms over named elements, ~, &, |.
class Formula {
 public:
  enum class Kind { Atom, Not, And, Or };

  static Formula atom(GroundAtom a) {
    Formula f;
    f.kind_ = Kind::Atom;
    f.atom_ = std::move(a);
    return f;
  }
  static Formula negate(Formula f) {
    Formula out;
    out.kind_ = Kind::Not;
    out.children_.push_back(std::move(f));
    return out;
  }
  static Formula conj(Formula a, Formula b) {
    Formula out;
    out.kind_ = Kind::And;
    out.children_.push_back(std::move(a));
    out.children_.push_back(std::move(b));
    return out;
  }
  static Formula disj(Formula a, Formula b) {
    Formula out;
    out.kind_ = Kind::Or;
    out.children_.push_back(std::move(a));
    out.children_.push_back(std::move(b));
    return out;
  }

  Kind kind() const { return kind_; }
  const GroundAtom& atom_ref() const { return atom_; }
  const std::vector<Formula>& children() const { return children_; }

  friend bool operator==(const Formula& a, const Formula& b) {
    return a.kind_ == b.kind_ && a.atom_ == b.atom_ && a.children_ == b.children_;
  }

 private:
  Kind kind_ = Kind::Atom;
  GroundAtom atom_;
  std::vector<Formula> children_;
};

namespace detail {

inline Formula parse_formula_expr(const Signature& sig, int n, const std::string& t,
                                  std::size_t& i);

inline Formula parse_formula_factor(const Signature& sig, int n, const std::string& t,
                                    std::size_t& i) {
  skip_spaces(t, i);
  if (i >= t.size()) throw ParseError("unexpected end of formula", 1, static_cast<int>(i + 1));
  if (t[i] == '~') {
    ++i;
    return Formula::negate(parse_formula_factor(sig, n, t, i));
  }
  if (t[i] == '(') {
    ++i;
    Formula f = parse_formula_expr(sig, n, t, i);
    skip_spaces(t, i);
    if (i >= t.size() || t[i] != ')')
      throw ParseError("expected ')'", 1, static_cast<int>(i + 1));
    ++i;
    return f;
  }
  return Formula::atom(parse_ground_atom(sig, n, t, i));
}

inline Formula parse_formula_term(const Signature& sig, int n, const std::string& t,
                                  std::size_t& i) {
  Formula f = parse_formula_factor(sig, n, t, i);
  while (true) {
    skip_spaces(t, i);
    if (i < t.size() && t[i] == '&') {
      ++i;
      f = Formula::conj(std::move(f), parse_formula_factor(sig, n, t, i));
    } else {
      return f;
    }
  }
}

inline Formula parse_formula_expr(const Signature& sig, int n, const std::string& t,
                                  std::size_t& i) {
  Formula f = parse_formula_term(sig, n, t, i);
  while (true) {
    skip_spaces(t, i);
    if (i < t.size() && t[i] == '|') {
      ++i;
      f = Formula::disj(std::move(f), parse_formula_term(sig, n, t, i));
    } else {
      return f;
    }
  }
}

}  // namespace detail

inline Formula parse_formula(const Signature& sig, int n, const std::string& text) {
  std::size_t i = 0;
  Formula f = detail::parse_formula_expr(sig, n, text, i);
  detail::skip_spaces(text, i);
  if (i != text.size())
    throw ParseError("trailing input in formula", 1, static_cast<int>(i + 1));
  return f;
}

inline std::string format_formula(const Signature& sig, const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return format_atom(sig, f.atom_ref());
    case Formula::Kind::Not:
      return "~" + (f.children()[0].kind() == Formula::Kind::Atom ||
                            f.children()[0].kind() == Formula::Kind::Not
                        ? format_formula(sig, f.children()[0])
                        : "(" + format_formula(sig, f.children()[0]) + ")");
    case Formula::Kind::And: {
      auto wrap = [&](const Formula& c) {
        std::string s = format_formula(sig, c);
        return c.kind() == Formula::Kind::Or ? "(" + s + ")" : s;
      };
      return wrap(f.children()[0]) + " & " + wrap(f.children()[1]);
    }
    case Formula::Kind::Or:
      return format_formula(sig, f.children()[0]) + " | " + format_formula(sig, f.children()[1]);
  }
  return {};
}

inline bool eval_formula(const Formula& f, const World& w) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return w.holds(f.atom_ref());
    case Formula::Kind::Not:
      return !eval_formula(f.children()[0], w);
    case Formula::Kind::And:
      return eval_formula(f.children()[0], w) && eval_formula(f.children()[1], w);
    case Formula::Kind::Or:
      return eval_formula(f.children()[0], w) || eval_formula(f.children()[1], w);
  }
  return false;
}

inline void collect_atoms(const Formula& f, std::vector<GroundAtom>& out) {
  if (f.kind() == Formula::Kind::Atom) {
    out.push_back(f.atom_ref());
    return;
  }
  for (const Formula& c : f.children()) collect_atoms(c, out);
}

// True iff some atom's argument set contains every element of `elems`.
inline bool mentions(const Formula& f, const std::set<int>& elems) {
  std::vector<GroundAtom> atoms;
  collect_atoms(f, atoms);
  for (const GroundAtom& a : atoms) {
    std::set<int> args(a.args.begin(), a.args.end());
    if (std::includes(args.begin(), args.end(), elems.begin(), elems.end())) return true;
  }
  return false;
}

// True iff some set of `size` elements is mentioned by both formulas.
inline bool mention_joint_set(const Formula& f1, const Formula& f2, int size) {
  std::vector<GroundAtom> a1, a2;
  collect_atoms(f1, a1);
  collect_atoms(f2, a2);
  for (const GroundAtom& x : a1) {
    std::set<int> xs(x.args.begin(), x.args.end());
    for (const GroundAtom& y : a2) {
      std::set<int> shared;
      for (int v : y.args)
        if (xs.count(v)) shared.insert(v);
      if (static_cast<int>(shared.size()) >= size) return true;
    }
  }
  return false;
}

inline std::vector<World> formula_models(const Formula& f, SignaturePtr sig, int n,
                                         std::uint64_t budget = kDefaultWorldBudget) {
  std::vector<World> out;
  for (World& w : enumerate_worlds(sig, n, budget))
    if (eval_formula(f, w)) out.push_back(std::move(w));
  return out;
}

// True iff some pair of worlds agreeing on every restriction that misses one
// of `elems` is split by the event.
inline bool semantic_mentions(const std::vector<World>& event, const std::set<int>& elems,
                              SignaturePtr sig, int n,
                              std::uint64_t budget = kDefaultWorldBudget) {
  AtomSpace space(*sig, n);
  check_world_budget(space.count(), budget);
  // Key: truth values on the atoms whose arguments do NOT cover all of elems.
  std::uint64_t keep = 0;
  for (std::uint64_t i = 0; i < space.count(); ++i) {
    GroundAtom a = space.atom(i);
    std::set<int> args(a.args.begin(), a.args.end());
    if (!std::includes(args.begin(), args.end(), elems.begin(), elems.end()))
      keep |= std::uint64_t(1) << i;
  }
  std::set<std::uint64_t> members;
  for (const World& w : event) members.insert(w.blocks().empty() ? 0 : w.blocks()[0]);
  std::map<std::uint64_t, std::pair<bool, bool>> seen;  // key -> (in event, outside)
  std::uint64_t total = std::uint64_t(1) << space.count();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    auto& flags = seen[mask & keep];
    if (members.count(mask))
      flags.first = true;
    else
      flags.second = true;
    if (flags.first && flags.second) return true;
  }
  return false;
}

}  // namespace dsem
