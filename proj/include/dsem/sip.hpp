#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dsem/measures.hpp"
#include "dsem/relational.hpp"

#include "json.hpp"

namespace dsem {

// Atoms over the canonical scope {0..s-1} with at most `degree` distinct
// arguments, indexed as bit positions.
struct TraceSpace {
  SignaturePtr sig;
  int scope_size = 0;
  int degree = 0;
  std::vector<GroundAtom> atoms;
  std::map<GroundAtom, int> index;

  static TraceSpace make(SignaturePtr sig, int s, int degree) {
    TraceSpace ts;
    ts.sig = std::move(sig);
    ts.scope_size = s;
    ts.degree = degree;
    std::vector<int> scope(static_cast<std::size_t>(s));
    std::iota(scope.begin(), scope.end(), 0);
    detail::collect_trace_atoms(*ts.sig, scope, degree, ts.atoms);
    if (ts.atoms.size() > 63)
      throw BudgetError("trace space exceeds 63 atoms", ts.atoms.size(), 63);
    for (std::size_t i = 0; i < ts.atoms.size(); ++i)
      ts.index.emplace(ts.atoms[i], static_cast<int>(i));
    return ts;
  }

  int count() const { return static_cast<int>(atoms.size()); }

  // result[atom] = bits[atom with arguments mapped through perm].
  std::uint64_t transport(std::uint64_t bits, const std::vector<int>& perm) const {
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      GroundAtom a = atoms[i];
      for (int& arg : a.args) arg = perm[static_cast<std::size_t>(arg)];
      if ((bits >> index.at(a)) & 1) out |= std::uint64_t(1) << i;
    }
    return out;
  }

  Trace to_trace(std::uint64_t bits) const {
    Trace t;
    t.sig = sig;
    t.g = degree;
    t.scope.resize(static_cast<std::size_t>(scope_size));
    std::iota(t.scope.begin(), t.scope.end(), 0);
    for (std::size_t i = 0; i < atoms.size(); ++i)
      t.assignment.emplace(atoms[i], ((bits >> i) & 1) != 0);
    return t;
  }

  std::uint64_t from_trace(const Trace& t) const {
    std::uint64_t bits = 0;
    if (static_cast<int>(t.scope.size()) != scope_size || t.g != degree)
      throw ValidationError("trace does not fit this trace space");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      auto it = t.assignment.find(atoms[i]);
      if (it == t.assignment.end()) throw ValidationError("trace assignment is incomplete");
      if (it->second) bits |= std::uint64_t(1) << i;
    }
    return bits;
  }

  // Truth values of w on the atoms, with scope position i standing for
  // element subset[i].
  std::uint64_t read(const World& w, const std::vector<int>& subset) const {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      GroundAtom a = atoms[i];
      for (int& arg : a.args) arg = subset[static_cast<std::size_t>(arg)];
      if (w.holds(a)) bits |= std::uint64_t(1) << i;
    }
    return bits;
  }
};

// Parameters of the stagewise construction: a distribution over 1-traces and,
// for each g, conditional distributions over (g+1)-trace extensions per
// canonical g-trace over {0..g}. Missing entries may be filled from an
// isomorphic explicit entry (or uniformly for untouched orbits) when
// allow_fill is set.
struct SipParams {
  SignaturePtr sig;
  int arity = 0;  // maximal relation arity r
  std::vector<Rational> one_probs;

  struct Stage {
    int g = 0;
    TraceSpace theta_space;  // degree g over scope {0..g}
    TraceSpace full_space;   // degree g+1 over the same scope
    std::vector<int> theta_pos;  // theta atom -> full_space bit
    std::vector<int> new_pos;    // new atom (exactly g+1 distinct args) -> full_space bit
    std::map<std::uint64_t, std::vector<Rational>> table;

    int new_count() const { return static_cast<int>(new_pos.size()); }
    std::uint64_t full_bits(std::uint64_t theta_bits, std::uint64_t new_bits) const {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < theta_pos.size(); ++i)
        if ((theta_bits >> i) & 1) bits |= std::uint64_t(1) << theta_pos[i];
      for (std::size_t i = 0; i < new_pos.size(); ++i)
        if ((new_bits >> i) & 1) bits |= std::uint64_t(1) << new_pos[i];
      return bits;
    }
    std::uint64_t theta_part(std::uint64_t full) const {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < theta_pos.size(); ++i)
        if ((full >> theta_pos[i]) & 1) bits |= std::uint64_t(1) << i;
      return bits;
    }
    std::uint64_t new_part(std::uint64_t full) const {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < new_pos.size(); ++i)
        if ((full >> new_pos[i]) & 1) bits |= std::uint64_t(1) << i;
      return bits;
    }
  };
  std::vector<Stage> stages;  // stages[g-1] extends g-traces, g = 1..r-1
  bool allow_fill = false;

  TraceSpace one_space;  // degree 1 over scope {0}

  static SipParams empty(SignaturePtr sig) {
    SipParams p;
    p.sig = sig;
    p.arity = sig->max_arity();
    p.one_space = TraceSpace::make(sig, 1, 1);
    p.one_probs.assign(std::size_t(1) << p.one_space.count(), Rational(0));
    for (int g = 1; g < p.arity; ++g) {
      Stage st;
      st.g = g;
      st.theta_space = TraceSpace::make(sig, g + 1, g);
      st.full_space = TraceSpace::make(sig, g + 1, g + 1);
      for (std::size_t i = 0; i < st.full_space.atoms.size(); ++i) {
        const GroundAtom& a = st.full_space.atoms[i];
        if (distinct_arg_count(a) <= g) {
          st.theta_pos.push_back(static_cast<int>(i));
        } else {
          st.new_pos.push_back(static_cast<int>(i));
        }
      }
      p.stages.push_back(std::move(st));
    }
    return p;
  }

  const Stage& stage(int g) const { return stages[static_cast<std::size_t>(g - 1)]; }
  Stage& stage(int g) { return stages[static_cast<std::size_t>(g - 1)]; }

  // Conditional extension distribution for theta, resolving missing entries
  // through isomorphism transport or the uniform default.
  const std::vector<Rational>& lookup(int g, std::uint64_t theta_bits) const {
    const Stage& st = stage(g);
    auto it = st.table.find(theta_bits);
    if (it != st.table.end()) return it->second;
    if (!allow_fill)
      throw ValidationError("missing parameters for a g-trace (orbit_fill disabled)");
    auto cached = fill_cache_.find({g, theta_bits});
    if (cached != fill_cache_.end()) return cached->second;
    std::vector<Rational> filled;
    for (const DomainMap& perm : all_permutations(g + 1)) {
      // theta_bits = transport(candidate, perm) picks out an isomorphic donor.
      for (const auto& [donor_bits, donor] : st.table) {
        if (st.theta_space.transport(donor_bits, perm.images) != theta_bits) continue;
        filled.assign(std::size_t(1) << st.new_count(), Rational(0));
        for (std::size_t e = 0; e < donor.size(); ++e) {
          std::uint64_t full = st.full_bits(donor_bits, static_cast<std::uint64_t>(e));
          std::uint64_t moved = st.full_space.transport(full, perm.images);
          filled[st.new_part(moved)] = donor[e];
        }
        break;
      }
      if (!filled.empty()) break;
    }
    if (filled.empty()) {
      Rational u(1, std::uint64_t(1) << st.new_count());
      filled.assign(std::size_t(1) << st.new_count(), u);
    }
    return fill_cache_.emplace(std::make_pair(g, theta_bits), std::move(filled)).first->second;
  }

 private:
  mutable std::map<std::pair<int, std::uint64_t>, std::vector<Rational>> fill_cache_;
};

namespace detail {

inline std::uint64_t one_trace_bits_at(const SipParams& p, const World& w, int element) {
  return p.one_space.read(w, {element});
}

}  // namespace detail

struct ParamsReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks key-set completeness, probability ranges, exact sums and the
// isomorphism invariance that exchangeability of the construction requires.
inline ParamsReport validate_params(const SipParams& p) {
  ParamsReport report;
  auto flag = [&](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };
  Rational total = 0;
  for (const Rational& r : p.one_probs) {
    if (!is_probability(r)) flag("one-trace probability " + to_string(r) + " outside [0,1]");
    total += r;
  }
  if (total != 1) flag("one-trace probabilities sum to " + to_string(total) + ", expected 1");

  for (const SipParams::Stage& st : p.stages) {
    std::uint64_t theta_count = std::uint64_t(1) << st.theta_space.count();
    if (!p.allow_fill && st.table.size() != theta_count)
      flag("stage g=" + std::to_string(st.g) + " lists " + std::to_string(st.table.size()) +
           " of " + std::to_string(theta_count) + " g-traces (orbit_fill disabled)");
    for (const auto& [theta_bits, vec] : st.table) {
      Rational sum = 0;
      for (const Rational& r : vec) {
        if (!is_probability(r))
          flag("stage g=" + std::to_string(st.g) + " probability " + to_string(r) +
               " outside [0,1]");
        sum += r;
      }
      if (sum != 1)
        flag("stage g=" + std::to_string(st.g) + " sums to " + to_string(sum) + " at theta [" +
             format_trace(st.theta_space.to_trace(theta_bits)) + "], expected 1");
    }
    // Isomorphism invariance across every explicit entry and permutation.
    for (const auto& [theta_bits, vec] : st.table) {
      for (const DomainMap& perm : all_permutations(st.g + 1)) {
        std::uint64_t moved_theta = st.theta_space.transport(theta_bits, perm.images);
        auto other = st.table.find(moved_theta);
        if (other == st.table.end()) continue;  // filled entries inherit invariance
        std::vector<int> inverse(perm.images.size());
        for (std::size_t i = 0; i < perm.images.size(); ++i)
          inverse[static_cast<std::size_t>(perm.images[i])] = static_cast<int>(i);
        for (std::size_t e = 0; e < vec.size(); ++e) {
          std::uint64_t full = st.full_bits(moved_theta, static_cast<std::uint64_t>(e));
          std::uint64_t back = st.full_space.transport(full, inverse);
          // back extends theta_bits; the matching extensions must agree.
          const Rational& here = other->second[e];
          const Rational& there = vec[st.new_part(back)];
          if (here != there) {
            flag("stage g=" + std::to_string(st.g) +
                 ": isomorphism invariance violated between isomorphic extensions (" +
                 to_string(there) + " vs " + to_string(here) + ")");
            break;
          }
        }
      }
    }
  }
  return report;
}

// Probability the construction assigns to one world: the product of one-trace
// choices per element and extension choices per ascending tuple.
inline Rational sip_prob(const SipParams& p, const World& w) {
  if (!(w.signature() == *p.sig)) throw ValidationError("world signature does not match params");
  int n = w.domain_size();
  Rational prob = 1;
  for (int a = 0; a < n && prob != 0; ++a)
    prob *= p.one_probs[detail::one_trace_bits_at(p, w, a)];
  for (const SipParams::Stage& st : p.stages) {
    if (prob == 0) break;
    int s = st.g + 1;
    if (s > n) break;
    std::vector<int> subset;
    auto rec = [&](auto&& self, int next) -> void {
      if (prob == 0) return;
      if (static_cast<int>(subset.size()) == s) {
        std::uint64_t theta_bits = st.theta_space.read(w, subset);
        std::uint64_t full = st.full_space.read(w, subset);
        prob *= p.lookup(st.g, theta_bits)[st.new_part(full)];
        return;
      }
      for (int v = next; v < n; ++v) {
        subset.push_back(v);
        self(self, v + 1);
        subset.pop_back();
      }
    };
    rec(rec, 0);
  }
  return prob;
}

// Sparse stagewise construction of the full distribution at size n: only
// positive-probability partial worlds are ever expanded.
inline Dist sip_dist(const SipParams& p, int n, std::uint64_t budget = kDefaultWorldBudget) {
  std::map<World, Rational> states;
  states.emplace(World(p.sig, n), Rational(1));
  // Stage 1: independent one-trace choice per element.
  for (int a = 0; a < n; ++a) {
    std::map<World, Rational> next;
    for (const auto& [w, pw] : states) {
      for (std::size_t tb = 0; tb < p.one_probs.size(); ++tb) {
        if (p.one_probs[tb] == 0) continue;
        World extended = w;
        for (std::size_t i = 0; i < p.one_space.atoms.size(); ++i) {
          if (!((tb >> i) & 1)) continue;
          GroundAtom atom = p.one_space.atoms[i];
          for (int& arg : atom.args) arg = a;
          extended.assert_atom(atom, true);
        }
        next[extended] += pw * p.one_probs[tb];
        if (next.size() > budget)
          throw BudgetError("construction support exceeds budget", next.size(), budget);
      }
    }
    states = std::move(next);
  }
  // Later stages: extension choice per ascending tuple.
  for (const SipParams::Stage& st : p.stages) {
    int s = st.g + 1;
    if (s > n) break;
    std::vector<std::vector<int>> subsets;
    std::vector<int> subset;
    auto rec = [&](auto&& self, int next_elem) -> void {
      if (static_cast<int>(subset.size()) == s) {
        subsets.push_back(subset);
        return;
      }
      for (int v = next_elem; v < n; ++v) {
        subset.push_back(v);
        self(self, v + 1);
        subset.pop_back();
      }
    };
    rec(rec, 0);
    for (const std::vector<int>& tuple : subsets) {
      std::map<World, Rational> next;
      for (const auto& [w, pw] : states) {
        std::uint64_t theta_bits = st.theta_space.read(w, tuple);
        const std::vector<Rational>& vec = p.lookup(st.g, theta_bits);
        for (std::size_t e = 0; e < vec.size(); ++e) {
          if (vec[e] == 0) continue;
          World extended = w;
          for (std::size_t i = 0; i < st.new_pos.size(); ++i) {
            if (!((e >> i) & 1)) continue;
            GroundAtom atom = st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])];
            for (int& arg : atom.args) arg = tuple[static_cast<std::size_t>(arg)];
            extended.assert_atom(atom, true);
          }
          next[extended] += pw * vec[e];
          if (next.size() > budget)
            throw BudgetError("construction support exceeds budget", next.size(), budget);
        }
      }
      states = std::move(next);
    }
  }
  Dist d{p.sig, n, {}};
  for (auto& [w, pw] : states) d.add(w, pw);
  return d;
}

inline Family sip_family(const SipParams& p, std::uint64_t budget = kDefaultWorldBudget) {
  auto shared = std::make_shared<const SipParams>(p);
  return Family{p.sig, [shared, budget](int n) { return sip_dist(*shared, n, budget); }};
}

// Positive g-traces over the canonical scope {0..g}, derived by running the
// sparse construction on g+1 elements.
inline std::vector<std::uint64_t> positive_thetas(const SipParams& p, int g,
                                                  std::uint64_t budget = kDefaultWorldBudget) {
  const SipParams::Stage& st = p.stage(g);
  std::map<World, Rational> states;
  states.emplace(World(p.sig, g + 1), Rational(1));
  for (int a = 0; a <= g; ++a) {
    std::map<World, Rational> next;
    for (const auto& [w, pw] : states) {
      for (std::size_t tb = 0; tb < p.one_probs.size(); ++tb) {
        if (p.one_probs[tb] == 0) continue;
        World extended = w;
        for (std::size_t i = 0; i < p.one_space.atoms.size(); ++i) {
          if (!((tb >> i) & 1)) continue;
          GroundAtom atom = p.one_space.atoms[i];
          for (int& arg : atom.args) arg = a;
          extended.assert_atom(atom, true);
        }
        next[extended] += pw * p.one_probs[tb];
      }
    }
    states = std::move(next);
  }
  for (int h = 1; h < g; ++h) {
    const SipParams::Stage& lower = p.stage(h);
    std::vector<int> subset;
    std::vector<std::vector<int>> subsets;
    auto rec = [&](auto&& self, int next_elem) -> void {
      if (static_cast<int>(subset.size()) == h + 1) {
        subsets.push_back(subset);
        return;
      }
      for (int v = next_elem; v <= g; ++v) {
        subset.push_back(v);
        self(self, v + 1);
        subset.pop_back();
      }
    };
    rec(rec, 0);
    for (const std::vector<int>& tuple : subsets) {
      std::map<World, Rational> next;
      for (const auto& [w, pw] : states) {
        std::uint64_t theta_bits = lower.theta_space.read(w, tuple);
        const std::vector<Rational>& vec = p.lookup(h, theta_bits);
        for (std::size_t e = 0; e < vec.size(); ++e) {
          if (vec[e] == 0) continue;
          World extended = w;
          for (std::size_t i = 0; i < lower.new_pos.size(); ++i) {
            if (!((e >> i) & 1)) continue;
            GroundAtom atom = lower.full_space.atoms[static_cast<std::size_t>(lower.new_pos[i])];
            for (int& arg : atom.args) arg = tuple[static_cast<std::size_t>(arg)];
            extended.assert_atom(atom, true);
          }
          next[extended] += pw * vec[e];
          if (next.size() > budget)
            throw BudgetError("construction support exceeds budget", next.size(), budget);
        }
      }
      states = std::move(next);
    }
  }
  std::set<std::uint64_t> seen;
  std::vector<int> identity(static_cast<std::size_t>(g + 1));
  std::iota(identity.begin(), identity.end(), 0);
  for (const auto& [w, pw] : states) {
    (void)pw;
    seen.insert(st.theta_space.read(w, identity));
  }
  return {seen.begin(), seen.end()};
}

}  // namespace dsem

#include "dsem/sip_checks.hpp"
