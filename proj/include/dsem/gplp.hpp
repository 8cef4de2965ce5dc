#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dsem/measures.hpp"
#include "dsem/rules.hpp"

#include "json.hpp"

namespace dsem {

// A free weight function paired with a deterministic rule program; the
// designated target relations form the observable reduct.
struct GeneralizedPlp {
  WeightFn weights;
  RuleProgram program;
  Signature target;
};

inline void validate_plp(const GeneralizedPlp& plp) {
  validate_weights(plp.program.free_sig, plp.weights);
  for (const auto& [name, w] : plp.weights.weights)
    if (plp.program.free_sig.index_of(name) < 0)
      throw ValidationError("weight given for unknown free relation '" + name + "'");
  Signature full = plp.program.full_signature();
  if (!full.contains(plp.target))
    throw ValidationError("target is not a subsignature of the program's output");
}

inline GeneralizedPlp parse_plp(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid PLP bundle: ") + e.what());
  }
  if (!j.is_object() || !j.contains("weights") || !j.contains("program") || !j.contains("target"))
    throw ParseError("PLP bundle needs 'weights', 'program' and 'target'");
  GeneralizedPlp plp;
  plp.program = parse_program(j.at("program").get<std::string>());
  for (const auto& [name, value] : j.at("weights").items())
    plp.weights.weights[name] = parse_rational(value.get<std::string>());
  Signature full = plp.program.full_signature();
  std::vector<Relation> target;
  for (const auto& name : j.at("target")) {
    int i = full.index_of(name.get<std::string>());
    if (i < 0) throw ParseError("target relation '" + name.get<std::string>() + "' not declared");
    target.push_back(full.relation(i));
  }
  plp.target = Signature(std::move(target));
  validate_plp(plp);
  return plp;
}

inline std::string format_plp(const GeneralizedPlp& plp) {
  nlohmann::json j;
  j["weights"] = nlohmann::json::object();
  for (const auto& [name, w] : plp.weights.weights) j["weights"][name] = to_string(w);
  j["program"] = format_program(plp.program);
  j["target"] = nlohmann::json::array();
  for (const Relation& r : plp.target.relations()) j["target"].push_back(r.name);
  return j.dump(2) + "\n";
}

enum class Strategy { kEnumerate, kFactored };

namespace detail {

inline World world_from_mask(SignaturePtr sig, int n, std::uint64_t mask) {
  World w(sig, n);
  if (!w.blocks().empty()) w.blocks()[0] = mask;
  return w;
}

// Product weight of the free world encoded by `mask` over the atoms of
// `space`, where bit i corresponds to atom i.
inline Rational mask_weight(const WeightFn& w, const Signature& sig, const AtomSpace& space,
                            std::uint64_t mask) {
  Rational p = 1;
  for (std::uint64_t i = 0; i < space.count(); ++i) {
    const Rational& wr = w.at(sig.relation(space.atom(i).rel).name);
    p *= (mask >> i) & 1 ? wr : Rational(1 - wr);
  }
  return p;
}

}  // namespace detail

// Computes full-output-world probabilities as a product of local factors, one
// per element subset, each obtained by enumerating only the free atoms over
// that subset. Valid for programs passing check_tuple_local.
class FactoredInduced {
 public:
  explicit FactoredInduced(const GeneralizedPlp& plp) : plp_(plp) {
    TupleLocalReport tl = check_tuple_local(plp.program);
    if (!tl.ok)
      throw ValidationError("factored strategy requires a tuple-local program; " +
                            tl.violations.front());
    max_level_ = plp.program.full_signature().max_arity();
  }

  // Probability that the induced world equals `w` (a full-signature world).
  Rational prob(const World& w) {
    int n = w.domain_size();
    Rational p = 1;
    int top = std::min(n, max_level_);
    std::vector<int> subset;
    auto rec = [&](auto&& self, int next, int want) -> void {
      if (static_cast<int>(subset.size()) == want) {
        p *= factor(w, subset);
        return;
      }
      for (int v = next; v < n; ++v) {
        subset.push_back(v);
        self(self, v + 1, want);
        subset.pop_back();
      }
    };
    for (int s = 1; s <= top && p != 0; ++s) rec(rec, 0, s);
    return p;
  }

 private:
  const GroundProgram& ground(int s) {
    auto it = grounds_.find(s);
    if (it == grounds_.end())
      it = grounds_.emplace(s, GroundProgram(plp_.program, s)).first;
    return it->second;
  }

  // N/D for one subset: N matches the full pattern over the subset, D matches
  // only the atoms with fewer distinct arguments.
  Rational factor(const World& w, const std::vector<int>& subset) {
    int s = static_cast<int>(subset.size());
    const GroundProgram& g = ground(s);
    World expected = apply_map(w, DomainMap(s, w.domain_size(), subset));
    std::uint64_t key = expected.blocks().empty() ? 0 : expected.blocks()[0];
    auto cached = cache_[s].find(key);
    if (cached != cache_[s].end()) {
      const auto& [num, den] = cached->second;
      if (den == 0) throw ValidationError("factored strategy hit an impossible sub-pattern");
      return num / den;
    }
    AtomSpace free_space(plp_.program.free_sig, s);
    AtomSpace full_space(*g.full_signature(), s);
    check_world_budget(free_space.count(), kDefaultWorldBudget);
    if (full_space.count() > 63)
      throw BudgetError("factored local pattern exceeds 63 atoms", full_space.count(), 63);
    std::uint64_t lower_mask = 0;
    for (std::uint64_t i = 0; i < full_space.count(); ++i)
      if (distinct_arg_count(full_space.atom(i)) < s) lower_mask |= std::uint64_t(1) << i;
    std::uint64_t want = expected.blocks().empty() ? 0 : expected.blocks()[0];

    Rational num = 0, den = 0;
    std::vector<std::uint64_t> bits(g.block_count());
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << free_space.count()); ++mask) {
      std::fill(bits.begin(), bits.end(), 0);
      if (!bits.empty()) bits[0] = mask;
      g.run_bits(bits);
      std::uint64_t out = bits.empty() ? 0 : bits[0];
      if ((out & lower_mask) != (want & lower_mask)) continue;
      Rational weight = detail::mask_weight(plp_.weights, plp_.program.free_sig, free_space, mask);
      den += weight;
      if (out == want) num += weight;
    }
    cache_[s][key] = {num, den};
    if (den == 0) throw ValidationError("factored strategy hit an impossible sub-pattern");
    return num / den;
  }

  const GeneralizedPlp& plp_;
  int max_level_;
  std::map<int, GroundProgram> grounds_;
  std::map<int, std::map<std::uint64_t, std::pair<Rational, Rational>>> cache_;
};

// Pushforward of the free distribution under program evaluation.
inline Dist induced_dist(const GeneralizedPlp& plp, int n,
                         Strategy strategy = Strategy::kEnumerate,
                         std::uint64_t budget = kDefaultWorldBudget) {
  validate_plp(plp);
  GroundProgram g(plp.program, n);
  AtomSpace free_space(plp.program.free_sig, n);
  check_world_budget(free_space.count(), budget);
  SignaturePtr free_sig = std::make_shared<const Signature>(plp.program.free_sig);
  Dist d{g.full_signature(), n, {}};
  std::optional<FactoredInduced> factored;
  if (strategy == Strategy::kFactored) factored.emplace(plp);
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << free_space.count()); ++mask) {
    World in = detail::world_from_mask(free_sig, n, mask);
    World out = g.run(in);
    Rational p = strategy == Strategy::kFactored
                     ? factored->prob(out)
                     : detail::mask_weight(plp.weights, plp.program.free_sig, free_space, mask);
    d.add(std::move(out), std::move(p));
  }
  return d;
}

struct SquareReport {
  bool ok = true;
  std::string detail;
  std::uint64_t checked = 0;
  std::string note;
};

// Verifies that evaluation commutes with every injection between domains of
// size <= N (inclusions composed with permutations generate them all), by
// exhaustive enumeration of free worlds. On success the induced family is
// additionally checked to be projective whenever its supports are small
// enough to materialize; beyond that the commutation just proven is what
// makes the induced family projective, and the report notes the shortcut.
inline SquareReport check_commuting_square(const GeneralizedPlp& plp, int N,
                                           std::uint64_t budget = kDefaultWorldBudget) {
  validate_plp(plp);
  SquareReport report;
  SignaturePtr free_sig = std::make_shared<const Signature>(plp.program.free_sig);
  std::vector<GroundProgram> grounds;
  for (int n = 1; n <= N; ++n) grounds.emplace_back(plp.program, n);

  // Fast index maps: for an injection m into {0..n-1}, gather[i] is the big
  // atom that small atom i pulls its value from.
  auto make_gather = [](const Signature& sig, const DomainMap& m) {
    AtomSpace small(sig, m.source_size);
    AtomSpace big(sig, m.target_size);
    std::vector<std::uint32_t> gather(small.count());
    for (std::uint64_t i = 0; i < small.count(); ++i) {
      GroundAtom a = small.atom(i);
      for (int& arg : a.args) arg = m(arg);
      gather[i] = static_cast<std::uint32_t>(big.index(a));
    }
    return gather;
  };
  auto apply_gather = [](const std::vector<std::uint64_t>& in,
                         const std::vector<std::uint32_t>& gather,
                         std::vector<std::uint64_t>& out) {
    std::fill(out.begin(), out.end(), 0);
    for (std::size_t i = 0; i < gather.size(); ++i)
      if ((in[gather[i] >> 6] >> (gather[i] & 63)) & 1) out[i >> 6] |= std::uint64_t(1) << (i & 63);
  };

  for (int n = 1; n <= N && report.ok; ++n) {
    const GroundProgram& g = grounds[static_cast<std::size_t>(n - 1)];
    AtomSpace free_space(plp.program.free_sig, n);
    check_world_budget(free_space.count(), budget);
    const Signature& full = *g.full_signature();

    struct Leg {
      DomainMap map;
      std::vector<std::uint32_t> free_gather, full_gather;
      const GroundProgram* small_ground;
      std::size_t small_blocks;
      std::uint64_t small_free_atoms;
    };
    std::vector<Leg> legs;
    for (const DomainMap& perm : all_permutations(n)) {
      if (perm == DomainMap::identity(n)) continue;
      legs.push_back(Leg{perm, make_gather(plp.program.free_sig, perm), make_gather(full, perm),
                         &g, g.block_count(), g.free_atom_count()});
    }
    for (int m = 1; m < n; ++m) {
      DomainMap incl = DomainMap::inclusion(m, n);
      const GroundProgram& gm = grounds[static_cast<std::size_t>(m - 1)];
      legs.push_back(Leg{incl, make_gather(plp.program.free_sig, incl), make_gather(full, incl),
                         &gm, gm.block_count(), gm.free_atom_count()});
    }

    std::vector<std::uint64_t> bits(g.block_count());
    std::vector<std::uint64_t> small_in, small_out, restricted;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << free_space.count()); ++mask) {
      std::fill(bits.begin(), bits.end(), 0);
      if (!bits.empty()) bits[0] = mask;
      g.run_bits(bits);
      std::vector<std::uint64_t> in_bits{mask};
      for (const Leg& leg : legs) {
        small_in.assign(leg.small_blocks, 0);
        // Free bits sit at the same indices in the full space.
        std::size_t free_blocks = (leg.small_free_atoms + 63) / 64;
        std::vector<std::uint64_t> gathered(free_blocks, 0);
        apply_gather(in_bits, leg.free_gather, gathered);
        for (std::size_t b = 0; b < free_blocks; ++b) small_in[b] = gathered[b];
        leg.small_ground->run_bits(small_in);
        restricted.assign(leg.small_blocks, 0);
        apply_gather(bits, leg.full_gather, restricted);
        ++report.checked;
        if (small_in != restricted) {
          World omega = detail::world_from_mask(free_sig, n, mask);
          std::ostringstream os;
          os << "square fails at n=" << n << ", free world [" << format_world(omega) << "], map (";
          for (std::size_t i = 0; i < leg.map.images.size(); ++i)
            os << (i ? "," : "") << leg.map.images[i];
          World lhs(g.full_signature(), leg.map.source_size);
          lhs.blocks() = restricted;
          World rhs(g.full_signature(), leg.map.source_size);
          rhs.blocks() = small_in;
          os << "): restricting the output gives [" << format_world(lhs)
             << "] but evaluating the restriction gives [" << format_world(rhs) << "]";
          report.ok = false;
          report.detail = os.str();
          break;
        }
      }
      if (!report.ok) break;
    }
  }
  if (!report.ok) return report;

  bool materializable = true;
  for (int n = 1; n <= N; ++n) {
    AtomSpace free_space(plp.program.free_sig, n);
    if (free_space.count() > 18) materializable = false;
  }
  if (materializable) {
    Family f{grounds.back().full_signature(),
             [&plp, budget](int n) { return induced_dist(plp, n, Strategy::kEnumerate, budget); }};
    ProjectivityReport proj = check_projective(f, N, budget);
    if (!proj.ok) {
      report.ok = false;
      report.detail = "commutation holds but projectivity failed: " + proj.detail;
      return report;
    }
    report.note = "induced family verified projective up to N=" + std::to_string(N);
  } else {
    report.note =
        "commutation verified exhaustively; induced-family projectivity follows (supports too "
        "large to materialize)";
  }
  return report;
}

struct TraceFunctorialityReport {
  bool ok = true;
  std::string detail;
  std::uint64_t checked = 0;
};

// Free worlds with equal g-traces must map to outputs with equal g-traces.
inline TraceFunctorialityReport check_trace_functoriality(
    const GeneralizedPlp& plp, int N, int g, std::uint64_t budget = kDefaultWorldBudget) {
  validate_plp(plp);
  TraceFunctorialityReport report;
  SignaturePtr free_sig = std::make_shared<const Signature>(plp.program.free_sig);
  for (int n = 1; n <= N; ++n) {
    GroundProgram ground(plp.program, n);
    AtomSpace free_space(plp.program.free_sig, n);
    AtomSpace full_space(*ground.full_signature(), n);
    check_world_budget(free_space.count(), budget);
    std::uint64_t in_mask = 0;
    for (std::uint64_t i = 0; i < free_space.count(); ++i)
      if (distinct_arg_count(free_space.atom(i)) <= g) in_mask |= std::uint64_t(1) << i;
    std::vector<std::uint64_t> out_mask((full_space.count() + 63) / 64, 0);
    for (std::uint64_t i = 0; i < full_space.count(); ++i)
      if (distinct_arg_count(full_space.atom(i)) <= g)
        out_mask[i >> 6] |= std::uint64_t(1) << (i & 63);

    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::vector<std::uint64_t>>> seen;
    std::vector<std::uint64_t> bits(ground.block_count());
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << free_space.count()); ++mask) {
      std::fill(bits.begin(), bits.end(), 0);
      if (!bits.empty()) bits[0] = mask;
      ground.run_bits(bits);
      std::vector<std::uint64_t> out_trace(bits);
      for (std::size_t b = 0; b < out_trace.size(); ++b) out_trace[b] &= out_mask[b];
      auto [it, inserted] = seen.emplace(mask & in_mask, std::make_pair(mask, out_trace));
      ++report.checked;
      if (!inserted && it->second.second != out_trace) {
        World w1 = detail::world_from_mask(free_sig, n, it->second.first);
        World w2 = detail::world_from_mask(free_sig, n, mask);
        std::ostringstream os;
        os << "trace functoriality fails at n=" << n << ", g=" << g << ": free worlds ["
           << format_world(w1) << "] and [" << format_world(w2)
           << "] share their " << g << "-trace but the outputs differ on it";
        report.ok = false;
        report.detail = os.str();
        return report;
      }
    }
  }
  return report;
}

// Target-marginal probabilities factored per element subset: each local
// factor conditions the subset's new target pattern on the smaller patterns,
// enumerating only the free atoms actually read over that subset. Requires,
// beyond tuple-locality, that every free body atom mentions all head
// variables, so the conditional depends on smaller subsets only through
// their target patterns.
class FactoredReduct {
 public:
  explicit FactoredReduct(const GeneralizedPlp& plp)
      : plp_(plp), target_(std::make_shared<const Signature>(plp.target)) {
    TupleLocalReport tl = check_tuple_local(plp.program);
    if (!tl.ok)
      throw ValidationError("factored reduct requires a tuple-local program; " +
                            tl.violations.front());
    for (const Rule& r : plp_.program.rules) {
      std::set<std::string> head_vars(r.head.vars.begin(), r.head.vars.end());
      for (const RuleLiteral& lit : r.body) {
        if (lit.kind == RuleLiteral::Kind::Diseq || !plp_.program.is_free(lit.atom.pred))
          continue;
        std::set<std::string> atom_vars(lit.atom.vars.begin(), lit.atom.vars.end());
        if (atom_vars != head_vars)
          throw ValidationError(
              "factored reduct requires free body atoms to mention all head variables: " +
              format_rule(r));
      }
    }
    max_level_ = plp.target.max_arity();
  }

  Rational prob(int n, const World& target_world) {
    if (!(target_world.signature() == plp_.target))
      throw ValidationError("factored reduct expects a world over the target signature");
    Rational p = 1;
    int top = std::min(n, max_level_);
    std::vector<int> subset;
    auto rec = [&](auto&& self, int next, int want) -> void {
      if (static_cast<int>(subset.size()) == want) {
        if (p != 0) p *= factor(target_world, subset, n);
        return;
      }
      for (int v = next; v < n; ++v) {
        subset.push_back(v);
        self(self, v + 1, want);
        subset.pop_back();
      }
    };
    for (int s = 1; s <= top && p != 0; ++s) rec(rec, 0, s);
    return p;
  }

  Dist dist(int n, std::uint64_t budget = kDefaultWorldBudget) {
    Dist d{target_, n, {}};
    for (World& w : enumerate_worlds(target_, n, budget)) {
      Rational p = prob(n, w);
      d.add(std::move(w), std::move(p));
    }
    return d;
  }

 private:
  struct LocalSpace {
    GroundProgram ground;
    std::vector<std::uint64_t> live;     // free atoms read by some ground rule
    std::vector<std::uint32_t> target_gather;  // target atom -> full atom index
    std::uint64_t lower_target_mask = 0;       // target atoms with < s distinct args
  };

  LocalSpace& local(int s) {
    auto it = locals_.find(s);
    if (it != locals_.end()) return it->second;
    GroundProgram ground(plp_.program, s);
    LocalSpace space{std::move(ground), {}, {}, 0};
    AtomSpace free_space(plp_.program.free_sig, s);
    std::set<std::uint64_t> live;
    // Live atoms: free atoms read by some ground rule body over this domain.
    AtomSpace full_space(*space.ground.full_signature(), s);
    for (const Rule& r : plp_.program.rules) {
      std::vector<std::string> vars;
      auto note = [&](const std::string& v) {
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      };
      for (const std::string& v : r.head.vars) note(v);
      for (const RuleLiteral& lit : r.body)
        if (lit.kind == RuleLiteral::Kind::Diseq) {
          note(lit.left);
          note(lit.right);
        } else {
          for (const std::string& v : lit.atom.vars) note(v);
        }
      std::vector<int> binding(vars.size(), 0);
      while (true) {
        bool ok = true;
        for (const RuleLiteral& lit : r.body)
          if (lit.kind == RuleLiteral::Kind::Diseq) {
            auto iv = [&](const std::string& v) {
              return binding[static_cast<std::size_t>(
                  std::find(vars.begin(), vars.end(), v) - vars.begin())];
            };
            if (iv(lit.left) == iv(lit.right)) {
              ok = false;
              break;
            }
          }
        if (ok) {
          for (const RuleLiteral& lit : r.body) {
            if (lit.kind == RuleLiteral::Kind::Diseq || !plp_.program.is_free(lit.atom.pred))
              continue;
            GroundAtom ga{plp_.program.free_sig.index_of(lit.atom.pred), {}};
            for (const std::string& v : lit.atom.vars)
              ga.args.push_back(binding[static_cast<std::size_t>(
                  std::find(vars.begin(), vars.end(), v) - vars.begin())]);
            live.insert(free_space.index(ga));
          }
        }
        std::size_t pos = 0;
        while (pos < binding.size()) {
          if (++binding[pos] < s) break;
          binding[pos] = 0;
          ++pos;
        }
        if (pos == binding.size()) break;
      }
    }
    space.live.assign(live.begin(), live.end());
    AtomSpace target_space(plp_.target, s);
    if (target_space.count() > 63)
      throw BudgetError("factored reduct pattern exceeds 63 atoms", target_space.count(), 63);
    for (std::uint64_t i = 0; i < target_space.count(); ++i) {
      GroundAtom a = target_space.atom(i);
      GroundAtom full_atom{space.ground.full_signature()->index_of(plp_.target.relation(a.rel).name),
                           a.args};
      space.target_gather.push_back(static_cast<std::uint32_t>(full_space.index(full_atom)));
      if (distinct_arg_count(a) < s) space.lower_target_mask |= std::uint64_t(1) << i;
    }
    check_world_budget(space.live.size(), kDefaultWorldBudget);
    return locals_.emplace(s, std::move(space)).first->second;
  }

  Rational factor(const World& w, const std::vector<int>& subset, int n) {
    int s = static_cast<int>(subset.size());
    World expected = apply_map(w, DomainMap(s, n, subset));
    std::uint64_t want = expected.blocks().empty() ? 0 : expected.blocks()[0];
    auto cached = cache_[s].find(want);
    LocalSpace& space = local(s);
    if (cached == cache_[s].end()) {
      AtomSpace free_space(plp_.program.free_sig, s);
      Rational num = 0, den = 0;
      std::vector<std::uint64_t> bits(space.ground.block_count());
      std::uint64_t combos = std::uint64_t(1) << space.live.size();
      for (std::uint64_t choice = 0; choice < combos; ++choice) {
        std::fill(bits.begin(), bits.end(), 0);
        Rational weight = 1;
        for (std::size_t i = 0; i < space.live.size(); ++i) {
          std::uint64_t atom = space.live[i];
          const Rational& wr = plp_.weights.at(
              plp_.program.free_sig.relation(free_space.atom(atom).rel).name);
          if ((choice >> i) & 1) {
            bits[atom >> 6] |= std::uint64_t(1) << (atom & 63);
            weight *= wr;
          } else {
            weight *= Rational(1 - wr);
          }
        }
        space.ground.run_bits(bits);
        std::uint64_t out = 0;
        for (std::size_t i = 0; i < space.target_gather.size(); ++i)
          if ((bits[space.target_gather[i] >> 6] >> (space.target_gather[i] & 63)) & 1)
            out |= std::uint64_t(1) << i;
        if ((out & space.lower_target_mask) == (want & space.lower_target_mask)) {
          den += weight;
          if (out == want) num += weight;
        }
      }
      cached = cache_[s].emplace(want, std::make_pair(num, den)).first;
    }
    const auto& [num, den] = cached->second;
    if (den == 0) return 0;  // the sub-pattern itself is impossible
    return num / den;
  }

  const GeneralizedPlp& plp_;
  SignaturePtr target_;
  int max_level_;
  std::map<int, LocalSpace> locals_;
  std::map<int, std::map<std::uint64_t, std::pair<Rational, Rational>>> cache_;
};

// Marginal of the induced distribution onto the target signature. The
// factored route never materializes the joint, so it goes first; programs it
// cannot handle fall back to full enumeration under the budget.
inline Dist reduct_dist(const GeneralizedPlp& plp, int n,
                        std::uint64_t budget = kDefaultWorldBudget) {
  try {
    FactoredReduct factored(plp);
    return factored.dist(n, budget);
  } catch (const Error&) {
  }
  AtomSpace free_space(plp.program.free_sig, n);
  check_world_budget(free_space.count(), budget);
  SignaturePtr target = std::make_shared<const Signature>(plp.target);
  return marginalize_signature(induced_dist(plp, n, Strategy::kEnumerate, budget), target);
}

inline Family reduct_family(const GeneralizedPlp& plp,
                            std::uint64_t budget = kDefaultWorldBudget) {
  SignaturePtr target = std::make_shared<const Signature>(plp.target);
  // Copy the plp so the family owns its data.
  auto shared = std::make_shared<const GeneralizedPlp>(plp);
  return Family{target, [shared, budget](int n) { return reduct_dist(*shared, n, budget); }};
}

}  // namespace dsem
