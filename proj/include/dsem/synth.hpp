#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsem/gplp.hpp"
#include "dsem/sip.hpp"
#include "dsem/sip_checks.hpp"

namespace dsem {

// Raised when the input family cannot be represented because some positive
// trace has no positive symmetric extension.
struct SynthesisError : Error {
  AsymmetryWitness witness;
  SynthesisError(const std::string& msg, AsymmetryWitness w)
      : Error(msg), witness(std::move(w)) {}
};

namespace detail {

class NameGen {
 public:
  void reserve(const std::string& name) { used_.insert(name); }
  std::string fresh(std::string base) {
    while (used_.count(base)) base += "x";
    used_.insert(base);
    return base;
  }

 private:
  std::set<std::string> used_;
};

}  // namespace detail

// One compiled exactly-one-of-m choice: fresh independent relations with
// chain weights w_i = p_i / prod_{j<i}(1 - w_j), and per alternative one rule
// per head atom, conditioned on the chain and the shared guard. Alternatives
// with probability zero are omitted entirely; the final alternative needs no
// relation of its own.
struct AdCompilation {
  std::vector<std::string> aux_names;
  std::vector<Rational> aux_weights;
  std::vector<Rule> rules;
  std::vector<std::size_t> survivors;  // indices of the positive alternatives
};

inline AdCompilation compile_ad(const std::vector<Rational>& probs,
                                const std::vector<std::vector<RuleAtom>>& heads,
                                const std::vector<RuleLiteral>& guard,
                                const std::vector<std::string>& vars, const std::string& base,
                                detail::NameGen& names) {
  if (heads.size() != probs.size())
    throw ValidationError("compile_ad needs one head list per alternative");
  Rational total = 0;
  for (const Rational& p : probs) {
    if (!is_probability(p)) throw ValidationError("alternative probability outside [0,1]");
    total += p;
  }
  if (total != 1)
    throw ValidationError("alternative probabilities sum to " + to_string(total) +
                          ", expected 1");
  AdCompilation out;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] != 0) out.survivors.push_back(i);

  Rational remaining = 1;
  for (std::size_t k = 0; k < out.survivors.size(); ++k) {
    const Rational& p = probs[out.survivors[k]];
    bool last = k + 1 == out.survivors.size();
    if (!last) {
      out.aux_names.push_back(names.fresh(base + std::to_string(k + 1)));
      out.aux_weights.push_back(p / remaining);
    }
    std::vector<RuleLiteral> body;
    if (!last) {
      RuleLiteral lit;
      lit.kind = RuleLiteral::Kind::Positive;
      lit.atom = RuleAtom{out.aux_names.back(), vars};
      body.push_back(std::move(lit));
    }
    for (std::size_t j = k; j-- > 0;) {
      RuleLiteral lit;
      lit.kind = RuleLiteral::Kind::Negative;
      lit.atom = RuleAtom{out.aux_names[j], vars};
      body.push_back(std::move(lit));
    }
    body.insert(body.end(), guard.begin(), guard.end());
    for (const RuleAtom& head : heads[out.survivors[k]]) out.rules.push_back(Rule{head, body});
    remaining -= p;
  }
  return out;
}

// Collision probability of m independent uniform draws over k indices.
inline Rational p_sym_formula(int k, int m) {
  BigInt distinct = 1;
  for (int i = 0; i < m; ++i) distinct *= k - i;
  BigInt all = 1;
  for (int i = 0; i < m; ++i) all *= k;
  return Rational(1) - Rational(distinct, all);
}

// Per ordered tuple of g+1 distinct elements, a uniform choice among k order
// indices; Coincide/Collision detect equal indices across permutations,
// Beaten marks dominated permutations and Max elects the unique maximal one
// in every collision-free assignment.
struct OrdGadget {
  int g = 0;
  int k = 0;
  Rational p_sym;
  std::vector<std::string> ord_names;    // derived index relations, arity g+1
  std::vector<std::string> chain_names;  // free chain realizing the uniform choice
  std::vector<Rational> chain_weights;
  std::string coincide, collision, beaten, max_name;
  std::vector<Rule> ord_rules;     // chain -> ord definitions
  std::vector<Rule> gadget_rules;  // coincide/collision/beaten/max definitions
};

inline OrdGadget build_ord_gadget(int g, const Rational& p_min, detail::NameGen& names) {
  if (!(p_min > 0) || p_min > 1) throw ValidationError("p_min must lie in (0,1]");
  int s = g + 1;
  int m = 1;
  for (int i = 2; i <= s; ++i) m *= i;
  OrdGadget gadget;
  gadget.g = g;
  for (int k = m;; ++k) {
    Rational ps = p_sym_formula(k, m);
    if (ps < p_min) {
      gadget.k = k;
      gadget.p_sym = ps;
      break;
    }
  }
  std::vector<std::string> vars;
  for (int i = 0; i < s; ++i) vars.push_back("X" + std::to_string(i));
  std::vector<RuleLiteral> diseqs;
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      RuleLiteral lit;
      lit.kind = RuleLiteral::Kind::Diseq;
      lit.left = vars[static_cast<std::size_t>(i)];
      lit.right = vars[static_cast<std::size_t>(j)];
      diseqs.push_back(std::move(lit));
    }

  std::string tag = std::to_string(s);
  for (int j = 1; j <= gadget.k; ++j)
    gadget.ord_names.push_back(names.fresh("ord" + tag + "_" + std::to_string(j)));
  std::vector<std::vector<RuleAtom>> ord_heads;
  for (int j = 0; j < gadget.k; ++j)
    ord_heads.push_back({RuleAtom{gadget.ord_names[static_cast<std::size_t>(j)], vars}});
  std::vector<Rational> uniform(static_cast<std::size_t>(gadget.k),
                                Rational(1, gadget.k));
  AdCompilation chain =
      compile_ad(uniform, ord_heads, diseqs, vars, "ordsel" + tag + "_", names);
  gadget.chain_names = chain.aux_names;
  gadget.chain_weights = chain.aux_weights;
  gadget.ord_rules = chain.rules;

  gadget.coincide = names.fresh("coin" + tag);
  gadget.collision = names.fresh("coll" + tag);
  gadget.beaten = names.fresh("beat" + tag);
  gadget.max_name = names.fresh("max" + tag);

  std::vector<std::vector<std::string>> perms;
  {
    std::vector<std::string> v = vars;
    std::sort(v.begin(), v.end());
    do {
      perms.push_back(v);
    } while (std::next_permutation(v.begin(), v.end()));
  }
  auto pos = [&](const std::string& rel, const std::vector<std::string>& args) {
    RuleLiteral lit;
    lit.kind = RuleLiteral::Kind::Positive;
    lit.atom = RuleAtom{rel, args};
    return lit;
  };
  auto neg = [&](const std::string& rel, const std::vector<std::string>& args) {
    RuleLiteral lit;
    lit.kind = RuleLiteral::Kind::Negative;
    lit.atom = RuleAtom{rel, args};
    return lit;
  };
  for (int j = 0; j < gadget.k; ++j) {
    for (const auto& perm : perms) {
      if (perm == vars) continue;
      std::vector<RuleLiteral> body{pos(gadget.ord_names[static_cast<std::size_t>(j)], vars),
                                    pos(gadget.ord_names[static_cast<std::size_t>(j)], perm)};
      body.insert(body.end(), diseqs.begin(), diseqs.end());
      gadget.gadget_rules.push_back(Rule{RuleAtom{gadget.coincide, vars}, std::move(body)});
    }
  }
  for (const auto& perm : perms) {
    std::vector<RuleLiteral> body{pos(gadget.coincide, perm)};
    body.insert(body.end(), diseqs.begin(), diseqs.end());
    gadget.gadget_rules.push_back(Rule{RuleAtom{gadget.collision, vars}, std::move(body)});
  }
  for (int j = 0; j < gadget.k; ++j) {
    for (int j2 = j + 1; j2 < gadget.k; ++j2) {
      for (const auto& perm : perms) {
        if (perm == vars) continue;
        std::vector<RuleLiteral> body{pos(gadget.ord_names[static_cast<std::size_t>(j)], vars),
                                      pos(gadget.ord_names[static_cast<std::size_t>(j2)], perm)};
        body.insert(body.end(), diseqs.begin(), diseqs.end());
        gadget.gadget_rules.push_back(Rule{RuleAtom{gadget.beaten, vars}, std::move(body)});
      }
    }
  }
  {
    std::vector<RuleLiteral> body{neg(gadget.collision, vars), neg(gadget.beaten, vars)};
    body.insert(body.end(), diseqs.begin(), diseqs.end());
    gadget.gadget_rules.push_back(Rule{RuleAtom{gadget.max_name, vars}, std::move(body)});
  }
  return gadget;
}

// Chosen symmetric representative per positive trace, transported from the
// orbit representative so isomorphic traces receive isomorphic choices.
struct RepChoice {
  // reps[g-1]: theta bits -> new-atom bits of the chosen extension
  std::vector<std::map<std::uint64_t, std::uint64_t>> reps;
  std::vector<Rational> stage_p_min;
  Rational p_min = 1;
};

inline RepChoice choose_symmetric_reps(const SipParams& p,
                                       std::uint64_t budget = kDefaultWorldBudget) {
  RepChoice choice;
  for (int g = 1; g < p.arity; ++g) {
    const SipParams::Stage& st = p.stage(g);
    std::vector<std::uint64_t> positives = positive_thetas(p, g, budget);
    std::set<std::uint64_t> positive_set(positives.begin(), positives.end());
    std::map<std::uint64_t, std::uint64_t> reps;
    Rational stage_min = 1;
    std::vector<DomainMap> perms = all_permutations(g + 1);

    std::set<std::uint64_t> handled;
    for (std::uint64_t tb : positives) {
      // Orbit representative: least theta bits over all permutations.
      std::uint64_t orbit_rep = tb;
      for (const DomainMap& perm : perms)
        orbit_rep = std::min(orbit_rep, st.theta_space.transport(tb, perm.images));
      if (handled.count(orbit_rep)) continue;
      handled.insert(orbit_rep);

      const std::vector<Rational>& vec = p.lookup(g, orbit_rep);
      Trace theta = st.theta_space.to_trace(orbit_rep);
      std::uint64_t best = 0;
      Rational best_prob = -1;
      std::vector<Trace> positive_exts;
      for (std::size_t e = 0; e < vec.size(); ++e) {
        if (vec[e] == 0) continue;
        Trace gamma = st.full_space.to_trace(st.full_bits(orbit_rep, e));
        positive_exts.push_back(gamma);
        if (!symmetric_extension(theta, gamma)) continue;
        if (vec[e] > best_prob) {
          best_prob = vec[e];
          best = e;
        }
      }
      if (best_prob < 0) {
        AsymmetryWitness witness;
        witness.g = g;
        witness.theta = theta;
        witness.evidence = std::move(positive_exts);
        throw SynthesisError("essentially asymmetric; not representable: " +
                                 format_witness(witness),
                             witness);
      }
      stage_min = std::min(stage_min, best_prob);
      // Transport the choice to every positive orbit member.
      for (const DomainMap& perm : perms) {
        std::uint64_t member = st.theta_space.transport(orbit_rep, perm.images);
        if (!positive_set.count(member) || reps.count(member)) continue;
        // member = transport(orbit_rep, perm), so the same transport carries
        // the chosen extension over; symmetry makes the choice well-defined.
        std::uint64_t full = st.full_bits(orbit_rep, best);
        reps[member] = st.new_part(st.full_space.transport(full, perm.images));
      }
    }
    choice.reps.push_back(std::move(reps));
    choice.stage_p_min.push_back(stage_min);
    choice.p_min = std::min(choice.p_min, stage_min);
  }
  return choice;
}

struct ThetaPlan {
  std::uint64_t theta_bits = 0;
  std::uint64_t rep_bits = 0;                // chosen symmetric extension (new atoms)
  std::vector<std::uint64_t> alternatives;   // [rep copy, remaining positives...]
  std::vector<Rational> q;                   // chain input probabilities
  std::vector<std::string> chain_names;
  std::vector<Rational> chain_weights;
  std::vector<Rule> rules;  // fallback + main rules for this theta
};

struct StagePlan {
  int g = 0;
  OrdGadget gadget;
  Rational p_min;
  std::vector<ThetaPlan> thetas;
};

struct SynthesisPlan {
  SipParams params;
  RepChoice reps;
  Rational p_min = 1;
  // Stage-1 bookkeeping.
  std::vector<std::size_t> stage1_alternatives;  // positive one-trace bits
  std::vector<std::string> stage1_chain_names;
  std::vector<Rational> stage1_chain_weights;
  std::vector<Rule> stage1_rules;
  std::vector<StagePlan> stages;
  std::vector<Rule> union_rules;
  // part_names[rel][d-1]: derived relation holding the atoms of target
  // relation `rel` decided at level d (the relation itself when arity is 1).
  std::vector<std::vector<std::string>> part_names;
  GeneralizedPlp plp;
};

namespace detail {

inline std::vector<std::string> tuple_vars(int s) {
  std::vector<std::string> vars;
  for (int i = 0; i < s; ++i) vars.push_back("X" + std::to_string(i));
  return vars;
}

inline std::vector<RuleLiteral> tuple_diseqs(const std::vector<std::string>& vars) {
  std::vector<RuleLiteral> out;
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j) {
      RuleLiteral lit;
      lit.kind = RuleLiteral::Kind::Diseq;
      lit.left = vars[i];
      lit.right = vars[j];
      out.push_back(std::move(lit));
    }
  return out;
}

inline RuleAtom part_atom(const SynthesisPlan& plan, const GroundAtom& atom,
                          const std::vector<std::string>& vars) {
  int d = distinct_arg_count(atom);
  RuleAtom out;
  out.pred = plan.part_names[static_cast<std::size_t>(atom.rel)][static_cast<std::size_t>(d - 1)];
  for (int arg : atom.args) out.vars.push_back(vars[static_cast<std::size_t>(arg)]);
  return out;
}

// Positive part literals for theta's true atoms, negative ones for the rest.
inline std::vector<RuleLiteral> trace_body(const SynthesisPlan& plan,
                                           const SipParams::Stage& st, std::uint64_t theta_bits,
                                           const std::vector<std::string>& vars) {
  std::vector<RuleLiteral> body;
  for (std::size_t i = 0; i < st.theta_space.atoms.size(); ++i) {
    RuleLiteral lit;
    lit.kind = ((theta_bits >> i) & 1) ? RuleLiteral::Kind::Positive : RuleLiteral::Kind::Negative;
    lit.atom = part_atom(plan, st.theta_space.atoms[i], vars);
    body.push_back(std::move(lit));
  }
  return body;
}

}  // namespace detail

// The compiler: stage-1 annotated disjunction over one-traces, then per stage
// the shared Ord gadget, a symmetric fallback fired on collisions and a main
// annotated disjunction fired at the elected permutation, with trace bodies
// over per-level part relations. Unreachable traces get no rules.
inline SynthesisPlan synthesize(const SipParams& params,
                                std::uint64_t budget = kDefaultWorldBudget) {
  ParamsReport valid = validate_params(params);
  if (!valid.ok) throw ValidationError("invalid parameters: " + valid.violations.front());
  for (const Relation& r : params.sig->relations())
    if (!std::islower(static_cast<unsigned char>(r.name[0])))
      throw ValidationError("target relation '" + r.name +
                            "' must start lowercase to serve as a rule predicate");

  SynthesisPlan plan;
  plan.params = params;
  plan.reps = choose_symmetric_reps(params, budget);
  plan.p_min = plan.reps.p_min;

  detail::NameGen names;
  for (const Relation& r : params.sig->relations()) names.reserve(r.name);

  std::vector<Relation> free_rels, derived_rels;
  std::map<std::string, Rational> weights;

  // Per-level part relations; unary targets are their own single part.
  for (const Relation& r : params.sig->relations()) {
    std::vector<std::string> parts;
    if (r.arity == 1) {
      parts.push_back(r.name);
      derived_rels.push_back(r);
    } else {
      for (int d = 1; d <= r.arity; ++d) {
        parts.push_back(names.fresh(r.name + "_s" + std::to_string(d)));
        derived_rels.push_back(Relation{parts.back(), r.arity});
      }
    }
    plan.part_names.push_back(std::move(parts));
  }

  // Stage 1: one-trace disjunction per element.
  {
    std::vector<Rational> probs;
    std::vector<std::vector<RuleAtom>> heads;
    std::vector<std::string> vars{"X0"};
    for (std::size_t tb = 0; tb < params.one_probs.size(); ++tb) {
      probs.push_back(params.one_probs[tb]);
      std::vector<RuleAtom> alt;
      for (std::size_t i = 0; i < params.one_space.atoms.size(); ++i)
        if ((tb >> i) & 1) alt.push_back(detail::part_atom(plan, params.one_space.atoms[i], vars));
      heads.push_back(std::move(alt));
      if (params.one_probs[tb] != 0) plan.stage1_alternatives.push_back(tb);
    }
    AdCompilation ad = compile_ad(probs, heads, {}, vars, "sel1_", names);
    plan.stage1_chain_names = ad.aux_names;
    plan.stage1_chain_weights = ad.aux_weights;
    plan.stage1_rules = ad.rules;
    for (std::size_t i = 0; i < ad.aux_names.size(); ++i) {
      free_rels.push_back(Relation{ad.aux_names[i], 1});
      weights[ad.aux_names[i]] = ad.aux_weights[i];
    }
  }

  // Later stages.
  for (int g = 1; g < params.arity; ++g) {
    const SipParams::Stage& st = params.stage(g);
    int s = g + 1;
    std::vector<std::string> vars = detail::tuple_vars(s);
    std::vector<RuleLiteral> diseqs = detail::tuple_diseqs(vars);

    StagePlan stage;
    stage.g = g;
    stage.p_min = plan.reps.stage_p_min[static_cast<std::size_t>(g - 1)];
    stage.gadget = build_ord_gadget(g, stage.p_min, names);
    for (std::size_t i = 0; i < stage.gadget.chain_names.size(); ++i) {
      free_rels.push_back(Relation{stage.gadget.chain_names[i], s});
      weights[stage.gadget.chain_names[i]] = stage.gadget.chain_weights[i];
    }
    for (const std::string& name : stage.gadget.ord_names)
      derived_rels.push_back(Relation{name, s});
    derived_rels.push_back(Relation{stage.gadget.coincide, s});
    derived_rels.push_back(Relation{stage.gadget.collision, s});
    derived_rels.push_back(Relation{stage.gadget.beaten, s});
    derived_rels.push_back(Relation{stage.gadget.max_name, s});

    const std::map<std::uint64_t, std::uint64_t>& reps =
        plan.reps.reps[static_cast<std::size_t>(g - 1)];
    std::size_t theta_index = 0;
    for (const auto& [tb, rep_bits] : reps) {
      ThetaPlan tp;
      tp.theta_bits = tb;
      tp.rep_bits = rep_bits;
      const std::vector<Rational>& vec = params.lookup(g, tb);

      tp.alternatives.push_back(rep_bits);
      tp.q.push_back((vec[rep_bits] - stage.gadget.p_sym) / (1 - stage.gadget.p_sym));
      for (std::size_t e = 0; e < vec.size(); ++e) {
        if (e == rep_bits || vec[e] == 0) continue;
        tp.alternatives.push_back(e);
        tp.q.push_back(vec[e] / (1 - stage.gadget.p_sym));
      }

      std::vector<RuleLiteral> body = detail::trace_body(plan, st, tb, vars);
      // Fallback: assert the symmetric representative whenever indices collide.
      {
        std::vector<RuleLiteral> guard = body;
        RuleLiteral coll;
        coll.kind = RuleLiteral::Kind::Positive;
        coll.atom = RuleAtom{stage.gadget.collision, vars};
        guard.push_back(std::move(coll));
        guard.insert(guard.end(), diseqs.begin(), diseqs.end());
        for (std::size_t i = 0; i < st.new_pos.size(); ++i) {
          if (!((rep_bits >> i) & 1)) continue;
          const GroundAtom& atom = st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])];
          tp.rules.push_back(Rule{detail::part_atom(plan, atom, vars), guard});
        }
      }
      // Main alternatives at the elected permutation.
      {
        std::vector<RuleLiteral> guard = body;
        RuleLiteral mx;
        mx.kind = RuleLiteral::Kind::Positive;
        mx.atom = RuleAtom{stage.gadget.max_name, vars};
        guard.push_back(std::move(mx));
        guard.insert(guard.end(), diseqs.begin(), diseqs.end());
        std::vector<std::vector<RuleAtom>> heads;
        for (std::uint64_t ext : tp.alternatives) {
          std::vector<RuleAtom> alt;
          for (std::size_t i = 0; i < st.new_pos.size(); ++i) {
            if (!((ext >> i) & 1)) continue;
            const GroundAtom& atom = st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])];
            alt.push_back(detail::part_atom(plan, atom, vars));
          }
          heads.push_back(std::move(alt));
        }
        AdCompilation ad =
            compile_ad(tp.q, heads, guard, vars,
                       "sel" + std::to_string(s) + "_t" + std::to_string(theta_index) + "_",
                       names);
        tp.chain_names = ad.aux_names;
        tp.chain_weights = ad.aux_weights;
        for (std::size_t i = 0; i < ad.aux_names.size(); ++i) {
          free_rels.push_back(Relation{ad.aux_names[i], s});
          weights[ad.aux_names[i]] = ad.aux_weights[i];
        }
        tp.rules.insert(tp.rules.end(), ad.rules.begin(), ad.rules.end());
      }
      stage.thetas.push_back(std::move(tp));
      ++theta_index;
    }
    plan.stages.push_back(std::move(stage));
  }

  // Union rules: each target relation of arity >= 2 collects its parts.
  for (const Relation& r : params.sig->relations()) {
    if (r.arity == 1) continue;
    derived_rels.push_back(r);
    std::vector<std::string> vars = detail::tuple_vars(r.arity);
    for (int d = 1; d <= r.arity; ++d) {
      RuleLiteral lit;
      lit.kind = RuleLiteral::Kind::Positive;
      lit.atom = RuleAtom{
          plan.part_names[static_cast<std::size_t>(params.sig->index_of(r.name))]
                         [static_cast<std::size_t>(d - 1)],
          vars};
      plan.union_rules.push_back(Rule{RuleAtom{r.name, vars}, {lit}});
    }
  }

  // Assemble the program.
  RuleProgram program;
  program.free_sig = Signature(free_rels);
  program.derived_sig = Signature(derived_rels);
  program.rules = plan.stage1_rules;
  for (const StagePlan& stage : plan.stages) {
    program.rules.insert(program.rules.end(), stage.gadget.ord_rules.begin(),
                         stage.gadget.ord_rules.end());
    program.rules.insert(program.rules.end(), stage.gadget.gadget_rules.begin(),
                         stage.gadget.gadget_rules.end());
    for (const ThetaPlan& tp : stage.thetas)
      program.rules.insert(program.rules.end(), tp.rules.begin(), tp.rules.end());
  }
  program.rules.insert(program.rules.end(), plan.union_rules.begin(), plan.union_rules.end());

  // Stage annotations: longest dependency level.
  {
    std::map<std::string, int> level;
    bool changed = true;
    for (const Relation& r : program.derived_sig.relations()) level[r.name] = 1;
    while (changed) {
      changed = false;
      for (const Rule& r : program.rules) {
        int need = 1;
        for (const RuleLiteral& lit : r.body) {
          if (lit.kind == RuleLiteral::Kind::Diseq) continue;
          if (program.derived_sig.index_of(lit.atom.pred) >= 0)
            need = std::max(need, level[lit.atom.pred] + 1);
        }
        if (need > level[r.head.pred]) {
          level[r.head.pred] = need;
          changed = true;
        }
      }
    }
    program.stages = std::move(level);
  }

  for (const auto& [name, w] : weights)
    if (!(w > 0 && w < 1))
      throw ValidationError("internal: emitted weight for '" + name + "' (= " + to_string(w) +
                            ") outside (0,1)");

  plan.plp.weights.weights = std::move(weights);
  plan.plp.program = std::move(program);
  plan.plp.target = *params.sig;

  stratify(plan.plp.program);  // sanity: rejects if assembly broke stratification
  TupleLocalReport tl = check_tuple_local(plan.plp.program);
  if (!tl.ok)
    throw ValidationError("internal: synthesized program is not tuple-local: " +
                          tl.violations.front());
  return plan;
}

inline std::string format_plan_report(const SynthesisPlan& plan) {
  nlohmann::json j;
  j["p_min"] = to_string(plan.p_min);
  j["free_relations"] = nlohmann::json::array();
  for (const Relation& r : plan.plp.program.free_sig.relations())
    j["free_relations"].push_back(r.name + "/" + std::to_string(r.arity) + " w=" +
                                  to_string(plan.plp.weights.at(r.name)));
  j["derived_relations"] = nlohmann::json::array();
  for (const Relation& r : plan.plp.program.derived_sig.relations())
    j["derived_relations"].push_back(r.name + "/" + std::to_string(r.arity));
  j["stages"] = nlohmann::json::array();
  for (const StagePlan& stage : plan.stages) {
    nlohmann::json sj;
    sj["g"] = stage.g;
    sj["k"] = stage.gadget.k;
    sj["p_sym"] = to_string(stage.gadget.p_sym);
    sj["p_min"] = to_string(stage.p_min);
    sj["thetas"] = nlohmann::json::array();
    const SipParams::Stage& st = plan.params.stage(stage.g);
    for (const ThetaPlan& tp : stage.thetas) {
      nlohmann::json tj;
      tj["theta"] = format_trace(st.theta_space.to_trace(tp.theta_bits));
      tj["rep"] = format_trace(st.full_space.to_trace(st.full_bits(tp.theta_bits, tp.rep_bits)));
      tj["q"] = nlohmann::json::array();
      for (const Rational& r : tp.q) tj["q"].push_back(to_string(r));
      sj["thetas"].push_back(std::move(tj));
    }
    j["stages"].push_back(std::move(sj));
  }
  return j.dump(2) + "\n";
}

}  // namespace dsem

#include "dsem/synth_verify.hpp"
