#pragma once

#include "dsem/synth.hpp"

namespace dsem {

struct VerifyReport {
  bool ok = true;
  std::string detail;
  std::uint64_t checked = 0;
};

namespace detail {

// Census of one stage's Ord gadget: run the gadget rules on every index
// assignment and record the collision count and where Max lands.
struct GadgetCensus {
  std::uint64_t assignments = 0;
  std::uint64_t collisions = 0;
  std::vector<std::uint64_t> max_at;  // per ordered tuple
  std::vector<std::vector<int>> tuples;
  bool ok = true;
  std::string detail;
};

inline GadgetCensus gadget_census(const OrdGadget& gadget, std::uint64_t budget) {
  int s = gadget.g + 1;
  GadgetCensus census;
  {
    std::vector<int> base(static_cast<std::size_t>(s));
    std::iota(base.begin(), base.end(), 0);
    std::vector<int> v = base;
    do {
      census.tuples.push_back(v);
    } while (std::next_permutation(v.begin(), v.end()));
  }
  std::size_t m = census.tuples.size();
  census.max_at.assign(m, 0);

  std::vector<Relation> free_rels, derived_rels;
  for (const std::string& name : gadget.ord_names) free_rels.push_back(Relation{name, s});
  derived_rels.push_back(Relation{gadget.coincide, s});
  derived_rels.push_back(Relation{gadget.collision, s});
  derived_rels.push_back(Relation{gadget.beaten, s});
  derived_rels.push_back(Relation{gadget.max_name, s});
  RuleProgram sub;
  sub.free_sig = Signature(free_rels);
  sub.derived_sig = Signature(derived_rels);
  sub.rules = gadget.gadget_rules;
  GroundProgram ground(sub, s);
  AtomSpace free_space(sub.free_sig, s);
  AtomSpace full_space(*ground.full_signature(), s);

  double combos_estimate = 1;
  for (std::size_t t = 0; t < m; ++t) combos_estimate *= gadget.k;
  if (combos_estimate > static_cast<double>(budget))
    throw BudgetError("gadget census too large", static_cast<std::uint64_t>(combos_estimate),
                      budget);

  // Precomputed atom indices: ord_index[t][j] is the free atom Ord_{j+1}(tuple_t).
  std::vector<std::vector<std::uint64_t>> ord_index(m);
  for (std::size_t t = 0; t < m; ++t)
    for (int j = 0; j < gadget.k; ++j)
      ord_index[t].push_back(free_space.index(GroundAtom{j, census.tuples[t]}));
  std::vector<std::uint64_t> coll_index, max_index;
  for (std::size_t t = 0; t < m; ++t) {
    coll_index.push_back(
        full_space.index(GroundAtom{ground.full_signature()->index_of(gadget.collision),
                                    census.tuples[t]}));
    max_index.push_back(full_space.index(
        GroundAtom{ground.full_signature()->index_of(gadget.max_name), census.tuples[t]}));
  }

  std::vector<int> assignment(m, 0);
  std::vector<std::uint64_t> bits(ground.block_count());
  while (true) {
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t t = 0; t < m; ++t) {
      std::uint64_t idx = ord_index[t][static_cast<std::size_t>(assignment[t])];
      bits[idx >> 6] |= std::uint64_t(1) << (idx & 63);
    }
    ground.run_bits(bits);
    auto test = [&bits](std::uint64_t i) { return ((bits[i >> 6] >> (i & 63)) & 1) != 0; };
    bool coll = test(coll_index[0]);
    for (std::size_t t = 1; t < m && census.ok; ++t)
      if (test(coll_index[t]) != coll) {
        census.ok = false;
        census.detail = "collision flag is not permutation invariant";
      }
    int max_count = 0;
    std::size_t max_tuple = 0;
    for (std::size_t t = 0; t < m; ++t)
      if (test(max_index[t])) {
        ++max_count;
        max_tuple = t;
      }
    if (coll && max_count != 0) {
      census.ok = false;
      census.detail = "Max elected despite a collision";
    }
    if (!coll && max_count != 1) {
      census.ok = false;
      census.detail = "collision-free assignment elected " + std::to_string(max_count) +
                      " permutations instead of exactly one";
    }
    if (!census.ok) return census;
    ++census.assignments;
    if (coll)
      ++census.collisions;
    else
      ++census.max_at[max_tuple];

    std::size_t pos = 0;
    while (pos < m) {
      if (++assignment[pos] < gadget.k) break;
      assignment[pos] = 0;
      ++pos;
    }
    if (pos == m) break;
  }
  return census;
}

inline std::vector<int> inverse_perm(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace detail

// Local verification: per stage and positive trace, enumerate exactly the
// free choices over one tuple (Ord indices via the gadget census, chain atoms
// directly), run the stage rules, and require (a) every run realizes the
// single extension its decoded choice prescribes and (b) the accumulated
// conditional over extensions equals the input parameters exactly.
inline VerifyReport verify_synthesis_local(const SynthesisPlan& plan, const SipParams& params,
                                           std::uint64_t budget = kDefaultWorldBudget) {
  VerifyReport report;
  auto fail = [&](const std::string& msg) {
    report.ok = false;
    report.detail = msg;
    return report;
  };

  // Stage 1: the chain over one element must reproduce the one-trace law.
  {
    std::vector<Relation> free_rels, derived_rels;
    for (const std::string& name : plan.stage1_chain_names)
      free_rels.push_back(Relation{name, 1});
    for (std::size_t rel = 0; rel < plan.part_names.size(); ++rel) {
      int arity = params.sig->relation(static_cast<int>(rel)).arity;
      derived_rels.push_back(Relation{plan.part_names[rel][0], arity});
    }
    RuleProgram sub;
    sub.free_sig = Signature(free_rels);
    sub.derived_sig = Signature(derived_rels);
    sub.rules = plan.stage1_rules;
    GroundProgram ground(sub, 1);
    AtomSpace full_space(*ground.full_signature(), 1);

    std::size_t chains = plan.stage1_chain_names.size();
    std::vector<Rational> observed(params.one_probs.size(), Rational(0));
    std::vector<std::uint64_t> bits(ground.block_count());
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << chains); ++mask) {
      std::fill(bits.begin(), bits.end(), 0);
      Rational weight = 1;
      for (std::size_t i = 0; i < chains; ++i) {
        if ((mask >> i) & 1) {
          bits[i >> 6] |= std::uint64_t(1) << (i & 63);
          weight *= plan.stage1_chain_weights[i];
        } else {
          weight *= Rational(1 - plan.stage1_chain_weights[i]);
        }
      }
      ground.run_bits(bits);
      std::uint64_t realized = 0;
      for (std::size_t i = 0; i < params.one_space.atoms.size(); ++i) {
        const GroundAtom& a = params.one_space.atoms[i];
        GroundAtom part{sub.derived_sig.index_of(plan.part_names[static_cast<std::size_t>(a.rel)][0]) +
                            sub.free_sig.size(),
                        a.args};
        std::uint64_t idx = full_space.index(part);
        if ((bits[idx >> 6] >> (idx & 63)) & 1) realized |= std::uint64_t(1) << i;
      }
      std::size_t selected = plan.stage1_alternatives.size() - 1;
      for (std::size_t i = 0; i < chains; ++i)
        if ((mask >> i) & 1) {
          selected = i;
          break;
        }
      std::uint64_t expected = plan.stage1_alternatives[selected];
      ++report.checked;
      if (realized != expected)
        return fail("stage 1: chain assignment realizes a different one-trace than decoded");
      observed[realized] += weight;
    }
    for (std::size_t tb = 0; tb < params.one_probs.size(); ++tb)
      if (observed[tb] != params.one_probs[tb])
        return fail("stage 1: one-trace [" +
                    format_trace(params.one_space.to_trace(tb)) + "] has probability " +
                    to_string(observed[tb]) + ", expected " + to_string(params.one_probs[tb]));
  }

  for (const StagePlan& stage : plan.stages) {
    int g = stage.g;
    int s = g + 1;
    const SipParams::Stage& st = params.stage(g);

    detail::GadgetCensus census = detail::gadget_census(stage.gadget, budget);
    if (!census.ok) return fail("stage g=" + std::to_string(g) + ": " + census.detail);
    Rational observed_p_sym(BigInt(census.collisions), BigInt(census.assignments));
    if (observed_p_sym != stage.gadget.p_sym)
      return fail("stage g=" + std::to_string(g) + ": census collision rate " +
                  to_string(observed_p_sym) + " differs from p_sym " +
                  to_string(stage.gadget.p_sym));
    std::size_t m = census.tuples.size();

    // Sub-program for the theta rules: gadget verdicts and lower parts are
    // inputs, level-s parts are outputs.
    std::vector<Relation> free_rels, derived_rels;
    for (std::size_t rel = 0; rel < plan.part_names.size(); ++rel) {
      int arity = params.sig->relation(static_cast<int>(rel)).arity;
      for (int d = 1; d <= std::min(arity, g); ++d)
        free_rels.push_back(Relation{plan.part_names[rel][static_cast<std::size_t>(d - 1)], arity});
    }
    free_rels.push_back(Relation{stage.gadget.collision, s});
    free_rels.push_back(Relation{stage.gadget.max_name, s});
    for (const ThetaPlan& tp : stage.thetas)
      for (const std::string& name : tp.chain_names) free_rels.push_back(Relation{name, s});
    for (std::size_t rel = 0; rel < plan.part_names.size(); ++rel) {
      int arity = params.sig->relation(static_cast<int>(rel)).arity;
      if (arity >= s)
        derived_rels.push_back(Relation{plan.part_names[rel][static_cast<std::size_t>(s - 1)], arity});
    }
    RuleProgram sub;
    sub.free_sig = Signature(free_rels);
    sub.derived_sig = Signature(derived_rels);
    for (const ThetaPlan& tp : stage.thetas)
      sub.rules.insert(sub.rules.end(), tp.rules.begin(), tp.rules.end());
    GroundProgram ground(sub, s);
    AtomSpace free_space(sub.free_sig, s);
    AtomSpace full_space(*ground.full_signature(), s);

    auto part_index = [&](const GroundAtom& target_atom) {
      int d = distinct_arg_count(target_atom);
      const std::string& part =
          plan.part_names[static_cast<std::size_t>(target_atom.rel)][static_cast<std::size_t>(d - 1)];
      int rel = ground.full_signature()->index_of(part);
      return full_space.index(GroundAtom{rel, target_atom.args});
    };

    for (const ThetaPlan& tp : stage.thetas) {
      const std::vector<Rational>& expected_vec = params.lookup(g, tp.theta_bits);
      std::vector<Rational> observed(expected_vec.size(), Rational(0));

      std::vector<std::uint64_t> base(ground.block_count(), 0);
      for (std::size_t i = 0; i < st.theta_space.atoms.size(); ++i) {
        if (!((tp.theta_bits >> i) & 1)) continue;
        std::uint64_t idx = part_index(st.theta_space.atoms[i]);
        base[idx >> 6] |= std::uint64_t(1) << (idx & 63);
      }

      struct Outcome {
        Rational prob;
        bool collision;
        std::size_t tuple;  // elected permutation when not a collision
      };
      std::vector<Outcome> outcomes;
      outcomes.push_back(
          {Rational(BigInt(census.collisions), BigInt(census.assignments)), true, 0});
      for (std::size_t t = 0; t < m; ++t)
        outcomes.push_back(
            {Rational(BigInt(census.max_at[t]), BigInt(census.assignments)), false, t});

      for (const Outcome& outcome : outcomes) {
        if (outcome.prob == 0) continue;
        std::vector<std::uint64_t> input = base;
        const ThetaPlan* elected = nullptr;
        std::vector<int> binding;
        if (outcome.collision) {
          int coll_rel = ground.full_signature()->index_of(stage.gadget.collision);
          for (std::size_t t = 0; t < m; ++t) {
            std::uint64_t idx = full_space.index(GroundAtom{coll_rel, census.tuples[t]});
            input[idx >> 6] |= std::uint64_t(1) << (idx & 63);
          }
        } else {
          binding = census.tuples[outcome.tuple];
          int max_rel = ground.full_signature()->index_of(stage.gadget.max_name);
          std::uint64_t idx = full_space.index(GroundAtom{max_rel, binding});
          input[idx >> 6] |= std::uint64_t(1) << (idx & 63);
          std::uint64_t matching = st.theta_space.transport(tp.theta_bits, binding);
          for (const ThetaPlan& cand : stage.thetas)
            if (cand.theta_bits == matching) elected = &cand;
          if (!elected)
            return fail("stage g=" + std::to_string(g) +
                        ": no plan for an isomorphic positive trace");
        }
        std::size_t chains = outcome.collision ? 0 : elected->chain_names.size();
        std::vector<std::uint64_t> chain_atoms;
        for (std::size_t c = 0; c < chains; ++c) {
          int rel = sub.free_sig.index_of(elected->chain_names[c]);
          chain_atoms.push_back(free_space.index(GroundAtom{rel, binding}));
        }
        std::vector<std::uint64_t> bits(ground.block_count());
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << chains); ++mask) {
          bits = input;
          Rational weight = outcome.prob;
          for (std::size_t c = 0; c < chains; ++c) {
            if ((mask >> c) & 1) {
              bits[chain_atoms[c] >> 6] |= std::uint64_t(1) << (chain_atoms[c] & 63);
              weight *= elected->chain_weights[c];
            } else {
              weight *= Rational(1 - elected->chain_weights[c]);
            }
          }
          ground.run_bits(bits);
          std::uint64_t realized = 0;
          for (std::size_t i = 0; i < st.new_pos.size(); ++i) {
            const GroundAtom& atom =
                st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])];
            std::uint64_t idx = part_index(atom);
            if ((bits[idx >> 6] >> (idx & 63)) & 1) realized |= std::uint64_t(1) << i;
          }
          std::uint64_t expected;
          if (outcome.collision) {
            expected = tp.rep_bits;
          } else {
            std::size_t selected = elected->alternatives.size() - 1;
            for (std::size_t c = 0; c < chains; ++c)
              if ((mask >> c) & 1) {
                selected = c;
                break;
              }
            std::uint64_t ext = elected->alternatives[selected];
            std::uint64_t moved = st.full_space.transport(
                st.full_bits(elected->theta_bits, ext), detail::inverse_perm(binding));
            expected = st.new_part(moved);
          }
          ++report.checked;
          if (realized != expected)
            return fail("stage g=" + std::to_string(g) + ", theta [" +
                        format_trace(st.theta_space.to_trace(tp.theta_bits)) +
                        "]: conflicting assertions; realized extension [" +
                        format_trace(st.full_space.to_trace(st.full_bits(tp.theta_bits, realized))) +
                        "] differs from the decoded choice");
          observed[realized] += weight;
        }
      }
      for (std::size_t e = 0; e < expected_vec.size(); ++e)
        if (observed[e] != expected_vec[e])
          return fail(
              "stage g=" + std::to_string(g) + ", theta [" +
              format_trace(st.theta_space.to_trace(tp.theta_bits)) + "]: extension [" +
              format_trace(st.full_space.to_trace(st.full_bits(tp.theta_bits, e))) +
              "] has conditional probability " + to_string(observed[e]) + ", expected " +
              to_string(expected_vec[e]));
    }
  }
  return report;
}

// Global verification: the factored target marginal of the synthesized
// program must equal the constructed distribution world by world.
inline VerifyReport verify_synthesis_global(const SynthesisPlan& plan, const SipParams& params,
                                            int n, std::uint64_t budget = kDefaultWorldBudget) {
  VerifyReport report;
  FactoredReduct factored(plan.plp);
  Dist actual = factored.dist(n, budget);
  Dist expected = sip_dist(params, n, budget);
  std::set<World> support;
  for (const auto& [w, p] : actual.probs) support.insert(w);
  for (const auto& [w, p] : expected.probs) support.insert(w);
  for (const World& w : support) {
    ++report.checked;
    if (actual.at(w) != expected.at(w)) {
      report.ok = false;
      report.detail = "world [" + format_world(w) + "] has probability " +
                      to_string(actual.at(w)) + " under the synthesized program but " +
                      to_string(expected.at(w)) + " under the construction";
      return report;
    }
  }
  if (actual.total() != 1) {
    report.ok = false;
    report.detail = "synthesized reduct mass is " + to_string(actual.total());
  }
  return report;
}

}  // namespace dsem
