#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace dsem;

namespace {

// Exhaustive chain-semantics oracle: probability that alternative i fires.
std::vector<Rational> chain_alternative_probs(const AdCompilation& ad, std::size_t count) {
  std::vector<Rational> probs(count, Rational(0));
  std::size_t chains = ad.aux_names.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << chains); ++mask) {
    Rational weight = 1;
    for (std::size_t i = 0; i < chains; ++i)
      weight *= ((mask >> i) & 1) ? ad.aux_weights[i] : Rational(1 - ad.aux_weights[i]);
    std::size_t selected = ad.survivors.size() - 1;
    for (std::size_t i = 0; i < chains; ++i)
      if ((mask >> i) & 1) {
        selected = i;
        break;
      }
    probs[ad.survivors[selected]] += weight;
  }
  return probs;
}

AdCompilation compile_vec(const std::vector<const char*>& probs) {
  std::vector<Rational> p;
  std::vector<std::vector<RuleAtom>> heads;
  for (const char* s : probs) {
    p.push_back(parse_rational(s));
    heads.push_back({RuleAtom{"h" + std::to_string(heads.size()), {"X0"}}});
  }
  detail::NameGen names;
  return compile_ad(p, heads, {}, {"X0"}, "r_", names);
}

}  // namespace

TEST_CASE("annotated-disjunction compilation") {
  AdCompilation a = compile_vec({"1/2", "1/3", "1/6"});
  REQUIRE(a.aux_weights.size() == 2);
  CHECK(a.aux_weights[0] == Rational(1, 2));
  CHECK(a.aux_weights[1] == Rational(2, 3));
  std::vector<Rational> probs = chain_alternative_probs(a, 3);
  CHECK(probs[0] == Rational(1, 2));
  CHECK(probs[1] == Rational(1, 3));
  CHECK(probs[2] == Rational(1, 6));

  AdCompilation b = compile_vec({"3/10", "7/10"});
  REQUIRE(b.aux_weights.size() == 1);
  CHECK(b.aux_weights[0] == Rational(3, 10));
  REQUIRE(b.rules.size() == 2);
  CHECK(b.rules[1].body.size() == 1);
  CHECK(b.rules[1].body[0].kind == RuleLiteral::Kind::Negative);
  std::vector<Rational> bp = chain_alternative_probs(b, 2);
  CHECK(bp[0] == Rational(3, 10));
  CHECK(bp[1] == Rational(7, 10));

  // Degenerate vector: a certain alternative, an impossible one.
  AdCompilation c = compile_vec({"1", "0"});
  CHECK(c.aux_weights.empty());
  REQUIRE(c.rules.size() == 1);
  CHECK(c.rules[0].body.empty());
  CHECK(c.survivors == std::vector<std::size_t>{0});

  // Zero alternatives in the middle are skipped entirely.
  AdCompilation d = compile_vec({"1/4", "0", "3/4"});
  std::vector<Rational> dp = chain_alternative_probs(d, 3);
  CHECK(dp[0] == Rational(1, 4));
  CHECK(dp[1] == 0);
  CHECK(dp[2] == Rational(3, 4));

  CHECK_THROWS_WITH(compile_vec({"1/2", "1/3"}), Catch::Matchers::ContainsSubstring("sum"));
}

TEST_CASE("collision probability formula against brute force") {
  for (int m : {2, 6}) {
    for (int k = m; k <= 6; ++k) {
      // Count assignments of m draws over k indices with no repeats.
      std::uint64_t total = 1, distinct_count = 0;
      for (int i = 0; i < m; ++i) total *= static_cast<std::uint64_t>(k);
      std::vector<int> draw(static_cast<std::size_t>(m), 0);
      for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        std::set<int> seen;
        for (int i = 0; i < m; ++i) {
          seen.insert(static_cast<int>(c % static_cast<std::uint64_t>(k)));
          c /= static_cast<std::uint64_t>(k);
        }
        if (static_cast<int>(seen.size()) == m) ++distinct_count;
      }
      CHECK(p_sym_formula(k, m) == Rational(1) - Rational(distinct_count, total));
    }
  }
}

TEST_CASE("ord gadget sizing and census") {
  detail::NameGen names;
  OrdGadget g2 = build_ord_gadget(1, Rational(7, 10), names);
  CHECK(g2.k == 2);
  CHECK(g2.p_sym == Rational(1, 2));

  detail::NameGen names2;
  OrdGadget g4 = build_ord_gadget(1, Rational(3, 10), names2);
  CHECK(g4.k == 4);
  CHECK(g4.p_sym == Rational(1, 4));

  // Census runs the emitted rules over every index assignment; it asserts
  // internally that Max is elected exactly once iff there is no collision.
  for (const OrdGadget* g : {&g2, &g4}) {
    detail::GadgetCensus census = detail::gadget_census(*g, kDefaultWorldBudget);
    REQUIRE(census.ok);
    CHECK(Rational(BigInt(census.collisions), BigInt(census.assignments)) == g->p_sym);
    for (std::uint64_t at : census.max_at) CHECK(at == (census.assignments - census.collisions) / 2);
  }
}

TEST_CASE("choose_symmetric_reps") {
  SipParams p = helpers::coloured_params();
  RepChoice choice = choose_symmetric_reps(p);
  CHECK(choice.p_min == Rational(7, 10));
  REQUIRE(choice.reps.size() == 1);
  // Every positive trace picks the both-edges extension (bits over e(0,1), e(1,0)).
  CHECK(choice.reps[0].size() == 4);
  for (const auto& [tb, rep] : choice.reps[0]) CHECK(rep == 0b11);

  SipParams fitted = fit_params(helpers::tournament_family());
  try {
    choose_symmetric_reps(fitted);
    FAIL("expected a synthesis error");
  } catch (const SynthesisError& e) {
    CHECK(e.witness.g == 1);
    CHECK(format_trace(e.witness.theta) == "{}");
    CHECK(e.witness.evidence.size() == 2);
  }
}

TEST_CASE("synthesize unary parameters") {
  SipParams p = helpers::unary_params();
  SynthesisPlan plan = synthesize(p);
  CHECK(plan.plp.program.free_sig.size() == 1);
  CHECK(plan.plp.program.rules.size() == 1);
  CHECK(plan.plp.weights.weights.begin()->second == Rational(1, 3));
  CHECK(stratify(plan.plp.program).stratum_of.size() >= 1);
  CHECK(check_tuple_local(plan.plp.program).ok);

  CHECK(verify_synthesis_local(plan, p).ok);
  for (int n = 1; n <= 3; ++n) CHECK(verify_synthesis_global(plan, p, n).ok);
  CHECK(check_commuting_square(plan.plp, 3).ok);
  CHECK(check_trace_functoriality(plan.plp, 3, 1).ok);
}

TEST_CASE("synthesize the coloured-graph parameters") {
  SipParams p = helpers::coloured_params();
  SynthesisPlan plan = synthesize(p);
  REQUIRE(plan.stages.size() == 1);
  const StagePlan& stage = plan.stages[0];
  CHECK(stage.gadget.k == 2);
  CHECK(stage.gadget.p_sym == Rational(1, 2));
  CHECK(stage.p_min == Rational(7, 10));

  bool found_both_p = false;
  for (const ThetaPlan& tp : stage.thetas) {
    if (tp.theta_bits == 0b0011) {  // p(0), p(1) true; loops false
      found_both_p = true;
      REQUIRE(tp.q.size() == 2);
      CHECK(tp.q[0] == Rational(2, 5));
      CHECK(tp.q[1] == Rational(3, 5));
    } else {
      REQUIRE(tp.q.size() == 2);
      CHECK(tp.q[0] == Rational(4, 5));
      CHECK(tp.q[1] == Rational(1, 5));
    }
  }
  CHECK(found_both_p);

  for (const auto& [name, w] : plan.plp.weights.weights) {
    CHECK(w > 0);
    CHECK(w < 1);
  }
  CHECK(check_tuple_local(plan.plp.program).ok);
  CHECK(verify_synthesis_local(plan, p).ok);
  CHECK(verify_synthesis_global(plan, p, 2).ok);
}

TEST_CASE("synthesize a ternary sparse family") {
  SipParams p = helpers::ternary_params();
  SynthesisPlan plan = synthesize(p);
  REQUIRE(plan.stages.size() == 2);
  CHECK(plan.stages[0].gadget.k == 2);
  CHECK(plan.stages[1].gadget.k == 6);
  CHECK(plan.stages[1].gadget.p_sym == Rational(319, 324));
  CHECK(check_tuple_local(plan.plp.program).ok);
  VerifyReport local = verify_synthesis_local(plan, p);
  CHECK(local.ok);
  CHECK(local.checked > 0);
}

TEST_CASE("verification detects broken plans") {
  SipParams p = helpers::coloured_params();
  SynthesisPlan plan = synthesize(p);

  // Tampering with a chosen representative breaks the conflict check.
  SynthesisPlan broken = plan;
  broken.stages[0].thetas[0].rep_bits = 0b01;
  CHECK_FALSE(verify_synthesis_local(broken, p).ok);

  // Verifying against different parameters fails with a world witness.
  SipParams other = helpers::coloured_params();
  auto& table = other.stage(1).table;
  std::vector<Rational> vec = table.at(0b0011);
  std::swap(vec[0b00], vec[0b11]);
  table[0b0011] = vec;
  VerifyReport global = verify_synthesis_global(plan, other, 2);
  CHECK_FALSE(global.ok);
  CHECK(global.detail.find("probability") != std::string::npos);
}

TEST_CASE("synthesized programs survive the gplp checkers") {
  SipParams p = helpers::coloured_params();
  SynthesisPlan plan = synthesize(p);
  CHECK(check_trace_functoriality(plan.plp, 2, 1).ok);
  // The reduct family is the constructed family; it keeps its properties.
  Family reduct = reduct_family(plan.plp);
  CHECK_FALSE(check_essential_asymmetry(reduct).has_value());
  CHECK(check_projective(reduct, 2).ok);

  // Plan report carries the bookkeeping.
  std::string report = format_plan_report(plan);
  CHECK(report.find("\"k\": 2") != std::string::npos);
  CHECK(report.find("1/2") != std::string::npos);
}
