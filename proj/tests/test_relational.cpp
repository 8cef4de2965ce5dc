#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace dsem;

namespace {

SignaturePtr pe_sig() { return make_signature({{"p", 1}, {"e", 2}}); }
SignaturePtr e_sig() { return make_signature({{"e", 2}}); }

}  // namespace

TEST_CASE("signature invariants") {
  CHECK_THROWS_AS(Signature({{"p", 1}, {"p", 2}}), ValidationError);
  CHECK_THROWS_AS(Signature({{"p", 0}}), ValidationError);
  Signature sig({{"p", 1}, {"e", 2}});
  CHECK(sig.index_of("e") == 1);
  CHECK(sig.index_of("q") == -1);
  CHECK(sig.max_arity() == 2);
  CHECK(sig.contains(Signature({{"e", 2}})));
  CHECK_FALSE(sig.contains(Signature({{"e", 3}})));
}

TEST_CASE("enumerate_worlds counts and budget") {
  CHECK(enumerate_worlds(make_signature({{"f", 1}}), 1).size() == 2);
  CHECK(enumerate_worlds(e_sig(), 2).size() == 16);
  CHECK(enumerate_worlds(pe_sig(), 3).size() == 4096);  // 2^(3+9)
  try {
    enumerate_worlds(e_sig(), 2, 8);
    FAIL("expected budget error");
  } catch (const BudgetError& e) {
    CHECK(std::string(e.what()).find("4 ground atoms") != std::string::npos);
  }
}

TEST_CASE("world parse and print round-trip") {
  auto sig = pe_sig();
  World w = parse_world(sig, 3, "p(0) p(2) e(0,2)");
  CHECK(format_world(w) == "p(0) p(2) e(0,2)");
  CHECK(format_world(parse_world(sig, 2, "{}")) == "{}");
  CHECK_THROWS_AS(parse_world(sig, 2, "p(5)"), ParseError);
  CHECK_THROWS_AS(parse_world(sig, 2, "e(0)"), ParseError);
  CHECK_THROWS_AS(parse_world(sig, 2, "z(0)"), ParseError);
}

TEST_CASE("apply_map restriction, identity and permutation") {
  auto sig = pe_sig();
  World w = parse_world(sig, 3, "p(0) p(2) e(0,2)");
  World restricted = apply_map(w, DomainMap(2, 3, {0, 2}));
  CHECK(format_world(restricted) == "p(0) p(1) e(0,1)");
  CHECK(apply_map(w, DomainMap::identity(3)) == w);
  World edge = parse_world(e_sig(), 2, "e(0,1)");
  CHECK(format_world(apply_map(edge, DomainMap(2, 2, {1, 0}))) == "e(1,0)");
  CHECK_THROWS_AS(apply_map(edge, DomainMap(1, 3, {0})), ValidationError);
}

TEST_CASE("apply_map functoriality over all composable injections") {
  auto sig = pe_sig();
  for (int c = 1; c <= 3; ++c) {
    std::vector<World> worlds = enumerate_worlds(sig, c);
    for (int b = 1; b <= c; ++b) {
      for (int a = 1; a <= b; ++a) {
        for (const DomainMap& m2 : all_injections(b, c)) {
          for (const DomainMap& m1 : all_injections(a, b)) {
            DomainMap both = compose(m2, m1);
            for (std::size_t i = 0; i < worlds.size(); i += 7) {  // stride keeps it quick
              const World& w = worlds[i];
              CHECK(apply_map(apply_map(w, m2), m1) == apply_map(w, both));
            }
          }
        }
      }
    }
  }
}

TEST_CASE("reduct") {
  auto sig = pe_sig();
  World w = parse_world(sig, 2, "p(0) e(0,1)");
  CHECK(format_world(reduct(w, make_signature({{"p", 1}}))) == "p(0)");
  CHECK(reduct(w, sig) == w);
  World empty_reduct = reduct(w, make_signature({}));
  CHECK(empty_reduct.domain_size() == 2);
  CHECK(format_world(empty_reduct) == "{}");
  CHECK_THROWS_AS(reduct(w, make_signature({{"q", 1}})), ValidationError);
}

TEST_CASE("g_trace assignment") {
  auto sig = e_sig();
  World w = parse_world(sig, 3, "e(0,0) e(0,1)");
  Trace t = g_trace(w, 1);
  CHECK(t.assignment.size() == 3);  // exactly the loops
  CHECK(t.assignment.at(GroundAtom{0, {0, 0}}) == true);
  CHECK(t.assignment.at(GroundAtom{0, {1, 1}}) == false);
  CHECK(t.assignment.at(GroundAtom{0, {2, 2}}) == false);
  CHECK(t.assignment.count(GroundAtom{0, {0, 1}}) == 0);

  // g at the maximal arity determines the world uniquely.
  Trace full = g_trace(w, 2);
  CHECK(trace_to_world(full, 3) == w);

  World w2 = parse_world(sig, 3, "e(0,0)");
  CHECK(g_trace(w2, 1) == g_trace(parse_world(sig, 3, "e(0,0) e(0,1)"), 1));
}

TEST_CASE("trace monotonicity") {
  auto sig = pe_sig();
  for (const World& w : enumerate_worlds(sig, 2)) {
    Trace t1 = g_trace(w, 1), t2 = g_trace(w, 2);
    for (const auto& [atom, value] : t1.assignment) CHECK(t2.assignment.at(atom) == value);
  }
}

TEST_CASE("trace_models") {
  auto sig = e_sig();
  World w = parse_world(sig, 2, "e(0,1)");
  auto singleton = trace_models(g_trace(w, 2), 2);
  REQUIRE(singleton.size() == 1);
  CHECK(singleton[0] == w);

  Trace empty{sig, {}, 1, {}};
  CHECK(trace_models(empty, 2).size() == 16);

  Trace loopless = g_trace(parse_world(sig, 2, "{}"), 1);
  CHECK(trace_models(loopless, 2).size() == 4);  // two free off-diagonal atoms
}

TEST_CASE("trace duality against double enumeration (n = 2)") {
  auto sig = pe_sig();
  std::vector<World> worlds = enumerate_worlds(sig, 2);
  for (const World& w : worlds) {
    for (int g = 1; g <= 2; ++g) {
      std::vector<World> expected;
      for (const World& other : worlds) {
        bool match = true;
        for (int a = 0; a < 2 && match; ++a)
          match = apply_map(other, DomainMap(1, 2, {a})) == apply_map(w, DomainMap(1, 2, {a}));
        if (g >= 2 && match) match = other == w;
        if (match) expected.push_back(other);
      }
      CHECK(trace_models(g_trace(w, g), 2) == expected);
    }
  }
}

TEST_CASE("canonicalize_trace") {
  auto sig = e_sig();
  World w = parse_world(sig, 6, "e(2,5) e(5,5)");
  Trace t = trace_on(w, {2, 5}, 2);
  Trace canon = canonicalize_trace(t, {2, 5});
  CHECK(canon.scope == std::vector<int>{0, 1});
  CHECK(canon.assignment.at(GroundAtom{0, {0, 1}}) == true);
  CHECK(canon.assignment.at(GroundAtom{0, {1, 1}}) == true);
  CHECK(canon.assignment.at(GroundAtom{0, {1, 0}}) == false);

  Trace already = g_trace(parse_world(sig, 2, "e(0,1)"), 2);
  CHECK(canonicalize_trace(already, {0, 1}) == already);
  // Transporting along the order and back recovers the original values.
  Trace swapped = canonicalize_trace(t, {5, 2});
  CHECK(swapped.assignment.at(GroundAtom{0, {1, 0}}) == true);
  CHECK(swapped.assignment.at(GroundAtom{0, {0, 0}}) == true);
  CHECK_THROWS_AS(canonicalize_trace(t, {2, 4}), ValidationError);
}

TEST_CASE("isomorphic witnesses and canonical-form agreement") {
  auto sig = e_sig();
  World a = parse_world(sig, 2, "e(0,1)");
  World b = parse_world(sig, 2, "e(1,0)");
  auto m = isomorphic(a, b);
  REQUIRE(m.has_value());
  CHECK(apply_map(a, *m) == b);
  CHECK_FALSE(isomorphic(a, parse_world(sig, 2, "e(0,1) e(1,0)")).has_value());
  CHECK(isomorphic(a, a).has_value());

  // Reflexivity gives the identity on singletons; symmetry inverts witnesses.
  auto back = isomorphic(b, a);
  REQUIRE(back.has_value());
  CHECK(apply_map(b, *back) == a);

  auto canon = [&](const World& w) {
    World best = w;
    for (const DomainMap& perm : all_permutations(w.domain_size())) {
      World moved = apply_map(w, perm);
      if (moved < best) best = moved;
    }
    return best;
  };
  std::vector<World> worlds = enumerate_worlds(sig, 2);
  for (const World& x : worlds)
    for (const World& y : worlds)
      CHECK(isomorphic(x, y).has_value() == (canon(x) == canon(y)));
  // n = 3: permuted copies are always isomorphic.
  for (const World& x : enumerate_worlds(sig, 3)) {
    for (const DomainMap& perm : all_permutations(3)) {
      CHECK(isomorphic(x, apply_map(x, perm)).has_value());
    }
  }
}

TEST_CASE("symmetric_extension") {
  auto sig = pe_sig();
  World no_atoms = parse_world(sig, 2, "{}");
  Trace theta = g_trace(no_atoms, 1);

  Trace both = g_trace(parse_world(sig, 2, "e(0,1) e(1,0)"), 2);
  CHECK(symmetric_extension(theta, both));

  Trace one = g_trace(parse_world(sig, 2, "e(0,1)"), 2);
  CHECK_FALSE(symmetric_extension(theta, one));

  // A distinguishing theta has a trivial stabilizer: every extension is symmetric.
  Trace distinguishing = g_trace(parse_world(sig, 2, "p(0)"), 1);
  Trace ext = g_trace(parse_world(sig, 2, "p(0) e(0,1)"), 2);
  CHECK(symmetric_extension(distinguishing, ext));

  CHECK_THROWS_AS(symmetric_extension(theta, g_trace(parse_world(sig, 2, "p(0)"), 2)),
                  ValidationError);
}

TEST_CASE("formula parsing, printing, evaluation") {
  auto sig = pe_sig();
  Formula f = parse_formula(*sig, 2, "e(0,1) & ~e(1,0)");
  CHECK(f.kind() == Formula::Kind::And);
  CHECK(format_formula(*sig, f) == "e(0,1) & ~e(1,0)");
  CHECK(parse_formula(*sig, 2, format_formula(*sig, f)) == f);

  Formula g = parse_formula(*sig, 2, "p(0) | (p(1) & e(0,1))");
  CHECK(g.kind() == Formula::Kind::Or);
  CHECK(parse_formula(*sig, 2, format_formula(*sig, g)) == g);

  CHECK_THROWS_AS(parse_formula(*make_signature({{"e", 2}}), 2, "e(0)"), ParseError);
  CHECK_THROWS_AS(parse_formula(*sig, 2, "q(0)"), ParseError);
  CHECK_THROWS_AS(parse_formula(*sig, 2, "p(0) &"), ParseError);
  CHECK_THROWS_AS(parse_formula(*sig, 2, "p(3)"), ParseError);

  World w = parse_world(sig, 2, "e(0,1)");
  CHECK(eval_formula(parse_formula(*sig, 2, "e(0,1)"), w));
  CHECK_FALSE(eval_formula(parse_formula(*sig, 2, "~e(0,1)"), w));
  CHECK_FALSE(eval_formula(parse_formula(*sig, 2, "p(0) | p(1)"), parse_world(sig, 2, "{}")));
}

TEST_CASE("mentions") {
  auto sig = make_signature({{"p", 1}, {"e", 2}, {"r", 3}});
  Formula f = parse_formula(*sig, 3, "e(0,1) & p(2)");
  CHECK(mentions(f, {0, 1}));
  CHECK_FALSE(mentions(f, {1, 2}));
  CHECK(mentions(parse_formula(*sig, 3, "r(0,1,2)"), {0, 2}));
}

TEST_CASE("semantic mentions") {
  auto sig = e_sig();
  Formula f = parse_formula(*sig, 2, "e(0,1)");
  CHECK(semantic_mentions(formula_models(f, sig, 2), {0, 1}, sig, 2));
  CHECK_FALSE(semantic_mentions(enumerate_worlds(sig, 2), {0, 1}, sig, 2));

  auto pe = pe_sig();
  Formula p0 = parse_formula(*pe, 2, "p(0)");
  CHECK_FALSE(semantic_mentions(formula_models(p0, pe, 2), {0, 1}, pe, 2));
}

TEST_CASE("mention soundness: syntactic non-mention implies semantic non-mention") {
  auto sig = pe_sig();
  // Exhaustive at n=2 over conjunctions and disjunctions of up to 3 literals.
  auto run_at = [&](int n, int max_atoms) {
    AtomSpace space(*sig, n);
    int K = static_cast<int>(space.count());
    std::vector<GroundAtom> atoms;
    for (int i = 0; i < K; ++i) atoms.push_back(space.atom(i));
    std::vector<std::set<int>> subsets;
    for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << n); ++mask) {
      std::set<int> s;
      for (int v = 0; v < n; ++v)
        if ((mask >> v) & 1) s.insert(v);
      subsets.push_back(std::move(s));
    }
    std::vector<int> pick;
    auto rec = [&](auto&& self, int next, int want) -> void {
      if (static_cast<int>(pick.size()) == want) {
        std::uint64_t pols = std::uint64_t(1) << want;
        for (std::uint64_t pol = 0; pol < pols; ++pol) {
          for (bool conjunctive : {true, false}) {
            Formula f = Formula::atom(atoms[pick[0]]);
            if (!((pol >> 0) & 1)) f = Formula::negate(std::move(f));
            for (int i = 1; i < want; ++i) {
              Formula lit = Formula::atom(atoms[pick[i]]);
              if (!((pol >> i) & 1)) lit = Formula::negate(std::move(lit));
              f = conjunctive ? Formula::conj(std::move(f), std::move(lit))
                              : Formula::disj(std::move(f), std::move(lit));
            }
            for (const std::set<int>& elems : subsets) {
              if (mentions(f, elems)) continue;
              CHECK_FALSE(semantic_mentions(formula_models(f, sig, n), elems, sig, n));
            }
            if (want == 1) break;  // conjunction and disjunction coincide
          }
        }
        return;
      }
      for (int a = next; a < K; ++a) {
        pick.push_back(a);
        self(self, a + 1, want);
        pick.pop_back();
      }
    };
    for (int want = 1; want <= max_atoms; ++want) rec(rec, 0, want);
  };
  run_at(2, 3);
  run_at(3, 2);
}

TEST_CASE("mention_joint_set filter") {
  auto sig = e_sig();
  Formula a = parse_formula(*sig, 4, "e(0,1)");
  Formula b = parse_formula(*sig, 4, "e(1,0)");
  Formula c = parse_formula(*sig, 4, "e(1,2)");
  CHECK(mention_joint_set(a, b, 2));
  CHECK_FALSE(mention_joint_set(a, c, 2));
  CHECK(mention_joint_set(a, c, 1));
}
