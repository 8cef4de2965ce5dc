#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace dsem;

TEST_CASE("program parsing and printing") {
  RuleProgram p = parse_program("#free f/1\n#derived q/1\nq(X) :- f(X).\n");
  CHECK(p.rules.size() == 1);
  CHECK(p.free_sig.size() == 1);
  CHECK(format_program(p) == "#free f/1\n#derived q/1\nq(X) :- f(X).\n");
  RuleProgram reparsed = parse_program(format_program(p));
  CHECK(format_program(reparsed) == format_program(p));

  RuleProgram chain = parse_program(helpers::slurp(helpers::fixture_path("chain.rules")));
  CHECK(chain.rules.size() == 2);
  CHECK(chain.stages.at("b") == 2);
  CHECK(format_program(parse_program(format_program(chain))) == format_program(chain));
}

TEST_CASE("program static errors") {
  CHECK_THROWS_WITH(parse_program("#free f/1\n#derived q/1\nf(X) :- q(X).\n"),
                    Catch::Matchers::ContainsSubstring("free relation"));
  CHECK_THROWS_WITH(parse_program("#free f/1\n#derived q/1\nq(X) :- r(X).\n"),
                    Catch::Matchers::ContainsSubstring("unknown predicate"));
  CHECK_THROWS_WITH(parse_program("#free f/1\n#derived q/2\nq(X) :- f(X).\n"),
                    Catch::Matchers::ContainsSubstring("arity mismatch"));
  CHECK_THROWS_WITH(parse_program("#free f/1\n#derived q/1\nq(X) :- f(0).\n"),
                    Catch::Matchers::ContainsSubstring("constant"));
  CHECK_THROWS_AS(parse_program("#free f/1\n#derived q/1\nq(X) :- f(X)\n"), ParseError);
  CHECK_THROWS_WITH(parse_program("#free f/1\n#derived f/1\nf(X) :- f(X).\n"),
                    Catch::Matchers::ContainsSubstring("declared both"));
  // Parse errors carry positions.
  try {
    parse_program("#free f/1\n#derived q/1\nq(X) :- , f(X).\n");
    FAIL("expected parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("stratification") {
  Stratification s =
      stratify(parse_program("#free f/1\n#derived q/1 r/1\nq(X) :- f(X).\nr(X) :- not q(X).\n"));
  CHECK(s.stratum_of.at("q") == 1);
  CHECK(s.stratum_of.at("r") == 2);

  Stratification pos = stratify(parse_program(
      "#free e/2\n#derived path/2\npath(X,Y) :- e(X,Y).\npath(X,Z) :- path(X,Y), e(Y,Z).\n"));
  CHECK(pos.stratum_of.at("path") == 1);

  CHECK_THROWS_WITH(stratify(parse_program("#free f/1\n#derived q/1\nq(X) :- not q(X).\n")),
                    Catch::Matchers::ContainsSubstring("q"));
  CHECK_THROWS_WITH(
      stratify(parse_program(
          "#free f/1\n#derived q/1 r/1\nq(X) :- not r(X).\nr(X) :- not q(X).\n")),
      Catch::Matchers::ContainsSubstring("q, r"));
}

TEST_CASE("apply_program") {
  RuleProgram p = parse_program("#free f/1\n#derived q/1\nq(X) :- f(X).\n");
  auto free_sig = std::make_shared<const Signature>(p.free_sig);
  CHECK(format_world(apply_program(p, parse_world(free_sig, 2, "f(0)"))) == "f(0) q(0)");

  RuleProgram neg = parse_program("#free f/1\n#derived q/1\nq(X) :- not f(X).\n");
  CHECK(format_world(apply_program(neg, parse_world(free_sig, 2, "f(0)"))) == "f(0) q(1)");

  RuleProgram diseq = parse_program("#free e/2\n#derived q/1\nq(X) :- e(X,Y), X != Y.\n");
  auto e_sig = std::make_shared<const Signature>(diseq.free_sig);
  CHECK(format_world(apply_program(diseq, parse_world(e_sig, 2, "e(0,0)"))) == "e(0,0)");
  CHECK(format_world(apply_program(diseq, parse_world(e_sig, 2, "e(0,1)"))) == "e(0,1) q(0)");
}

TEST_CASE("expansion and determinism") {
  RuleProgram chain = parse_program(helpers::slurp(helpers::fixture_path("chain.rules")));
  auto free_sig = std::make_shared<const Signature>(chain.free_sig);
  auto sub = std::make_shared<const Signature>(chain.free_sig);
  for (int n = 1; n <= 3; ++n) {
    GroundProgram ground(chain, n);
    for (const World& w : enumerate_worlds(free_sig, n)) {
      World out = ground.run(w);
      CHECK(reduct(out, sub) == w);
      CHECK(ground.run(w) == out);
    }
  }
}

TEST_CASE("equivariance under permutations") {
  std::vector<RuleProgram> programs;
  programs.push_back(parse_program(helpers::slurp(helpers::fixture_path("chain.rules"))));
  programs.push_back(
      parse_program("#free e/2\n#derived q/1 s/2\nq(X) :- e(X,Y), X != Y.\ns(X,Y) :- e(Y,X).\n"));
  for (const RuleProgram& p : programs) {
    auto free_sig = std::make_shared<const Signature>(p.free_sig);
    for (int n = 1; n <= 3; ++n) {
      GroundProgram ground(p, n);
      for (const World& w : enumerate_worlds(free_sig, n)) {
        World out = ground.run(w);
        for (const DomainMap& perm : all_permutations(n))
          CHECK(ground.run(apply_map(w, perm)) == apply_map(out, perm));
      }
    }
  }
}

TEST_CASE("negation-free programs match the naive bottom-up oracle") {
  RuleProgram p = parse_program(
      "#free e/2\n#derived path/2\npath(X,Y) :- e(X,Y).\npath(X,Z) :- path(X,Y), path(Y,Z).\n");
  auto free_sig = std::make_shared<const Signature>(p.free_sig);
  auto full_sig = std::make_shared<const Signature>(p.full_signature());
  // Oracle: saturate all rules with no stratum bookkeeping.
  auto oracle = [&](const World& input, int n) {
    World w(full_sig, n);
    for (const GroundAtom& a : input.true_atoms())
      w.assert_atom({full_sig->index_of(p.free_sig.relation(a.rel).name), a.args}, true);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
          if (w.holds({0, {x, y}}) && !w.holds({1, {x, y}})) {
            w.assert_atom({1, {x, y}}, true);
            changed = true;
          }
          for (int z = 0; z < n; ++z)
            if (w.holds({1, {x, y}}) && w.holds({1, {y, z}}) && !w.holds({1, {x, z}})) {
              w.assert_atom({1, {x, z}}, true);
              changed = true;
            }
        }
    }
    return w;
  };
  for (int n = 1; n <= 3; ++n) {
    GroundProgram ground(p, n);
    for (const World& w : enumerate_worlds(free_sig, n)) CHECK(ground.run(w) == oracle(w, n));
  }
}

TEST_CASE("check_tuple_local") {
  RuleProgram local = parse_program("#free f/1\n#derived q/1\n#stage q=1\nq(X) :- f(X).\n");
  CHECK(check_tuple_local(local).ok);

  RuleProgram existential =
      parse_program("#free e/2\n#derived q/1\n#stage q=1\nq(X) :- e(X,Y).\n");
  TupleLocalReport r = check_tuple_local(existential);
  CHECK_FALSE(r.ok);
  CHECK(r.violations.front().find("Y") != std::string::npos);

  RuleProgram unstaged = parse_program("#free f/1\n#derived q/1\nq(X) :- f(X).\n");
  CHECK_THROWS_WITH(check_tuple_local(unstaged),
                    Catch::Matchers::ContainsSubstring("missing stage annotation"));
  CHECK(check_tuple_local(unstaged, std::map<std::string, int>{{"q", 1}}).ok);

  // Same-stage derived dependency is flagged.
  RuleProgram flat = parse_program(
      "#free f/1\n#derived a/1 b/1\n#stage a=1 b=1\na(X) :- f(X).\nb(X) :- a(X).\n");
  CHECK_FALSE(check_tuple_local(flat).ok);
}
