#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace dsem;

namespace {

SignaturePtr pe_sig() { return make_signature({{"p", 1}, {"e", 2}}); }

WeightFn pe_weights(const char* wp, const char* we) {
  return WeightFn{{{"p", parse_rational(wp)}, {"e", parse_rational(we)}}};
}

}  // namespace

TEST_CASE("rational literals") {
  CHECK(to_string(parse_rational("7/40")) == "7/40");
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational("-1/2") == Rational(-1, 2));
  CHECK(parse_rational("6/4") == Rational(3, 2));  // lowest terms
  CHECK_THROWS_AS(parse_rational("0.5"), ParseError);
  CHECK_THROWS_AS(parse_rational("1/0"), ParseError);
  CHECK_THROWS_AS(parse_rational("x"), ParseError);
  CHECK_THROWS_AS(parse_rational(""), ParseError);
}

TEST_CASE("weight validation") {
  auto sig = make_signature({{"f", 1}});
  CHECK_THROWS_AS(validate_weights(*sig, WeightFn{{{"f", Rational(1)}}}), ValidationError);
  CHECK_NOTHROW(validate_weights(*sig, WeightFn{{{"f", Rational(1)}}}, /*permissive=*/true));
  CHECK_THROWS_AS(validate_weights(*sig, WeightFn{{}}), ValidationError);
}

TEST_CASE("free_prob") {
  auto f1 = make_signature({{"f", 1}});
  WeightFn half{{{"f", Rational(1, 2)}}};
  CHECK(free_prob(half, parse_world(f1, 1, "f(0)")) == Rational(1, 2));

  auto e = make_signature({{"e", 2}});
  WeightFn third{{{"e", Rational(1, 3)}}};
  CHECK(free_prob(third, parse_world(e, 2, "e(0,1)")) == Rational(8, 81));

  Rational total = 0;
  for (const World& w : enumerate_worlds(e, 2)) total += free_prob(third, w);
  CHECK(total == 1);
}

TEST_CASE("free_dist normalization, marginals, exchangeability") {
  auto sig = pe_sig();
  WeightFn w = pe_weights("2/7", "3/5");
  Dist d2 = free_dist(w, sig, 2);
  CHECK(d2.total() == 1);
  CHECK(marginalize_domain(d2, DomainMap::inclusion(1, 2)) == free_dist(w, sig, 1));
  for (const DomainMap& perm : all_permutations(2)) CHECK(marginalize_domain(d2, perm) == d2);
}

TEST_CASE("event probabilities") {
  auto sig = make_signature({{"e", 2}});
  WeightFn w{{{"e", Rational(1, 3)}}};
  Dist d = free_dist(w, sig, 2);
  CHECK(event_prob(d, enumerate_worlds(sig, 2)) == 1);
  Formula edge = parse_formula(*sig, 2, "e(0,1)");
  CHECK(event_prob(d, edge) == Rational(1, 3));
  CHECK(event_prob(d, edge, parse_formula(*sig, 2, "e(1,0)")) == Rational(1, 3));
  CHECK_THROWS_AS(event_prob(d, edge, parse_formula(*sig, 2, "e(0,0) & ~e(0,0)")),
                  ValidationError);
}

TEST_CASE("marginalize_domain") {
  auto sig = make_signature({{"e", 2}});
  WeightFn w{{{"e", Rational(1, 3)}}};

  Dist point{sig, 2, {}};
  World pw = parse_world(sig, 2, "e(0,1)");
  point.add(pw, Rational(1));
  DomainMap swap(2, 2, {1, 0});
  Dist pushed = marginalize_domain(point, swap);
  REQUIRE(pushed.probs.size() == 1);
  CHECK(pushed.at(apply_map(pw, swap)) == 1);

  Dist d3 = free_dist(w, sig, 3);
  CHECK(marginalize_domain(d3, DomainMap::inclusion(2, 3)) == free_dist(w, sig, 2));
  CHECK(marginalize_domain(d3, DomainMap::inclusion(2, 3)).total() == 1);

  // Pushforward functoriality.
  DomainMap m2 = DomainMap::inclusion(2, 3);
  DomainMap m1(1, 2, {1});
  CHECK(marginalize_domain(marginalize_domain(d3, m2), m1) ==
        marginalize_domain(d3, compose(m2, m1)));
}

TEST_CASE("marginalize_signature") {
  auto pq = make_signature({{"p", 1}, {"q", 1}});
  WeightFn w{{{"p", Rational(2, 5)}, {"q", Rational(1, 7)}}};
  Dist d = free_dist(w, pq, 2);
  CHECK(marginalize_signature(d, pq) == d);
  auto p_only = make_signature({{"p", 1}});
  Dist reduced = marginalize_signature(d, p_only);
  CHECK(reduced == free_dist(WeightFn{{{"p", Rational(2, 5)}}}, p_only, 2));
  CHECK(reduced.total() == 1);
}

TEST_CASE("check_projective") {
  auto sig = pe_sig();
  CHECK(check_projective(free_family(sig, pe_weights("1/2", "1/3")), 3).ok);

  auto e = make_signature({{"e", 2}});
  Family point_mass{e, [e](int n) {
    Dist d{e, n, {}};
    World w(e, n);
    if (n >= 2) w.assert_atom({0, {0, 1}}, true);
    d.add(std::move(w), Rational(1));
    return d;
  }};
  ProjectivityReport r = check_projective(point_mass, 2);
  CHECK_FALSE(r.ok);
  CHECK(r.detail.find("exchangeability") != std::string::npos);

  // Uniform linear orders at n=2 but a loop point mass at n=1: the marginal
  // of dist_at(2) is the empty world, not the loop.
  Family inconsistent{e, [e](int n) {
    Dist d{e, n, {}};
    if (n == 1) {
      d.add(parse_world(e, 1, "e(0,0)"), Rational(1));
    } else {
      d.add(parse_world(e, 2, "e(0,1)"), Rational(1, 2));
      d.add(parse_world(e, 2, "e(1,0)"), Rational(1, 2));
    }
    return d;
  }};
  ProjectivityReport r2 = check_projective(inconsistent, 2);
  CHECK_FALSE(r2.ok);
  CHECK(r2.detail.find("marginal consistency") != std::string::npos);
}

TEST_CASE("dist dump format") {
  auto sig = make_signature({{"f", 1}});
  WeightFn w{{{"f", Rational(1, 3)}}};
  Dist d = free_dist(w, sig, 1);
  CHECK(format_dist(d) == "{} ; 2/3\nf(0) ; 1/3\nTOTAL ; 1\n");
  CHECK(parse_dist(sig, 1, format_dist(d)) == d);
  CHECK_THROWS_AS(parse_dist(sig, 1, "{} ; 2/3\nTOTAL ; 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_dist(sig, 1, "{} ; 1\n"), ParseError);
}
