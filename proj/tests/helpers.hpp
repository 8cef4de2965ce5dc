#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "dsem/dsem.hpp"

namespace helpers {

inline std::string fixture_path(const std::string& name) {
  return std::string(DSEM_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline dsem::SipParams coloured_params() {
  return dsem::parse_sip_params(slurp(fixture_path("coloured_graph.sip.json")));
}

inline dsem::SipParams unary_params() {
  return dsem::parse_sip_params(slurp(fixture_path("unary.sip.json")));
}

inline dsem::SipParams ternary_params() {
  return dsem::parse_sip_params(slurp(fixture_path("ternary.sip.json")));
}

// Uniform distribution over loop-free, exactly-one-direction-per-pair graphs.
inline dsem::Family tournament_family() {
  auto sig = dsem::make_signature({{"e", 2}});
  return dsem::Family{sig, [sig](int n) {
    dsem::Dist d{sig, n, {}};
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
    std::uint64_t total = std::uint64_t(1) << pairs.size();
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      dsem::World w(sig, n);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        auto [i, j] = pairs[k];
        if ((mask >> k) & 1)
          w.assert_atom({0, {i, j}}, true);
        else
          w.assert_atom({0, {j, i}}, true);
      }
      d.add(std::move(w), dsem::Rational(1, total));
    }
    return d;
  }};
}

// All unary atoms equal: all-true and all-false, each with probability 1/2.
inline dsem::Family mixture_family() {
  auto sig = dsem::make_signature({{"f", 1}});
  return dsem::Family{sig, [sig](int n) {
    dsem::Dist d{sig, n, {}};
    dsem::World none(sig, n), all(sig, n);
    for (int i = 0; i < n; ++i) all.assert_atom({0, {i}}, true);
    d.add(std::move(none), dsem::Rational(1, 2));
    d.add(std::move(all), dsem::Rational(1, 2));
    return d;
  }};
}

inline dsem::GeneralizedPlp make_plp(const std::string& program_text,
                                     std::map<std::string, std::string> weights,
                                     std::vector<std::string> target) {
  dsem::GeneralizedPlp plp;
  plp.program = dsem::parse_program(program_text);
  for (auto& [name, w] : weights) plp.weights.weights[name] = dsem::parse_rational(w);
  dsem::Signature full = plp.program.full_signature();
  std::vector<dsem::Relation> rels;
  for (const std::string& name : target) rels.push_back(full.relation(full.index_of(name)));
  plp.target = dsem::Signature(rels);
  dsem::validate_plp(plp);
  return plp;
}

// Projective sample programs used across suites; each is tuple-local.
inline std::vector<dsem::GeneralizedPlp> projective_fixture_plps() {
  std::vector<dsem::GeneralizedPlp> out;
  out.push_back(make_plp("#free f/1\n#derived q/1\n#stage q=1\nq(X) :- f(X).\n",
                         {{"f", "1/2"}}, {"q"}));
  out.push_back(make_plp("#free f/1\n#derived q/1\n#stage q=1\nq(X) :- not f(X).\n",
                         {{"f", "1/3"}}, {"q"}));
  out.push_back(make_plp(
      "#free e0/2\n#derived sym/2\n#stage sym=1\nsym(X,Y) :- e0(X,Y), e0(Y,X).\n",
      {{"e0", "1/3"}}, {"sym"}));
  out.push_back(make_plp(
      "#free f/1 e0/2\n#derived both/2\n#stage both=1\nboth(X,Y) :- f(X), f(Y), e0(X,Y).\n",
      {{"f", "1/2"}, {"e0", "1/3"}}, {"both"}));
  out.push_back(make_plp(
      "#free f/1 g/1\n#derived a/1 b/1\n#stage a=1 b=2\na(X) :- f(X).\nb(X) :- a(X), not g(X).\n",
      {{"f", "1/2"}, {"g", "1/3"}}, {"b"}));
  return out;
}

inline dsem::GeneralizedPlp nonprojective_plp() {
  return dsem::parse_plp(slurp(fixture_path("nonprojective.plp.json")));
}

}  // namespace helpers
