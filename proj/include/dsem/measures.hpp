#pragma once

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsem/rational.hpp"
#include "dsem/relational.hpp"

namespace dsem {

// Per-relation atom weights. Strict mode enforces the open interval (0,1);
// the permissive mode (closed [0,1]) exists for internal synthesis bookkeeping,
// where degenerate weights are eliminated before a program is emitted.
struct WeightFn {
  std::map<std::string, Rational> weights;

  const Rational& at(const std::string& rel) const {
    auto it = weights.find(rel);
    if (it == weights.end()) throw ValidationError("missing weight for relation '" + rel + "'");
    return it->second;
  }
};

inline void validate_weights(const Signature& sig, const WeightFn& w, bool permissive = false) {
  for (const Relation& r : sig.relations()) {
    const Rational& p = w.at(r.name);
    bool ok = permissive ? (p >= 0 && p <= 1) : (p > 0 && p < 1);
    if (!ok)
      throw ValidationError("weight for '" + r.name + "' = " + to_string(p) +
                            (permissive ? " outside [0,1]" : " outside the open interval (0,1)"));
  }
}

// Exact distribution over the worlds of one domain size. Only worlds with
// nonzero probability are stored.
struct Dist {
  SignaturePtr sig;
  int n = 0;
  std::map<World, Rational> probs;

  Rational total() const {
    Rational t = 0;
    for (const auto& [w, p] : probs) t += p;
    return t;
  }
  Rational at(const World& w) const {
    auto it = probs.find(w);
    return it == probs.end() ? Rational(0) : it->second;
  }
  void add(World w, Rational p) {
    if (p == 0) return;
    if (p < 0) throw ValidationError("negative probability");
    auto [it, inserted] = probs.emplace(std::move(w), p);
    if (!inserted) it->second += p;
  }

  friend bool operator==(const Dist& a, const Dist& b) {
    return a.n == b.n && a.probs == b.probs && (a.sig == b.sig || *a.sig == *b.sig);
  }
};

// A size-indexed generator of distributions over one signature.
struct Family {
  SignaturePtr sig;
  std::function<Dist(int)> dist_at;
};

// Product of w(R) over true atoms and (1 - w(R)) over false atoms.
inline Rational free_prob(const WeightFn& w, const World& world) {
  Rational p = 1;
  AtomSpace space(world.signature(), world.domain_size());
  for (std::uint64_t i = 0; i < space.count(); ++i) {
    const Rational& wr = w.at(world.signature().relation(space.atom(i).rel).name);
    p *= world.test(i) ? wr : Rational(1 - wr);
  }
  return p;
}

inline Dist free_dist(const WeightFn& w, SignaturePtr sig, int n,
                      std::uint64_t budget = kDefaultWorldBudget) {
  validate_weights(*sig, w, /*permissive=*/true);
  Dist d{sig, n, {}};
  for (World& world : enumerate_worlds(sig, n, budget)) {
    Rational p = free_prob(w, world);
    d.add(std::move(world), std::move(p));
  }
  return d;
}

inline Family free_family(SignaturePtr sig, WeightFn w,
                          std::uint64_t budget = kDefaultWorldBudget) {
  validate_weights(*sig, w);
  return Family{sig, [sig, w, budget](int n) { return free_dist(w, sig, n, budget); }};
}

inline Rational event_prob(const Dist& d, const std::vector<World>& event) {
  Rational p = 0;
  for (const World& w : event) p += d.at(w);
  return p;
}

inline Rational event_prob(const Dist& d, const Formula& f) {
  Rational p = 0;
  for (const auto& [w, pw] : d.probs)
    if (eval_formula(f, w)) p += pw;
  return p;
}

namespace detail {

inline Rational conditional(Rational joint, Rational given, const std::string& what) {
  if (given == 0) throw ValidationError("undefined conditional: " + what + " has probability 0");
  return joint / given;
}

}  // namespace detail

inline Rational event_prob(const Dist& d, const Formula& event, const Formula& given) {
  Rational joint = 0, base = 0;
  for (const auto& [w, pw] : d.probs) {
    if (!eval_formula(given, w)) continue;
    base += pw;
    if (eval_formula(event, w)) joint += pw;
  }
  return detail::conditional(joint, base, "conditioning event");
}

inline Rational event_prob(const Dist& d, const std::vector<World>& event,
                           const std::vector<World>& given) {
  Rational joint = 0, base = 0;
  for (const World& w : given) {
    Rational pw = d.at(w);
    if (pw == 0) continue;
    base += pw;
    if (std::find(event.begin(), event.end(), w) != event.end()) joint += pw;
  }
  return detail::conditional(joint, base, "conditioning event");
}

// Pushforward along the restriction induced by m (small world's probability is
// the mass of its preimages).
inline Dist marginalize_domain(const Dist& d, const DomainMap& m) {
  if (m.target_size != d.n)
    throw ValidationError("marginalize_domain: map target does not match distribution domain");
  Dist out{d.sig, m.source_size, {}};
  for (const auto& [w, p] : d.probs) out.add(apply_map(w, m), p);
  return out;
}

// Pushforward along the signature reduct.
inline Dist marginalize_signature(const Dist& d, SignaturePtr sub) {
  Dist out{sub, d.n, {}};
  for (const auto& [w, p] : d.probs) out.add(reduct(w, sub), p);
  return out;
}

struct ProjectivityReport {
  bool ok = true;
  std::string detail;  // first counterexample, empty on success
  int max_size = 0;
};

// Verifies exchangeability at every n <= N and marginal consistency along
// every inclusion {0..m-1} into {0..n-1}. Inclusions and permutations
// generate all injections between the canonical domains, so this covers the
// full functoriality requirement with quadratically many checks.
inline ProjectivityReport check_projective(const Family& f, int N,
                                           std::uint64_t budget = kDefaultWorldBudget) {
  ProjectivityReport report;
  report.max_size = N;
  std::vector<Dist> dists;
  dists.reserve(static_cast<std::size_t>(N));
  for (int n = 1; n <= N; ++n) dists.push_back(f.dist_at(n));
  (void)budget;
  for (int n = 1; n <= N; ++n) {
    const Dist& d = dists[static_cast<std::size_t>(n - 1)];
    for (const DomainMap& perm : all_permutations(n)) {
      Dist pushed = marginalize_domain(d, perm);
      if (!(pushed == d)) {
        for (const auto& [w, p] : d.probs) {
          Rational q = pushed.at(w);
          if (q != p) {
            std::ostringstream os;
            os << "exchangeability fails at n=" << n << ": world [" << format_world(w)
               << "] has probability " << to_string(p) << " but " << to_string(q)
               << " after permuting";
            report.ok = false;
            report.detail = os.str();
            return report;
          }
        }
      }
    }
    for (int m = 1; m < n; ++m) {
      Dist pushed = marginalize_domain(d, DomainMap::inclusion(m, n));
      const Dist& expected = dists[static_cast<std::size_t>(m - 1)];
      if (!(pushed == expected)) {
        std::set<World> support;
        for (const auto& [w, p] : pushed.probs) support.insert(w);
        for (const auto& [w, p] : expected.probs) support.insert(w);
        for (const World& w : support) {
          if (pushed.at(w) != expected.at(w)) {
            std::ostringstream os;
            os << "marginal consistency fails from n=" << n << " to m=" << m << ": world ["
               << format_world(w) << "] has marginal " << to_string(pushed.at(w))
               << " but dist_at(" << m << ") gives " << to_string(expected.at(w));
            report.ok = false;
            report.detail = os.str();
            return report;
          }
        }
      }
    }
  }
  return report;
}

// Dump format: one "<world> ; <rational>" line per support world in bitmask
// order, terminated by a TOTAL line.
inline std::string format_dist(const Dist& d) {
  std::ostringstream os;
  for (const auto& [w, p] : d.probs) os << format_world(w) << " ; " << to_string(p) << "\n";
  os << "TOTAL ; " << to_string(d.total()) << "\n";
  return os.str();
}

inline Dist parse_dist(SignaturePtr sig, int n, const std::string& text) {
  Dist d{sig, n, {}};
  std::istringstream in(text);
  std::string line;
  bool saw_total = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto sep = line.rfind(" ; ");
    if (sep == std::string::npos) throw ParseError("missing ' ; ' separator in dist line");
    std::string lhs = line.substr(0, sep);
    Rational p = parse_rational(line.substr(sep + 3));
    if (lhs == "TOTAL") {
      if (p != d.total())
        throw ValidationError("dist dump TOTAL " + to_string(p) + " does not match mass " +
                              to_string(d.total()));
      saw_total = true;
      continue;
    }
    d.add(parse_world(sig, n, lhs), p);
  }
  if (!saw_total) throw ParseError("dist dump is missing the TOTAL line");
  return d;
}

}  // namespace dsem
