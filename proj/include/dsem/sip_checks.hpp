#pragma once

#include <optional>
#include <random>
#include <thread>

#include "dsem/sip.hpp"

namespace dsem {

// Reads the construction parameters off a family: one-trace probabilities
// from size 1 and conditional extension probabilities from sizes 2..r.
// The result is a fit, not a proof; certification is reconstruct-and-compare.
inline SipParams fit_params(const Family& f, std::uint64_t budget = kDefaultWorldBudget) {
  SipParams p = SipParams::empty(f.sig);
  p.allow_fill = true;
  int r = p.arity;
  std::vector<Dist> dists;
  for (int n = 1; n <= r; ++n) dists.push_back(f.dist_at(n));
  for (int n = 1; n <= r; ++n) {
    const Dist& d = dists[static_cast<std::size_t>(n - 1)];
    for (const DomainMap& perm : all_permutations(n))
      if (!(marginalize_domain(d, perm) == d))
        throw ValidationError("fit_params requires an exchangeable family (fails at n=" +
                              std::to_string(n) + ")");
  }
  for (const auto& [w, pw] : dists[0].probs)
    p.one_probs[detail::one_trace_bits_at(p, w, 0)] += pw;

  for (int g = 1; g < r; ++g) {
    SipParams::Stage& st = p.stage(g);
    const Dist& d = dists[static_cast<std::size_t>(g)];
    std::vector<int> identity(static_cast<std::size_t>(g + 1));
    std::iota(identity.begin(), identity.end(), 0);
    std::map<std::uint64_t, Rational> mass;
    std::map<std::uint64_t, std::map<std::uint64_t, Rational>> ext_mass;
    for (const auto& [w, pw] : d.probs) {
      std::uint64_t tb = st.theta_space.read(w, identity);
      std::uint64_t nb = st.new_part(st.full_space.read(w, identity));
      mass[tb] += pw;
      ext_mass[tb][nb] += pw;
    }
    for (const auto& [tb, total] : mass) {
      std::vector<Rational> vec(std::size_t(1) << st.new_count(), Rational(0));
      for (const auto& [nb, m] : ext_mass[tb]) vec[nb] = m / total;
      st.table[tb] = std::move(vec);
    }
  }
  (void)budget;
  ParamsReport report = validate_params(p);
  if (!report.ok)
    throw ValidationError("inconsistent conditionals across isomorphic traces: " +
                          report.violations.front());
  return p;
}

struct IndependenceReport {
  bool ok = true;
  std::string detail;
  std::uint64_t checked = 0;  // verified (phi, psi, theta) triples
};

namespace detail {

struct EventRows {
  std::vector<std::uint64_t> bits;
  std::vector<std::uint64_t> num64;
  std::vector<BigInt> numbig;
  BigInt denom = 1;
  bool small = true;

  explicit EventRows(const Dist& d) {
    AtomSpace space(*d.sig, d.n);
    if (space.count() > 63)
      throw BudgetError("independence check needs at most 63 atoms", space.count(), 63);
    for (const auto& [w, p] : d.probs) {
      (void)p;
      bits.push_back(w.blocks().empty() ? 0 : w.blocks()[0]);
    }
    for (const auto& [w, p] : d.probs) {
      (void)w;
      BigInt den = denominator(p);
      denom = denom / gcd(denom, den) * den;
    }
    small = denom < (BigInt(1) << 62);
    for (const auto& [w, p] : d.probs) {
      (void)w;
      BigInt num = numerator(p) * (denom / denominator(p));
      if (small)
        num64.push_back(static_cast<std::uint64_t>(num));
      else
        numbig.push_back(num);
    }
  }
};

struct MaskEvent {
  std::uint64_t pos = 0, neg = 0;
  std::vector<int> atom_ids;
  std::uint64_t elem_mask = 0;  // union of argument elements
  std::string text;
};

inline bool satisfies(std::uint64_t row, const MaskEvent& e) {
  return (row & e.pos) == e.pos && (row & e.neg) == 0;
}

struct ThetaEvent {
  std::uint64_t pos = 0, neg = 0;
  std::vector<std::uint32_t> rows;
  std::uint64_t sum64 = 0;
  BigInt sumbig = 0;
  std::string text;
};

// All (phi, psi, theta) independence checks over literal-conjunction events.
// `levels` lists the g values to cover; SIP uses 0..r-1

// and IP just {0}.
inline IndependenceReport independence_core(const Dist& d, int max_literals,
                                            const std::vector<int>& levels, int jobs) {
  if (max_literals < 1) throw ValidationError("max_literals must be >= 1");
  IndependenceReport report;
  EventRows rows(d);
  AtomSpace space(*d.sig, d.n);
  int K = static_cast<int>(space.count());

  std::vector<GroundAtom> atoms;
  std::vector<std::uint64_t> atom_elems(static_cast<std::size_t>(K), 0);
  for (int i = 0; i < K; ++i) {
    atoms.push_back(space.atom(static_cast<std::uint64_t>(i)));
    for (int arg : atoms.back().args)
      atom_elems[static_cast<std::size_t>(i)] |= std::uint64_t(1) << arg;
  }
  // Pairwise shared-argument counts drive the joint-mention filter.
  std::vector<std::uint8_t> shared(static_cast<std::size_t>(K * K), 0);
  for (int x = 0; x < K; ++x)
    for (int y = 0; y < K; ++y)
      shared[static_cast<std::size_t>(x * K + y)] = static_cast<std::uint8_t>(
          __builtin_popcountll(atom_elems[static_cast<std::size_t>(x)] &
                               atom_elems[static_cast<std::size_t>(y)]));

  auto literal_text = [&](int atom, bool positive) {
    return (positive ? "" : "~") + format_atom(*d.sig, atoms[static_cast<std::size_t>(atom)]);
  };
  std::vector<MaskEvent> events;
  for (int a = 0; a < K; ++a) {
    for (bool pos : {true, false}) {
      MaskEvent e;
      (pos ? e.pos : e.neg) |= std::uint64_t(1) << a;
      e.atom_ids = {a};
      e.elem_mask = atom_elems[static_cast<std::size_t>(a)];
      e.text = literal_text(a, pos);
      events.push_back(std::move(e));
    }
  }
  if (max_literals >= 2) {
    for (int a = 0; a < K; ++a)
      for (int b = a + 1; b < K; ++b)
        for (bool pa : {true, false})
          for (bool pb : {true, false}) {
            MaskEvent e;
            (pa ? e.pos : e.neg) |= std::uint64_t(1) << a;
            (pb ? e.pos : e.neg) |= std::uint64_t(1) << b;
            e.atom_ids = {a, b};
            e.elem_mask = atom_elems[static_cast<std::size_t>(a)] |
                          atom_elems[static_cast<std::size_t>(b)];
            e.text = literal_text(a, pa) + " & " + literal_text(b, pb);
            events.push_back(std::move(e));
          }
  }
  if (max_literals > 2)
    throw ValidationError("independence checks support at most 2 literals per event");

  // Theta pools per (g, shared element set).
  std::map<std::pair<int, std::uint64_t>, std::vector<ThetaEvent>> theta_pools;
  auto thetas_for = [&](int g, std::uint64_t elems) -> const std::vector<ThetaEvent>& {
    auto key = std::make_pair(g, elems);
    auto it = theta_pools.find(key);
    if (it != theta_pools.end()) return it->second;
    std::vector<int> pool_atoms;
    for (int a = 0; a < K; ++a) {
      if ((atom_elems[static_cast<std::size_t>(a)] & ~elems) != 0) continue;
      if (distinct_arg_count(atoms[static_cast<std::size_t>(a)]) > g) continue;
      pool_atoms.push_back(a);
    }
    if (pool_atoms.size() > 63)
      throw BudgetError("conditioning trace space too large", pool_atoms.size(), 63);
    // Only traces realized in the support matter: everything else has
    // probability zero and is skipped by the check anyway.
    std::vector<ThetaEvent> pool;
    std::map<std::uint64_t, std::size_t> keys;
    for (std::uint32_t r = 0; r < rows.bits.size(); ++r) {
      std::uint64_t t = 0;
      for (std::size_t i = 0; i < pool_atoms.size(); ++i)
        if ((rows.bits[r] >> pool_atoms[i]) & 1) t |= std::uint64_t(1) << i;
      auto [it, inserted] = keys.emplace(t, pool.size());
      if (inserted) {
        ThetaEvent th;
        std::string text;
        for (std::size_t i = 0; i < pool_atoms.size(); ++i) {
          bool value = (t >> i) & 1;
          (value ? th.pos : th.neg) |= std::uint64_t(1) << pool_atoms[i];
          if (!text.empty()) text += " & ";
          text += literal_text(pool_atoms[i], value);
        }
        th.text = text.empty() ? "<empty trace>" : text;
        pool.push_back(std::move(th));
      }
      ThetaEvent& th = pool[it->second];
      th.rows.push_back(r);
      if (rows.small)
        th.sum64 += rows.num64[r];
      else
        th.sumbig += rows.numbig[r];
    }
    return theta_pools.emplace(key, std::move(pool)).first->second;
  };
  // Precompute the pools serially so the parallel phase is read-only.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < events.size(); ++i)
    for (std::size_t j = i; j < events.size(); ++j) pairs.push_back({i, j});
  for (const auto& [i, j] : pairs)
    for (int g : levels) {
      bool joint = false;
      for (int x : events[i].atom_ids)
        for (int y : events[j].atom_ids)
          if (shared[static_cast<std::size_t>(x * K + y)] >= g + 1) joint = true;
      if (!joint) (void)thetas_for(g, events[i].elem_mask & events[j].elem_mask);
    }

  struct Slice {
    std::uint64_t checked = 0;
    std::size_t violation_pair = SIZE_MAX;
    std::string detail;
  };
  auto run_slice = [&](std::size_t begin, std::size_t end, Slice& out) {
    for (std::size_t pi = begin; pi < end; ++pi) {
      const MaskEvent& phi = events[pairs[pi].first];
      const MaskEvent& psi = events[pairs[pi].second];
      for (int g : levels) {
        bool joint = false;
        for (int x : phi.atom_ids) {
          for (int y : psi.atom_ids)
            if (shared[static_cast<std::size_t>(x * K + y)] >= g + 1) {
              joint = true;
              break;
            }
          if (joint) break;
        }
        if (joint) continue;
        const std::vector<ThetaEvent>& pool =
            theta_pools.at({g, phi.elem_mask & psi.elem_mask});
        for (const ThetaEvent& th : pool) {
          bool positive = rows.small ? th.sum64 > 0 : th.sumbig > 0;
          if (!positive) continue;
          ++out.checked;
          bool violated = false;
          std::string values;
          if (rows.small) {
            std::uint64_t s_phi = 0, s_psi = 0, s_both = 0;
            for (std::uint32_t r : th.rows) {
              std::uint64_t row = rows.bits[r];
              bool a = satisfies(row, phi), b = satisfies(row, psi);
              if (a) s_phi += rows.num64[r];
              if (b) s_psi += rows.num64[r];
              if (a && b) s_both += rows.num64[r];
            }
            violated = static_cast<unsigned __int128>(s_both) * th.sum64 !=
                       static_cast<unsigned __int128>(s_phi) * s_psi;
            if (violated) {
              Rational D(rows.denom);
              values = "P(phi&psi&theta)=" + to_string(Rational(BigInt(s_both)) / D) +
                       ", P(theta)=" + to_string(Rational(BigInt(th.sum64)) / D) +
                       ", P(phi&theta)=" + to_string(Rational(BigInt(s_phi)) / D) +
                       ", P(psi&theta)=" + to_string(Rational(BigInt(s_psi)) / D) +
                       "; products " +
                       to_string(Rational(BigInt(s_both) * BigInt(th.sum64)) / (D * D)) +
                       " vs " + to_string(Rational(BigInt(s_phi) * BigInt(s_psi)) / (D * D));
            }
          } else {
            BigInt s_phi = 0, s_psi = 0, s_both = 0;
            for (std::uint32_t r : th.rows) {
              std::uint64_t row = rows.bits[r];
              bool a = satisfies(row, phi), b = satisfies(row, psi);
              if (a) s_phi += rows.numbig[r];
              if (b) s_psi += rows.numbig[r];
              if (a && b) s_both += rows.numbig[r];
            }
            violated = s_both * th.sumbig != s_phi * s_psi;
            if (violated) {
              Rational D(rows.denom);
              values = "P(phi&psi&theta)=" + to_string(Rational(s_both) / D) +
                       ", P(theta)=" + to_string(Rational(th.sumbig) / D) +
                       ", P(phi&theta)=" + to_string(Rational(s_phi) / D) +
                       ", P(psi&theta)=" + to_string(Rational(s_psi) / D) + "; products " +
                       to_string(Rational(s_both * th.sumbig) / (D * D)) + " vs " +
                       to_string(Rational(s_phi * s_psi) / (D * D));
            }
          }
          if (violated && pi < out.violation_pair) {
            out.violation_pair = pi;
            out.detail = "independence fails at g=" + std::to_string(g) + ": phi = [" + phi.text +
                         "], psi = [" + psi.text + "], theta = [" + th.text + "]; " + values;
          }
          if (violated) break;
        }
        if (out.violation_pair == pi) break;
      }
    }
  };

  int workers = std::max(1, jobs);
  std::vector<Slice> slices(static_cast<std::size_t>(workers));
  if (workers == 1) {
    run_slice(0, pairs.size(), slices[0]);
  } else {
    std::vector<std::thread> threads;
    std::size_t chunk = (pairs.size() + static_cast<std::size_t>(workers) - 1) /
                        static_cast<std::size_t>(workers);
    for (int t = 0; t < workers; ++t) {
      std::size_t begin = std::min(pairs.size(), static_cast<std::size_t>(t) * chunk);
      std::size_t end = std::min(pairs.size(), begin + chunk);
      threads.emplace_back(run_slice, begin, end, std::ref(slices[static_cast<std::size_t>(t)]));
    }
    for (std::thread& t : threads) t.join();
  }
  std::size_t best = SIZE_MAX;
  for (const Slice& s : slices) {
    report.checked += s.checked;
    if (s.violation_pair < best) {
      best = s.violation_pair;
      report.ok = false;
      report.detail = s.detail;
    }
  }
  return report;
}

}  // namespace detail

// Conditional independence of events that mention no joint (g+1)-set, given
// any positive trace of their shared elements, for every g below the maximal
// arity. All equalities are exact.
inline IndependenceReport check_sip_direct(const Family& f, int n, int max_literals,
                                           std::uint64_t budget = kDefaultWorldBudget,
                                           int jobs = 1) {
  (void)budget;
  std::vector<int> levels;
  for (int g = 0; g < f.sig->max_arity(); ++g) levels.push_back(g);
  return detail::independence_core(f.dist_at(n), max_literals, levels, jobs);
}

// Plain independence of events sharing no element.
inline IndependenceReport check_ip(const Family& f, int n, int max_literals,
                                   std::uint64_t budget = kDefaultWorldBudget, int jobs = 1) {
  (void)budget;
  return detail::independence_core(f.dist_at(n), max_literals, {0}, jobs);
}

// A positive g-trace all of whose positive-probability extensions fail to be
// symmetric; the obstruction to representing a family as a reduct.
struct AsymmetryWitness {
  int g = 0;
  Trace theta;
  std::vector<Trace> evidence;  // positive extensions, none symmetric
};

inline std::string format_witness(const AsymmetryWitness& w) {
  std::ostringstream os;
  os << "essentially asymmetric at g=" << w.g << ": theta [" << format_trace(w.theta) << "] has "
     << w.evidence.size() << " positive extension(s), none symmetric:";
  for (const Trace& t : w.evidence) os << " [" << format_trace(t) << "]";
  return os.str();
}

inline std::optional<AsymmetryWitness> check_essential_asymmetry(
    const Family& f, std::uint64_t budget = kDefaultWorldBudget) {
  (void)budget;
  int r = f.sig->max_arity();
  for (int g = 1; g < r; ++g) {
    TraceSpace theta_space = TraceSpace::make(f.sig, g + 1, g);
    TraceSpace full_space = TraceSpace::make(f.sig, g + 1, g + 1);
    Dist d = f.dist_at(g + 1);
    std::vector<int> identity(static_cast<std::size_t>(g + 1));
    std::iota(identity.begin(), identity.end(), 0);
    std::map<std::uint64_t, std::vector<std::uint64_t>> extensions;
    for (const auto& [w, pw] : d.probs) {
      (void)pw;
      extensions[theta_space.read(w, identity)].push_back(full_space.read(w, identity));
    }
    for (const auto& [tb, exts] : extensions) {
      Trace theta = theta_space.to_trace(tb);
      bool any_symmetric = false;
      for (std::uint64_t fb : exts)
        if (symmetric_extension(theta, full_space.to_trace(fb))) {
          any_symmetric = true;
          break;
        }
      if (!any_symmetric) {
        AsymmetryWitness witness;
        witness.g = g;
        witness.theta = theta;
        for (std::uint64_t fb : exts) witness.evidence.push_back(full_space.to_trace(fb));
        return witness;
      }
    }
  }
  return std::nullopt;
}

inline std::optional<AsymmetryWitness> check_essential_asymmetry(
    const SipParams& p, std::uint64_t budget = kDefaultWorldBudget) {
  for (int g = 1; g < p.arity; ++g) {
    const SipParams::Stage& st = p.stage(g);
    for (std::uint64_t tb : positive_thetas(p, g, budget)) {
      Trace theta = st.theta_space.to_trace(tb);
      const std::vector<Rational>& vec = p.lookup(g, tb);
      bool any_symmetric = false;
      std::vector<Trace> positive;
      for (std::size_t e = 0; e < vec.size(); ++e) {
        if (vec[e] == 0) continue;
        Trace gamma = st.full_space.to_trace(st.full_bits(tb, static_cast<std::uint64_t>(e)));
        positive.push_back(gamma);
        if (symmetric_extension(theta, gamma)) {
          any_symmetric = true;
          break;
        }
      }
      if (!any_symmetric) {
        AsymmetryWitness witness;
        witness.g = g;
        witness.theta = theta;
        witness.evidence = std::move(positive);
        return witness;
      }
    }
  }
  return std::nullopt;
}

// Stagewise sampling; deterministic in the seed. The drawn index error from
// mapping 64 random bits into [0,1) is far below anything a statistical test
// at desk scale can see (exact semantics never go through this path).
inline World sample_world(const SipParams& p, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](const std::vector<Rational>& probs) -> std::size_t {
    Rational x(BigInt(rng()), BigInt(1) << 64);
    Rational cum = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] == 0) continue;
      cum += probs[i];
      if (x < cum) return i;
    }
    for (std::size_t i = probs.size(); i-- > 0;)
      if (probs[i] > 0) return i;
    throw ValidationError("cannot sample from an all-zero distribution");
  };
  World w(p.sig, n);
  for (int a = 0; a < n; ++a) {
    std::size_t tb = draw(p.one_probs);
    for (std::size_t i = 0; i < p.one_space.atoms.size(); ++i) {
      if (!((tb >> i) & 1)) continue;
      GroundAtom atom = p.one_space.atoms[i];
      for (int& arg : atom.args) arg = a;
      w.assert_atom(atom, true);
    }
  }
  for (const SipParams::Stage& st : p.stages) {
    int s = st.g + 1;
    if (s > n) break;
    std::vector<int> subset;
    auto rec = [&](auto&& self, int next) -> void {
      if (static_cast<int>(subset.size()) == s) {
        std::uint64_t tb = st.theta_space.read(w, subset);
        std::size_t e = draw(p.lookup(st.g, tb));
        for (std::size_t i = 0; i < st.new_pos.size(); ++i) {
          if (!((e >> i) & 1)) continue;
          GroundAtom atom = st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])];
          for (int& arg : atom.args) arg = subset[static_cast<std::size_t>(arg)];
          w.assert_atom(atom, true);
        }
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
  return w;
}

// ---------------------------------------------------------------------------
// Parameter files (JSON)

inline SipParams parse_sip_params(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid parameter file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("signature") || !j.contains("one_traces"))
    throw ParseError("parameter file needs 'signature' and 'one_traces'");
  std::vector<Relation> rels;
  for (const auto& r : j.at("signature"))
    rels.push_back(Relation{r.at("name").get<std::string>(), r.at("arity").get<int>()});
  SipParams p = SipParams::empty(make_signature(std::move(rels)));
  p.allow_fill = j.value("orbit_fill", false);

  auto parse_atom_list = [&](const nlohmann::json& arr, int domain) {
    std::vector<GroundAtom> out;
    for (const auto& s : arr) {
      std::string t = s.get<std::string>();
      std::size_t i = 0;
      out.push_back(detail::parse_ground_atom(*p.sig, domain, t, i));
      if (i != t.size()) throw ParseError("trailing input in atom '" + t + "'");
    }
    return out;
  };

  std::set<std::uint64_t> seen_one;
  for (const auto& entry : j.at("one_traces")) {
    std::uint64_t bits = 0;
    for (const GroundAtom& a : parse_atom_list(entry.at("true"), 1))
      bits |= std::uint64_t(1) << p.one_space.index.at(a);
    if (!seen_one.insert(bits).second) throw ParseError("duplicate one-trace entry");
    p.one_probs[bits] = parse_rational(entry.at("prob").get<std::string>());
  }
  if (!p.allow_fill && seen_one.size() != p.one_probs.size())
    throw ParseError("one_traces incomplete (set orbit_fill to fill omitted traces)");

  std::set<int> seen_g;
  if (j.contains("stages")) {
    for (const auto& stage : j.at("stages")) {
      int g = stage.at("g").get<int>();
      if (g < 1 || g >= p.arity) throw ParseError("stage g=" + std::to_string(g) + " out of range");
      if (!seen_g.insert(g).second) throw ParseError("duplicate stage g=" + std::to_string(g));
      SipParams::Stage& st = p.stage(g);
      for (const auto& entry : stage.at("entries")) {
        std::uint64_t tb = 0;
        for (const GroundAtom& a : parse_atom_list(entry.at("theta"), g + 1)) {
          if (distinct_arg_count(a) > g)
            throw ParseError("theta atom '" + format_atom(*p.sig, a) + "' has more than " +
                             std::to_string(g) + " distinct arguments");
          tb |= std::uint64_t(1) << st.theta_space.index.at(a);
        }
        if (st.table.count(tb)) throw ParseError("duplicate theta entry at stage g=" +
                                                 std::to_string(g));
        std::vector<Rational> vec(std::size_t(1) << st.new_count(), Rational(0));
        std::set<std::uint64_t> seen_ext;
        for (const auto& ext : entry.at("extensions")) {
          std::uint64_t nb = 0;
          for (const GroundAtom& a : parse_atom_list(ext.at("true_new"), g + 1)) {
            if (distinct_arg_count(a) != g + 1)
              throw ParseError("extension atom '" + format_atom(*p.sig, a) + "' must have exactly " +
                               std::to_string(g + 1) + " distinct arguments");
            int full_bit = st.full_space.index.at(a);
            int pos = static_cast<int>(std::find(st.new_pos.begin(), st.new_pos.end(), full_bit) -
                                       st.new_pos.begin());
            nb |= std::uint64_t(1) << pos;
          }
          if (!seen_ext.insert(nb).second)
            throw ParseError("duplicate extension entry at stage g=" + std::to_string(g));
          vec[nb] = parse_rational(ext.at("prob").get<std::string>());
        }
        if (!p.allow_fill && seen_ext.size() != vec.size())
          throw ParseError("extension list incomplete (set orbit_fill to fill omissions)");
        st.table[tb] = std::move(vec);
      }
    }
  }
  for (int g = 1; g < p.arity; ++g)
    if (!seen_g.count(g) && !p.allow_fill)
      throw ParseError("missing stage g=" + std::to_string(g));
  return p;
}

inline std::string format_sip_params(const SipParams& p) {
  nlohmann::json j;
  j["signature"] = nlohmann::json::array();
  for (const Relation& r : p.sig->relations())
    j["signature"].push_back({{"name", r.name}, {"arity", r.arity}});
  if (p.allow_fill) j["orbit_fill"] = true;
  j["one_traces"] = nlohmann::json::array();
  for (std::size_t tb = 0; tb < p.one_probs.size(); ++tb) {
    if (p.allow_fill && p.one_probs[tb] == 0) continue;
    nlohmann::json entry;
    entry["true"] = nlohmann::json::array();
    for (std::size_t i = 0; i < p.one_space.atoms.size(); ++i)
      if ((tb >> i) & 1) entry["true"].push_back(format_atom(*p.sig, p.one_space.atoms[i]));
    entry["prob"] = to_string(p.one_probs[tb]);
    j["one_traces"].push_back(std::move(entry));
  }
  if (!p.stages.empty()) {
    j["stages"] = nlohmann::json::array();
    for (const SipParams::Stage& st : p.stages) {
      nlohmann::json stage;
      stage["g"] = st.g;
      stage["entries"] = nlohmann::json::array();
      for (const auto& [tb, vec] : st.table) {
        nlohmann::json entry;
        entry["theta"] = nlohmann::json::array();
        for (std::size_t i = 0; i < st.theta_space.atoms.size(); ++i)
          if ((tb >> i) & 1)
            entry["theta"].push_back(format_atom(*p.sig, st.theta_space.atoms[i]));
        entry["extensions"] = nlohmann::json::array();
        for (std::size_t e = 0; e < vec.size(); ++e) {
          if (p.allow_fill && vec[e] == 0) continue;
          nlohmann::json ext;
          ext["true_new"] = nlohmann::json::array();
          for (std::size_t i = 0; i < st.new_pos.size(); ++i)
            if ((e >> i) & 1)
              ext["true_new"].push_back(
                  format_atom(*p.sig, st.full_space.atoms[static_cast<std::size_t>(st.new_pos[i])]));
          ext["prob"] = to_string(vec[e]);
          entry["extensions"].push_back(std::move(ext));
        }
        stage["entries"].push_back(std::move(entry));
      }
      j["stages"].push_back(std::move(stage));
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace dsem
