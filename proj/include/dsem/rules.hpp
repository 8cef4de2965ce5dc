#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsem/relational.hpp"

namespace dsem {

struct RuleAtom {
  std::string pred;
  std::vector<std::string> vars;
  friend bool operator==(const RuleAtom& a, const RuleAtom& b) = default;
};

struct RuleLiteral {
  enum class Kind { Positive, Negative, Diseq };
  Kind kind = Kind::Positive;
  RuleAtom atom;          // Positive / Negative
  std::string left, right;  // Diseq: left != right
  friend bool operator==(const RuleLiteral& a, const RuleLiteral& b) = default;
};

struct Rule {
  RuleAtom head;
  std::vector<RuleLiteral> body;
  friend bool operator==(const Rule& a, const Rule& b) = default;
};

// A stratified rule program over a free (input) and derived (output) part.
// Rule heads never use free relations, so evaluation expands its input.
// Rules contain no domain constants, which makes evaluation equivariant
// under domain permutations.
struct RuleProgram {
  Signature free_sig;
  Signature derived_sig;
  std::vector<Rule> rules;
  std::map<std::string, int> stages;  // optional #stage annotations

  Signature full_signature() const {
    std::vector<Relation> rels = free_sig.relations();
    rels.insert(rels.end(), derived_sig.relations().begin(), derived_sig.relations().end());
    return Signature(std::move(rels));
  }
  int arity_of(const std::string& pred) const {
    int i = free_sig.index_of(pred);
    if (i >= 0) return free_sig.relation(i).arity;
    i = derived_sig.index_of(pred);
    if (i >= 0) return derived_sig.relation(i).arity;
    return -1;
  }
  bool is_free(const std::string& pred) const { return free_sig.index_of(pred) >= 0; }
  bool is_derived(const std::string& pred) const { return derived_sig.index_of(pred) >= 0; }
};

inline std::string format_rule_atom(const RuleAtom& a) {
  if (a.vars.empty()) return a.pred;
  std::string s = a.pred + "(";
  for (std::size_t i = 0; i < a.vars.size(); ++i) {
    if (i) s += ",";
    s += a.vars[i];
  }
  return s + ")";
}

inline std::string format_rule(const Rule& r) {
  std::string s = format_rule_atom(r.head);
  if (!r.body.empty()) {
    s += " :- ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i) s += ", ";
      const RuleLiteral& lit = r.body[i];
      switch (lit.kind) {
        case RuleLiteral::Kind::Positive:
          s += format_rule_atom(lit.atom);
          break;
        case RuleLiteral::Kind::Negative:
          s += "not " + format_rule_atom(lit.atom);
          break;
        case RuleLiteral::Kind::Diseq:
          s += lit.left + " != " + lit.right;
          break;
      }
    }
  }
  return s + ".";
}

inline std::string format_program(const RuleProgram& p) {
  std::ostringstream os;
  auto emit_decl = [&](const char* tag, const Signature& sig) {
    if (sig.empty()) return;
    os << tag;
    for (const Relation& r : sig.relations()) os << " " << r.name << "/" << r.arity;
    os << "\n";
  };
  emit_decl("#free", p.free_sig);
  emit_decl("#derived", p.derived_sig);
  if (!p.stages.empty()) {
    os << "#stage";
    for (const Relation& r : p.derived_sig.relations()) {
      auto it = p.stages.find(r.name);
      if (it != p.stages.end()) os << " " << it->first << "=" << it->second;
    }
    os << "\n";
  }
  for (const Rule& r : p.rules) os << format_rule(r) << "\n";
  return os.str();
}

namespace detail {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n'))
      advance();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

  std::string ident() {
    std::size_t start = pos;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
      advance();
    return text.substr(start, pos - start);
  }
  bool lit(char c) {
    if (!done() && peek() == c) {
      advance();
      return true;
    }
    return false;
  }
};

inline RuleAtom parse_rule_atom(Cursor& c) {
  c.skip_ws();
  if (c.done() || !std::islower(static_cast<unsigned char>(c.peek())))
    c.fail("expected predicate name");
  RuleAtom a;
  a.pred = c.ident();
  c.skip_ws();
  if (c.lit('(')) {
    while (true) {
      c.skip_ws();
      if (c.done()) c.fail("unterminated argument list");
      char ch = c.peek();
      if (std::isdigit(static_cast<unsigned char>(ch)) ||
          std::islower(static_cast<unsigned char>(ch)))
        c.fail("constant encountered in rule (arguments must be variables)");
      if (!std::isupper(static_cast<unsigned char>(ch))) c.fail("expected variable");
      a.vars.push_back(c.ident());
      c.skip_ws();
      if (c.lit(',')) continue;
      if (c.lit(')')) break;
      c.fail("expected ',' or ')'");
    }
  }
  return a;
}

}  // namespace detail

// Program file format: "#free name/arity ...", "#derived name/arity ...",
// optional "#stage pred=k ...", then rules
//   rule := atom [":-" lit {"," lit}] "."
//   lit  := atom | "not" atom | VAR "!=" VAR
// with lowercase predicates and uppercase variables.
inline RuleProgram parse_program(const std::string& text) {
  RuleProgram p;
  std::vector<Relation> free_rels, derived_rels;
  detail::Cursor c{text};
  bool rules_started = false;

  auto parse_decl_list = [&](std::vector<Relation>& out) {
    while (true) {
      // Stop at end of line.
      while (!c.done() && (c.peek() == ' ' || c.peek() == '\t')) c.advance();
      if (c.done() || c.peek() == '\n' || c.peek() == '\r') break;
      std::string name = c.ident();
      if (name.empty() || !std::islower(static_cast<unsigned char>(name[0])))
        c.fail("expected relation declaration 'name/arity'");
      if (!c.lit('/')) c.fail("expected '/' in relation declaration");
      std::string digits = c.ident();
      if (digits.empty() ||
          !std::all_of(digits.begin(), digits.end(),
                       [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        c.fail("expected arity");
      out.push_back(Relation{name, std::stoi(digits)});
    }
  };

  while (true) {
    c.skip_ws();
    if (c.done()) break;
    if (c.peek() == '#') {
      if (rules_started) c.fail("directives must precede all rules");
      c.advance();
      std::string kind = c.ident();
      if (kind == "free") {
        parse_decl_list(free_rels);
      } else if (kind == "derived") {
        parse_decl_list(derived_rels);
      } else if (kind == "stage") {
        while (true) {
          while (!c.done() && (c.peek() == ' ' || c.peek() == '\t')) c.advance();
          if (c.done() || c.peek() == '\n' || c.peek() == '\r') break;
          std::string name = c.ident();
          if (name.empty() || !c.lit('=')) c.fail("expected 'pred=stage'");
          std::string digits = c.ident();
          if (digits.empty()) c.fail("expected stage number");
          p.stages[name] = std::stoi(digits);
        }
      } else {
        c.fail("unknown directive '#" + kind + "'");
      }
      continue;
    }
    rules_started = true;
    Rule r;
    r.head = detail::parse_rule_atom(c);
    c.skip_ws();
    if (!c.lit('.')) {
      if (!(c.lit(':') && c.lit('-'))) c.fail("expected ':-' or '.'");
      while (true) {
        c.skip_ws();
        RuleLiteral lit;
        if (std::isupper(static_cast<unsigned char>(c.peek()))) {
          lit.kind = RuleLiteral::Kind::Diseq;
          lit.left = c.ident();
          c.skip_ws();
          if (!(c.lit('!') && c.lit('='))) c.fail("expected '!=' after variable");
          c.skip_ws();
          if (c.done() || !std::isupper(static_cast<unsigned char>(c.peek())))
            c.fail("expected variable after '!='");
          lit.right = c.ident();
        } else {
          std::size_t save_pos = c.pos;
          int save_line = c.line, save_col = c.col;
          std::string word = c.ident();
          if (word == "not") {
            lit.kind = RuleLiteral::Kind::Negative;
            lit.atom = detail::parse_rule_atom(c);
          } else {
            c.pos = save_pos;
            c.line = save_line;
            c.col = save_col;
            lit.kind = RuleLiteral::Kind::Positive;
            lit.atom = detail::parse_rule_atom(c);
          }
        }
        r.body.push_back(std::move(lit));
        c.skip_ws();
        if (c.lit(',')) continue;
        if (c.lit('.')) break;
        c.fail("expected ',' or '.'");
      }
    }
    p.rules.push_back(std::move(r));
  }

  p.free_sig = Signature(std::move(free_rels));
  p.derived_sig = Signature(std::move(derived_rels));
  for (const Relation& r : p.derived_sig.relations())
    if (p.free_sig.index_of(r.name) >= 0)
      throw ValidationError("relation '" + r.name + "' declared both free and derived");

  // Static checks: heads derived, known predicates, matching arities.
  for (const Rule& r : p.rules) {
    if (p.is_free(r.head.pred))
      throw ValidationError("rule head uses free relation '" + r.head.pred + "'");
    if (!p.is_derived(r.head.pred))
      throw ValidationError("unknown predicate '" + r.head.pred + "' in rule head");
    auto check_atom = [&](const RuleAtom& a) {
      int arity = p.arity_of(a.pred);
      if (arity < 0) throw ValidationError("unknown predicate '" + a.pred + "'");
      if (arity != static_cast<int>(a.vars.size()))
        throw ValidationError("arity mismatch for '" + a.pred + "': got " +
                              std::to_string(a.vars.size()) + ", declared " +
                              std::to_string(arity));
    };
    check_atom(r.head);
    for (const RuleLiteral& lit : r.body)
      if (lit.kind != RuleLiteral::Kind::Diseq) check_atom(lit.atom);
  }
  for (const auto& [pred, stage] : p.stages) {
    if (!p.is_derived(pred))
      throw ValidationError("#stage annotation for unknown derived predicate '" + pred + "'");
    if (stage < 1) throw ValidationError("#stage must be >= 1");
  }
  return p;
}

struct Stratification {
  std::map<std::string, int> stratum_of;  // derived relations; free relations sit at 0
};

namespace detail {

struct DepGraph {
  // Nodes are derived predicate indices; edges body -> head.
  std::vector<std::vector<std::pair<int, bool>>> out;  // (target, negative?)
  std::vector<std::vector<int>> sccs;                  // reverse topological order
  std::vector<int> scc_of;

  explicit DepGraph(const RuleProgram& p) {
    int n = p.derived_sig.size();
    out.resize(static_cast<std::size_t>(n));
    for (const Rule& r : p.rules) {
      int head = p.derived_sig.index_of(r.head.pred);
      for (const RuleLiteral& lit : r.body) {
        if (lit.kind == RuleLiteral::Kind::Diseq) continue;
        int body = p.derived_sig.index_of(lit.atom.pred);
        if (body < 0) continue;  // free predicate
        out[static_cast<std::size_t>(body)].push_back(
            {head, lit.kind == RuleLiteral::Kind::Negative});
      }
    }
    tarjan(n);
  }

  void tarjan(int n) {
    scc_of.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> index(static_cast<std::size_t>(n), -1),
        low(static_cast<std::size_t>(n), 0);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    int counter = 0;
    auto strongconnect = [&](auto&& self, int v) -> void {
      index[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = counter++;
      stack.push_back(v);
      on_stack[static_cast<std::size_t>(v)] = true;
      for (auto [w, neg] : out[static_cast<std::size_t>(v)]) {
        (void)neg;
        if (index[static_cast<std::size_t>(w)] < 0) {
          self(self, w);
          low[static_cast<std::size_t>(v)] =
              std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(w)]);
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          low[static_cast<std::size_t>(v)] =
              std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
        }
      }
      if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
        std::vector<int> comp;
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = false;
          scc_of[static_cast<std::size_t>(w)] = static_cast<int>(sccs.size());
          comp.push_back(w);
          if (w == v) break;
        }
        std::sort(comp.begin(), comp.end());
        sccs.push_back(std::move(comp));
      }
    };
    for (int v = 0; v < n; ++v)
      if (index[static_cast<std::size_t>(v)] < 0) strongconnect(strongconnect, v);
    // Tarjan emits SCCs in reverse topological order; every edge goes from a
    // higher-index component to a lower one or stays inside.
  }
};

}  // namespace detail

// Least stratification; free predicates sit at stratum 0 and derived
// predicates start at 1. Throws with the offending cycle when a negative
// edge closes a loop.
inline Stratification stratify(const RuleProgram& p) {
  detail::DepGraph g(p);
  int n = p.derived_sig.size();
  // Negative edge inside one SCC means recursion through negation.
  for (int v = 0; v < n; ++v) {
    for (auto [w, neg] : g.out[static_cast<std::size_t>(v)]) {
      if (neg && g.scc_of[static_cast<std::size_t>(v)] == g.scc_of[static_cast<std::size_t>(w)]) {
        std::string cycle;
        for (int u : g.sccs[static_cast<std::size_t>(g.scc_of[static_cast<std::size_t>(v)])]) {
          if (!cycle.empty()) cycle += ", ";
          cycle += p.derived_sig.relation(u).name;
        }
        throw ValidationError("unstratifiable: negation cycle through [" + cycle + "]");
      }
    }
  }
  std::vector<int> stratum(static_cast<std::size_t>(n), 1);
  // Process components in topological order (reverse of Tarjan's emission).
  for (int ci = static_cast<int>(g.sccs.size()) - 1; ci >= 0; --ci) {
    int s = 1;
    for (int v : g.sccs[static_cast<std::size_t>(ci)]) {
      // Incoming constraints were fully propagated because sources precede us.
      s = std::max(s, stratum[static_cast<std::size_t>(v)]);
    }
    for (int v : g.sccs[static_cast<std::size_t>(ci)])
      stratum[static_cast<std::size_t>(v)] = s;
    for (int v : g.sccs[static_cast<std::size_t>(ci)]) {
      for (auto [w, neg] : g.out[static_cast<std::size_t>(v)]) {
        int need = neg ? s + 1 : s;
        stratum[static_cast<std::size_t>(w)] =
            std::max(stratum[static_cast<std::size_t>(w)], need);
      }
    }
  }
  Stratification out;
  for (int v = 0; v < n; ++v)
    out.stratum_of[p.derived_sig.relation(v).name] = stratum[static_cast<std::size_t>(v)];
  return out;
}

// A rule program grounded over a fixed domain size, with ground rules grouped
// by dependency component so one evaluation is a handful of linear passes.
class GroundProgram {
 public:
  GroundProgram(RuleProgram p, int n)
      : program_(std::move(p)),
        n_(n),
        full_sig_(std::make_shared<const Signature>(program_.full_signature())) {
    stratify(program_);  // rejects negation cycles
    AtomSpace free_space(program_.free_sig, n);
    AtomSpace full_space(*full_sig_, n);
    free_atoms_ = free_space.count();
    full_atoms_ = full_space.count();
    blocks_ = (full_atoms_ + 63) / 64;

    detail::DepGraph g(program_);
    // Every component, in topological order; a component needs fixpoint
    // iteration only when it is genuinely recursive.
    for (int ci = static_cast<int>(g.sccs.size()) - 1; ci >= 0; --ci) {
      const std::vector<int>& comp = g.sccs[static_cast<std::size_t>(ci)];
      bool recursive = comp.size() > 1;
      for (int v : comp)
        for (auto [w, neg] : g.out[static_cast<std::size_t>(v)]) {
          (void)neg;
          if (w == v) recursive = true;
        }
      Group group;
      group.begin = static_cast<std::uint32_t>(rules_.size());
      for (const Rule& r : program_.rules) {
        if (std::find(comp.begin(), comp.end(), program_.derived_sig.index_of(r.head.pred)) ==
            comp.end())
          continue;
        ground_rule(r, full_space);
      }
      group.end = static_cast<std::uint32_t>(rules_.size());
      group.recursive = recursive;
      if (group.end > group.begin) groups_.push_back(group);
    }
  }

  const RuleProgram& program() const { return program_; }
  int domain_size() const { return n_; }
  const SignaturePtr& full_signature() const { return full_sig_; }
  std::uint64_t free_atom_count() const { return free_atoms_; }
  std::uint64_t full_atom_count() const { return full_atoms_; }
  std::size_t block_count() const { return blocks_; }

  // `bits` must hold block_count() blocks whose low free_atom_count() bits
  // give the input world; derived bits must start out clear.
  void run_bits(std::vector<std::uint64_t>& bits) const {
    auto test = [&bits](std::uint32_t i) -> bool { return (bits[i >> 6] >> (i & 63)) & 1; };
    for (const Group& group : groups_) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (std::uint32_t ri = group.begin; ri < group.end; ++ri) {
          const GroundRule& r = rules_[ri];
          if (test(r.head)) continue;
          bool fires = true;
          for (std::uint32_t i = r.pos_begin; fires && i < r.pos_end; ++i)
            fires = test(pos_[i]);
          for (std::uint32_t i = r.neg_begin; fires && i < r.neg_end; ++i)
            fires = !test(neg_[i]);
          if (fires) {
            bits[r.head >> 6] |= std::uint64_t(1) << (r.head & 63);
            changed = true;
          }
        }
        if (!group.recursive) break;
      }
    }
  }

  World run(const World& input) const {
    if (!(input.signature() == program_.free_sig) || input.domain_size() != n_)
      throw ValidationError("apply_program input must be a world over the free signature");
    World out(full_sig_, n_);
    std::vector<std::uint64_t>& bits = out.blocks();
    const std::vector<std::uint64_t>& in = input.blocks();
    for (std::uint64_t i = 0; i < free_atoms_; ++i)
      if ((in[i >> 6] >> (i & 63)) & 1) bits[i >> 6] |= std::uint64_t(1) << (i & 63);
    run_bits(bits);
    return out;
  }

 private:
  struct GroundRule {
    std::uint32_t head;
    std::uint32_t pos_begin, pos_end;
    std::uint32_t neg_begin, neg_end;
  };
  struct Group {
    std::uint32_t begin, end;
    bool recursive;
  };

  void ground_rule(const Rule& r, const AtomSpace& full_space) {
    std::vector<std::string> vars;
    auto note = [&](const std::string& v) {
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    };
    for (const std::string& v : r.head.vars) note(v);
    for (const RuleLiteral& lit : r.body) {
      if (lit.kind == RuleLiteral::Kind::Diseq) {
        note(lit.left);
        note(lit.right);
      } else {
        for (const std::string& v : lit.atom.vars) note(v);
      }
    }
    auto var_index = [&](const std::string& v) {
      return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin());
    };
    std::vector<int> binding(vars.size(), 0);
    auto atom_index = [&](const RuleAtom& a) {
      GroundAtom ga{full_sig_->index_of(a.pred), {}};
      ga.args.reserve(a.vars.size());
      for (const std::string& v : a.vars) ga.args.push_back(binding[var_index(v)]);
      return static_cast<std::uint32_t>(full_space.index(ga));
    };
    while (true) {
      bool ok = true;
      for (const RuleLiteral& lit : r.body) {
        if (lit.kind == RuleLiteral::Kind::Diseq &&
            binding[var_index(lit.left)] == binding[var_index(lit.right)]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        GroundRule gr;
        gr.head = atom_index(r.head);
        gr.pos_begin = static_cast<std::uint32_t>(pos_.size());
        for (const RuleLiteral& lit : r.body)
          if (lit.kind == RuleLiteral::Kind::Positive) pos_.push_back(atom_index(lit.atom));
        gr.pos_end = static_cast<std::uint32_t>(pos_.size());
        gr.neg_begin = static_cast<std::uint32_t>(neg_.size());
        for (const RuleLiteral& lit : r.body)
          if (lit.kind == RuleLiteral::Kind::Negative) neg_.push_back(atom_index(lit.atom));
        gr.neg_end = static_cast<std::uint32_t>(neg_.size());
        rules_.push_back(gr);
      }
      std::size_t pos = 0;
      while (pos < binding.size()) {
        if (++binding[pos] < n_) break;
        binding[pos] = 0;
        ++pos;
      }
      if (pos == binding.size()) break;
      if (vars.empty()) break;
    }
  }

  RuleProgram program_;
  int n_;
  SignaturePtr full_sig_;
  std::uint64_t free_atoms_ = 0, full_atoms_ = 0;
  std::size_t blocks_ = 0;
  std::vector<GroundRule> rules_;
  std::vector<std::uint32_t> pos_, neg_;
  std::vector<Group> groups_;
};

// The unique perfect model of the stratified program on the given input.
inline World apply_program(const RuleProgram& p, const World& input) {
  return GroundProgram(p, input.domain_size()).run(input);
}

struct TupleLocalReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Static sufficient condition for evaluation to commute with restrictions and
// permutations at every domain size: each rule's body variables stay inside
// the head variables (so a derived atom depends only on atoms over its own
// argument set), and derived body predicates carry strictly lower stages (so
// the dependency unwinds level by level).
inline TupleLocalReport check_tuple_local(
    const RuleProgram& p, const std::optional<std::map<std::string, int>>& stage_override = {}) {
  const std::map<std::string, int>& stages = stage_override ? *stage_override : p.stages;
  for (const Relation& r : p.derived_sig.relations())
    if (!stages.count(r.name))
      throw ValidationError("missing stage annotation for derived relation '" + r.name + "'");
  TupleLocalReport report;
  for (const Rule& r : p.rules) {
    std::set<std::string> head_vars(r.head.vars.begin(), r.head.vars.end());
    int head_stage = stages.at(r.head.pred);
    auto flag = [&](const std::string& why) {
      report.ok = false;
      report.violations.push_back(format_rule(r) + ": " + why);
    };
    for (const RuleLiteral& lit : r.body) {
      if (lit.kind == RuleLiteral::Kind::Diseq) {
        if (!head_vars.count(lit.left) || !head_vars.count(lit.right))
          flag("disequality variable outside head variables");
        continue;
      }
      for (const std::string& v : lit.atom.vars)
        if (!head_vars.count(v)) {
          flag("body variable " + v + " outside head variables");
          break;
        }
      if (p.is_derived(lit.atom.pred) && stages.at(lit.atom.pred) >= head_stage)
        flag("body predicate '" + lit.atom.pred + "' has stage >= head stage");
    }
  }
  return report;
}

}  // namespace dsem
