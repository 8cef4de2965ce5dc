// dsem: exact distribution-semantics toolbox.
//
// Exit codes: 0 success / check passed; 1 check failed (counterexample
// printed); 2 usage or format error; 3 enumeration budget exceeded.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dsem/dsem.hpp"

namespace {

constexpr std::uint64_t kCliBudget = std::uint64_t(1) << 22;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dsem::ParseError("cannot open file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw dsem::ParseError("cannot write file '" + path + "'");
  out << content;
}

dsem::SignaturePtr parse_sig_flag(const std::string& text) {
  std::vector<dsem::Relation> rels;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    auto slash = tok.find('/');
    if (slash == std::string::npos)
      throw dsem::ParseError("expected 'name/arity' in --sig, got '" + tok + "'");
    rels.push_back(dsem::Relation{tok.substr(0, slash), std::stoi(tok.substr(slash + 1))});
  }
  return dsem::make_signature(std::move(rels));
}

dsem::WeightFn parse_weights_flag(const std::string& text) {
  dsem::WeightFn w;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw dsem::ParseError("expected 'name=p/q' in --weights, got '" + item + "'");
    w.weights[item.substr(0, eq)] = dsem::parse_rational(item.substr(eq + 1));
  }
  return w;
}

int report_line(bool ok, const std::string& detail) {
  if (ok) {
    std::cout << "PASS\n";
    return 0;
  }
  std::cout << "FAIL " << detail << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact generalised distribution semantics: free weights, rule expansions, "
               "projectivity and independence checkers, trace-construction synthesis"};
  app.require_subcommand(1);
  std::uint64_t budget = kCliBudget;
  int jobs = 1;
  app.add_option("--budget", budget, "maximum number of enumerated worlds");
  app.add_option("--jobs", jobs, "worker threads for the independence checkers");

  std::string program_file, plp_file, params_file, world_text, sig_text, weights_text, out_file,
      plan_file, formula_text;
  std::vector<std::string> dist_files;
  int n = 1, max_n = 3, g = 1, max_literals = 2, count = 1;
  std::uint64_t seed = 0;
  std::string strategy = "enumerate";
  bool use_reduct = false, local_mode = false;
  int global_n = -1;

  auto* eval = app.add_subcommand("eval", "run a rule program on an input world");
  eval->add_option("--program", program_file, "rule program file")->required();
  eval->add_option("--world", world_text, "input world over the free signature")->required();
  eval->add_option("--n", n, "domain size")->required();

  auto* free_cmd = app.add_subcommand("free", "free product distributions");
  auto* free_prob_cmd = free_cmd->add_subcommand("prob", "probability of one world");
  free_prob_cmd->add_option("--sig", sig_text, "signature, e.g. \"p/1 e/2\"")->required();
  free_prob_cmd->add_option("--weights", weights_text, "e.g. \"p=1/2,e=1/3\"")->required();
  free_prob_cmd->add_option("--world", world_text)->required();
  free_prob_cmd->add_option("--n", n)->required();
  auto* free_dist_cmd = free_cmd->add_subcommand("dist", "full distribution dump");
  free_dist_cmd->add_option("--sig", sig_text)->required();
  free_dist_cmd->add_option("--weights", weights_text)->required();
  free_dist_cmd->add_option("--n", n)->required();
  free_cmd->require_subcommand(1);

  auto* induced = app.add_subcommand("induced", "distribution induced by a plp");
  induced->add_option("--plp", plp_file)->required();
  induced->add_option("--n", n)->required();
  induced->add_option("--strategy", strategy)->check(CLI::IsMember({"enumerate", "factored"}));

  auto* reduct_cmd = app.add_subcommand("reduct", "target-signature marginal of a plp");
  reduct_cmd->add_option("--plp", plp_file)->required();
  reduct_cmd->add_option("--n", n)->required();

  auto* check = app.add_subcommand("check", "checkers (first line PASS/FAIL)");
  check->require_subcommand(1);
  auto* check_square = check->add_subcommand("square", "evaluation commutes with injections");
  check_square->add_option("--plp", plp_file)->required();
  check_square->add_option("--max-n", max_n);
  auto* check_trace = check->add_subcommand("trace", "g-traces of outputs depend only on input traces");
  check_trace->add_option("--plp", plp_file)->required();
  check_trace->add_option("--max-n", max_n);
  check_trace->add_option("--g", g);
  auto* check_proj = check->add_subcommand("projective", "exchangeability + marginal consistency");
  check_proj->add_option("--plp", plp_file);
  check_proj->add_option("--params", params_file);
  check_proj->add_flag("--reduct", use_reduct, "check the target marginal family of the plp");
  check_proj->add_option("--max-n", max_n);
  auto* check_sip = check->add_subcommand("sip", "strong independence over literal events");
  check_sip->add_option("--plp", plp_file);
  check_sip->add_option("--params", params_file);
  check_sip->add_flag("--reduct", use_reduct);
  check_sip->add_option("--n", n);
  check_sip->add_option("--max-literals", max_literals);
  auto* check_ip_cmd = check->add_subcommand("ip", "independence of element-disjoint events");
  check_ip_cmd->add_option("--plp", plp_file);
  check_ip_cmd->add_option("--params", params_file);
  check_ip_cmd->add_flag("--reduct", use_reduct);
  check_ip_cmd->add_option("--n", n);
  check_ip_cmd->add_option("--max-literals", max_literals);
  auto* check_asym = check->add_subcommand("asym", "essential asymmetry");
  check_asym->add_option("--plp", plp_file);
  check_asym->add_option("--params", params_file);
  check_asym->add_flag("--reduct", use_reduct);

  auto* sip_cmd = app.add_subcommand("sip", "trace-construction families");
  sip_cmd->require_subcommand(1);
  auto* sip_build = sip_cmd->add_subcommand("build", "distribution dump at one size");
  sip_build->add_option("--params", params_file)->required();
  sip_build->add_option("--n", n)->required();
  auto* sip_prob_cmd = sip_cmd->add_subcommand("prob", "probability of one world");
  sip_prob_cmd->add_option("--params", params_file)->required();
  sip_prob_cmd->add_option("--world", world_text)->required();
  sip_prob_cmd->add_option("--n", n)->required();
  auto* sip_fit = sip_cmd->add_subcommand("fit", "read parameters off a family");
  sip_fit->add_option("--plp", plp_file, "fit the reduct family of this plp");
  sip_fit->add_option("--params", params_file, "fit the family built from these parameters");
  sip_fit->add_option("--dist", dist_files, "distribution dumps for n = 1..r (with --sig)");
  sip_fit->add_option("--sig", sig_text);
  sip_fit->add_option("-o,--out", out_file)->required();
  auto* sip_sample = sip_cmd->add_subcommand("sample", "draw worlds");
  sip_sample->add_option("--params", params_file)->required();
  sip_sample->add_option("--n", n)->required();
  sip_sample->add_option("--seed", seed)->required();
  sip_sample->add_option("--count", count);

  auto* synth_cmd = app.add_subcommand("synth", "compile parameters into a plp");
  synth_cmd->add_option("--params", params_file)->required();
  synth_cmd->add_option("-o,--out", out_file)->required();
  synth_cmd->add_option("--plan", plan_file, "also write the plan report");

  auto* verify_cmd = app.add_subcommand("verify", "verify a synthesized bundle");
  verify_cmd->add_option("--plp", plp_file)->required();
  verify_cmd->add_option("--params", params_file)->required();
  verify_cmd->add_flag("--local", local_mode, "per-stage conditional verification");
  verify_cmd->add_option("--global", global_n, "world-by-world comparison at this size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) {
      dsem::RuleProgram p = dsem::parse_program(slurp(program_file));
      auto free_sig = std::make_shared<const dsem::Signature>(p.free_sig);
      dsem::World in = dsem::parse_world(free_sig, n, world_text);
      std::cout << dsem::format_world(dsem::apply_program(p, in)) << "\n";
      return 0;
    }
    if (*free_prob_cmd) {
      auto sig = parse_sig_flag(sig_text);
      dsem::WeightFn w = parse_weights_flag(weights_text);
      dsem::validate_weights(*sig, w);
      std::cout << dsem::to_string(dsem::free_prob(w, dsem::parse_world(sig, n, world_text)))
                << "\n";
      return 0;
    }
    if (*free_dist_cmd) {
      auto sig = parse_sig_flag(sig_text);
      dsem::WeightFn w = parse_weights_flag(weights_text);
      dsem::validate_weights(*sig, w);
      std::cout << dsem::format_dist(dsem::free_dist(w, sig, n, budget));
      return 0;
    }
    if (*induced) {
      dsem::GeneralizedPlp plp = dsem::parse_plp(slurp(plp_file));
      dsem::Strategy s =
          strategy == "factored" ? dsem::Strategy::kFactored : dsem::Strategy::kEnumerate;
      std::cout << dsem::format_dist(dsem::induced_dist(plp, n, s, budget));
      return 0;
    }
    if (*reduct_cmd) {
      dsem::GeneralizedPlp plp = dsem::parse_plp(slurp(plp_file));
      std::cout << dsem::format_dist(dsem::reduct_dist(plp, n, budget));
      return 0;
    }
    if (*check_square) {
      dsem::GeneralizedPlp plp = dsem::parse_plp(slurp(plp_file));
      dsem::SquareReport r = dsem::check_commuting_square(plp, max_n, budget);
      int code = report_line(r.ok, r.detail);
      if (!r.note.empty()) std::cout << r.note << "\n";
      std::cout << "checked " << r.checked << " squares\n";
      return code;
    }
    if (*check_trace) {
      dsem::GeneralizedPlp plp = dsem::parse_plp(slurp(plp_file));
      dsem::TraceFunctorialityReport r = dsem::check_trace_functoriality(plp, max_n, g, budget);
      int code = report_line(r.ok, r.detail);
      std::cout << "checked " << r.checked << " worlds\n";
      return code;
    }
    auto family_arg = [&]() -> dsem::Family {
      if (!params_file.empty())
        return dsem::sip_family(dsem::parse_sip_params(slurp(params_file)), budget);
      if (plp_file.empty())
        throw dsem::ParseError("need --params or --plp");
      dsem::GeneralizedPlp plp = dsem::parse_plp(slurp(plp_file));
      if (use_reduct) return dsem::reduct_family(plp, budget);
      auto full = std::make_shared<const dsem::Signature>(plp.program.full_signature());
      auto shared = std::make_shared<const dsem::GeneralizedPlp>(plp);
      return dsem::Family{full, [shared, budget](int size) {
                            return dsem::induced_dist(*shared, size, dsem::Strategy::kEnumerate,
                                                      budget);
                          }};
    };
    if (*check_proj) {
      dsem::ProjectivityReport r = dsem::check_projective(family_arg(), max_n, budget);
      return report_line(r.ok, r.detail);
    }
    if (*check_sip) {
      dsem::IndependenceReport r = dsem::check_sip_direct(family_arg(), n, max_literals, budget, jobs);
      int code = report_line(r.ok, r.detail);
      std::cout << "checked " << r.checked << " conditional triples\n";
      return code;
    }
    if (*check_ip_cmd) {
      dsem::IndependenceReport r = dsem::check_ip(family_arg(), n, max_literals, budget, jobs);
      int code = report_line(r.ok, r.detail);
      std::cout << "checked " << r.checked << " pairs\n";
      return code;
    }
    if (*check_asym) {
      std::optional<dsem::AsymmetryWitness> w;
      if (!params_file.empty())
        w = dsem::check_essential_asymmetry(dsem::parse_sip_params(slurp(params_file)), budget);
      else
        w = dsem::check_essential_asymmetry(family_arg(), budget);
      return report_line(!w, w ? dsem::format_witness(*w) : "");
    }
    if (*sip_build) {
      dsem::SipParams p = dsem::parse_sip_params(slurp(params_file));
      std::cout << dsem::format_dist(dsem::sip_dist(p, n, budget));
      return 0;
    }
    if (*sip_prob_cmd) {
      dsem::SipParams p = dsem::parse_sip_params(slurp(params_file));
      std::cout << dsem::to_string(dsem::sip_prob(p, dsem::parse_world(p.sig, n, world_text)))
                << "\n";
      return 0;
    }
    if (*sip_fit) {
      dsem::Family f = [&]() -> dsem::Family {
        if (!dist_files.empty()) {
          if (sig_text.empty()) throw dsem::ParseError("--dist needs --sig");
          auto sig = parse_sig_flag(sig_text);
          auto dists = std::make_shared<std::vector<dsem::Dist>>();
          for (std::size_t i = 0; i < dist_files.size(); ++i)
            dists->push_back(
                dsem::parse_dist(sig, static_cast<int>(i) + 1, slurp(dist_files[i])));
          return dsem::Family{sig, [dists](int size) {
                                if (size < 1 || size > static_cast<int>(dists->size()))
                                  throw dsem::ValidationError("no dump for size " +
                                                              std::to_string(size));
                                return (*dists)[static_cast<std::size_t>(size - 1)];
                              }};
        }
        return family_arg();
      }();
      dsem::SipParams fitted = dsem::fit_params(f, budget);
      spit(out_file, dsem::format_sip_params(fitted));
      std::cout << "wrote " << out_file << "\n";
      return 0;
    }
    if (*sip_sample) {
      dsem::SipParams p = dsem::parse_sip_params(slurp(params_file));
      dsem::ParamsReport rep = dsem::validate_params(p);
      if (!rep.ok) throw dsem::ValidationError(rep.violations.front());
      for (int i = 0; i < count; ++i)
        std::cout << dsem::format_world(dsem::sample_world(p, n, seed + static_cast<std::uint64_t>(i)))
                  << "\n";
      return 0;
    }
    if (*synth_cmd) {
      dsem::SipParams p = dsem::parse_sip_params(slurp(params_file));
      try {
        dsem::SynthesisPlan plan = dsem::synthesize(p, budget);
        spit(out_file, dsem::format_plp(plan.plp));
        if (!plan_file.empty()) spit(plan_file, dsem::format_plan_report(plan));
        std::cout << "PASS\n" << dsem::format_plan_report(plan);
        return 0;
      } catch (const dsem::SynthesisError& e) {
        std::cout << "FAIL " << e.what() << "\n";
        return 1;
      }
    }
    if (*verify_cmd) {
      dsem::SipParams p = dsem::parse_sip_params(slurp(params_file));
      dsem::GeneralizedPlp given = dsem::parse_plp(slurp(plp_file));
      dsem::SynthesisPlan plan = dsem::synthesize(p, budget);
      if (dsem::format_plp(plan.plp) != dsem::format_plp(given))
        return report_line(false, "bundle does not match the synthesis of the given parameters");
      if (!local_mode && global_n < 0)
        throw dsem::ParseError("verify needs --local and/or --global N");
      if (local_mode) {
        dsem::VerifyReport r = dsem::verify_synthesis_local(plan, p, budget);
        if (!r.ok) return report_line(false, r.detail);
      }
      if (global_n >= 0) {
        dsem::VerifyReport r = dsem::verify_synthesis_global(plan, p, global_n, budget);
        if (!r.ok) return report_line(false, r.detail);
      }
      return report_line(true, "");
    }
    throw dsem::ParseError("no subcommand handled");
  } catch (const dsem::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const dsem::SynthesisError& e) {
    std::cout << "FAIL " << e.what() << "\n";
    return 1;
  } catch (const dsem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
