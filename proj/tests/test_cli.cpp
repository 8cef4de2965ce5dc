#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "helpers.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  std::string out_path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                         "/dsem_cli_out.txt";
  std::string command = std::string(DSEM_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  int status = std::system(command.c_str());
  CliResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = helpers::slurp(out_path);
  std::remove(out_path.c_str());
  return result;
}

std::string fixture(const std::string& name) { return helpers::fixture_path(name); }

std::string temp_file(const std::string& name) {
  return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + name;
}

}  // namespace

TEST_CASE("cli: eval") {
  CliResult r = run_cli("eval --program " + fixture("chain.rules") + " --world 'f(0)' --n 2");
  CHECK(r.code == 0);
  CHECK(r.output == "f(0) a(0) b(0)\n");
}

TEST_CASE("cli: free prob and dist") {
  CliResult r = run_cli("free prob --sig 'e/2' --weights 'e=1/3' --world 'e(0,1)' --n 2");
  CHECK(r.code == 0);
  CHECK(r.output == "8/81\n");

  CliResult d = run_cli("free dist --sig 'f/1' --weights 'f=1/3' --n 1");
  CHECK(d.code == 0);
  CHECK(d.output == "{} ; 2/3\nf(0) ; 1/3\nTOTAL ; 1\n");
}

TEST_CASE("cli: sip prob prints the worked example") {
  CliResult r = run_cli("sip prob --params " + fixture("coloured_graph.sip.json") +
                        " --world 'p(0) p(1) e(0,1) e(1,0)' --n 2");
  CHECK(r.code == 0);
  CHECK(r.output == "7/40\n");
}

TEST_CASE("cli: deterministic outputs") {
  std::string args = "sip build --params " + fixture("coloured_graph.sip.json") + " --n 2";
  CliResult a = run_cli(args);
  CliResult b = run_cli(args);
  CHECK(a.code == 0);
  CHECK(a.output == b.output);

  std::string sample = "sip sample --params " + fixture("coloured_graph.sip.json") +
                       " --n 3 --seed 42 --count 3";
  CliResult s1 = run_cli(sample);
  CliResult s2 = run_cli(sample);
  CHECK(s1.code == 0);
  CHECK(s1.output == s2.output);
}

TEST_CASE("cli: checkers print PASS/FAIL and exit accordingly") {
  CliResult fail = run_cli("check square --plp " + fixture("nonprojective.plp.json") +
                           " --max-n 3");
  CHECK(fail.code == 1);
  CHECK(fail.output.rfind("FAIL", 0) == 0);
  CHECK(fail.output.find("e(0,1)") != std::string::npos);

  CliResult pass = run_cli("check square --plp " + fixture("symmetric_pair.plp.json") +
                           " --max-n 3");
  CHECK(pass.code == 0);
  CHECK(pass.output.rfind("PASS", 0) == 0);

  CliResult asym = run_cli("check asym --params " + fixture("coloured_graph.sip.json"));
  CHECK(asym.code == 0);
  CHECK(asym.output.rfind("PASS", 0) == 0);

  CliResult proj = run_cli("check projective --params " + fixture("coloured_graph.sip.json") +
                           " --max-n 3");
  CHECK(proj.code == 0);

  CliResult sip = run_cli("--jobs 2 check sip --params " + fixture("coloured_graph.sip.json") +
                          " --n 2 --max-literals 2");
  CHECK(sip.code == 0);
  CHECK(sip.output.rfind("PASS", 0) == 0);
}

TEST_CASE("cli: synth and verify round-trip") {
  std::string bundle = temp_file("unary_out.plp.json");
  std::string plan = temp_file("unary_out.plan.json");
  CliResult s = run_cli("synth --params " + fixture("unary.sip.json") + " -o " + bundle +
                        " --plan " + plan);
  CHECK(s.code == 0);
  CHECK(s.output.rfind("PASS", 0) == 0);

  CliResult v = run_cli("verify --plp " + bundle + " --params " + fixture("unary.sip.json") +
                        " --local --global 3");
  CHECK(v.code == 0);
  CHECK(v.output.rfind("PASS", 0) == 0);

  CliResult coloured = run_cli("synth --params " + fixture("coloured_graph.sip.json") + " -o " +
                               temp_file("coloured_out.plp.json"));
  CHECK(coloured.code == 0);
  CliResult cv = run_cli("verify --plp " + temp_file("coloured_out.plp.json") + " --params " +
                         fixture("coloured_graph.sip.json") + " --local --global 2");
  CHECK(cv.code == 0);

  // A bundle that does not match its parameters is rejected.
  CliResult mismatch = run_cli("verify --plp " + bundle + " --params " +
                               fixture("coloured_graph.sip.json") + " --local");
  CHECK(mismatch.code == 1);
  CHECK(mismatch.output.rfind("FAIL", 0) == 0);
}

TEST_CASE("cli: synthesis rejects the essentially asymmetric family") {
  // Build the uniform tournament distribution dumps for n = 1, 2 and fit them.
  dsem::Family t = helpers::tournament_family();
  std::string d1 = temp_file("tournament1.dist"), d2 = temp_file("tournament2.dist");
  {
    std::ofstream f1(d1), f2(d2);
    f1 << dsem::format_dist(t.dist_at(1));
    f2 << dsem::format_dist(t.dist_at(2));
  }
  std::string fitted = temp_file("tournament.sip.json");
  CliResult fit = run_cli("sip fit --dist " + d1 + " --dist " + d2 + " --sig 'e/2' -o " + fitted);
  CHECK(fit.code == 0);

  CliResult synth = run_cli("synth --params " + fitted + " -o " + temp_file("tournament.plp.json"));
  CHECK(synth.code == 1);
  CHECK(synth.output.rfind("FAIL", 0) == 0);
  CHECK(synth.output.find("essentially asymmetric") != std::string::npos);

  CliResult asym = run_cli("check asym --params " + fitted);
  CHECK(asym.code == 1);
  CHECK(asym.output.rfind("FAIL", 0) == 0);
}

TEST_CASE("cli: budget and usage errors") {
  CliResult budget = run_cli("--budget 4 free dist --sig 'e/2' --weights 'e=1/3' --n 3");
  CHECK(budget.code == 3);
  CHECK(budget.output.find("budget") != std::string::npos);

  CliResult usage = run_cli("frobnicate");
  CHECK(usage.code == 2);

  CliResult badfile = run_cli("sip build --params /nonexistent.json --n 2");
  CHECK(badfile.code == 2);
}
