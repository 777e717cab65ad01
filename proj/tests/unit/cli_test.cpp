#include <gtest/gtest.h>

#include <sstream>

#include <deltaclaw/cli.hpp>

#include "support.hpp"

using namespace dct;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "deltaclaw");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = deltaclaw::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, VerifyExitCodes) {
  auto ok = invoke({"verify", fixture("dpkdv_kov.toml"), fixture("claw1.toml")});
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("CLaw verified (12/12 points)"), std::string::npos);
  auto bad = invoke({"verify", fixture("dpkdv_kov.toml"), fixture("garbage.toml")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("witness"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"verify"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"verify", "/nonexistent.toml", fixture("claw1.toml")}).code, 2);
  EXPECT_EQ(invoke({"--tol", "abc", "verify", fixture("dpkdv_kov.toml"), fixture("claw1.toml")}).code, 2);
  EXPECT_EQ(invoke({"--format", "xml", "verify", fixture("dpkdv_kov.toml"), fixture("claw1.toml")}).code, 2);
  EXPECT_EQ(invoke({"cosym-check", fixture("plv.toml"), "--q", "u[0,"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, JsonOutput) {
  auto r = invoke({"--format", "json", "--deterministic", "--seed", "7", "trivial", fixture("dpkdv_kov.toml"), fixture("claw2.toml")});
  EXPECT_EQ(r.code, 1);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["command"], "trivial");
  EXPECT_EQ(j["verdict"], "NONTRIVIAL");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["samples"], 12);
  EXPECT_EQ(j["elapsed_ms"], 0.0);
  EXPECT_TRUE(j.contains("witness"));
}

TEST(Cli, DeterministicOutputIsStable) {
  std::vector<std::string> a{"--format", "json", "--deterministic", "verify", fixture("dpkdv_kov.toml"), fixture("garbage.toml")};
  EXPECT_EQ(invoke(a).out, invoke(a).out);
}

TEST(Cli, ToleranceForms) {
  EXPECT_EQ(deltaclaw::cli::parse_rational("1e-3"), mpq_class(1, 1000));
  EXPECT_EQ(deltaclaw::cli::parse_rational("3/6"), mpq_class(1, 2));
  EXPECT_EQ(deltaclaw::cli::parse_rational("0.25"), mpq_class(1, 4));
  EXPECT_EQ(deltaclaw::cli::parse_rational("2.5e2"), 250);
  EXPECT_THROW(deltaclaw::cli::parse_rational("x"), deltaclaw::cli::UsageError);
}

TEST(Cli, Equivalent) {
  auto r = invoke({"equivalent", fixture("dpkdv_kov.toml"), fixture("highorder.toml"), fixture("claw1.toml")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("EQUIVALENT"), std::string::npos);
  EXPECT_NE(r.out.find("shift=(0,0)"), std::string::npos);
  EXPECT_EQ(invoke({"equivalent", fixture("dpkdv_kov.toml"), fixture("claw1.toml"), fixture("claw2.toml")}).code, 1);
}

TEST(Cli, Unsupported) {
  // dpKdV is already in Kovalevskaya form
  EXPECT_EQ(invoke({"transform", fixture("dpkdv_kov.toml"), "--shear", "1"}).code, 3);
  EXPECT_EQ(invoke({"reconstruct", fixture("dpkdv_quad.toml"), "--root", "w[0,0]", "--ansatz", fixture("ansatz_c4.toml")}).code, 3);
}

TEST(Cli, Reconstruct) {
  Expr r = KeyValueFile::load(fixture("recon_c4.toml")).expr("root");
  auto run = invoke({"reconstruct", fixture("dpkdv_kov.toml"), "--root", to_string(r), "--ansatz", fixture("ansatz_c4.toml")});
  EXPECT_EQ(run.code, 0) << run.out;
  EXPECT_NE(run.out.find("reconstructed"), std::string::npos);
}

TEST(Cli, CosymCommands) {
  Expr q1 = KeyValueFile::load(fixture("plv_q1.toml")).expr("q");
  Expr q5 = KeyValueFile::load(fixture("plv_q5.toml")).expr("q");
  EXPECT_EQ(invoke({"cosym-check", fixture("plv.toml"), "--q", to_string(q1)}).code, 1);
  EXPECT_EQ(invoke({"cosym-check", fixture("plv.toml"), "--q", to_string(q5)}).code, 0);
  EXPECT_EQ(invoke({"cosym-check", fixture("plv.toml"), "--q", "u[0,0]"}).code, 1);
  auto s = invoke({"cosym-solve", fixture("plv.toml"), "--basis", fixture("plv_basis.txt")});
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("2 independent"), std::string::npos);
}

TEST(Cli, NoetherAndGardner) {
  EXPECT_EQ(invoke({"noether", fixture("lagrangian.toml"), "--q", "1"}).code, 0);
  EXPECT_EQ(invoke({"noether", fixture("lagrangian.toml"), "--q", "u[0,0]"}).code, 1);
  EXPECT_EQ(invoke({"gardner", "--alpha-max", "2"}).code, 0);
  EXPECT_EQ(invoke({"gardner", "--alpha-max", "0"}).code, 2);
}

TEST(Cli, OdeReconstruct) {
  Expr r = KeyValueFile::load(fixture("ode_integral.toml")).expr("root");
  EXPECT_EQ(invoke({"ode-reconstruct", fixture("ode.toml"), "--root", to_string(r)}).code, 0);
  EXPECT_EQ(invoke({"ode-reconstruct", fixture("dpkdv_kov.toml"), "--root", "1"}).code, 2);
}

TEST(Cli, Binary) {
  std::string cmd = std::string(DELTACLAW_CLI) + " verify " + fixture("dpkdv_kov.toml") + " " + fixture("garbage.toml") + " > /dev/null";
  int st = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(st));
  EXPECT_EQ(WEXITSTATUS(st), 1);
}
