#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "beamforge/cli.hpp"

using namespace beamforge::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = main_entry(args, out, err);
  return {code, out.str(), err.str()};
}

int count_lines(const std::string& s) { return int(std::count(s.begin(), s.end(), '\n')); }

fs::path temp_file(const std::string& name, const std::string& content) {
  const auto path = fs::temp_directory_path() / ("beamforge_test_" + name);
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST(Cli, Defaults) {
  unsetenv("BEAMFORGE_SEED");
  const auto c = parse_config({"--command", "sep-mc"});
  EXPECT_EQ(c.command, Command::SepMc);
  EXPECT_EQ(c.params.N, 100);
  EXPECT_EQ(c.params.K, 4);
  EXPECT_EQ(c.params.M, 2);
  EXPECT_EQ(c.params.L, 16);
  EXPECT_DOUBLE_EQ(c.gamma1_db, 20.0);
  EXPECT_DOUBLE_EQ(c.gamma2_db, 20.0);
  EXPECT_DOUBLE_EQ(c.params.R_over_lambda, 10.0);
  EXPECT_DOUBLE_EQ(c.params.mu_m, 0.01);
  EXPECT_EQ(c.master_seed, 0u);
  const auto d = beamforge::derived_powers(c.params);
  EXPECT_NEAR(d.gamma1, 100.0, 1e-9);
  EXPECT_NEAR(d.gamma2, 100.0, 1e-9);
}

TEST(Cli, FlagsOverrideFileOverrideEnv) {
  const auto cfg = temp_file("prec.json", R"({"command": "sep-analytic", "params": {"gamma1_dB": 20, "N": 50},
                                              "master_seed": 9, "error_model": {"kind": "channel", "sigma_delta_ratio": 0.5}})");
  setenv("BEAMFORGE_SEED", "123", 1);
  auto c = parse_config({"--config", cfg.string(), "--gamma1-db", "30"});
  EXPECT_DOUBLE_EQ(c.gamma1_db, 30.0);
  EXPECT_EQ(c.params.N, 50);
  EXPECT_DOUBLE_EQ(c.params.mu_m, 1.0 / 50);
  EXPECT_EQ(c.master_seed, 9u);
  EXPECT_EQ(c.error_model.kind, "channel");
  EXPECT_DOUBLE_EQ(c.error_model.sigma_delta_ratio, 0.5);
  EXPECT_EQ(c.command, Command::SepAnalytic);
  c = parse_config({"--command", "sep-mc"});
  EXPECT_EQ(c.master_seed, 123u);
  c = parse_config({"--command", "sep-mc", "--seed", "4"});
  EXPECT_EQ(c.master_seed, 4u);
  unsetenv("BEAMFORGE_SEED");
}

TEST(Cli, ConfigErrorsExitTwoNamingTheField) {
  auto r = run_cli({"--command", "sep-sweep", "--error-model", "closed-loop", "--sweep", "sigma_delta_ratio:0.1,1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sweep"), std::string::npos);
  r = run_cli({"--command", "sep-mc", "--bogus", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  r = run_cli({"--command", "fly"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("command"), std::string::npos);
  r = run_cli({"--command", "sep-mc", "--m", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("params"), std::string::npos);
  r = run_cli({"--command", "sep-mc", "--rho-tau-db", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("rho-tau-db"), std::string::npos);
  const auto cfg = temp_file("bad.json", R"({"params": {"Q": 1}})");
  r = run_cli({"--config", cfg.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("params.Q"), std::string::npos);
}

TEST(Cli, UnwritableOutputExitsOne) {
  const auto r = run_cli({"--command", "sep-analytic", "--out", "/nonexistent-dir/x.csv"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, SepSweepRowContract) {
  const auto r = run_cli({"--command", "sep-sweep", "--error-model", "channel", "--n", "16", "--gamma1-db", "5",
                          "--gamma2-db", "5", "--sweep", "sigma_delta_ratio:0.001,0.01,0.1,1", "--trials", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 5);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "sigma_delta_ratio,sep_analytic,sep_mc,sep_mc_stderr,trials");
  EXPECT_EQ(count_lines(r.err), 1);
}

TEST(Cli, BeampatternGridContract) {
  const auto r = run_cli({"--command", "beampattern", "--n", "8", "--l", "2", "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 362);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "phi_rad,power,stderr");
}

TEST(Cli, ByteIdenticalAcrossRunsAndThreads) {
  const std::vector<std::string> base{"--command", "sep-sweep", "--error-model", "closed-loop", "--n", "12",
                                      "--gamma1-db", "8", "--gamma2-db", "8", "--sweep", "rho_tau_db:0,10",
                                      "--trials", "700", "--seed", "77"};
  auto one = base, many = base;
  one.insert(one.end(), {"--threads", "1"});
  many.insert(many.end(), {"--threads", "4"});
  const auto a = run_cli(one), b = run_cli(one), c = run_cli(many);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}

TEST(Cli, WritesFileAndFullPrecision) {
  const auto path = fs::temp_directory_path() / "beamforge_test_out.csv";
  fs::remove(path);
  const auto r = run_cli({"--command", "atau", "--error-model", "closed-loop", "--rho-tau-db", "10", "--out",
                          path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "mean_phasor_sq,mean_phasor_stderr,a_tau");
  const double v = std::stod(row.substr(0, row.find(',')));
  const double ratio = std::cyl_bessel_i(1.0, 10.0) / std::cyl_bessel_i(0.0, 10.0);
  EXPECT_NEAR(v, ratio * ratio, 1e-10);
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Cli, SweepAxisRequiresMatchingModel) {
  EXPECT_THROW(parse_config({"--command", "sep-analytic", "--sweep", "rho_tau_db:1"}), ConfigError);
  EXPECT_THROW(parse_config({"--command", "sep-analytic", "--error-model", "open-loop", "--sweep", "rho_tau_db:1"}),
               ConfigError);
  EXPECT_NO_THROW(parse_config({"--command", "sep-analytic", "--error-model", "open-loop", "--sweep", "r_max_ratio:0,0.1"}));
  EXPECT_THROW(parse_config({"--command", "sep-sweep"}), ConfigError);
  EXPECT_THROW(parse_config({"--command", "sep-mc", "--sweep", "N:1,x"}), ConfigError);
}

#ifdef BEAMFORGE_CLI_PATH
TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& args) {
    const int s = std::system((std::string(BEAMFORGE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--command sep-analytic --n 16"), 0);
  EXPECT_EQ(status("--command sep-analytic --unknown"), 2);
  EXPECT_EQ(status("--command sep-analytic --out /nonexistent-dir/x.csv"), 1);
}
#endif
