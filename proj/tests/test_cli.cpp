#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// stdout only; stderr goes to a separate capture so JSON stays parseable
CliResult gwalk_cli(const std::string& args, std::string* err = nullptr) {
  const std::string err_path = ::testing::TempDir() + "gwalk_cli_stderr.txt";
  const std::string cmd = std::string("\"") + GWALK_CLI + "\" " + args + " 2>\"" + err_path + "\"";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (const std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (err) {
    std::string text;
    if (FILE* f = fopen(err_path.c_str(), "r")) {
      while (const std::size_t n = fread(buf.data(), 1, buf.size(), f)) text.append(buf.data(), n);
      fclose(f);
    }
    *err = text;
  }
  std::remove(err_path.c_str());
  return r;
}

std::string config(const std::string& name) { return std::string("\"") + GWALK_CONFIG_DIR + "/" + name + "\""; }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const CliResult help = gwalk_cli("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"validate", "solve-r", "limits", "sweep-q", "simulate", "mc-lln", "mc-clt", "kms", "oracle-dp"})
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(gwalk_cli("").code, 2);
  EXPECT_EQ(gwalk_cli("frobnicate").code, 2);
  EXPECT_EQ(gwalk_cli("limits --q abc").code, 2);
  EXPECT_EQ(gwalk_cli("limits --symmetric 3 --q 0.1").code, 2);
  EXPECT_EQ(gwalk_cli("limits --q 0.1 --metric taxicab").code, 2);
  EXPECT_EQ(gwalk_cli("limits --config /nonexistent/config.json").code, 2);
}

TEST(Cli, ValidateReportsEachViolation) {
  const CliResult ok = gwalk_cli("validate --symmetric 5");
  EXPECT_EQ(ok.code, 0);
  EXPECT_TRUE(json::parse(ok.out)["valid"].get<bool>());
  EXPECT_EQ(gwalk_cli("validate --kernel " + config("kernel_asymmetric.json")).code, 0);

  std::string err;
  const CliResult bad_q = gwalk_cli("validate --q 0.6", &err);
  EXPECT_EQ(bad_q.code, 2);
  EXPECT_NE(err.find("0.6"), std::string::npos);

  // window 1 loses 0.01 of its mass
  json k = json::parse(gwalk_cli("solve-r --symmetric 3 --lambda 0.5").out);
  json p = json::array();
  for (const auto& e : k["R"]) {
    const int i = e["i"];
    const double v = (i == 1 && e["j"] == 2 && e["k"] == 1) ? 0.24 : 0.25;
    p.push_back({{"i", i}, {"j", e["j"]}, {"k", e["k"]}, {"value", v}});
  }
  const std::string doc = json{{"N", 3}, {"p", p}}.dump();
  const CliResult bad_row = gwalk_cli("validate --kernel '" + doc + "'", &err);
  EXPECT_EQ(bad_row.code, 2);
  const json rep = json::parse(bad_row.out);
  EXPECT_FALSE(rep["valid"].get<bool>());
  ASSERT_EQ(rep["violations"].size(), 1u);
  const json& v = rep["violations"][0];
  EXPECT_EQ(v["window"], 1);
  EXPECT_NEAR(v["deficit"].get<double>(), 0.01, 1e-12);
  EXPECT_NE(v["message"].get<std::string>().find("0.01"), std::string::npos);
}

TEST(Cli, SolveRAndLimits) {
  const json r = json::parse(gwalk_cli("solve-r --symmetric 5 --lambda 1").out);
  for (const auto& e : r["R"]) EXPECT_NEAR(e["value"].get<double>(), 0.25, 1e-10);

  const CliResult asym = gwalk_cli("limits --asymmetric --oracle");
  ASSERT_EQ(asym.code, 0);
  const json a = json::parse(asym.out);
  EXPECT_NEAR(a["limits"]["gamma"].get<double>(), 0.272913, 5e-6);
  EXPECT_NEAR(a["limits"]["sigma2"].get<double>(), 0.587598, 5e-6);
  EXPECT_LT(a["abs_delta"]["gamma"].get<double>(), 5e-6);

  const json f = json::parse(gwalk_cli("limits --symmetric 6 --metric fenced").out);
  EXPECT_NEAR(f["gamma"].get<double>(), 28.0 / 30.0, 1e-9);

  const CliResult cfg = gwalk_cli("limits --config " + config("limits_asymmetric_fenced.json"));
  EXPECT_EQ(cfg.code, 0);
  EXPECT_EQ(json::parse(cfg.out)["limits"]["metric"], "fenced");
}

TEST(Cli, SweepMatchesClosedForms) {
  const CliResult s = gwalk_cli("sweep-q --q-grid 0.05,0.25,0.45");
  ASSERT_EQ(s.code, 0);
  std::istringstream lines(s.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "q,gamma_word,sigma2_word,gamma_F,sigma2_F,cf_gamma_word,cf_sigma2_word,cf_gamma_F,cf_sigma2_F,max_abs_delta");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_LT(std::stod(line.substr(line.rfind(',') + 1)), 1e-9) << line;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(gwalk_cli("sweep-q --q-grid 0.5").code, 2);
}

TEST(Cli, SimulateIsSeeded) {
  const CliResult a = gwalk_cli("simulate --asymmetric --n-steps 50 --seed 4");
  const CliResult b = gwalk_cli("simulate --asymmetric --n-steps 50 --seed 4");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "n,word_len,metric_len");
  EXPECT_EQ(gwalk_cli("simulate --asymmetric --n-steps 50 --start 'A(1,2,+)A(1,3,+)'").code, 2);
}

TEST(Cli, MonteCarloExitCodes) {
  const CliResult lln = gwalk_cli("mc-lln --symmetric 3 --n-steps 5000 --n-paths 100 --seed 7");
  EXPECT_EQ(lln.code, 0);
  EXPECT_TRUE(json::parse(lln.out)["pass"].get<bool>());
  EXPECT_EQ(gwalk_cli("mc-lln --symmetric 3 --n-steps 5000 --n-paths 100 --seed 7 --gamma-shift 0.05").code, 1);
  EXPECT_EQ(gwalk_cli("mc-clt --symmetric 3 --n-steps 10000 --n-paths 1000 --seed 7").code, 0);
  EXPECT_EQ(gwalk_cli("mc-clt --symmetric 3 --n-steps 10000 --n-paths 1000 --seed 7 --gamma-shift 0.05").code, 1);
  EXPECT_EQ(gwalk_cli("mc-clt --symmetric 3 --n-steps 100 --n-paths 1000").code, 2);
  EXPECT_EQ(gwalk_cli("mc-clt --symmetric 3 --n-steps 10000 --n-paths 500").code, 2);
}

TEST(Cli, KmsAndOracle) {
  const CliResult k = gwalk_cli("kms --config " + config("kms.json"));
  ASSERT_EQ(k.code, 0);
  const json rows = json::parse(k.out)["rows"];
  EXPECT_EQ(rows.size(), 10u);
  for (const auto& row : rows) EXPECT_LT(row["abs_diff"].get<double>(), 1e-12);

  const CliResult o = gwalk_cli("oracle-dp --config " + config("oracle_hitting.json"));
  ASSERT_EQ(o.code, 0);
  const json d = json::parse(o.out);
  EXPECT_NEAR(d["value"].get<double>(), d["solver"].get<double>(), d["tail_bound"].get<double>() + 1e-12);
  EXPECT_EQ(gwalk_cli("oracle-dp --symmetric 3 --series nonsense").code, 2);
}
