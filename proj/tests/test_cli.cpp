#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHAPECI_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string& args) {
  const std::string cmd = std::string(SHAPECI_CLI) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  pclose(pipe);
  return out;
}

std::string temp_path(const std::string& name) { return testing::TempDir() + name; }

}  // namespace

TEST(Cli, BoundaryPointExitsThree) {
  EXPECT_EQ(run_cli("ci --function linear:1 --class monotone --n 1024 --t0 0.5"), 3);
}

TEST(Cli, EmptyInputExitsTwo) {
  const std::string path = temp_path("empty.csv");
  std::ofstream(path).close();
  EXPECT_EQ(run_cli("ci --csv " + path + " --class monotone --sigma 1"), 2);
}

TEST(Cli, BadArgumentsExitTwo) {
  EXPECT_EQ(run_cli("ci --function cubic --class monotone"), 2);
  EXPECT_EQ(run_cli("modulus --function square --class monotone --eps 0.01"), 2);
  EXPECT_EQ(run_cli("bench --suite nonsense"), 2);
  EXPECT_EQ(run_cli("rates --config /nonexistent/plan.json"), 2);
}

TEST(Cli, SimulatedSeriesRoundTrip) {
  const std::string path = temp_path("series.csv");
  EXPECT_EQ(run_cli("simulate --function linear:1 --model regression --class monotone --n 512 --sigma 0.5 --seed 4 -o " +
                    path),
            0);
  EXPECT_EQ(run_cli("ci --csv " + path + " --class monotone --sigma 0.5"), 0);
  EXPECT_EQ(run_cli("ci --csv " + path + " --class convex"), 0);
}

// Synthetic monotone series with known noise: the reported interval covers
// f(0) = 0 in at least 95% of seeded reruns, up to binomial error.
TEST(Cli, SeededRerunsCover) {
  const std::string path = temp_path("rerun.csv");
  const int reruns = 60;
  int covered = 0;
  for (int s = 1; s <= reruns; ++s) {
    ASSERT_EQ(run_cli("simulate --function odd:1,3 --model regression --class monotone --n 1024 --sigma 1 --seed " +
                      std::to_string(s) + " -o " + path),
              0);
    const std::string out = capture("ci --csv " + path + " --class monotone --sigma 1");
    const auto lo = out.find("\"lower\":");
    const auto hi = out.find("\"upper\":");
    ASSERT_NE(lo, std::string::npos) << out;
    ASSERT_NE(hi, std::string::npos) << out;
    const double lower = std::stod(out.substr(lo + 8));
    const double upper = std::stod(out.substr(hi + 8));
    covered += lower <= 0.0 && 0.0 <= upper;
  }
  EXPECT_GE(covered, 53);
}

TEST(Cli, ModulusPrintsTable) {
  const std::string out = capture("modulus --function linear:1 --class convex --eps 0.01,0.02 --grid 513");
  EXPECT_NE(out.find("eps"), std::string::npos);
  EXPECT_NE(out.find("0.02"), std::string::npos);
}

TEST(Cli, ConstantsSuitePasses) {
  const std::string dir = temp_path("bench_constants");
  EXPECT_EQ(run_cli("bench --suite constants --alpha 0.05 --reps 1000 --n 4096 --out-dir " + dir), 0);
}

TEST(Cli, ProvenanceLine) {
  const std::string out = capture("simulate --function square --model white_noise --class convex --n 256 --seed 9");
  EXPECT_EQ(out.rfind("# config_hash=", 0), 0u) << out.substr(0, 80);
  EXPECT_NE(out.find("seed=9"), std::string::npos);
}
