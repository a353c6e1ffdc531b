#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() {
    static const fs::path d = [] {
      const auto p = fs::temp_directory_path() / "keyforge_cli_test";
      fs::remove_all(p);
      fs::create_directories(p);
      return p;
    }();
    return d;
  }

  static CliResult run(const std::string& args, const fs::path& cwd = {}) {
    const auto out = dir() / "stdout.txt";
    const auto err = dir() / "stderr.txt";
    const std::string cmd = "cd '" + (dir() / cwd).string() + "' && '" KEYFORGE_CLI "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  // synth -> attack x3 -> train -> report, run from `cwd` into ./out.
  static void pipeline(const fs::path& cwd) {
    const std::string sub = "out";
    const std::string o = " --seed 42 --out-dir " + sub;
    fs::create_directories(dir() / cwd / sub);
    auto run = [&](const std::string& args) { return Cli::run(args, cwd); };
    ASSERT_EQ(run("synth --kind human --n 120 --len 150 --out human.jsonl" + o).code, 0);
    ASSERT_EQ(run("synth --kind automated --n 60 --len 150 --out auto.jsonl" + o).code, 0);
    const std::string src = " --source " + sub + "/human.jsonl";
    ASSERT_EQ(run("attack --kind histogram --n 40 --len 150 --out hist.jsonl" + src + o).code, 0);
    ASSERT_EQ(run("attack --kind statistical --n 40 --len 150 --out stat.jsonl" + src + o).code, 0);
    ASSERT_EQ(run("attack --kind lstm --n 10 --len 150 --epochs 1 --save-model lstm.json --out lstm.jsonl" + src + o)
                  .code,
              0);
    ASSERT_EQ(run("train --kind logistic --human " + sub + "/human.jsonl --automated " + sub +
                  "/auto.jsonl --out logistic.json" + o)
                  .code,
              0);
    ASSERT_EQ(run("report --human " + sub + "/human.jsonl --automated " + sub + "/auto.jsonl --attack histogram=" +
                  sub + "/hist.jsonl --attack statistical=" + sub + "/stat.jsonl --attack lstm=" + sub +
                  "/lstm.jsonl --out report" + o)
                  .code,
              0);
  }
};

}  // namespace

TEST_F(Cli, PipelineIsByteIdenticalOnRerun) {
  pipeline("run1");
  pipeline("run2");
  for (const char* f : {"human.jsonl", "auto.jsonl", "hist.jsonl", "stat.jsonl", "lstm.jsonl", "lstm.json",
                        "logistic.json", "report/baseline.csv", "report/operating.csv", "report/ablation.csv",
                        "report/distances.csv", "report/bounds.json", "report/delta_hist.svg",
                        "report/report.meta.json", "human.jsonl.meta.json"}) {
    ASSERT_TRUE(fs::exists(dir() / "run1" / "out" / f)) << f;
    EXPECT_EQ(slurp(dir() / "run1" / "out" / f), slurp(dir() / "run2" / "out" / f)) << f;
  }
  const auto meta = nlohmann::json::parse(slurp(dir() / "run1" / "out" / "human.jsonl.meta.json"));
  EXPECT_EQ(meta.at("toolkit"), "keyforge");
  EXPECT_EQ(meta.at("seed"), 42);
  EXPECT_EQ(meta.at("config").at("subcommand"), "synth");
  EXPECT_EQ(meta.at("config_hash").get<std::string>().size(), 16u);
}

TEST_F(Cli, SweepHasEightMonotoneRows) {
  fs::create_directories(dir() / "sweep");
  ASSERT_EQ(run("synth --kind human --n 200 --len 150 --out-dir sweep --out human.jsonl").code, 0);
  ASSERT_EQ(run("synth --kind copytype --n 200 --len 150 --seed 43 --out-dir sweep --out copy.jsonl").code, 0);
  ASSERT_EQ(run("attack --kind histogram --source sweep/human.jsonl --n 50 --len 150 --out-dir sweep --out h.jsonl")
                .code,
            0);
  const auto r = run("sweep --human sweep/human.jsonl --attack histogram=sweep/h.jsonl --attack copytype="
                     "sweep/copy.jsonl --t-start 0.27 --t-stop 1.0 --t-step 0.1 --out-dir sweep --out op.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(dir() / "sweep" / "op.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "threshold,frr,apr_histogram,apr_statistical,apr_lstm,apr_copytype");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows.front()[0], "0.27");
  EXPECT_EQ(rows.back()[0], "0.97");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
    EXPECT_LE(std::stod(rows[i][2]), std::stod(rows[i - 1][2]));
    EXPECT_LE(std::stod(rows[i][5]), std::stod(rows[i - 1][5]));
    EXPECT_EQ(rows[i][3], "");
  }
}

TEST_F(Cli, NonidentPrintsVerdict) {
  const auto r = run("nonident --n 200 --len 120");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("auc"), std::string::npos);
  EXPECT_TRUE(r.out.find("PASS") != std::string::npos || r.out.find("FAIL") != std::string::npos);
}

TEST_F(Cli, ErrorsAreMachineReadable) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("synth --kind robot").code, 1);
  EXPECT_EQ(run("--version").code, 0);

  std::ofstream(dir() / "bad.jsonl") << "{\"session_id\": \"a\", \"label\": \"AUTOMATED\"\n";
  auto r = run("features --in bad.jsonl --out f.csv");
  EXPECT_EQ(r.code, 2);
  const auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err.at("error"), "ParseError");
  EXPECT_EQ(err.at("exit_code"), 2);

  std::ofstream(dir() / "flat.jsonl") << R"({"session_id": "a", "label": "HUMAN_COMPOSED", "keys": [1, 2, 3], )"
                                         R"("t_us": [0, 0, 0]})"
                                      << '\n';
  r = run("features --in flat.jsonl --out f.csv");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err).at("error"), "AllTrimmed");
}
