#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

// LTC_CLI_PATH is injected by the build: the path of the `ltc` binary.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(LTC_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf;
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Matches tiny_config() in the trainer tests: small nets, 8 envs, fast runs.
const char* kTinyConfig =
    "env.task = underarm\n"
    "env.num_envs = 8\n"
    "env.episode_length = 10\n"
    "net.hidden = 16,16\n"
    "shape.corpus_per_category = 6\n"
    "shape.points_per_cloud = 128\n"
    "train.seed = 42\n"
    "train.total_env_steps = 384\n"
    "train.horizon = 8\n"
    "train.epochs = 2\n"
    "train.minibatches = 2\n"
    "train.eval_every_updates = 4\n"
    "train.eval_episodes = 2\n";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const {
    return sub.empty() ? path.string() : (path / sub).string();
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli rejects bad invocations with exit code 2") {
  CHECK(run_cli("train --out /tmp/nope").exit_code == 2);       // no config, no resume
  CHECK(run_cli("train --config /does/not/exist --out /tmp/nope").exit_code == 2);
  CHECK(run_cli("nonsense-subcommand").exit_code == 2);
  CHECK(run_cli("eval --checkpoint /does/not/exist.ckpt").exit_code == 2);
  CHECK(run_cli("verify --suite bogus").exit_code == 2);
  CHECK(run_cli("plot-data --metrics /does/not/exist.csv --out /tmp/nope.csv").exit_code == 2);
}

TEST_CASE("cli rejects a config with an unknown key") {
  TempDir dir("ltc_cli_badkey");
  write_file(dir.str("bad.cfg"), "train.serd = 1\n");
  const RunResult r = run_cli("train --config " + dir.str("bad.cfg") + " --out " + dir.str("out"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("train.serd") != std::string::npos);
}

TEST_CASE("cli train produces the run directory artifacts") {
  TempDir dir("ltc_cli_train");
  write_file(dir.str("run.cfg"), kTinyConfig);
  const RunResult r =
      run_cli("train --config " + dir.str("run.cfg") + " --out " + dir.str("out"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("env_steps = 384") != std::string::npos);
  CHECK(fs::exists(dir.path / "out" / "resolved-config.txt"));
  CHECK(fs::exists(dir.path / "out" / "metrics.csv"));
  CHECK(fs::exists(dir.path / "out" / "eval.csv"));
  CHECK(fs::exists(dir.path / "out" / "checkpoint_final.ckpt"));

  SUBCASE("the resolved config replays to an identical run") {
    const RunResult r2 = run_cli("train --config " + (dir.path / "out" / "resolved-config.txt").string() +
                                 " --out " + dir.str("replay"));
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.str("replay") + "/metrics.csv") ==
          read_file(dir.str("out") + "/metrics.csv"));
    CHECK(read_file(dir.str("replay") + "/checkpoint_final.ckpt") ==
          read_file(dir.str("out") + "/checkpoint_final.ckpt"));
  }

  SUBCASE("a seed override changes the run") {
    const RunResult r2 = run_cli("train --config " + dir.str("run.cfg") + " --seed 43 --out " +
                                 dir.str("seed43"));
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.str("seed43") + "/metrics.csv") !=
          read_file(dir.str("out") + "/metrics.csv"));
  }

  SUBCASE("eval runs deterministically and honors --dump") {
    const std::string ckpt = (dir.path / "out" / "checkpoint_final.ckpt").string();
    const RunResult e1 = run_cli("eval --checkpoint " + ckpt + " --episodes 4");
    const RunResult e2 = run_cli("eval --checkpoint " + ckpt + " --episodes 4");
    CHECK(e1.exit_code == 0);
    CHECK(e1.output == e2.output);
    CHECK(e1.output.find("episodes = 4") != std::string::npos);
    CHECK(e1.output.find("success_rate = ") != std::string::npos);

    const RunResult ed = run_cli("eval --checkpoint " + ckpt + " --episodes 2 --disturb on --dump " +
                                 dir.str("dumps"));
    CHECK(ed.exit_code == 0);
    CHECK(ed.output.find("disturb = on") != std::string::npos);
    const std::string traj = read_file(dir.str("dumps") + "/episode_0000.csv");
    CHECK(traj.rfind("# ltc-traj-v1", 0) == 0);
    CHECK(traj.find("step,") != std::string::npos);
  }

  SUBCASE("a stopped run resumed from its checkpoint matches an uninterrupted one") {
    const RunResult half = run_cli("train --config " + dir.str("run.cfg") + " --stop-steps 192 " +
                                   "--out " + dir.str("half"));
    CHECK(half.exit_code == 0);
    CHECK(half.output.find("env_steps = 192") != std::string::npos);
    const RunResult rest = run_cli("train --resume " + dir.str("half") +
                                   "/checkpoint_final.ckpt --out " + dir.str("rest"));
    CHECK(rest.exit_code == 0);
    CHECK(rest.output.find("env_steps = 384") != std::string::npos);
    CHECK(read_file(dir.str("rest") + "/checkpoint_final.ckpt") ==
          read_file(dir.str("out") + "/checkpoint_final.ckpt"));
  }

  SUBCASE("plot-data aggregates seed metrics into mean and variance rows") {
    const RunResult s2 = run_cli("train --config " + dir.str("run.cfg") + " --seed 43 --out " +
                                 dir.str("s43"));
    REQUIRE(s2.exit_code == 0);
    const RunResult pd = run_cli("plot-data --metrics " + dir.str("out") + "/metrics.csv " +
                                 "--metrics " + dir.str("s43") + "/metrics.csv --out " +
                                 dir.str("agg.csv") + " --column return_mean_100 --window 2");
    CHECK(pd.exit_code == 0);
    CHECK(pd.output.find("rows = 6") != std::string::npos);  // 384 steps / 64 per update
    std::ifstream agg(dir.str("agg.csv"));
    std::string header;
    std::getline(agg, header);
    CHECK(header == "env_steps,mean,variance,smoothed_mean");
    int rows = 0;
    std::string line;
    while (std::getline(agg, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 6);

    const RunResult bad = run_cli("plot-data --metrics " + dir.str("out") + "/metrics.csv " +
                                  "--out " + dir.str("bad.csv") + " --column not_a_column");
    CHECK(bad.exit_code == 2);
  }
}

TEST_CASE("cli verify advantage suite passes and reports per-check lines") {
  const RunResult r = run_cli("verify --suite advantage");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("[PASS]") != std::string::npos);
  CHECK(r.output.find("[FAIL]") == std::string::npos);
  CHECK(r.output.find("fuzz 1e6") != std::string::npos);
}

TEST_CASE("cli verify lyapunov suite passes") {
  const RunResult r = run_cli("verify --suite lyapunov");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("[FAIL]") == std::string::npos);
}
