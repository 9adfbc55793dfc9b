#include "drc/eval/run_config.hpp"
#include "drc/nn/checkpoint.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace drc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status = -1;
  std::string output;
};

Run cli(const std::string& args, const fs::path& scratch) {
  const auto log = scratch / "cli_output.txt";
  const std::string cmd = std::string(DRC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

const char* kBandit =
    "env.game = bandit\n"
    "train.batch_size = 4\n"
    "train.unroll_length = 5\n"
    "train.total_steps = 400\n"
    "train.actors = 2\n"
    "train.checkpoint_every = 10\n"
    "eval.episodes = 50\n";

}  // namespace

TEST_SUITE("cli_config") {

TEST_CASE("param-count reports the itemized total") {
  const auto dir = test::temp_dir("cli_params");
  const auto r = cli("param-count --set net.depth=1 --set net.repeats=1", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("1813574") != std::string::npos);
  const auto j = cli("param-count --json --out " + (dir / "o").string(), dir);
  CHECK(j.status == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "o" / "param_count.json"))["total"] == 2115142);
}

TEST_CASE("train is byte-reproducible and records its config") {
  const auto dir = test::temp_dir("cli_train");
  { std::ofstream(dir / "run.cfg") << kBandit; }
  const std::string base = "--config " + (dir / "run.cfg").string() + " --seed 7 train --out ";
  REQUIRE(cli(base + (dir / "a").string(), dir).status == 0);
  REQUIRE(cli(base + (dir / "b").string(), dir).status == 0);
  const auto a = slurp(dir / "a" / "metrics.jsonl");
  CHECK(std::count(a.begin(), a.end(), '\n') == 20);
  CHECK(a == slurp(dir / "b" / "metrics.jsonl"));
  CHECK(slurp(dir / "a" / "final.ckpt") == slurp(dir / "b" / "final.ckpt"));
  CHECK(fs::exists(dir / "a" / "checkpoints" / "update_00000010.ckpt"));

  const auto recorded = eval::RunConfig::load(dir / "a" / "config.txt");
  CHECK(recorded.seed == 7);
  CHECK(recorded.env.game == "bandit");
  CHECK(recorded.str() == slurp(dir / "a" / "config.txt"));

  REQUIRE(cli("--config " + (dir / "run.cfg").string() + " --seed 8 train --out " + (dir / "c").string(), dir).status == 0);
  CHECK(slurp(dir / "c" / "metrics.jsonl") != a);

  REQUIRE(cli("--config " + (dir / "a" / "config.txt").string() + " train --out " + (dir / "d").string(), dir).status == 0);
  CHECK(slurp(dir / "d" / "metrics.jsonl") == a);
}

TEST_CASE("eval reads a training checkpoint") {
  const auto dir = test::temp_dir("cli_eval");
  { std::ofstream(dir / "run.cfg") << kBandit; }
  const std::string cfg = "--config " + (dir / "run.cfg").string();
  REQUIRE(cli(cfg + " train --out " + (dir / "t").string(), dir).status == 0);
  const auto r = cli(cfg + " eval --checkpoint " + (dir / "t" / "final.ckpt").string() + " --out " +
                         (dir / "e").string(), dir);
  CHECK(r.status == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "e" / "eval.json"));
  CHECK(j["episodes"] == 50);
  CHECK(cli(cfg + " think-eval --checkpoint " + (dir / "t" / "final.ckpt").string(), dir).status == 2);
  CHECK(cli("eval --checkpoint " + (dir / "t" / "final.ckpt").string(), dir).status == 1);
}

TEST_CASE("gen-levels is deterministic and verify-levels certifies the output") {
  const auto dir = test::temp_dir("cli_levels");
  const std::string args = "--seed 4 --set gen.train_count=12 --set gen.test_count=4 --set gen.per_file=5 gen-levels --out ";
  REQUIRE(cli(args + (dir / "a").string(), dir).status == 0);
  REQUIRE(cli(args + (dir / "b").string(), dir).status == 0);
  CHECK(slurp(dir / "a" / "unfiltered" / "train" / "002.txt") == slurp(dir / "b" / "unfiltered" / "train" / "002.txt"));
  CHECK(slurp(dir / "a" / "unfiltered" / "test" / "000.txt") == slurp(dir / "b" / "unfiltered" / "test" / "000.txt"));
  const auto v = cli("verify-levels --levels " + (dir / "a").string() + " --out " + (dir / "v").string(), dir);
  CHECK(v.status == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "v" / "verify.json"))["solved"] == 16);

  const auto f = cli("--set filter.policy=random --set filter.attempts=2 filter-levels --levels " + (dir / "a").string() +
                         " --out " + (dir / "f").string(), dir);
  CHECK(f.status == 0);
  CHECK(f.output.find("train: kept") != std::string::npos);
}

TEST_CASE("config errors exit with status 2") {
  const auto dir = test::temp_dir("cli_errors");
  CHECK(cli("--set bogus=1 param-count", dir).status == 2);
  CHECK(cli("--set env.game=chess param-count", dir).status == 2);
  CHECK(cli("--set train.batch_size=0 param-count", dir).status == 2);
  CHECK(cli("train", dir).status == 2);
  CHECK(cli("no-such-command", dir).status != 0);
}

TEST_CASE("gradcheck subcommand passes") {
  const auto dir = test::temp_dir("cli_grad");
  const auto r = cli("gradcheck --seeds 1", dir);
  CHECK(r.status == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
}

}  // TEST_SUITE
