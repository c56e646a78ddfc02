#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "support/temp_dir.hpp"

using dcar::testing::slurp;
using dcar::testing::spit;
using dcar::testing::TempDir;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(DCAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::string small_synth(int dim = 5) {
  return "synth --events 2 --train-per-event 5 --test-per-event 3 --frames 60 --planted-dim 2 --dim " +
         std::to_string(dim) + " ";
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --manifest"), 1);
  EXPECT_EQ(run("--set model.nonsense=1 eval /dev/null"), 1);
}

TEST(Cli, MissingInputIsDataError) {
  TempDir dir;
  EXPECT_EQ(run("train --manifest " + q(dir / "nope.csv") + " --model " + q(dir / "m")), 2);
  spit(dir / "bad.pred", "pred-v1 2 a b\nt1 a z 0 0\n");
  EXPECT_EQ(run("eval " + q(dir / "bad.pred")), 2);
}

TEST(Cli, EndToEndPipeline) {
  TempDir dir;
  ASSERT_EQ(run(small_synth() + "--out " + q(dir.path())), 0);
  const std::string common = "--set model.components=2 model.reduced_dim=2 optimizer.max_iterations=10 ";
  ASSERT_EQ(run(common + "train --manifest " + q(dir / "manifest.csv") + " --model " +
                q(dir / "model.txt") + " --trace " + q(dir / "trace.csv")),
            0);
  ASSERT_EQ(run("predict --model " + q(dir / "model.txt") + " --manifest " +
                q(dir / "manifest.csv") + " --out " + q(dir / "test.pred")),
            0);
  ASSERT_EQ(run("eval " + q(dir / "test.pred") + " --report " + q(dir / "report.csv")), 0);
  EXPECT_EQ(slurp(dir / "report.csv").rfind("method,event,accuracy,fscore,far,miss_rate\n", 0),
            0u);
  EXPECT_EQ(run("--seed-synth 3 synth --kind components --per-event 4 --out " + q(dir / "c")), 0);
  EXPECT_EQ(run("metric-compare " + q(dir / "c/components.gmm") + " --k 1-3 --out " +
                q(dir / "pc.csv")),
            0);
  EXPECT_EQ(slurp(dir / "pc.csv").rfind("metric,k,pc\n", 0), 0u);
}

TEST(Cli, DimensionMismatchIsDataError) {
  TempDir dir;
  ASSERT_EQ(run(small_synth() + "--out " + q(dir / "a")), 0);
  ASSERT_EQ(run(small_synth(6) + "--out " + q(dir / "b")), 0);
  ASSERT_EQ(run("--set model.representation=mv-vector train --manifest " +
                q(dir / "a/manifest.csv") + " --model " + q(dir / "m.txt")),
            0);
  EXPECT_EQ(run("predict --model " + q(dir / "m.txt") + " --manifest " +
                q(dir / "b/manifest.csv") + " --out " + q(dir / "p.pred")),
            2);
}
