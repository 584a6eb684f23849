#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("surropt_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream(dir_ / "c.json") << R"({
  "scenario": {"rows": 2, "cols": 2, "vehicles": 30, "horizon_s": 200},
  "pso": {"swarm_size": 8, "max_fitness_evals": 120, "n_train_small": 8, "n_train_large": 40, "n_reeval": 2},
  "train": {"epochs": 5},
  "harness": {"eval_samples": 4, "sweep_sizes": [16, 32], "sweep_repeats": 1, "sweep_test_rows": 10,
              "runs": 2, "scatter_samples": 10}
})";
    }
    void TearDown() override { fs::remove_all(dir_); }

    Outcome run(const std::string& args) {
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(SURROPT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path dir_;
};

TEST_F(Cli, RunVariantWritesAndListsFiles) {
    const auto r = run("run --variant rs --config " + (dir_ / "c.json").string() + " --seed 1 --out " + (dir_ / "o").string());
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* name : {"run_rs_1.csv", "run_rs_2.csv", "scatter_rs_1.csv", "components.csv", "final_fitness.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "o" / name)) << name;
        EXPECT_NE(r.out.find(name), std::string::npos) << name;
    }
}

TEST_F(Cli, UnknownVariantIsUsageError) {
    EXPECT_EQ(run("run --variant xx").code, 1);
    EXPECT_EQ(run("run").code, 1);
}

TEST_F(Cli, UnknownSubcommandPrintsUsage) {
    const auto r = run("frobnicate");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE((r.out + r.err).find("profile-eval"), std::string::npos);
    EXPECT_EQ(run("").code, 1);
}

TEST_F(Cli, ConfigErrorsExitOne) {
    std::ofstream(dir_ / "bad.json") << R"({"pso": {"lambda": 1.5}})";
    const auto r = run("profile-eval --config " + (dir_ / "bad.json").string() + " --out " + (dir_ / "o").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("lambda"), std::string::npos);
    EXPECT_EQ(run("profile-eval --config " + (dir_ / "missing.json").string()).code, 1);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
    EXPECT_EQ(run("report --out " + (dir_ / "nothing").string()).code, 2);
    std::ofstream(dir_ / "rapl.json") << R"({"energy": {"backend": "rapl", "powercap_root": "/nonexistent"}})";
    EXPECT_EQ(run("profile-eval --config " + (dir_ / "rapl.json").string() + " --out " + (dir_ / "o").string()).code, 2);
}

TEST_F(Cli, ExperimentAllIsDeterministic) {
    const std::string common = " --config " + (dir_ / "c.json").string() + " --seed 3 --out ";
    ASSERT_EQ(run("experiment-all" + common + (dir_ / "a").string()).code, 0);
    ASSERT_EQ(run("experiment-all" + common + (dir_ / "b").string()).code, 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir_ / "a")) {
        ++files;
        EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / entry.path().filename())) << entry.path().filename();
    }
    // eval_cost, sweep, 5 variants x 2 runs, 4 x 2 scatter, components, final_fitness
    EXPECT_EQ(files, 2 + 10 + 8 + 2);
}

TEST_F(Cli, ReportRebuildsSummaries) {
    const std::string out = (dir_ / "o").string();
    ASSERT_EQ(run("run --variant plain --config " + (dir_ / "c.json").string() + " --out " + out).code, 0);
    ASSERT_EQ(run("run --variant ps --config " + (dir_ / "c.json").string() + " --out " + out).code, 0);
    const auto r = run("report --out " + out);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto finals = slurp(dir_ / "o" / "final_fitness.csv");
    EXPECT_NE(finals.find("plain,1,"), std::string::npos);
    EXPECT_NE(finals.find("ps,2,"), std::string::npos);
}

}  // namespace
