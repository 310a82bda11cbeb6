#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hglue/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = HGLUE_CLI_PATH;
const std::string kConfigs = HGLUE_CONFIG_DIR;

struct Result {
    int code;
    std::string output;
};

Result run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / ("hglue_cli_" + std::to_string(::getpid()) + ".log");
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("hglue_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string out(const std::string& sub = "") const { return " --out-dir " + (dir / sub).string(); }
    fs::path dir;
};

} // namespace

TEST_F(Cli, RunWritesRowsAndManifest) {
    const auto r = run("run --config " + kConfigs + "/ou_minimal.ini" + out());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream in(dir / "ou_traj.csv");
    const auto t = hglue::read_trajectory(in);
    EXPECT_EQ(t.rows.size(), 400u);
    EXPECT_EQ(t.hash.size(), 16u);
    EXPECT_TRUE(fs::exists(dir / "ou_manifest.json"));
    EXPECT_NE(slurp(dir / "ou_manifest.json").find(t.hash), std::string::npos);
}

TEST_F(Cli, RepeatedRunsAreIdentical) {
    ASSERT_EQ(run("run --config " + kConfigs + "/ou_minimal.ini" + out("a")).code, 0);
    ASSERT_EQ(run("run --config " + kConfigs + "/ou_minimal.ini --workers 3" + out("b")).code, 0);
    EXPECT_EQ(slurp(dir / "a/ou_traj.csv"), slurp(dir / "b/ou_traj.csv"));
    ASSERT_EQ(run("run --config " + kConfigs + "/ou_minimal.ini --seed 43" + out("c")).code, 0);
    EXPECT_NE(slurp(dir / "a/ou_traj.csv"), slurp(dir / "c/ou_traj.csv"));
}

TEST_F(Cli, BadKeyIsUsageError) {
    const auto r = run("run --config " + kConfigs + "/bad_key.ini" + out());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("stifness"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingFilesAreIoErrors) {
    EXPECT_EQ(run("run --config " + (dir / "nope.ini").string() + out()).code, 3);
    EXPECT_EQ(run("analyze " + (dir / "nope.csv").string() + out()).code, 3);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("diagnose no-such-suite" + out()).code, 2);
}

TEST_F(Cli, EnvironmentSetsDefaultOutDir) {
    const std::string cmd = "HGLUE_OUT_DIR=" + (dir / "env").string() + " " + kCli + " run --config " + kConfigs +
                            "/ou_minimal.ini > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(fs::exists(dir / "env" / "ou_traj.csv"));
}

TEST_F(Cli, AnalyzeConstantFrame) {
    {
        std::ofstream f(dir / "still.csv");
        f << "# manifest-hash 0123\nstep,replica,time,coord_0,coord_1,coord_2,coord_3,coord_4,coord_5\n";
        for (int s = 1; s <= 20; ++s)
            for (int b = 0; b < 3; ++b) f << s << ',' << b << ',' << 0.1 * s << ",0,0,0,1,0,0\n";
    }
    const auto r = run("analyze " + (dir / "still.csv").string() + out());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream series(dir / "still_series.csv");
    std::string line;
    std::getline(series, line);
    EXPECT_EQ(line, "# manifest-hash 0123");
    std::getline(series, line);
    EXPECT_EQ(line, "step,replica,time,rg");
    while (std::getline(series, line)) EXPECT_EQ(line.substr(line.rfind(',') + 1), "0.5");
    std::ifstream m(dir / "still_rmsd.txt");
    std::getline(m, line);
    EXPECT_EQ(line, "# manifest-hash 0123");
    std::ifstream again(dir / "still_rmsd.txt");
    const auto mat = hglue::read_matrix(again);
    EXPECT_EQ(mat.rows(), 3);
}

TEST_F(Cli, AnalyzeTorsionAngles) {
    ASSERT_EQ(run("run --config " + kConfigs + "/torsion_ring.ini" + out()).code, 0);
    const auto r = run("analyze " + (dir / "torsion_traj.csv").string() + " --observables angle:0 --max-lag 20" + out());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream acf(dir / "torsion_traj_acf.csv");
    std::string line;
    std::getline(acf, line);
    std::getline(acf, line);
    EXPECT_EQ(line, "series,replica,lag_index,lag_time,acf");
    std::getline(acf, line);
    EXPECT_EQ(line, "angle_0,0,0,0,1");
    std::ifstream corr(dir / "torsion_traj_corr.txt");
    const auto c = hglue::read_matrix(corr);
    EXPECT_EQ(c.rows(), 2);
}

TEST_F(Cli, AnalyzeMalformedRowReportsLine) {
    {
        std::ofstream f(dir / "bad.csv");
        f << "step,replica,time,coord_0\n1,0,0.1,0.5\n2,0,0.2,zzz\n";
    }
    const auto r = run("analyze " + (dir / "bad.csv").string() + out());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
}

TEST_F(Cli, LatticeRun) {
    const auto r = run("run --config " + kConfigs + "/lattice_glue.ini" + out());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream in(dir / "lattice_lattice.csv");
    EXPECT_EQ(hglue::read_trajectory(in).rows.size(), 32u * 6u);
}

TEST_F(Cli, NoiseFusionPasses) {
    const auto r = run("diagnose noise-fusion" + out());
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string report = slurp(dir / "diagnose_noise-fusion.csv");
    EXPECT_NE(report.find("name,measured,band_lo,band_hi,verdict"), std::string::npos);
    EXPECT_EQ(report.find("FAIL"), std::string::npos);
}

TEST_F(Cli, KlBudgetPasses) {
    const auto r = run("diagnose kl-budget --paths 4000" + out());
    EXPECT_EQ(r.code, 0) << r.output;
}
