#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    static fs::path const dir = [] {
        fs::path d = fs::temp_directory_path() / ("pbmo_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int pbmo(std::string const& args) {
    std::string const cmd = std::string(PBMO_CLI_PATH) + " " + args + " 2>/dev/null";
    int const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(std::string const& name) { return std::string(PBMO_CONFIG_DIR) + "/" + name; }

std::string slurp(fs::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(std::string const& name, std::string const& text) {
    fs::path const p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

std::string field(std::string const& csv, std::size_t row, std::string const& column) {
    std::istringstream in(csv);
    std::string header, line, cell;
    std::getline(in, header);
    for (std::size_t i = 0; i <= row; ++i) std::getline(in, line);
    std::istringstream hs(header), ls(line);
    std::string name;
    while (std::getline(hs, name, ',')) {
        std::getline(ls, cell, ',');
        if (name == column) return cell;
    }
    return "";
}

}  // namespace

TEST(Cli, ConstantFieldHasZeroSeminorm) {
    fs::path const out = scratch() / "constant";
    ASSERT_EQ(pbmo("pbmo --config " + config("constant.ini") + " --out " + out.string()), 0);
    std::string const csv = slurp(out / "pbmo.csv");
    EXPECT_EQ(field(csv, 0, "value"), "0");
    EXPECT_EQ(field(csv, 1, "value"), "0");
    EXPECT_EQ(field(slurp(out / "norm_equivalence.csv"), 0, "ratio"), "1");
}

TEST(Cli, InputErrorsExitWithTwo) {
    std::string const out = " --out " + (scratch() / "errors").string();
    EXPECT_EQ(pbmo("nonsense --config " + config("constant.ini") + out), 2);
    EXPECT_EQ(pbmo("pbmo --config /nonexistent/config.ini" + out), 2);
    EXPECT_EQ(pbmo("pbmo" + out), 2);
    EXPECT_EQ(pbmo("pbmo --config " + config("constant.ini") + " --refine abc" + out), 2);
    EXPECT_EQ(pbmo("qh --config " + write_config("typo.ini", "[domain]\nkindd = disk\n").string() + out), 2);
    EXPECT_EQ(pbmo("qh --config " + write_config("section.ini", "[domian]\nkind = disk\n").string() + out), 2);
    EXPECT_EQ(pbmo("qh --config " + write_config("garbage.ini", "not a key value line\n").string() + out), 2);
    EXPECT_EQ(pbmo("qh --config " + write_config("number.ini", "[domain]\nkind = disk\nh = 0.1x\n").string() + out), 2);
    EXPECT_EQ(pbmo("solve --config " + write_config("bc.ini", "[domain]\nkind = interval\nh = 1/16\n[solve]\nboundary = exact:nope\n").string() + out), 2);
}

TEST(Cli, ChainRejectsLargeDelta) {
    fs::path const cfg = write_config("chain.ini", "[domain]\nkind = disk\nh = 1/32\n[cylinder]\nT = 1\n[chain]\ndelta = 2\n");
    EXPECT_EQ(pbmo("chain --config " + cfg.string() + " --out " + (scratch() / "chain").string()), 2);
}

TEST(Cli, VerdictFailureExitsWithOne) {
    fs::path const cfg = write_config("jn.ini", "[domain]\nkind = disk\nh = 1/32\n[field]\nkind = log_distance\ntstep = 1/32\n"
                                                "[jn]\nmin_side_cells = 4\nrandom_count = 8\nmin_pass = 1.01\n");
    EXPECT_EQ(pbmo("jn --config " + cfg.string() + " --out " + (scratch() / "jn").string()), 1);
}

TEST(Cli, SolveReportsExactError) {
    fs::path const out = scratch() / "solve";
    ASSERT_EQ(pbmo("solve --config " + config("heat_exp_1d.ini") + " --out " + out.string()), 0);
    EXPECT_LE(std::stod(field(slurp(out / "solve_summary.csv"), 0, "max_error")), 5e-3);
}

TEST(Cli, AllIsDeterministicAndDocumented) {
    fs::path const a = scratch() / "all_a", b = scratch() / "all_b", c = scratch() / "all_c";
    std::string const cfg = " --config " + config("mask_lshape.ini");
    ASSERT_EQ(pbmo("all" + cfg + " --out " + a.string()), 0);
    ASSERT_EQ(pbmo("all" + cfg + " --out " + b.string()), 0);
    ASSERT_EQ(pbmo("chain" + cfg + " --seed 99 --out " + c.string()), 0);

    auto const manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    EXPECT_EQ(manifest["config_hash"], nlohmann::json::parse(slurp(b / "manifest.json"))["config_hash"]);
    EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 64u);
    EXPECT_EQ(manifest["operations"].size(), 12u);
    std::size_t csvs = 0;
    for (auto const& op : manifest["operations"]) {
        EXPECT_TRUE(op.contains("seconds"));
        for (auto const& f : op["files"]) {
            std::string const name = f.get<std::string>();
            ASSERT_TRUE(fs::exists(a / name)) << name;
            std::string const body = slurp(a / name);
            EXPECT_EQ(body, slurp(b / name)) << name;
            EXPECT_EQ(body.find('\r'), std::string::npos);
            EXPECT_EQ(body.back(), '\n');
            EXPECT_NE(body.substr(0, body.find('\n')).find_first_of("abcdefghijklmnopqrstuvwxyz"), std::string::npos) << name;
            ++csvs;
        }
    }
    EXPECT_GT(csvs, 15u);
    for (auto const& e : fs::directory_iterator(a)) EXPECT_NE(e.path().extension(), ".tmp");
    EXPECT_NE(slurp(a / "chains.csv"), slurp(c / "chains.csv"));
}

namespace {

struct RemoveScratch : ::testing::Environment {
    void TearDown() override {
        std::error_code ec;
        fs::remove_all(scratch(), ec);
    }
};

[[maybe_unused]] auto* const kRemoveScratch = ::testing::AddGlobalTestEnvironment(new RemoveScratch);

}  // namespace
