#include <ovmot/cli.hpp>
#include <ovmot/errors.hpp>
#include <ovmot/scene.hpp>

#include "parity_server.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ovmot;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ovmot_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string make_scene(const std::string& name, const std::string& seed, std::vector<std::string> extra = {}) {
        std::vector<std::string> args{"sim", "-o", path(name), "--objects", "6", "--frames", "30", "--seed", seed};
        args.insert(args.end(), extra.begin(), extra.end());
        const CliRun r = cli(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return path(name);
    }

    fs::path dir_;
};

nlohmann::json split(const nlohmann::json& report, const std::string& name) {
    for (const auto& s : report.at("splits")) {
        if (s.at("split") == name) {
            return s;
        }
    }
    return nullptr;
}

} // namespace

TEST_F(CliTest, SimTrackEvalEndToEnd) {
    const auto scene = make_scene("s.json", "3", {"--novel-fraction", "0.5"});
    const CliRun t = cli({"track", scene, "-o", path("hyp.jsonl")});
    ASSERT_EQ(t.code, 0) << t.err;
    ASSERT_TRUE(fs::exists(path("hyp.jsonl")));
    const CliRun e = cli({"eval", "--gt", scene, "--hyp", path("hyp.jsonl"), "--format", "json"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto report = nlohmann::json::parse(e.out);
    const auto all = split(report, "all");
    ASSERT_FALSE(all.is_null());
    EXPECT_EQ(all.at("mota"), 1.0);
    EXPECT_EQ(all.at("ids"), 0);
    EXPECT_TRUE(split(report, "base").at("present").get<bool>());
    EXPECT_TRUE(split(report, "novel").at("present").get<bool>());
}

TEST_F(CliTest, EvalTableAndSelectedSplits) {
    const auto scene = make_scene("s.json", "4");
    ASSERT_EQ(cli({"track", scene, "-o", path("hyp.jsonl")}).code, 0);
    const CliRun e = cli({"eval", "--gt", scene, "--hyp", path("hyp.jsonl"), "--splits", "base", "-o", path("r.json")});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("sAMOTA"), std::string::npos);
    EXPECT_EQ(e.out.find("novel"), std::string::npos);
    std::ifstream in(path("r.json"));
    const auto report = nlohmann::json::parse(in);
    EXPECT_EQ(report.at("splits").size(), 1u);
}

TEST_F(CliTest, TrackWritesJsonLinesToStdout) {
    const auto scene = make_scene("s.json", "5");
    const CliRun t = cli({"track", scene});
    ASSERT_EQ(t.code, 0) << t.err;
    std::istringstream in(t.out);
    EXPECT_EQ(read_tracking_jsonl(in).size(), 6u * 30u);
}

TEST_F(CliTest, SeveralScenesGoToAnOutputDirectory) {
    const auto a = make_scene("a.json", "1");
    const auto b = make_scene("b.json", "2");
    const CliRun t = cli({"track", a, b, "-o", path("out"), "--jobs", "2"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_TRUE(fs::exists(path("out/a.jsonl")));
    EXPECT_TRUE(fs::exists(path("out/b.jsonl")));
    const CliRun single = cli({"track", a});
    std::ifstream in(path("out/a.jsonl"));
    std::stringstream buf;
    buf << in.rdbuf();
    EXPECT_EQ(buf.str(), single.out);
}

TEST_F(CliTest, UnknownFlagIsAUsageError) {
    const auto scene = make_scene("s.json", "1");
    const CliRun r = cli({"track", scene, "--frobnicate"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"dance"}).code, kExitUsage);
}

TEST_F(CliTest, BadValueIsAUsageError) {
    const auto scene = make_scene("s.json", "1");
    EXPECT_EQ(cli({"eval", "--gt", scene, "--hyp", scene, "--format", "xml"}).code, kExitUsage);
    EXPECT_EQ(cli({"track", scene, "--fallback", "maybe"}).code, kExitUsage);
}

TEST_F(CliTest, MissingInputFileIsAUsageError) {
    EXPECT_EQ(cli({"track", path("nope.json")}).code, kExitUsage);
}

TEST_F(CliTest, InvalidConfigValueIsAFailure) {
    const auto scene = make_scene("s.json", "1");
    const CliRun r = cli({"track", scene, "--history-len", "0"});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("history"), std::string::npos);
}

TEST_F(CliTest, MalformedSceneIsAFailure) {
    std::ofstream(path("bad.json")) << "{\"schema_version\": 1";
    const CliRun r = cli({"track", path("bad.json")});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("bad.json"), std::string::npos);
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsWin) {
    std::ofstream(path("sim.conf")) << "# scene shape\nobjects = 3\nframes = 7\nseed = 9\n";
    ASSERT_EQ(cli({"sim", "--config", path("sim.conf"), "-o", path("a.json")}).code, 0);
    const auto a = load_scene(path("a.json"));
    EXPECT_EQ(a.frames.size(), 7u);
    EXPECT_EQ(a.frames[0].gt.size(), 3u);
    ASSERT_EQ(cli({"sim", "--config", path("sim.conf"), "--frames", "4", "-o", path("b.json")}).code, 0);
    EXPECT_EQ(load_scene(path("b.json")).frames.size(), 4u);
}

TEST_F(CliTest, ConfigFileSyntax) {
    std::ofstream(path("ok.conf")) << "max-age = 5\n\n  # note\ngate-dist=12.5   # inline\n";
    EXPECT_EQ(config_file_args(path("ok.conf")),
              (std::vector<std::string>{"--max-age", "5", "--gate-dist", "12.5"}));
    std::ofstream(path("bad.conf")) << "max-age 5\n";
    EXPECT_THROW(config_file_args(path("bad.conf")), ConfigError);
}

TEST_F(CliTest, MineWritesDataset) {
    const auto scene = make_scene("s.json", "6", {"--region", "30", "--min-spacing", "2"});
    const CliRun m = cli({"mine", "--scene", scene, "-o", path("pairs.jsonl"), "--strategy", "local", "--seed", "3"});
    ASSERT_EQ(m.code, 0) << m.err;
    std::ifstream in(path("pairs.jsonl"));
    std::string line;
    std::size_t yes = 0, no = 0;
    while (std::getline(in, line)) {
        (nlohmann::json::parse(line).at("label") == "Yes" ? yes : no) += 1;
    }
    EXPECT_EQ(yes, 6u * 29u);
    EXPECT_LE(no, 3 * yes);
    EXPECT_EQ(cli({"mine", "--scene", scene, "--strategy", "closest"}).code, kExitUsage);
}

TEST_F(CliTest, RemoteScorerDownWithoutFallback) {
    const auto scene = make_scene("s.json", "1");
    const CliRun r = cli({"track", scene, "--scorer", "remote:http://127.0.0.1:9", "--fallback", "off"});
    EXPECT_EQ(r.code, kExitScorerUnavailable) << r.err;
    const CliRun f = cli({"track", scene, "--scorer", "remote:http://127.0.0.1:9", "--fallback", "on"});
    EXPECT_EQ(f.code, 0) << f.err;
    EXPECT_EQ(f.out, cli({"track", scene}).out);
}

TEST_F(CliTest, TrackingThroughParityServerMatchesLocal) {
    const fixtures::ParityServer server;
    const auto scene = make_scene("s.json", "7", {"--sigma-center", "0.1", "--clutter", "1"});
    const CliRun remote = cli({"track", scene, "--scorer", "remote:" + server.url(), "--fallback", "off"});
    ASSERT_EQ(remote.code, 0) << remote.err;
    EXPECT_EQ(remote.out, cli({"track", scene}).out);
    EXPECT_GT(server.score_calls(), 0);
}

TEST_F(CliTest, ParityCheckAgainstInProcessServer) {
    const fixtures::ParityServer server;
    const CliRun r = cli({"parity-check", "--endpoint", server.url(), "--pairs", "2000"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.at("pairs"), 2000);
    EXPECT_LE(j.at("max_abs_dp").get<double>(), 1e-9);
    EXPECT_TRUE(j.at("pass").get<bool>());
    EXPECT_EQ(j.at("mode"), "parity");
}

TEST_F(CliTest, ParityCheckDetectsMismatch) {
    GeoScorerParams skewed;
    skewed.tau_d = 3.0;
    const fixtures::ParityServer server(skewed);
    const CliRun r = cli({"parity-check", "--endpoint", server.url(), "--pairs", "200"});
    EXPECT_EQ(r.code, kExitParityMismatch) << r.err;
}

TEST_F(CliTest, ParityCheckUnreachable) {
    EXPECT_EQ(cli({"parity-check", "--endpoint", "http://127.0.0.1:9", "--pairs", "10"}).code,
              kExitScorerUnavailable);
}
