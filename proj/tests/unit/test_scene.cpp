#include <ovmot/errors.hpp>
#include <ovmot/scene.hpp>
#include <ovmot/simulate.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace ovmot;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "header": {
    "frame_rate": 10,
    "z_convention": "center",
    "vocabulary": {"base": ["Car"], "novel": ["Bus"]}
  },
  "frames": [
    {
      "frame_index": 0,
      "detections": [{"box": [0, 0, 0.8, 4.5, 2.0, 1.6, 0.1], "class": "Car", "score": 0.9}],
      "gt": [{"gt_id": 1, "box": [0, 0, 0.8, 4.5, 2.0, 1.6, 0.1], "class": "Car"}]
    }
  ]
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    return text.replace(at, from.size(), to);
}

void expect_parse_error(const std::string& text, const std::string& needle) {
    try {
        parse_scene(text);
        FAIL() << "expected ParseError mentioning " << needle;
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
}

} // namespace

TEST(SceneParse, MinimalFile) {
    const auto s = parse_scene(kMinimal);
    ASSERT_EQ(s.frames.size(), 1u);
    EXPECT_EQ(s.frames[0].detections.size(), 1u);
    EXPECT_EQ(s.frames[0].detections[0].box.score(), 0.9);
    EXPECT_EQ(s.frames[0].gt[0].gt_id, 1u);
    EXPECT_TRUE(s.header.vocab.is_base("Car"));
    EXPECT_EQ(s.header.vocab.placeholder(), "Unknown");
}

TEST(SceneParse, NegativeWidthNamesTheField) {
    expect_parse_error(with(kMinimal, "4.5, 2.0, 1.6, 0.1], \"class\": \"Car\", \"score\"",
                            "4.5, -2.0, 1.6, 0.1], \"class\": \"Car\", \"score\""),
                       "$.frames[0].detections[0].box.w");
}

TEST(SceneParse, MissingFieldNamesThePath) {
    expect_parse_error(with(kMinimal, "\"gt_id\": 1, ", ""), "$.frames[0].gt[0].gt_id");
}

TEST(SceneParse, BadScoreIsRejected) {
    expect_parse_error(with(kMinimal, "\"score\": 0.9", "\"score\": 1.9"), "score");
}

TEST(SceneParse, SyntaxErrorsReportPosition) {
    expect_parse_error(with(kMinimal, "\"frames\": [", "\"frames\": [,"), "line");
}

TEST(SceneParse, SchemaVersionMismatch) {
    EXPECT_THROW(parse_scene(with(kMinimal, "\"schema_version\": 1", "\"schema_version\": 2")),
                 SchemaVersionMismatch);
}

TEST(SceneParse, FrameIndicesMustIncrease) {
    SceneFile s = parse_scene(kMinimal);
    s.frames.push_back(s.frames[0]);
    expect_parse_error(dump_scene(s), "$.frames[1].frame_index");
}

TEST(SceneParse, BottomConventionIsConvertedToCenter) {
    const auto s = parse_scene(with(kMinimal, "\"center\"", "\"bottom\""));
    EXPECT_NEAR(s.frames[0].gt[0].box.z(), 0.8 + 0.8, 1e-12);
    EXPECT_NE(dump_scene(s).find("\"center\""), std::string::npos);
}

TEST(SceneParse, VocabularyOverlapIsReported) {
    expect_parse_error(with(kMinimal, "\"novel\": [\"Bus\"]", "\"novel\": [\"Car\"]"), "$.header.vocabulary");
}

TEST(SceneDump, CanonicalRoundTrip) {
    const std::string canonical = dump_scene(parse_scene(kMinimal));
    EXPECT_EQ(dump_scene(parse_scene(canonical)), canonical);
}

TEST(SceneDump, SimulatedSceneRoundTripsThroughDisk) {
    SimConfig cfg;
    cfg.n_objects = 5;
    cfg.duration = 12;
    cfg.sigma_det.sigma_center = 0.1;
    cfg.clutter_rate = 1.5;
    cfg.seed = 4;
    const SceneFile s = simulate(cfg);
    const auto path = std::filesystem::temp_directory_path() / "ovmot_scene_roundtrip.json";
    write_scene(s, path);
    const SceneFile back = load_scene(path);
    EXPECT_EQ(dump_scene(back), dump_scene(s));
    ASSERT_EQ(back.frames.size(), s.frames.size());
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
        ASSERT_EQ(back.frames[f].detections.size(), s.frames[f].detections.size());
        for (std::size_t k = 0; k < s.frames[f].detections.size(); ++k) {
            EXPECT_EQ(back.frames[f].detections[k].box, s.frames[f].detections[k].box);
        }
    }
    std::filesystem::remove(path);
}

TEST(SceneFiles, MissingFileIsAnIoError) {
    EXPECT_THROW(load_scene("/nonexistent/scene.json"), IoError);
}

TEST(SceneStream, CarriesFramesAndDetections) {
    const auto stream = detection_stream(parse_scene(kMinimal));
    ASSERT_EQ(stream.size(), 1u);
    EXPECT_EQ(stream[0].frame_index, 0);
    EXPECT_EQ(stream[0].detections[0].class_label, "Car");
}
