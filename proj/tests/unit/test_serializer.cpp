#include <ovmot/errors.hpp>
#include <ovmot/serializer.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace ovmot;

namespace {

ClassVocabulary vocab() { return ClassVocabulary({"Car", "Pedestrian"}, {"Bus", "Cyclist"}); }

std::vector<Box3D> line_history(std::size_t n) {
    std::vector<Box3D> h;
    for (std::size_t k = 0; k < n; ++k) {
        h.emplace_back(static_cast<double>(k), 0.0, 0.8, 4.5, 2.0, 1.6, 0.0, 0.9);
    }
    return h;
}

} // namespace

TEST(Serializer, SlotCountIsHistoryPlusCandidate) {
    const auto h = line_history(3);
    SerializerConfig cfg;
    cfg.history_len = 3;
    const auto p = serialize_pair(h, "Car", Box3D(3, 0, 0.8, 4.5, 2, 1.6, 0), "Car", cfg, vocab());
    EXPECT_EQ(p.box_slot_count(), 4u);
    EXPECT_EQ(p.history_len, 3u);
    EXPECT_EQ(p.box_features().back().values[GeometryFeature::X], 3.0);
    EXPECT_EQ(p.box_features().front().values[GeometryFeature::X], 0.0);
}

TEST(Serializer, ShortHistoryUsesWhatExists) {
    const auto h = line_history(1);
    SerializerConfig cfg;
    cfg.history_len = 5;
    const auto p = serialize_pair(h, "Car", h[0], "Car", cfg, vocab());
    EXPECT_EQ(p.box_slot_count(), 2u);
    EXPECT_EQ(p.history_len, 1u);
}

TEST(Serializer, LongHistoryKeepsNewestWindowInOrder) {
    const auto h = line_history(10);
    SerializerConfig cfg;
    cfg.history_len = 4;
    const auto p = serialize_pair(h, "Car", h.back(), "Car", cfg, vocab());
    const auto f = p.box_features();
    ASSERT_EQ(f.size(), 5u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(f[k].values[GeometryFeature::X], static_cast<double>(6 + k));
    }
}

TEST(Serializer, ZeroHistoryLengthIsRejected) {
    SerializerConfig cfg;
    cfg.history_len = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    const auto h = line_history(2);
    EXPECT_THROW(serialize_pair(h, "Car", h[0], "Car", cfg, vocab()), ConfigError);
}

TEST(Serializer, UnknownTemplateIsRejected) {
    SerializerConfig cfg;
    cfg.template_id = "other";
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Serializer, EmptyHistoryThrows) {
    const std::vector<Box3D> none;
    EXPECT_THROW(serialize_pair(none, "Car", line_history(1)[0], "Car", SerializerConfig{}, vocab()),
                 EmptyHistory);
}

TEST(Serializer, FeatureVectorLayout) {
    const Box3D b(1, 2, 3, 4, 0.5, 2, 0.25, 0.75);
    const auto f = geometry_features(b).values;
    EXPECT_EQ(f[GeometryFeature::X], 1.0);
    EXPECT_EQ(f[GeometryFeature::Y], 2.0);
    EXPECT_EQ(f[GeometryFeature::Z], 3.0);
    EXPECT_EQ(f[GeometryFeature::L], 4.0);
    EXPECT_EQ(f[GeometryFeature::W], 0.5);
    EXPECT_EQ(f[GeometryFeature::H], 2.0);
    EXPECT_EQ(f[GeometryFeature::Vol], 4.0);
    EXPECT_EQ(f[GeometryFeature::Yaw], 0.25);
    EXPECT_EQ(f[GeometryFeature::Score], 0.75);
    EXPECT_EQ(geometry_features(b).to_box(), b);
}

TEST(Masking, NovelLabelsBecomePlaceholder) {
    const auto h = line_history(2);
    SerializerConfig cfg;
    const auto p = serialize_pair(h, "Bus", h[1], "Cyclist", cfg, vocab());
    EXPECT_EQ(p.track_class_rendered, "Unknown");
    EXPECT_EQ(p.det_class_rendered, "Unknown");
    const std::string text = p.rendered_text();
    EXPECT_EQ(text.find("Bus"), std::string::npos);
    EXPECT_EQ(text.find("Cyclist"), std::string::npos);
    EXPECT_NE(text.find("Unknown"), std::string::npos);
}

TEST(Masking, BaseLabelsPassThrough) {
    const auto h = line_history(2);
    const auto p = serialize_pair(h, "Car", h[1], "Pedestrian", SerializerConfig{}, vocab());
    EXPECT_EQ(p.track_class_rendered, "Car");
    EXPECT_EQ(p.det_class_rendered, "Pedestrian");
    EXPECT_NE(p.rendered_text().find("Car"), std::string::npos);
}

TEST(Masking, UnrecognizedLabelsAreTreatedAsNovel) {
    EXPECT_EQ(render_class("Tram", vocab(), true), "Unknown");
    EXPECT_EQ(render_class("Tram", vocab(), false), "Tram");
}

TEST(Masking, DisabledMaskingShowsEveryLabel) {
    const auto h = line_history(2);
    SerializerConfig cfg;
    cfg.mask_novel = false;
    const auto p = serialize_pair(h, "Bus", h[1], "Cyclist", cfg, vocab());
    EXPECT_NE(p.rendered_text().find("Bus"), std::string::npos);
    EXPECT_NE(p.rendered_text().find("Cyclist"), std::string::npos);
}

TEST(Masking, RandomizedNoNovelStringLeaks) {
    const ClassVocabulary v({"Car", "Van", "Pedestrian"}, {"Bus", "Truck", "Cyclist", "Tricyclist"});
    const std::vector<std::string> labels{"Car", "Van", "Pedestrian", "Bus", "Truck", "Cyclist", "Tricyclist"};
    Rng rng = make_rng(8);
    std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    for (int k = 0; k < 2000; ++k) {
        std::vector<Box3D> h;
        const std::size_t n = len(rng);
        for (std::size_t i = 0; i < n; ++i) {
            h.push_back(fixtures::random_box(rng));
        }
        const auto& tl = labels[pick(rng)];
        const auto& dl = labels[pick(rng)];
        SerializerConfig cfg;
        cfg.history_len = len(rng);
        const std::string text = serialize_pair(h, tl, fixtures::random_box(rng), dl, cfg, v).rendered_text();
        for (const auto& novel : v.novel_classes()) {
            ASSERT_EQ(text.find(novel), std::string::npos) << tl << "/" << dl;
        }
    }
}

TEST(Vocabulary, RejectsOverlapAndPlaceholderCollision) {
    EXPECT_THROW(ClassVocabulary({"Car"}, {"Car"}), ConfigError);
    EXPECT_THROW(ClassVocabulary({"Car"}, {"Bus"}, "Car"), ConfigError);
    EXPECT_THROW(ClassVocabulary({"Car"}, {"Bus"}, ""), ConfigError);
}

TEST(PromptJson, RoundTripsExactly) {
    Rng rng = make_rng(21);
    for (int k = 0; k < 200; ++k) {
        std::vector<Box3D> h;
        for (int i = 0; i < 3; ++i) {
            h.push_back(fixtures::random_box(rng, 50.0));
        }
        const auto p = serialize_pair(h, k % 2 ? "Car" : "Bus", fixtures::random_box(rng), "Pedestrian",
                                      SerializerConfig{}, vocab());
        const auto back = prompt_from_json(nlohmann::json::parse(to_json(p).dump()));
        EXPECT_EQ(back, p);
    }
}

TEST(PromptJson, RejectsMalformedSegments) {
    using nlohmann::json;
    EXPECT_THROW(prompt_from_json(json::array()), ParseError);
    EXPECT_THROW(prompt_from_json(json{{"segments", json::array({json{{"text", "a"}}})}}), ParseError);
    EXPECT_THROW(prompt_from_json(json{{"segments", json::array({json{{"box", json::array({1, 2})}}})}}),
                 ParseError);
    EXPECT_THROW(prompt_from_json(json{{"segments", json::array({json{{"other", 1}}})}}), ParseError);
}
