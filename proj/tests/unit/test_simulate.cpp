#include <ovmot/errors.hpp>
#include <ovmot/simulate.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace ovmot;

TEST(Simulate, NoiseFreeDetectionsEqualGroundTruth) {
    SimConfig cfg;
    cfg.seed = 1;
    const SceneFile s = simulate(cfg);
    ASSERT_EQ(s.frames.size(), 100u);
    for (const auto& f : s.frames) {
        ASSERT_EQ(f.detections.size(), f.gt.size());
        for (std::size_t k = 0; k < f.gt.size(); ++k) {
            const auto a = f.detections[k].box.to_array();
            EXPECT_EQ(a, f.gt[k].box.to_array());
            EXPECT_EQ(f.detections[k].class_label, f.gt[k].class_label);
        }
    }
}

TEST(Simulate, FullDropoutKeepsGroundTruth) {
    SimConfig cfg;
    cfg.p_dropout = 1.0;
    const SceneFile s = simulate(cfg);
    for (const auto& f : s.frames) {
        EXPECT_TRUE(f.detections.empty());
        EXPECT_EQ(f.gt.size(), 10u);
    }
}

TEST(Simulate, ClutterCountFollowsRate) {
    SimConfig cfg;
    cfg.p_dropout = 1.0;
    cfg.clutter_rate = 2.0;
    cfg.seed = 8;
    std::size_t clutter = 0;
    for (const auto& f : simulate(cfg).frames) {
        clutter += f.detections.size();
    }
    EXPECT_GE(clutter, 155u);
    EXPECT_LE(clutter, 245u);
}

TEST(Simulate, SameConfigGivesIdenticalBytes) {
    SimConfig cfg;
    cfg.sigma_det.sigma_center = 0.2;
    cfg.p_dropout = 0.1;
    cfg.clutter_rate = 1.0;
    cfg.p_labelflip = 0.2;
    cfg.novel_fraction = 0.3;
    cfg.seed = 99;
    EXPECT_EQ(dump_scene(simulate(cfg)), dump_scene(simulate(cfg)));
    SimConfig other = cfg;
    other.seed = 100;
    EXPECT_NE(dump_scene(simulate(cfg)), dump_scene(simulate(other)));
}

TEST(Simulate, SpacingHoldsEveryFrame) {
    SimConfig cfg;
    cfg.n_objects = 20;
    cfg.min_spacing = 3.0;
    cfg.region = 80.0;
    cfg.seed = 5;
    for (const auto& f : simulate(cfg).frames) {
        for (std::size_t i = 0; i < f.gt.size(); ++i) {
            for (std::size_t j = i + 1; j < f.gt.size(); ++j) {
                EXPECT_GE(center_distance_bev(f.gt[i].box, f.gt[j].box), 3.0 - 1e-9);
            }
        }
    }
}

TEST(Simulate, ConstantVelocityWithHeadingAlignedYaw) {
    SimConfig cfg;
    cfg.n_objects = 4;
    cfg.duration = 10;
    cfg.seed = 2;
    const SceneFile s = simulate(cfg);
    for (std::size_t k = 0; k < 4; ++k) {
        const Box3D& a = s.frames[0].gt[k].box;
        const Box3D& b = s.frames[1].gt[k].box;
        const Box3D& c = s.frames[9].gt[k].box;
        EXPECT_NEAR(c.x() - a.x(), 9.0 * (b.x() - a.x()), 1e-9);
        EXPECT_NEAR(c.y() - a.y(), 9.0 * (b.y() - a.y()), 1e-9);
        EXPECT_NEAR(std::atan2(b.y() - a.y(), b.x() - a.x()), a.yaw(), 1e-9);
        EXPECT_NEAR(a.z(), 0.5 * a.h(), 1e-12);
        const double speed = std::hypot(b.x() - a.x(), b.y() - a.y());
        EXPECT_GE(speed, cfg.speed_min - 1e-12);
        EXPECT_LE(speed, cfg.speed_max + 1e-12);
    }
}

TEST(Simulate, LabelFlipsGoToNovelClasses) {
    SimConfig cfg;
    cfg.p_labelflip = 1.0;
    cfg.seed = 3;
    const SceneFile s = simulate(cfg);
    for (const auto& f : s.frames) {
        for (const auto& d : f.detections) {
            EXPECT_TRUE(cfg.vocab.novel_classes().count(d.class_label)) << d.class_label;
        }
    }
}

TEST(Simulate, NovelFractionControlsClassMix) {
    SimConfig cfg;
    cfg.n_objects = 40;
    cfg.duration = 2;
    cfg.region = 400;
    cfg.novel_fraction = 1.0;
    for (const auto& g : simulate(cfg).frames[0].gt) {
        EXPECT_TRUE(cfg.vocab.is_novel(g.class_label));
    }
    cfg.novel_fraction = 0.0;
    for (const auto& g : simulate(cfg).frames[0].gt) {
        EXPECT_TRUE(cfg.vocab.is_base(g.class_label));
    }
}

TEST(Simulate, ImpossibleSpacingIsAConfigError) {
    SimConfig cfg;
    cfg.n_objects = 50;
    cfg.region = 2.0;
    cfg.min_spacing = 10.0;
    EXPECT_THROW(simulate(cfg), ConfigError);
}

TEST(Simulate, ValidatesRanges) {
    SimConfig cfg;
    cfg.p_dropout = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.speed_min = 2.0;
    cfg.speed_max = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
