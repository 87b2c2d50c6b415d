#include <ovmot/simulate.hpp>

#include <ovmot/errors.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace ovmot {

ClassVocabulary default_vocabulary() {
    return ClassVocabulary({"Car", "Van", "Pedestrian", "Motorcyclist"},
                           {"Bus", "Truck", "Cyclist", "Tricyclist"});
}

std::array<double, 3> nominal_size(const std::string& class_label) {
    static const std::map<std::string, std::array<double, 3>> kSizes = {
        {"Car", {4.5, 1.9, 1.6}},        {"Van", {5.2, 2.1, 2.2}},
        {"Pedestrian", {0.8, 0.7, 1.75}}, {"Motorcyclist", {2.0, 0.8, 1.6}},
        {"Bus", {11.0, 2.9, 3.3}},       {"Truck", {8.0, 2.6, 3.2}},
        {"Cyclist", {1.8, 0.7, 1.7}},    {"Tricyclist", {2.6, 1.3, 1.8}},
    };
    const auto it = kSizes.find(class_label);
    return it == kSizes.end() ? std::array<double, 3>{4.5, 1.9, 1.6} : it->second;
}

void SimConfig::validate() const {
    const auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError(std::string(name) + " must lie in [0, 1]");
        }
    };
    prob(p_dropout, "p_dropout");
    prob(p_labelflip, "p_labelflip");
    prob(novel_fraction, "novel_fraction");
    if (duration < 1) {
        throw ConfigError("duration must be >= 1");
    }
    if (!(speed_min >= 0.0 && speed_max >= speed_min && std::isfinite(speed_max))) {
        throw ConfigError("speed range must satisfy 0 <= min <= max");
    }
    if (!(clutter_rate >= 0.0 && std::isfinite(clutter_rate))) {
        throw ConfigError("clutter_rate must be >= 0");
    }
    if (!(min_spacing >= 0.0) || !(region > 0.0) || !(frame_rate > 0.0)) {
        throw ConfigError("min_spacing, region and frame_rate must be positive");
    }
    if (!(det_score_min >= 0.0 && det_score_max <= 1.0 && det_score_min <= det_score_max) ||
        !(clutter_score_min >= 0.0 && clutter_score_max <= 1.0 &&
          clutter_score_min <= clutter_score_max)) {
        throw ConfigError("score ranges must lie in [0, 1]");
    }
    if (vocab.base_classes().empty()) {
        throw ConfigError("vocabulary needs at least one base class");
    }
    if ((novel_fraction > 0.0 || p_labelflip > 0.0) && vocab.novel_classes().empty()) {
        throw ConfigError("novel classes requested but the vocabulary has none");
    }
    sigma_det.validate();
}

namespace {

struct Agent {
    std::string class_label;
    double x0, y0, vx, vy, yaw, l, w, h;

    double x(std::size_t t) const { return x0 + vx * static_cast<double>(t); }
    double y(std::size_t t) const { return y0 + vy * static_cast<double>(t); }
    Box3D box(std::size_t t) const { return Box3D(x(t), y(t), 0.5 * h, l, w, h, yaw, 1.0); }
};

template <typename Set>
const std::string& pick(const Set& s, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, s.size() - 1);
    auto it = s.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(d(rng)));
    return *it;
}

bool separated(const Agent& a, const Agent& b, std::size_t duration, double spacing) {
    // Squared distance is quadratic in t; check its minimum over [0, T-1].
    const double dx = a.x0 - b.x0;
    const double dy = a.y0 - b.y0;
    const double dvx = a.vx - b.vx;
    const double dvy = a.vy - b.vy;
    const double vv = dvx * dvx + dvy * dvy;
    double t = 0.0;
    if (vv > 0.0) {
        t = std::clamp(-(dx * dvx + dy * dvy) / vv, 0.0, static_cast<double>(duration - 1));
    }
    const double ex = dx + dvx * t;
    const double ey = dy + dvy * t;
    return ex * ex + ey * ey >= spacing * spacing;
}

} // namespace

SceneFile simulate(const SimConfig& cfg) {
    cfg.validate();
    Rng rng = make_rng(cfg.seed, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    std::vector<Agent> agents;
    constexpr std::size_t kMaxAttempts = 10000;
    for (std::size_t k = 0; k < cfg.n_objects; ++k) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Agent a;
            const bool novel = unit(rng) < cfg.novel_fraction;
            a.class_label = novel ? pick(cfg.vocab.novel_classes(), rng) : pick(cfg.vocab.base_classes(), rng);
            const auto size = nominal_size(a.class_label);
            a.l = size[0] * std::exp(0.05 * standard_normal(rng));
            a.w = size[1] * std::exp(0.05 * standard_normal(rng));
            a.h = size[2] * std::exp(0.05 * standard_normal(rng));
            a.x0 = uniform(-0.5 * cfg.region, 0.5 * cfg.region);
            a.y0 = uniform(-0.5 * cfg.region, 0.5 * cfg.region);
            a.yaw = normalize_yaw(uniform(-kPi, kPi));
            const double speed = uniform(cfg.speed_min, cfg.speed_max);
            a.vx = speed * std::cos(a.yaw);
            a.vy = speed * std::sin(a.yaw);
            placed = std::all_of(agents.begin(), agents.end(), [&](const Agent& b) {
                return separated(a, b, cfg.duration, cfg.min_spacing);
            });
            if (placed) {
                agents.push_back(std::move(a));
            }
        }
        if (!placed) {
            throw ConfigError("cannot place " + std::to_string(cfg.n_objects) +
                              " objects with spacing " + std::to_string(cfg.min_spacing));
        }
    }

    std::vector<std::string> all_classes(cfg.vocab.base_classes().begin(), cfg.vocab.base_classes().end());
    all_classes.insert(all_classes.end(), cfg.vocab.novel_classes().begin(), cfg.vocab.novel_classes().end());
    std::poisson_distribution<std::size_t> clutter_count(cfg.clutter_rate > 0.0 ? cfg.clutter_rate : 1.0);

    SceneFile scene;
    scene.header.frame_rate = cfg.frame_rate;
    scene.header.vocab = cfg.vocab;
    scene.frames.reserve(cfg.duration);
    for (std::size_t t = 0; t < cfg.duration; ++t) {
        SceneFrame frame;
        frame.frame_index = static_cast<FrameIndex>(t);
        for (std::size_t k = 0; k < agents.size(); ++k) {
            const Agent& a = agents[k];
            const Box3D gt = a.box(t);
            frame.gt.push_back({k + 1, gt, a.class_label});
            if (unit(rng) < cfg.p_dropout) {
                continue;
            }
            const double score = uniform(cfg.det_score_min, cfg.det_score_max);
            std::string label = a.class_label;
            if (unit(rng) < cfg.p_labelflip) {
                label = pick(cfg.vocab.novel_classes(), rng);
            }
            frame.detections.push_back({jitter(gt, cfg.sigma_det, rng).with_score(score), std::move(label)});
        }
        const std::size_t n_clutter = cfg.clutter_rate > 0.0 ? clutter_count(rng) : 0;
        if (n_clutter > 0 && !agents.empty()) {
            double lo_x = agents[0].x(t), hi_x = lo_x, lo_y = agents[0].y(t), hi_y = lo_y;
            for (const auto& a : agents) {
                lo_x = std::min(lo_x, a.x(t));
                hi_x = std::max(hi_x, a.x(t));
                lo_y = std::min(lo_y, a.y(t));
                hi_y = std::max(hi_y, a.y(t));
            }
            constexpr double kMargin = 10.0;
            std::uniform_int_distribution<std::size_t> which(0, agents.size() - 1);
            for (std::size_t c = 0; c < n_clutter; ++c) {
                const Agent& proto = agents[which(rng)];
                const double x = uniform(lo_x - kMargin, hi_x + kMargin);
                const double y = uniform(lo_y - kMargin, hi_y + kMargin);
                const double yaw = normalize_yaw(uniform(-kPi, kPi));
                const double score = uniform(cfg.clutter_score_min, cfg.clutter_score_max);
                frame.detections.push_back({Box3D(x, y, 0.5 * proto.h, proto.l, proto.w, proto.h, yaw, score),
                                            all_classes[std::uniform_int_distribution<std::size_t>(
                                                0, all_classes.size() - 1)(rng)]});
            }
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

} // namespace ovmot
