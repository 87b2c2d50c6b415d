#include <ovmot/mining.hpp>

#include <ovmot/errors.hpp>
#include <ovmot/kernels/bev_distance.hpp>

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace ovmot {

std::vector<GroundTruthTrack> ground_truth_tracks(const SceneFile& scene) {
    std::map<std::uint64_t, GroundTruthTrack> by_id;
    for (const auto& f : scene.frames) {
        for (const auto& g : f.gt) {
            auto& t = by_id[g.gt_id];
            if (t.boxes.empty()) {
                t.gt_id = g.gt_id;
                t.class_label = g.class_label;
            }
            if (!t.boxes.emplace(f.frame_index, g.box).second) {
                throw ParseError("gt id " + std::to_string(g.gt_id) + " appears twice in frame " +
                                 std::to_string(f.frame_index));
            }
        }
    }
    std::vector<GroundTruthTrack> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) {
        out.push_back(std::move(t));
    }
    return out;
}

const char* strategy_name(NegativeStrategy s) {
    switch (s) {
    case NegativeStrategy::Hard:
        return "hard";
    case NegativeStrategy::Local:
        return "local";
    case NegativeStrategy::Random:
        return "random";
    }
    return "hard";
}

NegativeStrategy parse_strategy(std::string_view name) {
    if (name == "hard") {
        return NegativeStrategy::Hard;
    }
    if (name == "local") {
        return NegativeStrategy::Local;
    }
    if (name == "random") {
        return NegativeStrategy::Random;
    }
    throw ConfigError("unknown negative strategy '" + std::string(name) + "'");
}

void MiningConfig::validate() const {
    jitter.validate();
    if (!(hard_radius > 0.0)) {
        throw ConfigError("hard_radius must be > 0");
    }
    serializer().validate();
}

SerializerConfig MiningConfig::serializer() const {
    SerializerConfig s;
    s.history_len = history_len;
    s.mask_novel = mask_novel;
    return s;
}

namespace {

// True boxes at the newest history_len frames strictly before `frame`.
std::vector<Box3D> history_before(const GroundTruthTrack& track, FrameIndex frame, std::size_t len) {
    std::vector<Box3D> out;
    auto it = track.boxes.lower_bound(frame);
    while (it != track.boxes.begin() && out.size() < len) {
        --it;
        out.push_back(it->second);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

const Box3D& anchor_box(const GroundTruthTrack& track, FrameIndex frame) {
    const auto it = track.boxes.find(frame);
    if (it == track.boxes.end()) {
        throw InsufficientHistory("gt " + std::to_string(track.gt_id) + " has no box at frame " +
                                  std::to_string(frame));
    }
    return it->second;
}

std::vector<Box3D> checked_history(const GroundTruthTrack& track, FrameIndex frame, std::size_t len) {
    auto h = history_before(track, frame, len);
    if (h.empty()) {
        throw InsufficientHistory("gt " + std::to_string(track.gt_id) + " has no box before frame " +
                                  std::to_string(frame));
    }
    return h;
}

struct Neighbour {
    const GroundTruthTrack* track;
    const Box3D* box;
    double distance;
};

// Every other gt object present at `frame`, with its BEV distance to the
// anchor, in all_tracks order.
std::vector<Neighbour> neighbours(const GroundTruthTrack& track, const Box3D& anchor, FrameIndex frame,
                                  std::span<const GroundTruthTrack> all_tracks) {
    std::vector<Neighbour> out;
    std::vector<double> bx, by;
    for (const auto& other : all_tracks) {
        if (other.gt_id == track.gt_id) {
            continue;
        }
        const auto it = other.boxes.find(frame);
        if (it == other.boxes.end()) {
            continue;
        }
        out.push_back({&other, &it->second, 0.0});
        bx.push_back(it->second.x());
        by.push_back(it->second.y());
    }
    if (out.empty()) {
        return out;
    }
    const double ax = anchor.x();
    const double ay = anchor.y();
    std::vector<double> dist(out.size());
    kernels::bev_distance_matrix({&ax, 1}, {&ay, 1}, bx, by, dist);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].distance = dist[k];
    }
    return out;
}

TrainingPair make_negative(const GroundTruthTrack& track, FrameIndex frame, const std::vector<Box3D>& history,
                           const Box3D& anchor, const Neighbour& n, const MiningConfig& cfg,
                           const ClassVocabulary& vocab) {
    TrainingPair pair;
    pair.prompt = serialize_pair(history, track.class_label, *n.box, n.track->class_label, cfg.serializer(), vocab);
    pair.label = TrainingLabel::No;
    pair.iou_target = iou_3d(*n.box, anchor);
    pair.meta = {track.gt_id, n.track->gt_id, frame};
    return pair;
}

template <typename It>
void take_random(std::vector<Neighbour>& pool, std::size_t k, Rng& rng, It out) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
        std::swap(pool[i], pool[d(rng)]);
        *out++ = pool[i];
    }
}

} // namespace

TrainingPair mine_positive(const GroundTruthTrack& track, FrameIndex frame, const MiningConfig& cfg,
                           const ClassVocabulary& vocab, Rng& rng) {
    const Box3D& truth = anchor_box(track, frame);
    const auto history = checked_history(track, frame, cfg.history_len);
    const Box3D candidate = jitter(truth, cfg.jitter, rng);
    TrainingPair pair;
    pair.prompt = serialize_pair(history, track.class_label, candidate, track.class_label, cfg.serializer(), vocab);
    pair.label = TrainingLabel::Yes;
    pair.iou_target = iou_3d(candidate, truth);
    pair.meta = {track.gt_id, track.gt_id, frame};
    return pair;
}

std::vector<TrainingPair> mine_hard_negatives(const GroundTruthTrack& track, FrameIndex frame,
                                              std::span<const GroundTruthTrack> all_tracks,
                                              const MiningConfig& cfg, const ClassVocabulary& vocab) {
    MiningConfig hard = cfg;
    hard.strategy = NegativeStrategy::Hard;
    Rng unused = make_rng(0);
    return mine_negatives(track, frame, all_tracks, hard, vocab, unused);
}

std::vector<TrainingPair> mine_negatives(const GroundTruthTrack& track, FrameIndex frame,
                                         std::span<const GroundTruthTrack> all_tracks,
                                         const MiningConfig& cfg, const ClassVocabulary& vocab, Rng& rng) {
    const Box3D& anchor = anchor_box(track, frame);
    const auto history = checked_history(track, frame, cfg.history_len);
    auto pool = neighbours(track, anchor, frame, all_tracks);
    if (cfg.strategy != NegativeStrategy::Random) {
        std::erase_if(pool, [&](const Neighbour& n) { return !(n.distance <= cfg.hard_radius); });
    }
    std::vector<Neighbour> chosen;
    if (cfg.strategy == NegativeStrategy::Hard) {
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Neighbour& a, const Neighbour& b) { return a.distance < b.distance; });
        pool.resize(std::min(pool.size(), cfg.negatives_per_positive));
        chosen = std::move(pool);
    } else {
        take_random(pool, cfg.negatives_per_positive, rng, std::back_inserter(chosen));
    }
    std::vector<TrainingPair> out;
    out.reserve(chosen.size());
    for (const auto& n : chosen) {
        out.push_back(make_negative(track, frame, history, anchor, n, cfg, vocab));
    }
    return out;
}

std::vector<TrainingPair> mine_scene(std::span<const GroundTruthTrack> tracks, const MiningConfig& cfg,
                                     const ClassVocabulary& vocab) {
    cfg.validate();
    std::set<FrameIndex> frames;
    for (const auto& t : tracks) {
        for (const auto& [f, b] : t.boxes) {
            frames.insert(f);
        }
    }
    std::vector<const GroundTruthTrack*> order;
    for (const auto& t : tracks) {
        order.push_back(&t);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const GroundTruthTrack* a, const GroundTruthTrack* b) { return a->gt_id < b->gt_id; });

    std::vector<TrainingPair> out;
    for (const FrameIndex f : frames) {
        // Separate streams keep the positives identical across strategies.
        const auto stream = 2 * static_cast<std::uint64_t>(f);
        Rng positive_rng = make_rng(cfg.seed, stream);
        Rng negative_rng = make_rng(cfg.seed, stream + 1);
        for (const GroundTruthTrack* t : order) {
            const auto it = t->boxes.find(f);
            if (it == t->boxes.end() || it == t->boxes.begin()) {
                continue;
            }
            out.push_back(mine_positive(*t, f, cfg, vocab, positive_rng));
            auto negs = mine_negatives(*t, f, tracks, cfg, vocab, negative_rng);
            std::move(negs.begin(), negs.end(), std::back_inserter(out));
        }
    }
    return out;
}

void write_dataset(std::ostream& out, std::span<const TrainingPair> pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["prompt"] = to_json(p.prompt);
        j["label"] = p.label == TrainingLabel::Yes ? "Yes" : "No";
        j["iou_target"] = p.iou_target;
        j["meta"] = {{"gt_id_track", p.meta.gt_id_track},
                     {"gt_id_candidate", p.meta.gt_id_candidate},
                     {"frame", p.meta.frame}};
        out << j.dump() << '\n';
    }
}

void emit_dataset(std::span<const TrainingPair> pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    write_dataset(out, pairs);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<TrainingPair> read_dataset(std::istream& in) {
    std::vector<TrainingPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "dataset line " + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            TrainingPair p;
            p.prompt = prompt_from_json(j.at("prompt"));
            const auto label = j.at("label").get<std::string>();
            if (label != "Yes" && label != "No") {
                throw ParseError(where + ": label must be Yes or No");
            }
            p.label = label == "Yes" ? TrainingLabel::Yes : TrainingLabel::No;
            p.iou_target = j.at("iou_target").get<double>();
            if (!(p.iou_target >= 0.0 && p.iou_target <= 1.0)) {
                throw ParseError(where + ": iou_target must lie in [0, 1]");
            }
            if (j.contains("meta")) {
                const auto& m = j["meta"];
                p.meta = {m.at("gt_id_track").get<std::uint64_t>(), m.at("gt_id_candidate").get<std::uint64_t>(),
                          m.at("frame").get<FrameIndex>()};
            }
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const ParseError& e) {
            if (std::string_view(e.what()).starts_with("dataset line")) {
                throw;
            }
            throw ParseError(where + ": " + e.what());
        }
    }
    return out;
}

AcceptanceFit fit_acceptance_threshold(std::span<const TrainingPair> pairs, const GeoScorerParams& params) {
    params.validate();
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(pairs.size());
    AcceptanceFit fit;
    for (const auto& p : pairs) {
        const bool yes = p.label == TrainingLabel::Yes;
        scored.emplace_back(geometric_score(p.prompt, params).p, yes);
        (yes ? fit.positives : fit.negatives) += 1;
    }
    if (fit.positives == 0 || fit.negatives == 0) {
        throw ConfigError("threshold fit needs both positive and negative pairs");
    }
    std::sort(scored.begin(), scored.end());

    // Sweep cuts upward; everything left of the cut is rejected.
    const double pos = static_cast<double>(fit.positives);
    const double neg = static_cast<double>(fit.negatives);
    std::size_t rejected_pos = 0;
    std::size_t rejected_neg = 0;
    const auto balanced = [&] {
        return 0.5 * ((pos - static_cast<double>(rejected_pos)) / pos + static_cast<double>(rejected_neg) / neg);
    };
    fit.p_threshold = scored.front().first;
    fit.balanced_accuracy = balanced();
    for (std::size_t k = 0; k < scored.size();) {
        const double value = scored[k].first;
        while (k < scored.size() && scored[k].first == value) {
            (scored[k].second ? rejected_pos : rejected_neg) += 1;
            ++k;
        }
        const double cut = k < scored.size() ? 0.5 * (value + scored[k].first) : std::nextafter(value, 2.0);
        const double ba = balanced();
        if (ba > fit.balanced_accuracy) {
            fit.balanced_accuracy = ba;
            fit.p_threshold = cut;
        }
    }
    return fit;
}

} // namespace ovmot
