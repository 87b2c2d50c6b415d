#include <ovmot/tracker.hpp>

#include <ovmot/assignment.hpp>
#include <ovmot/errors.hpp>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace ovmot {

std::vector<Box3D> Track::history_boxes() const {
    std::vector<Box3D> out;
    out.reserve(history.size());
    for (const auto& h : history) {
        out.push_back(h.box);
    }
    return out;
}

void TrackerConfig::validate() const {
    serializer.validate();
    const auto& lc = lifecycle;
    if (lc.history_capacity < serializer.history_len) {
        throw ConfigError("history capacity must be >= history length");
    }
    if (!(lc.birth_score >= 0.0 && lc.birth_score <= 1.0)) {
        throw ConfigError("birth score must lie in [0, 1]");
    }
    if (lc.confirm_hits < 1) {
        throw ConfigError("confirm_hits must be >= 1");
    }
    if (!(lc.gate_dist > 0.0)) {
        throw ConfigError("gate distance must be > 0");
    }
    if (!(lc.accept_max_cost >= 0.0 && lc.accept_max_cost <= 1.0)) {
        throw ConfigError("accept_max_cost must lie in [0, 1]");
    }
}

Tracker::Tracker(TrackerConfig cfg, TrackerState state) : cfg_(std::move(cfg)), state_(std::move(state)) {
    cfg_.validate();
}

namespace {

std::string pair_id(TrackId id, std::size_t det) {
    return "t" + std::to_string(id) + ":d" + std::to_string(det);
}

} // namespace

FrameResult Tracker::step(FrameIndex frame_index, std::span<const Detection> detections,
                          const Scorer& scorer) {
    if (state_.last_frame && frame_index <= *state_.last_frame) {
        throw NonMonotonicFrame("frame " + std::to_string(frame_index) + " does not follow frame " +
                                std::to_string(*state_.last_frame));
    }
    const auto& lc = cfg_.lifecycle;
    auto& tracks = state_.tracks;

    // Everything up to the assignment is computed without touching state.
    std::vector<std::vector<Box3D>> histories;
    std::vector<Box3D> predicted;
    histories.reserve(tracks.size());
    predicted.reserve(tracks.size());
    for (const auto& t : tracks) {
        histories.push_back(t.history_boxes());
        predicted.push_back(predict_next(histories.back(), 1));
    }
    std::vector<Box3D> det_boxes;
    det_boxes.reserve(detections.size());
    for (const auto& d : detections) {
        det_boxes.push_back(d.box);
    }

    const CandidateSet candidates = gate(predicted, det_boxes, lc.gate_dist);
    std::vector<ScoreRequest> requests;
    requests.reserve(candidates.pairs.size());
    for (const auto& [i, j] : candidates.pairs) {
        requests.push_back({serialize_pair(histories[i], tracks[i].class_label, detections[j].box,
                                           detections[j].class_label, cfg_.serializer, cfg_.vocab),
                            pair_id(tracks[i].id, j)});
    }
    std::vector<AssociationScore> scores;
    if (!requests.empty()) {
        scores = scorer.score_batch(requests);
        if (scores.size() != requests.size()) {
            throw MalformedResponse("scorer returned " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(requests.size()) + " pairs");
        }
    }
    ScoreMap score_map;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        scores[k].validate();
        score_map.emplace(candidates.pairs[k], scores[k].p);
    }
    const CostMatrix cost = build_cost(score_map, tracks.size(), detections.size(), candidates);
    const Assignment assignment = threshold_filter(solve(cost), cost, lc.accept_max_cost);

    // Mutation phase.
    FrameResult result;
    result.frame_index = frame_index;
    for (const auto& [i, j] : assignment.matches) {
        Track& t = tracks[i];
        t.history.push_back({frame_index, detections[j].box});
        while (t.history.size() > lc.history_capacity) {
            t.history.pop_front();
        }
        t.miss_count = 0;
        ++t.hit_count;
        if (t.state == TrackState::Tentative && t.hit_count >= lc.confirm_hits) {
            t.state = TrackState::Active;
        }
        if (t.state == TrackState::Active) {
            result.outputs.push_back(
                {t.id, detections[j].box, t.class_label, detections[j].box.score()});
        }
    }
    for (const std::size_t i : assignment.unmatched_tracks) {
        Track& t = tracks[i];
        ++t.miss_count;
        if (t.miss_count > lc.max_age) {
            t.state = TrackState::Dead;
            result.deaths.push_back(t.id);
        }
    }
    std::erase_if(tracks, [](const Track& t) { return t.state == TrackState::Dead; });

    for (const std::size_t j : assignment.unmatched_dets) {
        const Detection& d = detections[j];
        if (d.box.score() < lc.birth_score) {
            continue;
        }
        Track t;
        t.id = state_.next_id++;
        t.class_label = d.class_label;
        t.history.push_back({frame_index, d.box});
        t.hit_count = 1;
        t.born_at = frame_index;
        t.state = t.hit_count >= lc.confirm_hits ? TrackState::Active : TrackState::Tentative;
        if (t.state == TrackState::Active) {
            result.outputs.push_back({t.id, d.box, t.class_label, d.box.score()});
        }
        result.births.push_back(t.id);
        tracks.push_back(std::move(t));
    }
    std::sort(result.outputs.begin(), result.outputs.end(),
              [](const TrackOutput& a, const TrackOutput& b) { return a.track_id < b.track_id; });
    state_.last_frame = frame_index;
    return result;
}

std::vector<FrameResult> run_sequence(std::span<const FrameDetections> stream, const Scorer& scorer,
                                      const TrackerConfig& cfg, TrackerState* state) {
    Tracker tracker(cfg, state ? *state : TrackerState{});
    std::vector<FrameResult> out;
    out.reserve(stream.size());
    for (const auto& frame : stream) {
        out.push_back(tracker.step(frame.frame_index, frame.detections, scorer));
    }
    if (state) {
        *state = tracker.state();
    }
    return out;
}

void write_tracking_jsonl(std::ostream& out, std::span<const FrameResult> results) {
    for (const auto& r : results) {
        for (const auto& o : r.outputs) {
            nlohmann::ordered_json j;
            j["frame"] = r.frame_index;
            j["track_id"] = o.track_id;
            j["class"] = o.class_label;
            j["box"] = o.box.to_array();
            j["score"] = o.score;
            out << j.dump() << '\n';
        }
    }
}

std::vector<TrackingRecord> read_tracking_jsonl(std::istream& in) {
    std::vector<TrackingRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "tracking line " + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            const auto box = j.at("box").get<std::array<double, 7>>();
            const double score = j.at("score").get<double>();
            out.push_back({j.at("frame").get<FrameIndex>(), j.at("track_id").get<TrackId>(),
                           j.at("class").get<std::string>(), Box3D::from_array(box, score), score});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const InvalidBox& e) {
            throw ParseError(where + ": box: " + e.what());
        }
    }
    return out;
}

} // namespace ovmot
