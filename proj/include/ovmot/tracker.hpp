#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/scoring.hpp>
#include <ovmot/serializer.hpp>

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ovmot {

using FrameIndex = std::int64_t;
using TrackId = std::uint64_t;

struct Detection {
    Box3D box; // box.score() is the detector confidence
    std::string class_label;
};

enum class TrackState { Tentative, Active, Dead };

struct TrackObservation {
    FrameIndex frame = 0;
    Box3D box;
};

struct Track {
    TrackId id = 0;
    std::string class_label; // fixed at birth
    std::deque<TrackObservation> history;
    std::size_t miss_count = 0;
    std::size_t hit_count = 0;
    FrameIndex born_at = 0;
    TrackState state = TrackState::Tentative;

    std::vector<Box3D> history_boxes() const;
    FrameIndex last_matched() const { return history.back().frame; }
};

struct LifecycleConfig {
    std::size_t max_age = 3;          // K: missed frames tolerated before death
    std::size_t history_capacity = 8; // stored observations per track, >= L
    double birth_score = 0.3;
    std::size_t confirm_hits = 1;
    double gate_dist = 10.0;          // meters
    double accept_max_cost = 0.9;
};

struct TrackerConfig {
    LifecycleConfig lifecycle;
    SerializerConfig serializer;
    ClassVocabulary vocab;

    /// Throws ConfigError on any out-of-range field.
    void validate() const;
};

struct TrackOutput {
    TrackId track_id = 0;
    Box3D box;
    std::string class_label;
    double score = 0.0;
};

struct FrameResult {
    FrameIndex frame_index = 0;
    std::vector<TrackOutput> outputs; // Active tracks matched this frame, by id
    std::vector<TrackId> births;
    std::vector<TrackId> deaths;
};

/// Everything needed to resume a run; a plain value.
struct TrackerState {
    std::vector<Track> tracks; // live tracks in creation order
    TrackId next_id = 1;
    std::optional<FrameIndex> last_frame;
};

/// Strictly online tracker: gate, serialize, score, assign, then update,
/// birth and death. One step() at a time per instance.
class Tracker {
public:
    explicit Tracker(TrackerConfig cfg, TrackerState state = {});

    /// Throws NonMonotonicFrame when frame_index does not increase and
    /// propagates scorer failures. State is untouched when it throws.
    FrameResult step(FrameIndex frame_index, std::span<const Detection> detections,
                     const Scorer& scorer);

    const TrackerState& state() const { return state_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    TrackerConfig cfg_;
    TrackerState state_;
};

struct FrameDetections {
    FrameIndex frame_index = 0;
    std::vector<Detection> detections;
};

/// Folds step() over the stream. With `state` given, resumes from it and
/// leaves the final state there.
std::vector<FrameResult> run_sequence(std::span<const FrameDetections> stream, const Scorer& scorer,
                                      const TrackerConfig& cfg, TrackerState* state = nullptr);

/// One JSON-lines record per output track per frame:
/// {"frame", "track_id", "class", "box": [x,y,z,l,w,h,yaw], "score"}.
struct TrackingRecord {
    FrameIndex frame = 0;
    TrackId track_id = 0;
    std::string class_label;
    Box3D box;
    double score = 0.0;
};

void write_tracking_jsonl(std::ostream& out, std::span<const FrameResult> results);
/// Throws ParseError naming the offending line.
std::vector<TrackingRecord> read_tracking_jsonl(std::istream& in);

} // namespace ovmot
