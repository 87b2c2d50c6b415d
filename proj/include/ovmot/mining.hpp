#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/scene.hpp>
#include <ovmot/scoring.hpp>
#include <ovmot/serializer.hpp>
#include <ovmot/tracker.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ovmot {

struct GroundTruthTrack {
    std::uint64_t gt_id = 0;
    std::string class_label;
    std::map<FrameIndex, Box3D> boxes;
};

/// Groups scene gt by id, sorted by id. Throws ParseError on a duplicate
/// (gt_id, frame).
std::vector<GroundTruthTrack> ground_truth_tracks(const SceneFile& scene);

enum class TrainingLabel { Yes, No };

struct PairMeta {
    std::uint64_t gt_id_track = 0;
    std::uint64_t gt_id_candidate = 0;
    FrameIndex frame = 0;

    friend bool operator==(const PairMeta&, const PairMeta&) = default;
};

struct TrainingPair {
    PromptSequence prompt;
    TrainingLabel label = TrainingLabel::No;
    double iou_target = 0.0;
    PairMeta meta;

    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// Hard: nearest-first within hard_radius. Local: uniform within
/// hard_radius. Random: uniform over every other object in the frame.
enum class NegativeStrategy { Hard, Local, Random };

const char* strategy_name(NegativeStrategy s);
NegativeStrategy parse_strategy(std::string_view name);

struct MiningConfig {
    JitterParams jitter;
    double hard_radius = 8.0;
    std::size_t negatives_per_positive = 3;
    std::size_t history_len = 3;
    std::uint64_t seed = 0;
    NegativeStrategy strategy = NegativeStrategy::Hard;
    bool mask_novel = true;

    /// Throws ConfigError.
    void validate() const;
    SerializerConfig serializer() const;
};

/// Throws InsufficientHistory when the track has no box at `frame` or none
/// before it.
TrainingPair mine_positive(const GroundTruthTrack& track, FrameIndex frame, const MiningConfig& cfg,
                           const ClassVocabulary& vocab, Rng& rng);

/// Nearest-first negatives within hard_radius of the anchor's true box.
std::vector<TrainingPair> mine_hard_negatives(const GroundTruthTrack& track, FrameIndex frame,
                                              std::span<const GroundTruthTrack> all_tracks,
                                              const MiningConfig& cfg, const ClassVocabulary& vocab);

/// Negatives under cfg.strategy; `rng` is only drawn from by Local and Random.
std::vector<TrainingPair> mine_negatives(const GroundTruthTrack& track, FrameIndex frame,
                                         std::span<const GroundTruthTrack> all_tracks,
                                         const MiningConfig& cfg, const ClassVocabulary& vocab, Rng& rng);

/// Every frame with an eligible anchor, in frame then gt-id order: the
/// positive followed by its negatives. Frame f jitters positives from
/// make_rng(seed, 2f) and samples negatives from make_rng(seed, 2f + 1).
std::vector<TrainingPair> mine_scene(std::span<const GroundTruthTrack> tracks, const MiningConfig& cfg,
                                     const ClassVocabulary& vocab);

/// JSON lines: {"prompt", "label": "Yes"|"No", "iou_target", "meta"}.
void write_dataset(std::ostream& out, std::span<const TrainingPair> pairs);
void emit_dataset(std::span<const TrainingPair> pairs, const std::filesystem::path& path);
std::vector<TrainingPair> read_dataset(std::istream& in);

struct AcceptanceFit {
    double p_threshold = 0.5;
    double balanced_accuracy = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Picks the p cut (accept iff p >= cut) that maximizes balanced accuracy of
/// the geometric scorer on the pairs. Cuts sit midway between adjacent
/// distinct scores; ties go to the lowest cut.
AcceptanceFit fit_acceptance_threshold(std::span<const TrainingPair> pairs, const GeoScorerParams& params);

} // namespace ovmot
