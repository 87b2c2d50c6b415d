#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/scene.hpp>
#include <ovmot/serializer.hpp>
#include <ovmot/tracker.hpp>

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ovmot {

enum class MotpMode { Iou, CenterDistance };

struct EvalConfig {
    double iou_threshold = 0.25;
    std::size_t recall_points = 40; // n; the sweep visits n - 1 targets
    MotpMode motp_mode = MotpMode::Iou;
    bool clamp_negative = true;

    /// Throws ConfigError.
    void validate() const;
};

struct GtBox {
    std::uint64_t gt_id = 0;
    Box3D box;
    std::string class_label;
};

struct HypBox {
    TrackId track_id = 0;
    Box3D box;
    std::string class_label;
    double score = 1.0;
};

struct EvalFrame {
    FrameIndex frame = 0;
    std::vector<GtBox> gt;
    std::vector<HypBox> hyp;
};

using EvalSequence = std::vector<EvalFrame>;

/// Aligns tracker records with the scene's gt frames. Throws ParseError for a
/// record whose frame is not in the scene.
EvalSequence make_eval_sequence(const SceneFile& scene, std::span<const TrackingRecord> records);

/// Last matched hypothesis per gt id.
using CorrespondenceMap = std::map<std::uint64_t, TrackId>;

struct Correspondence {
    std::size_t gt_index = 0;
    std::size_t hyp_index = 0;
    double iou = 0.0;

    friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Keeps pairs from prev_map whose IoU is still >= threshold, then matches
/// the rest by minimum total (1 - IoU) over pairs at or above threshold.
/// Sorted by gt_index.
std::vector<Correspondence> match_frame(std::span<const GtBox> gt, std::span<const HypBox> hyp,
                                        const CorrespondenceMap& prev_map, const EvalConfig& cfg);

struct ClearCounts {
    std::size_t gt = 0;
    std::size_t hyp = 0;
    std::size_t matches = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t ids = 0;
    double motp_sum = 0.0;
    std::size_t gt_tracks = 0;
    std::size_t mostly_tracked = 0;
    std::size_t mostly_lost = 0;

    ClearCounts& operator+=(const ClearCounts& o);
};

struct ClearMetrics {
    ClearCounts counts;
    double mota = 0.0;
    double motp = 0.0; // mean IoU or mean BEV center distance of matches
    double mt = 0.0;   // fraction of gt tracks
    double ml = 0.0;
};

/// Throws EmptyGroundTruth when counts.gt is 0.
ClearMetrics finalize(const ClearCounts& counts);

/// Frame-by-frame CLEAR-MOT state for one sequence.
class ClearAccumulator {
public:
    explicit ClearAccumulator(EvalConfig cfg);

    void add_frame(std::span<const GtBox> gt, std::span<const HypBox> hyp);

    ClearCounts counts() const;
    /// Scores of every matched hypothesis so far.
    const std::vector<double>& matched_scores() const { return matched_scores_; }

private:
    struct Coverage {
        std::size_t present = 0;
        std::size_t matched = 0;
    };

    EvalConfig cfg_;
    ClearCounts counts_;
    CorrespondenceMap last_;
    std::map<std::uint64_t, Coverage> coverage_;
    std::vector<double> matched_scores_;
};

ClearMetrics clear_mot(const EvalSequence& seq, const EvalConfig& cfg);

struct RecallPoint {
    double target = 0.0;
    bool achieved = false;
    double cutoff = 0.0;
    double recall = 0.0;
    double motar = 0.0;
    double motp = 0.0;
    ClearCounts counts;
};

struct AmotaResult {
    double amota = 0.0;
    double samota = 0.0;
    double amotp = 0.0;
    double max_recall = 0.0;
    std::vector<RecallPoint> curve; // n - 1 entries
};

/// MOTAR at recall r given P gt boxes; capped at 1 and, when clamping,
/// floored at 0.
double motar(std::size_t fp, std::size_t fn, std::size_t ids, double r, std::size_t p, bool clamp_negative);

/// Throws EmptyGroundTruth.
AmotaResult amota(const EvalSequence& seq, const EvalConfig& cfg);

struct SplitMetrics {
    std::string split;
    bool present = false;
    std::vector<std::string> classes; // classes with gt
    std::size_t gt_boxes = 0;
    std::size_t gt_tracks = 0;
    double samota = 0.0;
    double amota = 0.0;
    double amotp = 0.0;
    double mota = 0.0;
    double motp = 0.0;
    double mt = 0.0;
    double ml = 0.0;
    std::size_t ids = 0;
    std::size_t fp = 0;  // includes classes with no gt
    std::size_t fn = 0;
};

struct ClassMetrics {
    std::string class_label;
    bool novel = false;
    std::size_t gt_boxes = 0;
    std::optional<ClearMetrics> clear; // empty when the class has no gt
    std::optional<AmotaResult> sweep;
    std::size_t fp = 0;
};

struct EvalReport {
    EvalConfig config;
    std::vector<ClassMetrics> per_class;
    std::vector<SplitMetrics> splits;
};

/// Per-class metrics aggregated by gt-weighted mean into the requested
/// splits ("base", "novel", "all"). Labels outside the base set count as
/// novel.
EvalReport split_eval(const EvalSequence& seq, const ClassVocabulary& vocab, const EvalConfig& cfg,
                      const std::vector<std::string>& splits = {"base", "novel", "all"});

nlohmann::ordered_json report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

} // namespace ovmot
