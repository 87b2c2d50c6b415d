#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/serializer.hpp>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ovmot {

/// Match probability p plus an optional IoU-quality estimate q.
struct AssociationScore {
    double p = 0.0;
    std::optional<double> q;

    /// Throws MalformedResponse when p or q leave [0, 1].
    void validate() const;

    friend bool operator==(const AssociationScore&, const AssociationScore&) = default;
};

struct ScoreRequest {
    PromptSequence prompt;
    std::string pair_id;
};

/// Batch pairwise scorer. Implementations must be callable concurrently
/// from several threads; the result is order-aligned with `requests`.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::vector<AssociationScore> score_batch(std::span<const ScoreRequest> requests) const = 0;
    virtual std::string name() const = 0;
};

/// Throws ConfigError when two requests share a pair_id.
void require_unique_pair_ids(std::span<const ScoreRequest> requests);

struct GeoScorerParams {
    double w_iou = 0.5;
    double tau_d = 2.0; // meters

    void validate() const;
};

/// Constant-velocity extrapolation of the newest history entry by
/// `dt_frames` steps; size, yaw and score come from the newest entry.
Box3D predict_next(std::span<const Box3D> history, std::size_t dt_frames);

/// p = w_iou * IoU(pred, cand) + (1 - w_iou) * exp(-d_bev(pred, cand) / tau_d),
/// q = IoU(pred, cand), with pred = predict_next(history, 1).
AssociationScore geometric_score(std::span<const Box3D> history, const Box3D& candidate,
                                 const GeoScorerParams& params);

/// Same score recovered from a prompt's slots: every slot but the last is
/// history, the last is the candidate. Text segments are ignored.
AssociationScore geometric_score(const PromptSequence& prompt, const GeoScorerParams& params);

/// Deterministic in-process reference scorer.
class GeometricScorer final : public Scorer {
public:
    explicit GeometricScorer(GeoScorerParams params = {});

    std::vector<AssociationScore> score_batch(std::span<const ScoreRequest> requests) const override;
    std::string name() const override { return "geometric"; }

    const GeoScorerParams& params() const { return params_; }

private:
    GeoScorerParams params_;
};

} // namespace ovmot
