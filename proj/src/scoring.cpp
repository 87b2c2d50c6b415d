#include <ovmot/scoring.hpp>

#include <ovmot/errors.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ovmot {

void AssociationScore::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw MalformedResponse("score p=" + std::to_string(p) + " outside [0, 1]");
    }
    if (q && !(*q >= 0.0 && *q <= 1.0)) {
        throw MalformedResponse("score q=" + std::to_string(*q) + " outside [0, 1]");
    }
}

void require_unique_pair_ids(std::span<const ScoreRequest> requests) {
    std::unordered_set<std::string> seen;
    seen.reserve(requests.size());
    for (const auto& r : requests) {
        if (!seen.insert(r.pair_id).second) {
            throw ConfigError("duplicate pair_id '" + r.pair_id + "' in score batch");
        }
    }
}

void GeoScorerParams::validate() const {
    if (!(w_iou >= 0.0 && w_iou <= 1.0)) {
        throw ConfigError("w_iou must lie in [0, 1]");
    }
    if (!(tau_d > 0.0) || !std::isfinite(tau_d)) {
        throw ConfigError("tau_d must be a positive distance");
    }
}

Box3D predict_next(std::span<const Box3D> history, std::size_t dt_frames) {
    if (history.empty()) {
        throw EmptyHistory();
    }
    const Box3D& last = history.back();
    if (history.size() == 1 || dt_frames == 0) {
        return last;
    }
    const Box3D& prev = history[history.size() - 2];
    const double dt = static_cast<double>(dt_frames);
    return last.with_center(last.x() + (last.x() - prev.x()) * dt,
                            last.y() + (last.y() - prev.y()) * dt,
                            last.z() + (last.z() - prev.z()) * dt);
}

AssociationScore geometric_score(std::span<const Box3D> history, const Box3D& candidate,
                                 const GeoScorerParams& params) {
    const Box3D pred = predict_next(history, 1);
    const double iou = iou_3d(pred, candidate);
    const double dist = center_distance_bev(pred, candidate);
    const double p = params.w_iou * iou + (1.0 - params.w_iou) * std::exp(-dist / params.tau_d);
    return AssociationScore{std::clamp(p, 0.0, 1.0), iou};
}

AssociationScore geometric_score(const PromptSequence& prompt, const GeoScorerParams& params) {
    const auto features = prompt.box_features();
    if (features.size() < 2) {
        throw EmptyHistory();
    }
    std::vector<Box3D> history;
    history.reserve(features.size() - 1);
    for (std::size_t i = 0; i + 1 < features.size(); ++i) {
        history.push_back(features[i].to_box());
    }
    return geometric_score(history, features.back().to_box(), params);
}

GeometricScorer::GeometricScorer(GeoScorerParams params) : params_(params) { params_.validate(); }

std::vector<AssociationScore> GeometricScorer::score_batch(std::span<const ScoreRequest> requests) const {
    std::vector<AssociationScore> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
        out.push_back(geometric_score(r.prompt, params_));
    }
    return out;
}

} // namespace ovmot
