#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/scoring.hpp>

#include <cmath>
#include <mutex>
#include <random>
#include <vector>

namespace ovmot::fixtures {

inline Box3D random_box(Rng& rng, double spread = 5.0) {
    std::uniform_real_distribution<double> pos(-spread, spread);
    std::uniform_real_distribution<double> size(0.3, 5.0);
    std::uniform_real_distribution<double> yaw(-kPi, kPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return Box3D(pos(rng), pos(rng), pos(rng) * 0.2, size(rng), size(rng), size(rng), yaw(rng), unit(rng));
}

// Point-in-box test written from the box definition, independent of the
// clipping code.
inline bool inside(const Box3D& b, double px, double py, double pz) {
    const double dx = px - b.x();
    const double dy = py - b.y();
    const double c = std::cos(b.yaw());
    const double s = std::sin(b.yaw());
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::abs(u) <= 0.5 * b.l() && std::abs(v) <= 0.5 * b.w() && std::abs(pz - b.z()) <= 0.5 * b.h();
}

// Monte Carlo 3D IoU: sample uniformly inside a, count hits in b, and use
// |A n B| = vol(a) * hit fraction.
inline double monte_carlo_iou(const Box3D& a, const Box3D& b, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    const double c = std::cos(a.yaw());
    const double s = std::sin(a.yaw());
    std::size_t hits = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double u = unit(rng) * a.l();
        const double v = unit(rng) * a.w();
        const double z = a.z() + unit(rng) * a.h();
        if (inside(b, a.x() + c * u - s * v, a.y() + s * u + c * v, z)) {
            ++hits;
        }
    }
    const double va = a.l() * a.w() * a.h();
    const double vb = b.l() * b.w() * b.h();
    const double inter = va * static_cast<double>(hits) / static_cast<double>(samples);
    return inter / (va + vb - inter);
}

// Scorer that records every batch and answers from a fixed function.
template <typename Fn>
class RecordingScorer final : public Scorer {
public:
    explicit RecordingScorer(Fn fn) : fn_(std::move(fn)) {}

    std::vector<AssociationScore> score_batch(std::span<const ScoreRequest> requests) const override {
        std::lock_guard lock(mu_);
        batches_.emplace_back(requests.begin(), requests.end());
        std::vector<AssociationScore> out;
        for (const auto& r : requests) {
            out.push_back(fn_(r));
        }
        return out;
    }
    std::string name() const override { return "recording"; }

    const std::vector<std::vector<ScoreRequest>>& batches() const { return batches_; }

private:
    Fn fn_;
    mutable std::mutex mu_;
    mutable std::vector<std::vector<ScoreRequest>> batches_;
};

} // namespace ovmot::fixtures
