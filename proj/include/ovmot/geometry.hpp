#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace ovmot {

inline constexpr double kPi = 3.14159265358979323846;

// Area below which a clipped footprint counts as no overlap.
inline constexpr double kAreaEpsilon = 1e-12;

/// Wraps an angle into (-pi, pi]. Idempotent on already normalized input.
double normalize_yaw(double yaw);

/// Wrapped angular distance min(|a-b|, 2pi-|a-b|), in [0, pi].
double yaw_difference(double a, double b);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Oriented box on the ground plane. z is the box center; the vertical
/// extent is [z - h/2, z + h/2]. Sizes are strictly positive and the score
/// lies in [0, 1]; the constructor throws InvalidBox otherwise.
class Box3D {
public:
    Box3D(double x, double y, double z, double l, double w, double h, double yaw,
          double score = 1.0);

    /// [x, y, z, l, w, h, yaw] plus score.
    static Box3D from_array(const std::array<double, 7>& v, double score = 1.0);
    std::array<double, 7> to_array() const;

    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }
    double l() const { return l_; }
    double w() const { return w_; }
    double h() const { return h_; }
    double yaw() const { return yaw_; }
    double score() const { return score_; }

    Point2 center_bev() const { return {x_, y_}; }
    double z_min() const { return z_ - 0.5 * h_; }
    double z_max() const { return z_ + 0.5 * h_; }

    Box3D with_center(double x, double y, double z) const;
    Box3D with_score(double score) const;

    /// Footprint corners, counter-clockwise.
    std::array<Point2, 4> footprint() const;

    friend bool operator==(const Box3D&, const Box3D&) = default;

private:
    double x_, y_, z_;
    double l_, w_, h_;
    double yaw_;
    double score_;
};

double volume(const Box3D& b);

/// Rotated footprint intersection area via convex polygon clipping.
double intersection_area_bev(const Box3D& a, const Box3D& b);

double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);
double center_distance_bev(const Box3D& a, const Box3D& b);

/// Upper bound on the BEV center distance at which two footprints can still
/// touch: half the sum of the footprint diagonals.
double overlap_radius_bev(const Box3D& a, const Box3D& b);

struct JitterParams {
    double sigma_center = 0.0;   // meters, per axis
    double sigma_size_log = 0.0; // log-normal size std
    double sigma_yaw = 0.0;      // radians
    std::uint64_t seed = 0;

    void validate() const;
};

using Rng = std::mt19937_64;

/// Caller-owned random state seeded from an integer sequence.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Perturbs center, size (multiplicatively) and yaw; score is preserved.
/// Consumes exactly seven standard normal draws from `rng`.
Box3D jitter(const Box3D& b, const JitterParams& p, Rng& rng);

/// Standard normal draw on the caller's random state.
double standard_normal(Rng& rng);

} // namespace ovmot
