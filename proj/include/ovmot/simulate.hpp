#pragma once

#include <ovmot/geometry.hpp>
#include <ovmot/scene.hpp>
#include <ovmot/serializer.hpp>

#include <cstdint>

namespace ovmot {

/// Base: Car, Van, Pedestrian, Motorcyclist. Novel: Bus, Truck, Cyclist,
/// Tricyclist.
ClassVocabulary default_vocabulary();

/// Nominal (l, w, h) for a class; a generic car-like size for unknown names.
std::array<double, 3> nominal_size(const std::string& class_label);

struct SimConfig {
    std::size_t n_objects = 10;
    std::size_t duration = 100; // frames
    double speed_min = 0.2;     // m/frame
    double speed_max = 1.0;
    JitterParams sigma_det;     // detector noise; its seed is unused
    double p_dropout = 0.0;
    double clutter_rate = 0.0;  // expected false boxes per frame
    double p_labelflip = 0.0;
    double novel_fraction = 0.0;
    std::uint64_t seed = 0;

    double min_spacing = 4.0;   // meters between any two objects at every frame
    double region = 120.0;      // start positions drawn from [-region/2, region/2]^2
    double det_score_min = 0.5;
    double det_score_max = 1.0;
    double clutter_score_min = 0.05;
    double clutter_score_max = 0.6;
    double frame_rate = 10.0;
    ClassVocabulary vocab = default_vocabulary();

    /// Throws ConfigError.
    void validate() const;
};

/// Constant-velocity ground-plane agents with heading-aligned yaw and noisy
/// detections. Deterministic in the config. Throws ConfigError when the
/// spacing constraint cannot be met.
SceneFile simulate(const SimConfig& cfg);

} // namespace ovmot
